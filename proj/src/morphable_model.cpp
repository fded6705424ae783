/*
 * Copyright 2026 The headkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "headkit/morphable_model.hpp"

#include "headkit/errors.hpp"
#include "headkit/json_io.hpp"
#include "headkit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_set>

namespace headkit {

namespace {

constexpr double kBasisRms = 0.05;
constexpr double kJawStart = -0.2;
constexpr double kJawRamp = 0.4;
constexpr double kNeckBelow = -0.85;
constexpr double kFaceFront = 0.3;
constexpr double kCentroidTol = 1e-9;

// Vertex counts per latitude ring: at least three each, the rest shared in
// proportion to the ring circumference (largest remainder).
std::vector<std::size_t> ring_counts(std::size_t ring_vertices)
{
    std::size_t rings = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(ring_vertices / 2.0))));
    while (rings > 1 && ring_vertices < 3 * rings) {
        --rings;
    }
    std::vector<double> weight(rings);
    double total = 0.0;
    for (std::size_t j = 0; j < rings; ++j) {
        weight[j] = std::sin(std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(rings + 1));
        total += weight[j];
    }
    const std::size_t spare = ring_vertices - 3 * rings;
    std::vector<std::size_t> counts(rings, 3);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < rings; ++j) {
        const double share = static_cast<double>(spare) * weight[j] / total;
        const auto whole = static_cast<std::size_t>(std::floor(share));
        counts[j] += whole;
        assigned += whole;
        remainders.emplace_back(share - static_cast<double>(whole), j);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < spare; ++r, ++assigned) {
        ++counts[remainders[r % rings].second];
    }
    return counts;
}

struct RingSphere
{
    Points3 vertices;
    std::vector<Triangle> triangles;
};

RingSphere make_ring_sphere(std::size_t n_vertices)
{
    const auto counts = ring_counts(n_vertices - 2);
    const std::size_t rings = counts.size();

    RingSphere s;
    s.vertices.resize(static_cast<Eigen::Index>(n_vertices), 3);
    s.vertices.row(0) << 0.0, 1.0, 0.0;

    std::vector<std::size_t> start(rings);
    std::vector<double> offset(rings);
    std::size_t next = 1;
    for (std::size_t j = 0; j < rings; ++j) {
        start[j] = next;
        offset[j] = (j % 2 == 0) ? 0.0 : 0.5;
        const double theta = std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(rings + 1);
        for (std::size_t k = 0; k < counts[j]; ++k) {
            const double phi = 2.0 * std::numbers::pi * (static_cast<double>(k) + offset[j]) / static_cast<double>(counts[j]);
            s.vertices.row(static_cast<Eigen::Index>(next++)) << std::sin(theta) * std::cos(phi), std::cos(theta),
                std::sin(theta) * std::sin(phi);
        }
    }
    const std::size_t bottom = next;
    s.vertices.row(static_cast<Eigen::Index>(bottom)) << 0.0, -1.0, 0.0;

    auto ring_vertex = [&](std::size_t j, std::size_t k) { return start[j] + (k % counts[j]); };

    for (std::size_t k = 0; k < counts.front(); ++k) {
        s.triangles.push_back({0, ring_vertex(0, k), ring_vertex(0, k + 1)});
    }
    for (std::size_t j = 0; j + 1 < rings; ++j) {
        const std::size_t a = counts[j];
        const std::size_t b = counts[j + 1];
        std::size_t i = 0;
        std::size_t k = 0;
        while (i < a || k < b) {
            const double next_a = (static_cast<double>(i + 1) + offset[j]) / static_cast<double>(a);
            const double next_b = (static_cast<double>(k + 1) + offset[j + 1]) / static_cast<double>(b);
            if (k >= b || (i < a && next_a <= next_b)) {
                s.triangles.push_back({ring_vertex(j, i), ring_vertex(j, i + 1), ring_vertex(j + 1, k)});
                ++i;
            } else {
                s.triangles.push_back({ring_vertex(j, i), ring_vertex(j + 1, k), ring_vertex(j + 1, k + 1)});
                ++k;
            }
        }
    }
    for (std::size_t k = 0; k < counts.back(); ++k) {
        s.triangles.push_back({bottom, ring_vertex(rings - 1, k), ring_vertex(rings - 1, k + 1)});
    }

    // Outward winding (counter-clockwise seen from outside).
    for (auto& t : s.triangles) {
        const Vec3 a = s.vertices.row(static_cast<Eigen::Index>(t[0]));
        const Vec3 b = s.vertices.row(static_cast<Eigen::Index>(t[1]));
        const Vec3 c = s.vertices.row(static_cast<Eigen::Index>(t[2]));
        if ((b - a).cross(c - a).dot(a + b + c) < 0.0) {
            std::swap(t[1], t[2]);
        }
    }
    return s;
}

Eigen::MatrixXd random_basis(std::mt19937_64& rng, std::size_t n_vertices, std::size_t count)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(3 * n_vertices), static_cast<Eigen::Index>(count));
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        for (Eigen::Index r = 0; r < basis.rows(); ++r) {
            basis(r, k) = normal(rng);
        }
        const double rms = std::sqrt(basis.col(k).squaredNorm() / static_cast<double>(n_vertices));
        basis.col(k) *= kBasisRms / rms;
    }
    return basis;
}

void check_index_list(const IndexList& list, std::size_t n, const std::string& field)
{
    if (list.empty()) {
        throw ValidationError(field, "must not be empty");
    }
    std::unordered_set<std::size_t> seen;
    for (const auto i : list) {
        if (i >= n) {
            throw ValidationError(field, "index " + std::to_string(i) + " out of range");
        }
        if (!seen.insert(i).second) {
            throw ValidationError(field, "duplicate index " + std::to_string(i));
        }
    }
}

// Basis stored as K x n x 3 nested arrays.
nlohmann::json basis_to_json(const Eigen::MatrixXd& basis)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        nlohmann::json field = nlohmann::json::array();
        for (Eigen::Index i = 0; i < basis.rows() / 3; ++i) {
            field.push_back({basis(3 * i, k), basis(3 * i + 1, k), basis(3 * i + 2, k)});
        }
        out.push_back(std::move(field));
    }
    return out;
}

Eigen::MatrixXd basis_from_json(const nlohmann::json& value, std::size_t n, const std::string& field)
{
    if (!value.is_array()) {
        throw ParseError(field, "expected K x n x 3 array");
    }
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(value.size()));
    for (std::size_t k = 0; k < value.size(); ++k) {
        const Points3 rows = json::points3_from_json(value[k], field);
        if (static_cast<std::size_t>(rows.rows()) != n) {
            throw ValidationError(field, "basis vector " + std::to_string(k) + " has wrong vertex count");
        }
        basis.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const VecX>(rows.data(), rows.size());
    }
    return basis;
}

IndexList indices_from_json(const nlohmann::json& doc, const std::string& field)
{
    if (!doc.contains(field) || !doc[field].is_array()) {
        throw ParseError(field, "expected an array of indices");
    }
    IndexList out;
    for (const auto& e : doc[field]) {
        if (!e.is_number_integer() || e.get<long long>() < 0) {
            throw ParseError(field, "expected non-negative integers");
        }
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

const nlohmann::json& require(const nlohmann::json& doc, const std::string& field)
{
    if (!doc.contains(field)) {
        throw ParseError(field, "missing field");
    }
    return doc[field];
}

} // namespace

bool ModelAssets::operator==(const ModelAssets& other) const
{
    return n_vertices == other.n_vertices && template_mesh == other.template_mesh &&
           shape_basis.rows() == other.shape_basis.rows() && shape_basis.cols() == other.shape_basis.cols() &&
           shape_basis == other.shape_basis && expr_basis.rows() == other.expr_basis.rows() &&
           expr_basis.cols() == other.expr_basis.cols() && expr_basis == other.expr_basis &&
           jaw_weights.size() == other.jaw_weights.size() && jaw_weights == other.jaw_weights &&
           jaw_pivot == other.jaw_pivot && triangles == other.triangles &&
           subsample_indices == other.subsample_indices && face_indices == other.face_indices &&
           landmark_indices == other.landmark_indices;
}

HeadParams HeadParams::zeros(std::size_t k_shape, std::size_t k_expr)
{
    HeadParams p;
    p.shape = VecX::Zero(static_cast<Eigen::Index>(k_shape));
    p.expression = VecX::Zero(static_cast<Eigen::Index>(k_expr));
    return p;
}

VecX HeadParams::to_vector() const
{
    const ParamLayout layout{static_cast<std::size_t>(shape.size()), static_cast<std::size_t>(expression.size())};
    VecX v(static_cast<Eigen::Index>(layout.size()));
    v.segment(0, shape.size()) = shape;
    v.segment(static_cast<Eigen::Index>(layout.expression()), expression.size()) = expression;
    v.segment<3>(static_cast<Eigen::Index>(layout.jaw())) = jaw;
    v.segment<6>(static_cast<Eigen::Index>(layout.rot6d())) = rot6d;
    v.segment<2>(static_cast<Eigen::Index>(layout.translation())) = translation;
    v[static_cast<Eigen::Index>(layout.scale())] = scale;
    return v;
}

HeadParams HeadParams::from_vector(const VecX& v, std::size_t k_shape, std::size_t k_expr)
{
    const ParamLayout layout{k_shape, k_expr};
    if (static_cast<std::size_t>(v.size()) != layout.size()) {
        throw InvalidArgument("parameter vector has length " + std::to_string(v.size()) + ", expected " +
                              std::to_string(layout.size()));
    }
    HeadParams p;
    p.shape = v.segment(0, static_cast<Eigen::Index>(k_shape));
    p.expression = v.segment(static_cast<Eigen::Index>(layout.expression()), static_cast<Eigen::Index>(k_expr));
    p.jaw = v.segment<3>(static_cast<Eigen::Index>(layout.jaw()));
    p.rot6d = v.segment<6>(static_cast<Eigen::Index>(layout.rot6d()));
    p.translation = v.segment<2>(static_cast<Eigen::Index>(layout.translation()));
    p.scale = v[static_cast<Eigen::Index>(layout.scale())];
    return p;
}

void HeadParams::validate() const
{
    if (!to_vector().allFinite()) {
        throw InvalidArgument("head parameters contain non-finite entries");
    }
    if (!(scale > 0.0)) {
        throw InvalidArgument("scale must be positive");
    }
}

bool HeadParams::operator==(const HeadParams& other) const
{
    return shape.size() == other.shape.size() && expression.size() == other.expression.size() &&
           to_vector() == other.to_vector();
}

ModelAssets generate_toy_assets(
    std::uint64_t seed, std::size_t n_vertices, std::size_t k_shape, std::size_t k_expr, std::size_t n_landmarks)
{
    if (n_vertices < 12) {
        throw InvalidArgument("n_vertices must be at least 12");
    }
    if (k_shape < 1 || k_expr < 1 || n_landmarks < 1) {
        throw InvalidArgument("basis and landmark counts must be at least 1");
    }
    if (n_landmarks > n_vertices) {
        throw InvalidArgument("n_landmarks exceeds n_vertices");
    }

    std::mt19937_64 rng(seed);
    RingSphere sphere = make_ring_sphere(n_vertices);

    ModelAssets a;
    a.n_vertices = n_vertices;
    const Eigen::RowVector3d centroid = sphere.vertices.colwise().mean();
    a.template_mesh = sphere.vertices.rowwise() - centroid;
    a.triangles = std::move(sphere.triangles);
    a.shape_basis = random_basis(rng, n_vertices, k_shape);
    a.expr_basis = random_basis(rng, n_vertices, k_expr);
    a.jaw_pivot = Vec3(0.0, -0.2, -0.4);

    a.jaw_weights = VecX::Zero(static_cast<Eigen::Index>(n_vertices));
    IndexList face;
    IndexList rest;
    for (std::size_t i = 0; i < n_vertices; ++i) {
        const auto row = a.template_mesh.row(static_cast<Eigen::Index>(i));
        if (row.y() < kJawStart) {
            a.jaw_weights[static_cast<Eigen::Index>(i)] = std::min(1.0, (kJawStart - row.y()) / kJawRamp);
        }
        if (row.y() >= kNeckBelow) {
            a.subsample_indices.push_back(i);
        }
        if (row.z() > kFaceFront) {
            face.push_back(i);
        } else {
            rest.push_back(i);
        }
    }
    if (face.empty()) {
        Eigen::Index front = 0;
        a.template_mesh.col(2).maxCoeff(&front);
        face.push_back(static_cast<std::size_t>(front));
        rest.erase(std::find(rest.begin(), rest.end(), static_cast<std::size_t>(front)));
    }
    a.face_indices = face;

    std::shuffle(face.begin(), face.end(), rng);
    std::shuffle(rest.begin(), rest.end(), rng);
    face.insert(face.end(), rest.begin(), rest.end());
    a.landmark_indices.assign(face.begin(), face.begin() + static_cast<std::ptrdiff_t>(n_landmarks));

    validate_assets(a);
    return a;
}

void validate_assets(const ModelAssets& a)
{
    const std::size_t n = a.n_vertices;
    if (n == 0) {
        throw ValidationError("n_vertices", "must be positive");
    }
    if (static_cast<std::size_t>(a.template_mesh.rows()) != n) {
        throw ValidationError("template", "row count differs from n_vertices");
    }
    if (!a.template_mesh.allFinite()) {
        throw ValidationError("template", "non-finite coordinate");
    }
    const Eigen::RowVector3d centroid = a.template_mesh.colwise().mean();
    if (centroid.cwiseAbs().maxCoeff() > kCentroidTol) {
        throw ValidationError("template", "centroid is not at the origin");
    }
    if (static_cast<std::size_t>(a.shape_basis.rows()) != 3 * n || !a.shape_basis.allFinite()) {
        throw ValidationError("shape_basis", "dimensions disagree with n_vertices or non-finite entry");
    }
    if (static_cast<std::size_t>(a.expr_basis.rows()) != 3 * n || !a.expr_basis.allFinite()) {
        throw ValidationError("expr_basis", "dimensions disagree with n_vertices or non-finite entry");
    }
    if (static_cast<std::size_t>(a.jaw_weights.size()) != n) {
        throw ValidationError("jaw_weights", "length differs from n_vertices");
    }
    for (Eigen::Index i = 0; i < a.jaw_weights.size(); ++i) {
        const double w = a.jaw_weights[i];
        if (!(w >= 0.0 && w <= 1.0)) {
            throw ValidationError("jaw_weights", "weight " + std::to_string(w) + " outside [0, 1]");
        }
    }
    if (!a.jaw_pivot.allFinite()) {
        throw ValidationError("jaw_pivot", "non-finite coordinate");
    }
    for (const auto& t : a.triangles) {
        for (const auto v : t) {
            if (v >= n) {
                throw ValidationError("triangles", "vertex index " + std::to_string(v) + " out of range");
            }
        }
    }
    check_index_list(a.subsample_indices, n, "subsample_indices");
    check_index_list(a.face_indices, n, "face_indices");
    check_index_list(a.landmark_indices, n, "landmark_indices");
}

void save_assets(const ModelAssets& a, const std::filesystem::path& path)
{
    nlohmann::json triangles = nlohmann::json::array();
    for (const auto& t : a.triangles) {
        triangles.push_back({t[0], t[1], t[2]});
    }
    const nlohmann::json doc{
        {"version", 1},
        {"n_vertices", a.n_vertices},
        {"template", json::points_to_json(a.template_mesh)},
        {"shape_basis", basis_to_json(a.shape_basis)},
        {"expr_basis", basis_to_json(a.expr_basis)},
        {"jaw_weights", std::vector<double>(a.jaw_weights.data(), a.jaw_weights.data() + a.jaw_weights.size())},
        {"jaw_pivot", {a.jaw_pivot.x(), a.jaw_pivot.y(), a.jaw_pivot.z()}},
        {"triangles", triangles},
        {"subsample_indices", a.subsample_indices},
        {"face_indices", a.face_indices},
        {"landmark_indices", a.landmark_indices},
    };
    json::write_file(path, doc, 1);
}

ModelAssets load_assets(const std::filesystem::path& path)
{
    const nlohmann::json doc = json::read_file(path);
    if (!doc.is_object()) {
        throw ParseError("assets", "expected a JSON object");
    }
    const auto& version = require(doc, "version");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw ParseError("version", "unsupported asset version");
    }
    const auto& nv = require(doc, "n_vertices");
    if (!nv.is_number_integer() || nv.get<long long>() <= 0) {
        throw ParseError("n_vertices", "expected a positive integer");
    }

    ModelAssets a;
    a.n_vertices = nv.get<std::size_t>();
    a.template_mesh = json::points3_from_json(require(doc, "template"), "template");
    if (static_cast<std::size_t>(a.template_mesh.rows()) != a.n_vertices) {
        throw ValidationError("template", "row count differs from n_vertices");
    }
    a.shape_basis = basis_from_json(require(doc, "shape_basis"), a.n_vertices, "shape_basis");
    a.expr_basis = basis_from_json(require(doc, "expr_basis"), a.n_vertices, "expr_basis");

    const auto& weights = require(doc, "jaw_weights");
    if (!weights.is_array()) {
        throw ParseError("jaw_weights", "expected an array of numbers");
    }
    a.jaw_weights.resize(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!weights[i].is_number()) {
            throw ParseError("jaw_weights", "expected a number");
        }
        a.jaw_weights[static_cast<Eigen::Index>(i)] = weights[i].get<double>();
    }

    const auto& pivot = require(doc, "jaw_pivot");
    if (!pivot.is_array() || pivot.size() != 3 || !pivot[0].is_number() || !pivot[1].is_number() ||
        !pivot[2].is_number()) {
        throw ParseError("jaw_pivot", "expected 3 numbers");
    }
    a.jaw_pivot = Vec3(pivot[0].get<double>(), pivot[1].get<double>(), pivot[2].get<double>());

    const auto& tris = require(doc, "triangles");
    if (!tris.is_array()) {
        throw ParseError("triangles", "expected an array of index triples");
    }
    for (const auto& t : tris) {
        if (!t.is_array() || t.size() != 3) {
            throw ParseError("triangles", "expected index triples");
        }
        Triangle tri{};
        for (std::size_t c = 0; c < 3; ++c) {
            if (!t[c].is_number_integer() || t[c].get<long long>() < 0) {
                throw ParseError("triangles", "expected non-negative integers");
            }
            tri[c] = t[c].get<std::size_t>();
        }
        a.triangles.push_back(tri);
    }
    a.subsample_indices = indices_from_json(doc, "subsample_indices");
    a.face_indices = indices_from_json(doc, "face_indices");
    a.landmark_indices = indices_from_json(doc, "landmark_indices");

    validate_assets(a);
    return a;
}

Points3 forward_canonical(const ModelAssets& assets, const HeadParams& params)
{
    if (static_cast<std::size_t>(params.shape.size()) != assets.num_shape()) {
        throw InvalidArgument("shape coefficient count does not match the shape basis");
    }
    if (static_cast<std::size_t>(params.expression.size()) != assets.num_expr()) {
        throw InvalidArgument("expression coefficient count does not match the expression basis");
    }

    const auto n = static_cast<Eigen::Index>(assets.n_vertices);
    VecX flat = Eigen::Map<const VecX>(assets.template_mesh.data(), 3 * n);
    flat.noalias() += assets.shape_basis * params.shape;
    flat.noalias() += assets.expr_basis * params.expression;

    Points3 out = Eigen::Map<const Points3>(flat.data(), n, 3);
    const Mat3 jaw = axis_angle_to_matrix(params.jaw);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = assets.jaw_weights[i];
        if (w == 0.0) {
            continue;
        }
        // pivot + (1 - w) u + w R u, arranged to be exact when R = I
        const Vec3 u = out.row(i).transpose() - assets.jaw_pivot;
        out.row(i) += (w * (jaw * u - u)).transpose();
    }
    return out;
}

double template_diameter(const ModelAssets& assets)
{
    return 2.0 * assets.template_mesh.rowwise().norm().maxCoeff();
}

void write_obj(const Points3& vertices, const std::vector<Triangle>& triangles, std::ostream& out)
{
    char buf[96];
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", vertices(i, 0), vertices(i, 1), vertices(i, 2));
        out << buf;
    }
    for (const auto& t : triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

} // namespace headkit
