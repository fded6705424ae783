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
#include "headkit/errors.hpp"
#include "headkit/json_io.hpp"
#include "headkit/morphable_model.hpp"
#include "headkit/rotation.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace headkit;
using headkit::testing::TempDir;

namespace {

const ModelAssets& toy()
{
    static const ModelAssets assets = generate_toy_assets(7, 162, 4, 2, 16);
    return assets;
}

HeadParams random_params(const ModelAssets& a, std::uint64_t seed)
{
    headkit::testing::Rng rng(seed);
    std::normal_distribution<double> n;
    HeadParams p = HeadParams::zeros(a.num_shape(), a.num_expr());
    for (Eigen::Index i = 0; i < p.shape.size(); ++i) {
        p.shape[i] = n(rng);
    }
    for (Eigen::Index i = 0; i < p.expression.size(); ++i) {
        p.expression[i] = n(rng);
    }
    p.jaw = Vec3(0.3 * n(rng), 0.1 * n(rng), 0.1 * n(rng));
    return p;
}

// Straightforward per-vertex evaluation of the forward chain.
Points3 naive_forward(const ModelAssets& a, const HeadParams& p)
{
    const Mat3 rj = headkit::testing::angle_axis(p.jaw.norm(), p.jaw.norm() > 0 ? p.jaw : Vec3::UnitX());
    Points3 out(static_cast<Eigen::Index>(a.n_vertices), 3);
    for (std::size_t i = 0; i < a.n_vertices; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        Vec3 v = a.template_mesh.row(r).transpose();
        for (std::size_t k = 0; k < a.num_shape(); ++k) {
            for (int c = 0; c < 3; ++c) {
                v[c] += p.shape[static_cast<Eigen::Index>(k)] * a.shape_basis(3 * r + c, static_cast<Eigen::Index>(k));
            }
        }
        for (std::size_t k = 0; k < a.num_expr(); ++k) {
            for (int c = 0; c < 3; ++c) {
                v[c] += p.expression[static_cast<Eigen::Index>(k)] * a.expr_basis(3 * r + c, static_cast<Eigen::Index>(k));
            }
        }
        const double w = a.jaw_weights[r];
        const Vec3 d = v - a.jaw_pivot;
        out.row(r) = (a.jaw_pivot + (1.0 - w) * d + w * (rj * d)).transpose();
    }
    return out;
}

} // namespace

TEST(ToyAssets, CentredAtOrigin)
{
    const Vec3 c = toy().template_mesh.colwise().mean().transpose();
    EXPECT_LE(c.norm(), 1e-9);
}

TEST(ToyAssets, SatisfiesInvariants)
{
    const ModelAssets& a = toy();
    EXPECT_NO_THROW(validate_assets(a));
    EXPECT_EQ(a.n_vertices, 162u);
    EXPECT_EQ(a.num_shape(), 4u);
    EXPECT_EQ(a.num_expr(), 2u);
    EXPECT_EQ(a.landmark_indices.size(), 16u);
    for (std::size_t i = 0; i < a.n_vertices; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        EXPECT_GE(a.jaw_weights[r], 0.0);
        EXPECT_LE(a.jaw_weights[r], 1.0);
        if (a.template_mesh(r, 1) >= -0.2) {
            EXPECT_EQ(a.jaw_weights[r], 0.0) << "vertex " << i;
        }
    }
    for (const auto idx : a.subsample_indices) {
        EXPECT_GE(a.template_mesh(static_cast<Eigen::Index>(idx), 1), -0.85);
    }
    EXPECT_LT(a.subsample_indices.size(), a.n_vertices);
}

TEST(ToyAssets, BasisRmsMatchesTarget)
{
    const ModelAssets& a = toy();
    for (Eigen::Index k = 0; k < a.shape_basis.cols(); ++k) {
        const double rms = std::sqrt(a.shape_basis.col(k).squaredNorm() / static_cast<double>(a.n_vertices));
        EXPECT_NEAR(rms, 0.05, 1e-12);
    }
}

TEST(ToyAssets, Deterministic)
{
    const ModelAssets again = generate_toy_assets(7, 162, 4, 2, 16);
    EXPECT_TRUE(again == toy());
    TempDir dir("assets_det");
    save_assets(toy(), dir / "a.json");
    save_assets(again, dir / "b.json");
    EXPECT_EQ(headkit::testing::read_bytes(dir / "a.json"), headkit::testing::read_bytes(dir / "b.json"));
}

TEST(ToyAssets, SeedChangesBases)
{
    const ModelAssets other = generate_toy_assets(8, 162, 4, 2, 16);
    EXPECT_NE(other.shape_basis, toy().shape_basis);
}

TEST(ToyAssets, RejectsBadCounts)
{
    EXPECT_THROW(generate_toy_assets(7, 11, 4, 2, 4), InvalidArgument);
    EXPECT_THROW(generate_toy_assets(7, 162, 0, 2, 16), InvalidArgument);
    EXPECT_THROW(generate_toy_assets(7, 162, 4, 0, 16), InvalidArgument);
    EXPECT_THROW(generate_toy_assets(7, 162, 4, 2, 0), InvalidArgument);
    EXPECT_THROW(generate_toy_assets(7, 20, 4, 2, 21), InvalidArgument);
}

TEST(ToyAssets, IndexListsAreValid)
{
    const ModelAssets& a = toy();
    for (const IndexList* list : {&a.subsample_indices, &a.face_indices, &a.landmark_indices}) {
        EXPECT_FALSE(list->empty());
        const std::set<std::size_t> unique(list->begin(), list->end());
        EXPECT_EQ(unique.size(), list->size());
        EXPECT_LT(*unique.rbegin(), a.n_vertices);
    }
}

TEST(AssetFile, RoundTrips)
{
    TempDir dir("assets_rt");
    save_assets(toy(), dir / "a.json");
    EXPECT_TRUE(load_assets(dir / "a.json") == toy());
}

namespace {

void expect_field_error(const nlohmann::json& doc, const std::string& field)
{
    TempDir dir("assets_bad");
    headkit::json::write_file(dir / "bad.json", doc);
    try {
        load_assets(dir / "bad.json");
        FAIL() << "expected a validation error for " << field;
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), field);
    }
}

nlohmann::json toy_doc()
{
    TempDir dir("assets_doc");
    save_assets(toy(), dir / "a.json");
    return headkit::json::read_file(dir / "a.json");
}

} // namespace

TEST(AssetFile, TriangleIndexOutOfRange)
{
    auto doc = toy_doc();
    doc["triangles"][0][1] = 162;
    expect_field_error(doc, "triangles");
}

TEST(AssetFile, JawWeightAboveOne)
{
    auto doc = toy_doc();
    doc["jaw_weights"][0] = 1.5;
    expect_field_error(doc, "jaw_weights");
}

TEST(AssetFile, OtherInvariants)
{
    auto doc = toy_doc();
    doc["landmark_indices"][1] = doc["landmark_indices"][0];
    expect_field_error(doc, "landmark_indices");

    doc = toy_doc();
    doc["face_indices"] = nlohmann::json::array();
    expect_field_error(doc, "face_indices");

    doc = toy_doc();
    doc["template"][0][0] = doc["template"][0][0].get<double>() + 0.5;
    expect_field_error(doc, "template");

    doc = toy_doc();
    doc.erase("shape_basis");
    expect_field_error(doc, "shape_basis");
}

TEST(AssetFile, MalformedJson)
{
    TempDir dir("assets_malformed");
    headkit::testing::write_bytes(dir / "x.json", "{\"version\": 1, ");
    EXPECT_THROW(load_assets(dir / "x.json"), ParseError);
    EXPECT_THROW(load_assets(dir / "missing.json"), Error);
}

TEST(Forward, ZeroParamsGiveTemplate)
{
    const ModelAssets& a = toy();
    const Points3 v = forward_canonical(a, HeadParams::zeros(a.num_shape(), a.num_expr()));
    EXPECT_TRUE(v == a.template_mesh);
}

TEST(Forward, OneHotShapeAddsBasisVector)
{
    const ModelAssets& a = toy();
    HeadParams p = HeadParams::zeros(a.num_shape(), a.num_expr());
    p.shape[0] = 1.0;
    const Points3 v = forward_canonical(a, p);
    for (std::size_t i = 0; i < a.n_vertices; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(v(r, c), a.template_mesh(r, c) + a.shape_basis(3 * r + c, 0));
        }
    }
}

TEST(Forward, MatchesNaiveLoop)
{
    const ModelAssets& a = toy();
    for (std::uint64_t s = 0; s < 20; ++s) {
        const HeadParams p = random_params(a, s);
        EXPECT_LE((forward_canonical(a, p) - naive_forward(a, p)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Forward, LinearInShapeWithoutJaw)
{
    const ModelAssets& a = toy();
    HeadParams p = random_params(a, 3);
    p.jaw.setZero();
    p.expression.setZero();
    const Points3 base = forward_canonical(a, p) - a.template_mesh;
    for (const double alpha : {-2.0, 0.5, 3.0}) {
        HeadParams q = p;
        q.shape *= alpha;
        EXPECT_LE(((forward_canonical(a, q) - a.template_mesh) - alpha * base).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Forward, JawOnlyMovesWeightedVertices)
{
    const ModelAssets& a = toy();
    HeadParams p = random_params(a, 4);
    HeadParams closed = p;
    closed.jaw.setZero();
    const Points3 open = forward_canonical(a, p);
    const Points3 shut = forward_canonical(a, closed);
    for (std::size_t i = 0; i < a.n_vertices; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        if (a.jaw_weights[r] == 0.0) {
            EXPECT_TRUE(open.row(r) == shut.row(r));
        }
    }
    EXPECT_GT((open - shut).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, RejectsCoefficientMismatch)
{
    const ModelAssets& a = toy();
    HeadParams p = HeadParams::zeros(3, 2);
    EXPECT_THROW(forward_canonical(a, p), InvalidArgument);
    p = HeadParams::zeros(4, 5);
    EXPECT_THROW(forward_canonical(a, p), InvalidArgument);
}

TEST(Select, PicksRowsInOrder)
{
    Points3 rows(3, 3);
    rows << 1, 1, 1, 2, 2, 2, 3, 3, 3;
    const Points3 picked = select({2, 0}, rows);
    ASSERT_EQ(picked.rows(), 2);
    EXPECT_TRUE(picked.row(0) == rows.row(2));
    EXPECT_TRUE(picked.row(1) == rows.row(0));
    EXPECT_TRUE(select({0, 1, 2}, rows) == rows);
    EXPECT_EQ(select(toy().face_indices, toy().template_mesh).rows(), static_cast<Eigen::Index>(toy().face_indices.size()));
}

TEST(HeadParamsLayout, FullSizeVector)
{
    const HeadParams p = HeadParams::zeros(300, 100);
    EXPECT_EQ(p.size(), 412u);
    EXPECT_EQ(p.to_vector().size(), 412);
}

TEST(HeadParamsLayout, VectorRoundTrip)
{
    const HeadParams p = random_params(toy(), 9);
    EXPECT_TRUE(HeadParams::from_vector(p.to_vector(), 4, 2) == p);
}

TEST(HeadParamsLayout, Validation)
{
    HeadParams p = HeadParams::zeros(4, 2);
    EXPECT_NO_THROW(p.validate());
    p.scale = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.scale = 1.0;
    p.shape[1] = std::nan("");
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Obj, WritesOneBasedFaces)
{
    Points3 v(3, 3);
    v << 0, 0, 0, 1, 0, 0, 0, 1, 0.123456789012;
    std::ostringstream out;
    write_obj(v, {Triangle{0, 1, 2}}, out);
    EXPECT_EQ(out.str(), "v 0 0 0\nv 1 0 0\nv 0 1 0.123456789\nf 1 2 3\n");
}
