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
#include "headkit/json_io.hpp"

#include "headkit/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace headkit::json {

namespace {

void write_number(std::string& out, double v)
{
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

bool all_scalars(const nlohmann::json& arr)
{
    for (const auto& e : arr) {
        if (e.is_structured()) {
            return false;
        }
    }
    return true;
}

void dump_impl(std::string& out, const nlohmann::json& v, int indent, int depth)
{
    const bool pretty = indent >= 0;
    auto newline = [&](int d) {
        if (pretty) {
            out += '\n';
            out.append(static_cast<std::size_t>(indent * d), ' ');
        }
    };

    switch (v.type()) {
    case nlohmann::json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(depth + 1);
            out += nlohmann::json(it.key()).dump();
            out += pretty ? ": " : ":";
            dump_impl(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case nlohmann::json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        const bool inline_items = !pretty || all_scalars(v);
        out += '[';
        bool first = true;
        for (const auto& e : v) {
            if (!first) {
                out += inline_items && pretty ? ", " : ",";
            }
            first = false;
            if (!inline_items) {
                newline(depth + 1);
            }
            dump_impl(out, e, indent, depth + 1);
        }
        if (!inline_items) {
            newline(depth);
        }
        out += ']';
        return;
    }
    case nlohmann::json::value_t::number_float:
        write_number(out, v.get<double>());
        return;
    default:
        out += v.dump();
        return;
    }
}

std::vector<double> number_row(const nlohmann::json& row, std::size_t expected, const std::string& field)
{
    if (!row.is_array() || row.size() != expected) {
        throw ParseError(field, "expected an array of " + std::to_string(expected) + " numbers");
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& e : row) {
        if (!e.is_number()) {
            throw ParseError(field, "expected a number");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

template <int Cols>
Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> points_from_json(
    const nlohmann::json& value, const std::string& field)
{
    if (!value.is_array()) {
        throw ParseError(field, "expected an array of points");
    }
    Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> out(static_cast<Eigen::Index>(value.size()), Cols);
    for (std::size_t i = 0; i < value.size(); ++i) {
        const auto row = number_row(value[i], Cols, field);
        for (int c = 0; c < Cols; ++c) {
            out(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

template <typename Derived>
nlohmann::json rows_to_json(const Eigen::MatrixBase<Derived>& m)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(i, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

VecX vector_from_json(const nlohmann::json& obj, const std::string& key)
{
    if (!obj.contains(key) || !obj[key].is_array()) {
        throw ParseError(key, "expected an array of numbers");
    }
    const auto values = number_row(obj[key], obj[key].size(), key);
    return Eigen::Map<const VecX>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <typename Vec>
nlohmann::json vector_to_json(const Vec& v)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

} // namespace

std::string dump(const nlohmann::json& value, int indent)
{
    std::string out;
    dump_impl(out, value, indent, 0);
    return out;
}

nlohmann::json read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), e.what());
    }
}

void write_file(const std::filesystem::path& path, const nlohmann::json& value, int indent)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << dump(value, indent) << '\n';
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

nlohmann::json points_to_json(const Points2& points) { return rows_to_json(points); }
nlohmann::json points_to_json(const Points3& points) { return rows_to_json(points); }

Points2 points2_from_json(const nlohmann::json& value, const std::string& field)
{
    return points_from_json<2>(value, field);
}

Points3 points3_from_json(const nlohmann::json& value, const std::string& field)
{
    return points_from_json<3>(value, field);
}

nlohmann::json matrix_to_json(const Mat3& m) { return rows_to_json(m); }

Mat3 matrix_from_json(const nlohmann::json& value, const std::string& field)
{
    const Points3 rows = points_from_json<3>(value, field);
    if (rows.rows() != 3) {
        throw ParseError(field, "expected a 3x3 matrix");
    }
    return rows;
}

nlohmann::json bbox_to_json(const BBox& box) { return nlohmann::json::array({box.x1, box.y1, box.x2, box.y2}); }

BBox bbox_from_json(const nlohmann::json& value, const std::string& field)
{
    const auto row = number_row(value, 4, field);
    return BBox{row[0], row[1], row[2], row[3]};
}

nlohmann::json bboxes_to_json(const std::vector<BBox>& boxes)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : boxes) {
        out.push_back(bbox_to_json(b));
    }
    return out;
}

std::vector<BBox> bboxes_from_json(const nlohmann::json& value, const std::string& field)
{
    if (!value.is_array()) {
        throw ParseError(field, "expected an array of boxes");
    }
    std::vector<BBox> out;
    out.reserve(value.size());
    for (const auto& b : value) {
        out.push_back(bbox_from_json(b, field));
    }
    return out;
}

nlohmann::json params_to_json(const HeadParams& params)
{
    return nlohmann::json{
        {"shape", vector_to_json(params.shape)},
        {"expression", vector_to_json(params.expression)},
        {"jaw", vector_to_json(params.jaw)},
        {"rot6d", vector_to_json(params.rot6d)},
        {"translation", vector_to_json(params.translation)},
        {"scale", params.scale},
    };
}

HeadParams params_from_json(const nlohmann::json& value)
{
    if (!value.is_object()) {
        throw ParseError("params", "expected an object");
    }
    HeadParams p;
    p.shape = vector_from_json(value, "shape");
    p.expression = vector_from_json(value, "expression");
    const VecX jaw = vector_from_json(value, "jaw");
    const VecX rot = vector_from_json(value, "rot6d");
    const VecX t = vector_from_json(value, "translation");
    if (jaw.size() != 3) {
        throw ParseError("jaw", "expected 3 numbers");
    }
    if (rot.size() != 6) {
        throw ParseError("rot6d", "expected 6 numbers");
    }
    if (t.size() != 2) {
        throw ParseError("translation", "expected 2 numbers");
    }
    p.jaw = jaw;
    p.rot6d = rot;
    p.translation = t;
    p.scale = get_number(value, "scale");
    return p;
}

double get_number(const nlohmann::json& obj, const std::string& key)
{
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number()) {
        throw ParseError(key, "expected a number");
    }
    return obj[key].get<double>();
}

} // namespace headkit::json
