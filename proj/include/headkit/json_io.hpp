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
#pragma once

#include "headkit/morphable_model.hpp"
#include "headkit/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace headkit::json {

using nlohmann::json;

/**
 * Serialises with every floating-point number printed as %.17g, so output
 * round-trips bit-exactly and is byte-stable. indent < 0 gives one line.
 */
std::string dump(const nlohmann::json& value, int indent = -1);

nlohmann::json read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const nlohmann::json& value, int indent = 1);

nlohmann::json points_to_json(const Points2& points);
nlohmann::json points_to_json(const Points3& points);
Points2 points2_from_json(const nlohmann::json& value, const std::string& field);
Points3 points3_from_json(const nlohmann::json& value, const std::string& field);

nlohmann::json matrix_to_json(const Mat3& m);
Mat3 matrix_from_json(const nlohmann::json& value, const std::string& field);

nlohmann::json bbox_to_json(const BBox& box);
BBox bbox_from_json(const nlohmann::json& value, const std::string& field);
nlohmann::json bboxes_to_json(const std::vector<BBox>& boxes);
std::vector<BBox> bboxes_from_json(const nlohmann::json& value, const std::string& field);

// {"shape": [...], "expression": [...], "jaw": [3], "rot6d": [6], "translation": [2], "scale": s}
nlohmann::json params_to_json(const HeadParams& params);
HeadParams params_from_json(const nlohmann::json& value);

/// Numeric value of `obj[key]`; throws ParseError naming `key` when absent or not a number.
double get_number(const nlohmann::json& obj, const std::string& key);

} // namespace headkit::json
