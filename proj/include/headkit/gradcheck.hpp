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

#include <cstdint>
#include <string>
#include <vector>

namespace headkit {

struct GradcheckResult
{
    std::string name;
    double max_rel_error = 0.0; // worst over all points and coordinates
    int points = 0;
};

constexpr double kGradcheckTolerance = 1e-4;

/**
 * Central-difference check of every loss gradient and of the full fitting
 * objective at `points` random points drawn from `seed`. Stop-gradient
 * quantities (the 3D normalisation, the CIoU alpha) are frozen at each base
 * point, and rotation pairs within 0.05 rad of a half turn are redrawn. Results are in a fixed order: reprojection, vertices_3d, rotation,
 * focal, ciou, objective.
 */
std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed, int points = 100, double eps = 1e-6);

} // namespace headkit
