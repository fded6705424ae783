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

#include <optional>

namespace headkit {

// Weak-perspective camera. Model space is right-handed with x right, y up
// and z toward the viewer; the image has y pointing down, so pixel
// coordinates are p = scale * (x, -y) + translation of the rotated point.

struct ProjectedHead
{
    Points2 points2d;
    VecX depth; // scale * rotated z; larger is closer to the viewer
    RotationMatrix rotation = RotationMatrix::Identity();
    Vec2 translation = Vec2::Zero();
    double scale = 1.0;
};

/// Throws InvalidArgument when scale <= 0.
ProjectedHead project(const Points3& vertices, const RotationMatrix& r, double scale, const Vec2& translation);

/// Convenience: forward_canonical + rot6d_to_matrix + project.
ProjectedHead project_head(const ModelAssets& assets, const HeadParams& params);

/// Componentwise min/max rectangle; throws InvalidArgument on empty input.
BBox head_bbox(const ProjectedHead& proj);

/**
 * Min/max rectangle over the face vertices, or nullopt when the head faces
 * away from the camera (|yaw| > pi/2, boundary inclusive of pi/2).
 */
std::optional<BBox> face_bbox(const ProjectedHead& proj, const ModelAssets& assets);

constexpr double kDefaultCropMargin = 1.3;

/**
 * Square crop centred on the projection of the model-space origin (which is
 * the translation under this camera) with side margin * scale * D, D the
 * template bounding-sphere diameter. The crop may extend past the image.
 * Throws InvalidArgument unless margin > 0.
 */
BBox alignment_crop(const ProjectedHead& proj, const ModelAssets& assets, double margin = kDefaultCropMargin);

} // namespace headkit
