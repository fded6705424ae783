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
#include "headkit/camera.hpp"

#include "headkit/errors.hpp"
#include "headkit/rotation.hpp"

#include <cmath>
#include <numbers>

namespace headkit {

namespace {

BBox min_max_box(const Points2& points)
{
    const auto lo = points.colwise().minCoeff();
    const auto hi = points.colwise().maxCoeff();
    return BBox{lo(0), lo(1), hi(0), hi(1)};
}

} // namespace

ProjectedHead project(const Points3& vertices, const RotationMatrix& r, double scale, const Vec2& translation)
{
    if (!(scale > 0.0)) {
        throw InvalidArgument("projection scale must be positive");
    }
    ProjectedHead out;
    out.rotation = r;
    out.translation = translation;
    out.scale = scale;
    out.points2d.resize(vertices.rows(), 2);
    out.depth.resize(vertices.rows());
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        const Vec3 q = r * vertices.row(i).transpose();
        out.points2d(i, 0) = scale * q.x() + translation.x();
        out.points2d(i, 1) = -scale * q.y() + translation.y();
        out.depth[i] = scale * q.z();
    }
    return out;
}

ProjectedHead project_head(const ModelAssets& assets, const HeadParams& params)
{
    return project(forward_canonical(assets, params), rot6d_to_matrix(params.rot6d), params.scale, params.translation);
}

BBox head_bbox(const ProjectedHead& proj)
{
    if (proj.points2d.rows() == 0) {
        throw InvalidArgument("head_bbox needs at least one point");
    }
    return min_max_box(proj.points2d);
}

std::optional<BBox> face_bbox(const ProjectedHead& proj, const ModelAssets& assets)
{
    const EulerPose pose = matrix_to_euler(proj.rotation);
    if (std::abs(pose.yaw) > std::numbers::pi / 2.0) {
        return std::nullopt;
    }
    return min_max_box(select(assets.face_indices, proj.points2d));
}

BBox alignment_crop(const ProjectedHead& proj, const ModelAssets& assets, double margin)
{
    if (!(margin > 0.0) || !std::isfinite(margin)) {
        throw InvalidArgument("crop margin must be positive");
    }
    const double half = 0.5 * margin * proj.scale * template_diameter(assets);
    const Vec2& c = proj.translation;
    return BBox{c.x() - half, c.y() - half, c.x() + half, c.y() + half};
}

} // namespace headkit
