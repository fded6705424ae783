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

#include "headkit/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace headkit {

using Triangle = std::array<std::size_t, 3>;

/**
 * Linear head model: template mesh, shape and expression blendshape bases,
 * single-joint jaw skinning data and the vertex subsets used by the losses.
 *
 * Bases are stored as 3n x K matrices. Column k is the displacement field of
 * basis vector k, flattened vertex-major as (x0, y0, z0, x1, y1, z1, ...).
 *
 * Immutable after construction; share freely between threads.
 */
struct ModelAssets
{
    std::size_t n_vertices = 0;
    Points3 template_mesh;
    Eigen::MatrixXd shape_basis;
    Eigen::MatrixXd expr_basis;
    VecX jaw_weights;
    Vec3 jaw_pivot = Vec3::Zero();
    std::vector<Triangle> triangles;
    IndexList subsample_indices;
    IndexList face_indices;
    IndexList landmark_indices;

    std::size_t num_shape() const { return static_cast<std::size_t>(shape_basis.cols()); }
    std::size_t num_expr() const { return static_cast<std::size_t>(expr_basis.cols()); }

    bool operator==(const ModelAssets& other) const;
};

/**
 * Per-head parameter vector: shape and expression coefficients, jaw
 * axis-angle (radians), global rotation in the 6D representation, 2D
 * translation (pixels) and scale (pixels per model unit).
 */
struct HeadParams
{
    VecX shape;
    VecX expression;
    Vec3 jaw = Vec3::Zero();
    Vec6 rot6d = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
    Vec2 translation = Vec2::Zero();
    double scale = 1.0;

    /// Zero coefficients, identity rotation, zero translation, unit scale.
    static HeadParams zeros(std::size_t k_shape, std::size_t k_expr);

    /// Length of the flat vector: k_shape + k_expr + 3 + 6 + 2 + 1.
    std::size_t size() const { return static_cast<std::size_t>(shape.size() + expression.size()) + 12; }

    // Flat layout: [shape | expression | jaw(3) | rot6d(6) | translation(2) | scale].
    VecX to_vector() const;
    static HeadParams from_vector(const VecX& v, std::size_t k_shape, std::size_t k_expr);

    /// Throws InvalidArgument when scale <= 0 or an entry is not finite.
    void validate() const;

    bool operator==(const HeadParams& other) const;
};

/// Offsets of each parameter group inside HeadParams::to_vector().
struct ParamLayout
{
    std::size_t k_shape = 0;
    std::size_t k_expr = 0;

    std::size_t shape() const { return 0; }
    std::size_t expression() const { return k_shape; }
    std::size_t jaw() const { return k_shape + k_expr; }
    std::size_t rot6d() const { return jaw() + 3; }
    std::size_t translation() const { return rot6d() + 6; }
    std::size_t scale() const { return translation() + 2; }
    std::size_t size() const { return scale() + 1; }
};

/**
 * Deterministic stand-in for a licensed head model. The template is a
 * latitude-ring sphere of radius one (recentred so its vertex mean is the
 * origin); bases are pseudo-random fields with RMS displacement 0.05 per
 * basis vector; jaw weights ramp from zero at y = -0.2 to one at y = -0.6.
 * Vertices with y < -0.85 form the neck band excluded from the 3D loss
 * subset; face vertices are those with z > 0.3.
 *
 * Throws InvalidArgument for n_vertices < 12, zero counts or
 * n_landmarks > n_vertices.
 */
ModelAssets generate_toy_assets(
    std::uint64_t seed, std::size_t n_vertices, std::size_t k_shape, std::size_t k_expr,
    std::size_t n_landmarks);

/// Checks every ModelAssets invariant; throws ValidationError naming the field.
void validate_assets(const ModelAssets& assets);

ModelAssets load_assets(const std::filesystem::path& path);
void save_assets(const ModelAssets& assets, const std::filesystem::path& path);

/**
 * Blendshapes followed by jaw articulation. Global rotation, translation and
 * scale are not applied. Throws InvalidArgument on coefficient length
 * mismatch.
 */
Points3 forward_canonical(const ModelAssets& assets, const HeadParams& params);

/// Rows of `points` picked by `indices`, in index-list order.
template <typename Derived>
Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime, Eigen::RowMajor>
select(const IndexList& indices, const Eigen::MatrixBase<Derived>& points)
{
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime, Eigen::RowMajor> out(
        static_cast<Eigen::Index>(indices.size()), points.cols());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        out.row(static_cast<Eigen::Index>(j)) = points.row(static_cast<Eigen::Index>(indices[j]));
    }
    return out;
}

/// Diameter of the origin-centred bounding sphere of the template: 2 max |v|.
double template_diameter(const ModelAssets& assets);

/// Wavefront OBJ with 9 significant digits and 1-based face indices.
void write_obj(const Points3& vertices, const std::vector<Triangle>& triangles, std::ostream& out);

} // namespace headkit
