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
#include <functional>
#include <optional>

namespace headkit {

/// Weights of the five loss terms. Defaults: 3D 50, rotation 1, reprojection 1, classification 0.5, box 2.5.
struct LossWeights
{
    double w_3d = 50.0;
    double w_rot = 1.0;
    double w_reproj = 1.0;
    double w_cls = 0.5;
    double w_reg = 2.5;

    /// Throws InvalidArgument on a negative or non-finite weight.
    void validate() const;
};

struct LossBreakdown
{
    double l_3d = 0.0;
    double l_rot = 0.0;
    double l_reproj = 0.0;
    double l_cls = 0.0;
    double l_reg = 0.0;
    double total = 0.0;
};

template <typename Grad>
struct LossValue
{
    double value = 0.0;
    Grad gradient;
};

/**
 * Mean over points of |dx| + |dy|. Gradient is sign(pred - gt) / N with
 * sign(0) = 0.
 */
LossValue<Points2> reprojection_loss(const Points2& pred, const Points2& gt);

/// Uniform scale and centre mapping a point set into the unit cube.
struct CubeNormalization
{
    double scale = 1.0; // longest bounding-box edge
    Vec3 center = Vec3::Zero(); // bounding-box centre

    static CubeNormalization fit(const Points3& vertices);
    Points3 apply(const Points3& vertices) const;
};

struct NormalizedPoints
{
    Points3 vertices;
    double scale_used = 1.0;
    Vec3 center_used = Vec3::Zero();
};

/**
 * v' = (v - box_center) / longest_edge + 0.5. The longest output edge is one
 * and the output fits in [0,1]^3 with aspect ratios preserved. Throws
 * DegenerateGeometry for fewer than two points or zero extent.
 */
NormalizedPoints normalize_unit_cube(const Points3& vertices);

/**
 * Mean Euclidean distance between the unit-cube normalised prediction and
 * target. The normalisation of both sides is a constant for the gradient.
 */
LossValue<Points3> vertices_loss_3d(const Points3& pred, const Points3& gt);

/// As above with the prediction's normalisation supplied (for frozen finite differences).
LossValue<Points3> vertices_loss_3d(const Points3& pred, const Points3& gt, const CubeNormalization& pred_norm);

/**
 * Geodesic rotation loss. On SO(3) the value is
 * acos((tr(R_p R_gt^T) - 1) / 2); it is evaluated through the chord length
 * 2 asin(|R_p - R_gt|_F / sqrt(8)), which coincides there, is exactly zero
 * for identical inputs and stays well conditioned near zero. The gradient
 * is the derivative of the chord form over all nine entries of R_p, with
 * the asin argument capped at 1 - 1e-9.
 */
LossValue<Mat3> rotation_loss(const RotationMatrix& r_pred, const RotationMatrix& r_gt);

constexpr double kFocalAlpha = 0.25;
constexpr double kFocalGamma = 2.0;

/// Binary focal loss on a probability clamped to [1e-7, 1 - 1e-7]; gradient w.r.t. p.
LossValue<double> focal_loss(double p, bool label, double alpha = kFocalAlpha, double gamma = kFocalGamma);

/**
 * Complete-IoU box loss 1 - IoU + rho^2 / d^2 + alpha_v * v. alpha_v is held
 * constant in the gradient; pass `alpha_override` to evaluate with a fixed
 * alpha_v. Gradient is w.r.t. (x1, y1, x2, y2) of the prediction. Throws
 * InvalidArgument for a non-positive width or height.
 */
LossValue<Eigen::Vector4d> ciou_loss(const BBox& pred, const BBox& gt, std::optional<double> alpha_override = {});

/// The alpha_v trade-off factor of ciou_loss at (pred, gt).
double ciou_alpha(const BBox& pred, const BBox& gt);

LossBreakdown total_loss(double l_3d, double l_rot, double l_reproj, double l_cls, double l_reg, const LossWeights& weights);

/**
 * Max over i of |g_fd - g_an| / max(|g_fd|, |g_an|, 1e-6), with g_fd from
 * central differences of step eps.
 */
double finite_difference_check(
    const std::function<double(const VecX&)>& f, const VecX& x, const VecX& analytic_grad, double eps = 1e-6);

} // namespace headkit
