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
#include "headkit/losses.hpp"

#include "headkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace headkit {

namespace {

constexpr double kProbClamp = 1e-7;
constexpr double kChordCap = 1.0 - 1e-9;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

void LossWeights::validate() const
{
    for (const double w : {w_3d, w_rot, w_reproj, w_cls, w_reg}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw InvalidArgument("loss weights must be finite and non-negative");
        }
    }
}

LossValue<Points2> reprojection_loss(const Points2& pred, const Points2& gt)
{
    if (pred.rows() != gt.rows() || pred.rows() == 0) {
        throw InvalidArgument("reprojection_loss: point sets must be non-empty and of equal size");
    }
    const auto n = static_cast<double>(pred.rows());
    LossValue<Points2> out;
    out.gradient.resize(pred.rows(), 2);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        for (int c = 0; c < 2; ++c) {
            const double d = pred(i, c) - gt(i, c);
            sum += std::abs(d);
            out.gradient(i, c) = sign(d) / n;
        }
    }
    out.value = sum / n;
    return out;
}

CubeNormalization CubeNormalization::fit(const Points3& vertices)
{
    if (vertices.rows() < 2) {
        throw DegenerateGeometry("unit-cube normalisation needs at least two points");
    }
    const Vec3 lo = vertices.colwise().minCoeff().transpose();
    const Vec3 hi = vertices.colwise().maxCoeff().transpose();
    CubeNormalization n;
    n.scale = (hi - lo).maxCoeff();
    if (!(n.scale > 0.0) || !std::isfinite(n.scale)) {
        throw DegenerateGeometry("point set has zero extent");
    }
    n.center = 0.5 * (lo + hi);
    return n;
}

Points3 CubeNormalization::apply(const Points3& vertices) const
{
    Points3 out(vertices.rows(), 3);
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        out.row(i) = ((vertices.row(i).transpose() - center) / scale).array() + 0.5;
    }
    return out;
}

NormalizedPoints normalize_unit_cube(const Points3& vertices)
{
    const auto norm = CubeNormalization::fit(vertices);
    return NormalizedPoints{norm.apply(vertices), norm.scale, norm.center};
}

LossValue<Points3> vertices_loss_3d(const Points3& pred, const Points3& gt)
{
    if (pred.rows() != gt.rows()) {
        throw InvalidArgument("vertices_loss_3d: point sets differ in size");
    }
    return vertices_loss_3d(pred, gt, CubeNormalization::fit(pred));
}

LossValue<Points3> vertices_loss_3d(const Points3& pred, const Points3& gt, const CubeNormalization& pred_norm)
{
    if (pred.rows() != gt.rows() || pred.rows() == 0) {
        throw InvalidArgument("vertices_loss_3d: point sets must be non-empty and of equal size");
    }
    const Points3 p = pred_norm.apply(pred);
    const Points3 g = CubeNormalization::fit(gt).apply(gt);
    const auto k = static_cast<double>(pred.rows());

    LossValue<Points3> out;
    out.gradient = Points3::Zero(pred.rows(), 3);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        const Vec3 d = (p.row(i) - g.row(i)).transpose();
        const double len = d.norm();
        sum += len;
        if (len > 0.0) {
            out.gradient.row(i) = (d / (len * k * pred_norm.scale)).transpose();
        }
    }
    out.value = sum / k;
    return out;
}

LossValue<Mat3> rotation_loss(const RotationMatrix& r_pred, const RotationMatrix& r_gt)
{
    // For rotations |R_p - R_gt|_F^2 = 8 sin^2(theta / 2).
    const Mat3 d = r_pred - r_gt;
    const double chord = d.norm();
    const double u = chord / std::sqrt(8.0);

    LossValue<Mat3> out;
    out.value = 2.0 * std::asin(std::min(u, 1.0));
    out.gradient = Mat3::Zero();
    if (chord > 0.0) {
        const double uc = std::min(u, kChordCap);
        out.gradient = (2.0 / (std::sqrt(1.0 - uc * uc) * std::sqrt(8.0) * chord)) * d;
    }
    return out;
}

LossValue<double> focal_loss(double p, bool label, double alpha, double gamma)
{
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const bool clamped = pc != p;
    LossValue<double> out;
    if (label) {
        const double q = 1.0 - pc;
        out.value = -alpha * std::pow(q, gamma) * std::log(pc);
        out.gradient = alpha * (gamma * std::pow(q, gamma - 1.0) * std::log(pc) - std::pow(q, gamma) / pc);
    } else {
        const double q = 1.0 - pc;
        out.value = -(1.0 - alpha) * std::pow(pc, gamma) * std::log(q);
        out.gradient = -(1.0 - alpha) * (gamma * std::pow(pc, gamma - 1.0) * std::log(q) - std::pow(pc, gamma) / q);
    }
    if (clamped) {
        out.gradient = 0.0;
    }
    return out;
}

namespace {

struct CiouTerms
{
    double iou = 0.0;
    double v = 0.0;
};

void check_box(const BBox& b, const char* which)
{
    if (!(b.width() > 0.0) || !(b.height() > 0.0)) {
        throw InvalidArgument(std::string("ciou_loss: ") + which + " box has zero or negative area");
    }
}

CiouTerms ciou_terms(const BBox& pred, const BBox& gt)
{
    const double iw = std::max(0.0, std::min(pred.x2, gt.x2) - std::max(pred.x1, gt.x1));
    const double ih = std::max(0.0, std::min(pred.y2, gt.y2) - std::max(pred.y1, gt.y1));
    const double inter = iw * ih;
    const double uni = pred.area() + gt.area() - inter;
    const double dv = std::atan(gt.width() / gt.height()) - std::atan(pred.width() / pred.height());
    return CiouTerms{inter / uni, 4.0 / (std::numbers::pi * std::numbers::pi) * dv * dv};
}

double alpha_from_terms(const CiouTerms& t)
{
    const double denom = (1.0 - t.iou) + t.v;
    return denom > 0.0 ? t.v / denom : 0.0;
}

} // namespace

double ciou_alpha(const BBox& pred, const BBox& gt)
{
    check_box(pred, "predicted");
    check_box(gt, "target");
    return alpha_from_terms(ciou_terms(pred, gt));
}

LossValue<Eigen::Vector4d> ciou_loss(const BBox& pred, const BBox& gt, std::optional<double> alpha_override)
{
    check_box(pred, "predicted");
    check_box(gt, "target");

    const double w = pred.width(), h = pred.height();

    // Intersection; a coordinate only moves the overlap while it is the binding one.
    const double ix1 = std::max(pred.x1, gt.x1), ix2 = std::min(pred.x2, gt.x2);
    const double iy1 = std::max(pred.y1, gt.y1), iy2 = std::min(pred.y2, gt.y2);
    const double iw = std::max(0.0, ix2 - ix1), ih = std::max(0.0, iy2 - iy1);
    const double inter = iw * ih;
    const double uni = w * h + gt.area() - inter;
    const double iou = inter / uni;

    Eigen::Vector4d d_inter = Eigen::Vector4d::Zero();
    if (iw > 0.0 && ih > 0.0) {
        d_inter[0] = pred.x1 > gt.x1 ? -ih : 0.0;
        d_inter[2] = pred.x2 < gt.x2 ? ih : 0.0;
        d_inter[1] = pred.y1 > gt.y1 ? -iw : 0.0;
        d_inter[3] = pred.y2 < gt.y2 ? iw : 0.0;
    }
    const Eigen::Vector4d d_area(-h, -w, h, w);
    const Eigen::Vector4d d_union = d_area - d_inter;
    const Eigen::Vector4d d_iou = (d_inter * uni - inter * d_union) / (uni * uni);

    // Centre distance over enclosing-box diagonal.
    const double dx = pred.center_x() - gt.center_x();
    const double dy = pred.center_y() - gt.center_y();
    const double rho2 = dx * dx + dy * dy;
    const double ex = std::max(pred.x2, gt.x2) - std::min(pred.x1, gt.x1);
    const double ey = std::max(pred.y2, gt.y2) - std::min(pred.y1, gt.y1);
    const double diag2 = ex * ex + ey * ey;
    const Eigen::Vector4d d_rho2(dx, dy, dx, dy);
    const Eigen::Vector4d d_diag2(
        pred.x1 < gt.x1 ? -2.0 * ex : 0.0, pred.y1 < gt.y1 ? -2.0 * ey : 0.0, pred.x2 > gt.x2 ? 2.0 * ex : 0.0,
        pred.y2 > gt.y2 ? 2.0 * ey : 0.0);
    const Eigen::Vector4d d_dist = (d_rho2 * diag2 - rho2 * d_diag2) / (diag2 * diag2);

    // Aspect-ratio consistency.
    const double k = 4.0 / (std::numbers::pi * std::numbers::pi);
    const double dv = std::atan(gt.width() / gt.height()) - std::atan(w / h);
    const double v = k * dv * dv;
    const double r2 = w * w + h * h;
    const double dv_dw = -2.0 * k * dv * h / r2;
    const double dv_dh = 2.0 * k * dv * w / r2;
    const Eigen::Vector4d d_v(-dv_dw, -dv_dh, dv_dw, dv_dh);

    const double alpha = alpha_override ? *alpha_override : alpha_from_terms(CiouTerms{iou, v});

    LossValue<Eigen::Vector4d> out;
    out.value = 1.0 - iou + rho2 / diag2 + alpha * v;
    out.gradient = -d_iou + d_dist + alpha * d_v;
    return out;
}

LossBreakdown total_loss(double l_3d, double l_rot, double l_reproj, double l_cls, double l_reg, const LossWeights& weights)
{
    LossBreakdown b{l_3d, l_rot, l_reproj, l_cls, l_reg, 0.0};
    b.total = weights.w_3d * l_3d + weights.w_rot * l_rot + weights.w_reproj * l_reproj + weights.w_cls * l_cls +
              weights.w_reg * l_reg;
    return b;
}

double finite_difference_check(
    const std::function<double(const VecX&)>& f, const VecX& x, const VecX& analytic_grad, double eps)
{
    if (analytic_grad.size() != x.size()) {
        throw InvalidArgument("finite_difference_check: gradient length differs from x");
    }
    double worst = 0.0;
    VecX probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double up = f(probe);
        probe[i] = x[i] - eps;
        const double down = f(probe);
        probe[i] = x[i];
        const double fd = (up - down) / (2.0 * eps);
        const double an = analytic_grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

} // namespace headkit
