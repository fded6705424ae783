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
#include "headkit/gradcheck.hpp"

#include "headkit/errors.hpp"
#include "headkit/fitting.hpp"
#include "headkit/losses.hpp"
#include "headkit/rotation.hpp"

#include <algorithm>
#include <numbers>
#include <random>

namespace headkit {

namespace {

using Rng = std::mt19937_64;

constexpr double kHalfTurnMargin = std::numbers::pi - 0.05;

RotationMatrix random_rotation(Rng& rng)
{
    std::normal_distribution<double> normal;
    Vec6 a;
    for (int i = 0; i < 6; ++i) {
        a[i] = normal(rng);
    }
    return rot6d_to_matrix(a);
}

template <typename Mat>
VecX flatten(const Mat& m)
{
    VecX out(m.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[k++] = m(i, j);
        }
    }
    return out;
}

template <typename Mat>
Mat unflatten(const VecX& v, Eigen::Index rows, Eigen::Index cols)
{
    Mat m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = v[k++];
        }
    }
    return m;
}

BBox random_box(Rng& rng)
{
    std::uniform_real_distribution<double> pos(0.0, 100.0), size(5.0, 60.0);
    const double x = pos(rng), y = pos(rng);
    return BBox{x, y, x + size(rng), y + size(rng)};
}

VecX box_vector(const BBox& b) { return Eigen::Vector4d(b.x1, b.y1, b.x2, b.y2); }

} // namespace

std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed, int points, double eps)
{
    if (points < 1 || !(eps > 0.0)) {
        throw InvalidArgument("gradcheck needs at least one point and a positive step");
    }
    Rng rng(seed);
    std::uniform_real_distribution<double> pixel(0.0, 256.0), unit(0.0, 1.0);
    std::normal_distribution<double> normal;

    std::vector<GradcheckResult> out{
        {"reprojection", 0.0, points}, {"vertices_3d", 0.0, points}, {"rotation", 0.0, points},
        {"focal", 0.0, points},        {"ciou", 0.0, points},        {"objective", 0.0, points}};
    auto record = [&](std::size_t slot, double err) { out[slot].max_rel_error = std::max(out[slot].max_rel_error, err); };

    const ModelAssets assets = generate_toy_assets(7, 162, 4, 2, 16);
    const FitConfig config;

    for (int p = 0; p < points; ++p) {
        {
            Points2 pred(16, 2), gt(16, 2);
            for (Eigen::Index i = 0; i < 16; ++i) {
                pred.row(i) << pixel(rng), pixel(rng);
                gt.row(i) << pixel(rng), pixel(rng);
            }
            const auto an = reprojection_loss(pred, gt);
            auto f = [&](const VecX& x) { return reprojection_loss(unflatten<Points2>(x, 16, 2), gt).value; };
            record(0, finite_difference_check(f, flatten(pred), flatten(an.gradient), eps));
        }
        {
            Points3 pred(40, 3), gt(40, 3);
            for (Eigen::Index i = 0; i < 40; ++i) {
                pred.row(i) << normal(rng), normal(rng), normal(rng);
                gt.row(i) << normal(rng), normal(rng), normal(rng);
            }
            const CubeNormalization norm = CubeNormalization::fit(pred);
            const auto an = vertices_loss_3d(pred, gt, norm);
            auto f = [&](const VecX& x) { return vertices_loss_3d(unflatten<Points3>(x, 40, 3), gt, norm).value; };
            record(1, finite_difference_check(f, flatten(pred), flatten(an.gradient), eps));
        }
        {
            // The geodesic loss is not differentiable at a half turn.
            RotationMatrix rp, rg;
            do {
                rp = random_rotation(rng);
                rg = random_rotation(rng);
            } while (geodesic_distance(rp, rg) > kHalfTurnMargin);
            const auto an = rotation_loss(rp, rg);
            auto f = [&](const VecX& x) { return rotation_loss(unflatten<Mat3>(x, 3, 3), rg).value; };
            record(2, finite_difference_check(f, flatten(rp), flatten(an.gradient), eps));
        }
        {
            const double prob = 0.02 + 0.96 * unit(rng);
            const bool label = unit(rng) < 0.5;
            const auto an = focal_loss(prob, label);
            auto f = [&](const VecX& x) { return focal_loss(x[0], label).value; };
            record(3, finite_difference_check(f, VecX::Constant(1, prob), VecX::Constant(1, an.gradient), eps));
        }
        {
            const BBox pred = random_box(rng);
            const BBox gt = random_box(rng);
            const double alpha = ciou_alpha(pred, gt);
            const auto an = ciou_loss(pred, gt, alpha);
            auto f = [&](const VecX& x) { return ciou_loss(BBox{x[0], x[1], x[2], x[3]}, gt, alpha).value; };
            record(4, finite_difference_check(f, box_vector(pred), an.gradient, eps));
        }
        {
            const HeadParams truth = random_head_params(assets, seed * 1000 + static_cast<std::uint64_t>(p));
            const FitTargets targets = synthesize_targets(assets, truth);
            FitConfig perturb = config;
            perturb.seed = seed * 1000 + static_cast<std::uint64_t>(p) + 1;
            const HeadParams at = perturb_params(truth, perturb);
            const CubeNormalization norm = predicted_normalization(assets, at);
            const Objective an = objective_and_gradient(assets, at, targets, config.weights, norm);
            auto f = [&](const VecX& x) {
                return objective_and_gradient(
                           assets, HeadParams::from_vector(x, assets.num_shape(), assets.num_expr()), targets,
                           config.weights, norm)
                    .loss.total;
            };
            record(5, finite_difference_check(f, at.to_vector(), an.gradient, eps));
        }
    }
    return out;
}

} // namespace headkit
