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
#include "headkit/fitting.hpp"

#include "headkit/camera.hpp"
#include "headkit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace headkit {

namespace {

struct ForwardState
{
    Points3 blended; // after blendshapes, before the jaw
    Points3 canonical; // after the jaw
    Mat3 jaw_rotation;
    RotationMatrix rotation;
};

ForwardState run_forward(const ModelAssets& assets, const HeadParams& params)
{
    if (static_cast<std::size_t>(params.shape.size()) != assets.num_shape() ||
        static_cast<std::size_t>(params.expression.size()) != assets.num_expr()) {
        throw InvalidArgument("coefficient counts do not match the model bases");
    }
    const auto n = static_cast<Eigen::Index>(assets.n_vertices);
    VecX flat = Eigen::Map<const VecX>(assets.template_mesh.data(), 3 * n);
    flat.noalias() += assets.shape_basis * params.shape;
    flat.noalias() += assets.expr_basis * params.expression;

    ForwardState s;
    s.blended = Eigen::Map<const Points3>(flat.data(), n, 3);
    s.jaw_rotation = axis_angle_to_matrix(params.jaw);
    s.canonical = s.blended;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = assets.jaw_weights[i];
        if (w == 0.0) {
            continue;
        }
        const Vec3 u = s.blended.row(i).transpose() - assets.jaw_pivot;
        s.canonical.row(i) = s.blended.row(i) + (w * (s.jaw_rotation * u - u)).transpose();
    }
    s.rotation = rot6d_to_matrix(params.rot6d);
    return s;
}

// Per-parameter natural scale: pixel-valued entries move in units of the
// initial scale, everything else in unit steps.
VecX parameter_scales(const ParamLayout& layout, double scale)
{
    VecX rho = VecX::Ones(static_cast<Eigen::Index>(layout.size()));
    rho.segment<2>(static_cast<Eigen::Index>(layout.translation())).setConstant(scale);
    rho[static_cast<Eigen::Index>(layout.scale())] = scale;
    return rho;
}

// Stacked residuals whose absolute values (or norms) the loss terms
// average, each weighted like its term. Used only to shape the descent
// metric, so the prediction's normalisation is held fixed.
VecX residual_map(
    const ModelAssets& assets, const HeadParams& params, const FitTargets& targets, const LossWeights& weights,
    const CubeNormalization& norm)
{
    const ForwardState fw = run_forward(assets, params);
    const std::size_t n_lm = assets.landmark_indices.size();
    const std::size_t n_sub = targets.gt_canonical ? assets.subsample_indices.size() : 0;
    const std::size_t n_rot = targets.gt_rotation ? 9 : 0;
    VecX r(static_cast<Eigen::Index>(2 * n_lm + 3 * n_sub + n_rot));
    Eigen::Index k = 0;
    const double w_lm = weights.w_reproj / static_cast<double>(n_lm);
    for (std::size_t j = 0; j < n_lm; ++j) {
        const Vec3 q = fw.rotation * fw.canonical.row(static_cast<Eigen::Index>(assets.landmark_indices[j])).transpose();
        r[k++] = w_lm * (params.scale * q.x() + params.translation.x() - targets.landmarks2d(static_cast<Eigen::Index>(j), 0));
        r[k++] = w_lm * (-params.scale * q.y() + params.translation.y() - targets.landmarks2d(static_cast<Eigen::Index>(j), 1));
    }
    if (targets.gt_canonical) {
        const Points3 p = norm.apply(select(assets.subsample_indices, fw.canonical));
        const Points3 g = CubeNormalization::fit(*targets.gt_canonical).apply(*targets.gt_canonical);
        const double w_3d = weights.w_3d / static_cast<double>(n_sub);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            for (int c = 0; c < 3; ++c) {
                r[k++] = w_3d * (p(i, c) - g(i, c));
            }
        }
    }
    if (targets.gt_rotation) {
        const Mat3 d = fw.rotation - *targets.gt_rotation;
        for (int c = 0; c < 9; ++c) {
            r[k++] = weights.w_rot * d(c % 3, c / 3);
        }
    }
    return r;
}

struct LocalModel
{
    Eigen::MatrixXd jac; // of the residual map, by central differences
    Eigen::LDLT<Eigen::MatrixXd> metric; // damped J^T J
};

LocalModel local_model(
    const ModelAssets& assets, const VecX& x, const FitTargets& targets, const LossWeights& weights, const VecX& rho)
{
    const std::size_t ks = assets.num_shape(), ke = assets.num_expr();
    const CubeNormalization norm = predicted_normalization(assets, HeadParams::from_vector(x, ks, ke));
    const VecX r0 = residual_map(assets, HeadParams::from_vector(x, ks, ke), targets, weights, norm);
    Eigen::MatrixXd jac(r0.size(), x.size());
    VecX probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-6 * rho[j];
        probe[j] = x[j] + h;
        const VecX up = residual_map(assets, HeadParams::from_vector(probe, ks, ke), targets, weights, norm);
        probe[j] = x[j] - h;
        const VecX down = residual_map(assets, HeadParams::from_vector(probe, ks, ke), targets, weights, norm);
        probe[j] = x[j];
        jac.col(j) = (up - down) / (2.0 * h);
    }
    Eigen::MatrixXd m = jac.transpose() * jac;
    const VecX diag = m.diagonal();
    const double floor = 1e-9 * diag.maxCoeff();
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        m(j, j) += 1e-2 * diag[j] + floor;
    }
    return {std::move(jac), m.ldlt()};
}

} // namespace

void FitTargets::validate(const ModelAssets& assets) const
{
    if (static_cast<std::size_t>(landmarks2d.rows()) != assets.landmark_indices.size()) {
        throw InvalidArgument("landmarks2d has " + std::to_string(landmarks2d.rows()) + " rows, expected " +
                              std::to_string(assets.landmark_indices.size()));
    }
    if (gt_canonical && static_cast<std::size_t>(gt_canonical->rows()) != assets.subsample_indices.size()) {
        throw InvalidArgument("gt_canonical has " + std::to_string(gt_canonical->rows()) + " rows, expected " +
                              std::to_string(assets.subsample_indices.size()));
    }
}

void FitConfig::validate() const
{
    if (max_iters < 1) {
        throw InvalidArgument("max_iters must be at least 1");
    }
    if (!(step_size > 0.0)) {
        throw InvalidArgument("step_size must be positive");
    }
    if (decay_every < 1 || !(decay_factor > 0.0 && decay_factor <= 1.0)) {
        throw InvalidArgument("decay schedule must have a positive period and a factor in (0, 1]");
    }
    if (metric_refresh < 1) {
        throw InvalidArgument("metric_refresh must be at least 1");
    }
    if (convergence_window < 1 || convergence_tol < 0.0) {
        throw InvalidArgument("convergence window must be positive and tolerance non-negative");
    }
    weights.validate();
}

Objective objective_and_gradient(
    const ModelAssets& assets, const HeadParams& params, const FitTargets& targets, const LossWeights& weights,
    const std::optional<CubeNormalization>& frozen_norm)
{
    targets.validate(assets);
    const ForwardState fw = run_forward(assets, params);
    const ParamLayout layout{assets.num_shape(), assets.num_expr()};
    const Mat3& r = fw.rotation;
    const double s = params.scale;

    Points3 g_canonical = Points3::Zero(fw.canonical.rows(), 3);
    Mat3 g_rot = Mat3::Zero();
    Vec2 g_trans = Vec2::Zero();
    double g_scale = 0.0;

    // Reprojection of the landmark vertices.
    const std::size_t n_lm = assets.landmark_indices.size();
    Points2 projected(static_cast<Eigen::Index>(n_lm), 2);
    Points3 rotated(static_cast<Eigen::Index>(n_lm), 3);
    for (std::size_t j = 0; j < n_lm; ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        const Vec3 q = r * fw.canonical.row(static_cast<Eigen::Index>(assets.landmark_indices[j])).transpose();
        rotated.row(row) = q.transpose();
        projected(row, 0) = s * q.x() + params.translation.x();
        projected(row, 1) = -s * q.y() + params.translation.y();
    }
    const auto reproj = reprojection_loss(projected, targets.landmarks2d);
    for (std::size_t j = 0; j < n_lm; ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        const auto vid = static_cast<Eigen::Index>(assets.landmark_indices[j]);
        const Vec2 g = weights.w_reproj * reproj.gradient.row(row).transpose();
        const Vec3 g_q(s * g.x(), -s * g.y(), 0.0);
        g_trans += g;
        g_scale += g.x() * rotated(row, 0) - g.y() * rotated(row, 1);
        g_rot += g_q * fw.canonical.row(vid);
        g_canonical.row(vid) += (r.transpose() * g_q).transpose();
    }

    double l_rot = 0.0;
    if (targets.gt_rotation) {
        const auto rl = rotation_loss(r, *targets.gt_rotation);
        l_rot = rl.value;
        g_rot += weights.w_rot * rl.gradient;
    }

    double l_3d = 0.0;
    if (targets.gt_canonical) {
        const Points3 sub = select(assets.subsample_indices, fw.canonical);
        const CubeNormalization norm = frozen_norm ? *frozen_norm : CubeNormalization::fit(sub);
        const auto vl = vertices_loss_3d(sub, *targets.gt_canonical, norm);
        l_3d = vl.value;
        for (std::size_t j = 0; j < assets.subsample_indices.size(); ++j) {
            g_canonical.row(static_cast<Eigen::Index>(assets.subsample_indices[j])) +=
                weights.w_3d * vl.gradient.row(static_cast<Eigen::Index>(j));
        }
    }

    // Jaw skinning: c = p + (1 - w) u + w J u with u = v - p.
    Points3 g_blended = g_canonical;
    Mat3 g_jaw_rot = Mat3::Zero();
    for (Eigen::Index i = 0; i < g_canonical.rows(); ++i) {
        const double w = assets.jaw_weights[i];
        if (w == 0.0) {
            continue;
        }
        const Vec3 gc = g_canonical.row(i).transpose();
        const Vec3 u = fw.blended.row(i).transpose() - assets.jaw_pivot;
        g_blended.row(i) = ((1.0 - w) * gc + w * (fw.jaw_rotation.transpose() * gc)).transpose();
        g_jaw_rot += w * gc * u.transpose();
    }
    const auto d_jaw = axis_angle_jacobian(params.jaw);

    const Eigen::Map<const VecX> g_flat(g_blended.data(), g_blended.size());

    Objective out;
    out.loss = total_loss(l_3d, l_rot, reproj.value, 0.0, 0.0, weights);
    out.gradient.resize(static_cast<Eigen::Index>(layout.size()));
    out.gradient.segment(0, static_cast<Eigen::Index>(layout.k_shape)).noalias() = assets.shape_basis.transpose() * g_flat;
    out.gradient.segment(static_cast<Eigen::Index>(layout.expression()), static_cast<Eigen::Index>(layout.k_expr))
        .noalias() = assets.expr_basis.transpose() * g_flat;
    for (int k = 0; k < 3; ++k) {
        out.gradient[static_cast<Eigen::Index>(layout.jaw()) + k] =
            g_jaw_rot.cwiseProduct(d_jaw[static_cast<std::size_t>(k)]).sum();
    }
    out.gradient.segment<6>(static_cast<Eigen::Index>(layout.rot6d())) = rot6d_backward(params.rot6d, g_rot);
    out.gradient.segment<2>(static_cast<Eigen::Index>(layout.translation())) = g_trans;
    out.gradient[static_cast<Eigen::Index>(layout.scale())] = g_scale;
    return out;
}

CubeNormalization predicted_normalization(const ModelAssets& assets, const HeadParams& params)
{
    return CubeNormalization::fit(select(assets.subsample_indices, forward_canonical(assets, params)));
}

FitTrace fit(const ModelAssets& assets, const FitTargets& targets, const HeadParams& init, const FitConfig& config)
{
    constexpr int kMaxHalvings = 40;
    config.validate();
    init.validate();
    targets.validate(assets);

    const ParamLayout layout{assets.num_shape(), assets.num_expr()};
    const VecX rho = parameter_scales(layout, init.scale);

    FitTrace trace;
    VecX x = init.to_vector();
    auto params_of = [&](const VecX& v) { return HeadParams::from_vector(v, layout.k_shape, layout.k_expr); };

    auto evaluate = [&](const VecX& v) -> std::optional<Objective> {
        const HeadParams p = params_of(v);
        if (!(p.scale > 0.0)) {
            return std::nullopt;
        }
        try {
            return objective_and_gradient(assets, p, targets, config.weights);
        } catch (const SingularInput&) {
            return std::nullopt;
        }
    };

    std::optional<Objective> current = evaluate(x);
    LocalModel model;
    if (!current) {
        throw InvalidArgument("initial parameters are degenerate");
    }

    for (int it = 0;; ++it) {
        const double f = current->loss.total;
        trace.history.push_back(current->loss);
        trace.iterations = it;
        if (!std::isfinite(f) || !current->gradient.allFinite()) {
            trace.params = params_of(x);
            throw Diverged("fit diverged at iteration " + std::to_string(it), trace);
        }
        const VecX& g = current->gradient;
        if (f == 0.0 || g.isZero(0.0)) {
            trace.converged = true;
            break;
        }
        const int window = config.convergence_window;
        if (it >= window && std::abs(trace.history[static_cast<std::size_t>(it - window)].total - f) < config.convergence_tol) {
            trace.converged = true;
            break;
        }
        if (it >= config.max_iters) {
            break;
        }

        if (it % config.metric_refresh == 0) {
            model = local_model(assets, x, targets, config.weights, rho);
        }
        const double cap = config.step_size * std::pow(config.decay_factor, it / config.decay_every);

        // Moves along -dir from length t0 (capped), halving until the total
        // does not rise. Empty when no such length is found.
        auto search = [&](const VecX& dir, double t0) -> std::optional<std::pair<VecX, Objective>> {
            const double max_move = (dir.array() / rho.array()).abs().maxCoeff();
            if (!(max_move > 0.0) || !std::isfinite(max_move)) {
                return std::nullopt;
            }
            double t = std::min(t0, cap / max_move);
            for (int halvings = 0; halvings <= kMaxHalvings; ++halvings, t *= 0.5) {
                VecX candidate = x - t * dir;
                auto next = evaluate(candidate);
                if (!next) {
                    trace.params = params_of(x);
                    throw Diverged("fit left the valid parameter domain at iteration " + std::to_string(it), trace);
                }
                if (next->loss.total <= f) {
                    return std::make_pair(std::move(candidate), std::move(*next));
                }
            }
            return std::nullopt;
        };

        // Gauss-Newton step on the residual map first: it shrinks all
        // residuals together and so keeps descending at kinks of the
        // absolute-value terms. The preconditioned subgradient with a Polyak
        // length is the fallback.
        const HeadParams here = params_of(x);
        const VecX r = residual_map(assets, here, targets, config.weights, predicted_normalization(assets, here));
        auto step = search(model.metric.solve(model.jac.transpose() * r), 1.0);
        if (!step) {
            const VecX dir = model.metric.solve(g);
            step = search(dir, f / g.dot(dir));
        }
        if (!step) {
            // No descent along either direction down to machine precision.
            trace.converged = true;
            break;
        }
        VecX candidate = std::move(step->first);
        std::optional<Objective> next = std::move(step->second);
        x = candidate;
        current = std::move(next);
        // The 6D block has gauge directions the loss cannot see; fold them
        // back so they never accumulate.
        HeadParams p = params_of(x);
        p.rot6d = matrix_to_rot6d(rot6d_to_matrix(p.rot6d));
        x = p.to_vector();
    }
    trace.params = params_of(x);
    return trace;
}

HeadParams initial_guess(const ModelAssets& assets, const FitTargets& targets)
{
    targets.validate(assets);
    HeadParams p = HeadParams::zeros(assets.num_shape(), assets.num_expr());
    const Points3 lm = select(assets.landmark_indices, assets.template_mesh);
    Points2 q(lm.rows(), 2);
    q.col(0) = lm.col(0);
    q.col(1) = -lm.col(1);
    const Eigen::RowVector2d q_mean = q.colwise().mean();
    const Eigen::RowVector2d p_mean = targets.landmarks2d.colwise().mean();
    const Points2 qc = q.rowwise() - q_mean;
    const Points2 pc = targets.landmarks2d.rowwise() - p_mean;
    const double denom = qc.squaredNorm();
    const double s = denom > 0.0 ? (qc.array() * pc.array()).sum() / denom : 0.0;
    p.scale = s > 0.0 ? s : 1.0;
    p.translation = (p_mean - p.scale * q_mean).transpose();
    return p;
}

FitTargets synthesize_targets(const ModelAssets& assets, const HeadParams& truth, bool with_rotation, bool with_canonical)
{
    const ForwardState fw = run_forward(assets, truth);
    const ProjectedHead proj = project(fw.canonical, fw.rotation, truth.scale, truth.translation);
    FitTargets t;
    t.landmarks2d = select(assets.landmark_indices, proj.points2d);
    if (with_rotation) {
        t.gt_rotation = fw.rotation;
    }
    if (with_canonical) {
        t.gt_canonical = select(assets.subsample_indices, fw.canonical);
    }
    return t;
}

HeadParams random_head_params(const ModelAssets& assets, std::uint64_t seed, double image_side)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    HeadParams p = HeadParams::zeros(assets.num_shape(), assets.num_expr());
    for (Eigen::Index k = 0; k < p.shape.size(); ++k) {
        p.shape[k] = normal(rng);
    }
    for (Eigen::Index k = 0; k < p.expression.size(); ++k) {
        p.expression[k] = normal(rng);
    }
    for (int k = 0; k < 3; ++k) {
        p.jaw[k] = 0.1 * normal(rng);
    }
    EulerPose pose;
    pose.yaw = 1.0 * unit(rng);
    pose.pitch = 0.5 * unit(rng);
    pose.roll = 0.3 * unit(rng);
    p.rot6d = matrix_to_rot6d(euler_to_matrix(pose));
    p.translation = Vec2::Constant(0.5 * image_side) + (image_side / 20.0) * Vec2(normal(rng), normal(rng));
    p.scale = image_side * (0.3 + 0.05 * unit(rng));
    return p;
}

HeadParams perturb_params(const HeadParams& truth, const FitConfig& config)
{
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = config.init_coeff_sigma;

    HeadParams p = truth;
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    axis.normalize();
    const Mat3 r = rot6d_to_matrix(truth.rot6d) * axis_angle_to_matrix(config.init_rotation_perturbation * axis);
    p.rot6d = matrix_to_rot6d(r);
    for (Eigen::Index k = 0; k < p.shape.size(); ++k) {
        p.shape[k] += sigma * normal(rng);
    }
    for (Eigen::Index k = 0; k < p.expression.size(); ++k) {
        p.expression[k] += sigma * normal(rng);
    }
    for (int k = 0; k < 3; ++k) {
        p.jaw[k] += sigma * normal(rng);
    }
    p.translation += sigma * truth.scale * Vec2(normal(rng), normal(rng));
    p.scale *= std::exp(sigma * normal(rng));
    return p;
}

} // namespace headkit
