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

#include "headkit/errors.hpp"
#include "headkit/losses.hpp"
#include "headkit/morphable_model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace headkit {

struct FitTargets
{
    Points2 landmarks2d;
    std::optional<RotationMatrix> gt_rotation;
    std::optional<Points3> gt_canonical; // subsampled by assets.subsample_indices

    /// Throws InvalidArgument when shapes do not match the assets.
    void validate(const ModelAssets& assets) const;
};

struct FitConfig
{
    int max_iters = 2000;
    double step_size = 0.05;
    int decay_every = 500;
    double decay_factor = 0.5;
    LossWeights weights;
    double convergence_tol = 1e-10;
    int convergence_window = 20;
    int metric_refresh = 1; // iterations between rebuilds of the descent metric
    std::uint64_t seed = 0;
    double init_rotation_perturbation = 0.2; // radians
    double init_coeff_sigma = 0.1;

    void validate() const;
};

struct FitTrace
{
    std::vector<LossBreakdown> history; // one entry per evaluated iterate
    HeadParams params;
    int iterations = 0;
    bool converged = false;
};

class Diverged : public Error
{
public:
    Diverged(const std::string& message, FitTrace trace) : Error(message), trace_(std::move(trace)) {}
    const FitTrace& trace() const noexcept { return trace_; }

private:
    FitTrace trace_;
};

struct Objective
{
    LossBreakdown loss;
    VecX gradient; // laid out as HeadParams::to_vector()
};

/**
 * Weighted reprojection loss on the landmark vertices, plus the rotation
 * loss when a target rotation is present, plus the 3D vertices loss on the
 * subsampled canonical mesh when a target mesh is present. Classification
 * and box terms are zero. The gradient is exact backpropagation through the
 * projection, 6D rotation, jaw skinning and blendshapes.
 *
 * `frozen_norm` fixes the prediction's unit-cube normalisation (it is a
 * constant of the gradient either way); used for finite-difference checks.
 */
Objective objective_and_gradient(
    const ModelAssets& assets, const HeadParams& params, const FitTargets& targets, const LossWeights& weights,
    const std::optional<CubeNormalization>& frozen_norm = std::nullopt);

/// Unit-cube normalisation of the subsampled canonical prediction at `params`.
CubeNormalization predicted_normalization(const ModelAssets& assets, const HeadParams& params);

/**
 * Descent on the total loss. Each iteration first tries a damped
 * Gauss-Newton step on the stacked residuals, then falls back to the
 * gradient preconditioned by the same metric with a Polyak length. Either
 * way the move is capped so no parameter changes by more than step_size (in
 * its natural units), decayed by decay_factor every decay_every iterations,
 * and halved until the total does not rise. Stops when the total changes by
 * less than convergence_tol over convergence_window iterations, when no
 * descent is left, or at max_iters. Deterministic. Throws Diverged carrying
 * the trace when the loss becomes non-finite.
 */
FitTrace fit(const ModelAssets& assets, const FitTargets& targets, const HeadParams& init, const FitConfig& config);

/**
 * Starting point from the landmarks alone: zero coefficients, identity
 * rotation, and the least-squares scale and translation aligning the
 * template landmarks to the targets.
 */
HeadParams initial_guess(const ModelAssets& assets, const FitTargets& targets);

/// Noiseless targets generated from `truth`.
FitTargets synthesize_targets(
    const ModelAssets& assets, const HeadParams& truth, bool with_rotation = true, bool with_canonical = true);

/// Random but well-posed head parameters centred in an `image_side` image.
HeadParams random_head_params(const ModelAssets& assets, std::uint64_t seed, double image_side = 256.0);

/**
 * Initialisation for benchmark fits: rotation composed with a random-axis
 * turn of config.init_rotation_perturbation radians; shape, expression and
 * jaw offset by N(0, sigma); translation offset by N(0, sigma * scale) and
 * scale multiplied by exp(N(0, sigma)).
 */
HeadParams perturb_params(const HeadParams& truth, const FitConfig& config);

} // namespace headkit
