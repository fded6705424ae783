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
#include <vector>

namespace headkit {

/**
 * Multi-scale anchor layout for a square image. Level l covers a
 * ceil(S / stride) square grid; anchors are ordered level by level, then
 * row-major within a level. Cell centres are (i + 0.5) * stride, clamped to
 * [0, S] for the partial last cell when S is not a multiple of the stride.
 */
struct AnchorGrid
{
    int image_side = 0;
    std::vector<int> strides;
    std::vector<std::size_t> cells; // per level, cells per side
    Points2 centers;                // one row per anchor
    std::vector<int> anchor_stride; // stride of each anchor

    std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
};

inline const std::vector<int> kDefaultStrides{8, 16, 32};

AnchorGrid make_anchor_grid(int image_side, const std::vector<int>& strides = kDefaultStrides);

/// Raw network output for one anchor.
struct RawPrediction
{
    double dx = 0.0; // centre offset in units of the stride
    double dy = 0.0;
    double dw = 0.0; // log size in units of the stride
    double dh = 0.0;
    double logit = 0.0;
    std::optional<HeadParams> params;
};

struct Detection
{
    BBox bbox;
    double confidence = 0.0;
    std::optional<HeadParams> params;
};

double logistic(double x);

/**
 * Decodes one prediction per anchor and drops those with confidence below
 * conf_threshold. Output follows grid order regardless of the thread count.
 * Throws InvalidArgument on a count mismatch, a non-finite entry or a box
 * whose size under- or overflows.
 */
std::vector<Detection> decode(
    const std::vector<RawPrediction>& raw, const AnchorGrid& grid, double conf_threshold, int threads = 1);

/// Intersection over union; 0 when either box has no positive area.
double iou(const BBox& a, const BBox& b);

/**
 * Greedy suppression. Candidates are visited by descending confidence,
 * ties by smaller x1 then y1, then input order; a candidate is kept iff its
 * IoU with every kept detection is <= iou_threshold. Output is in kept order.
 */
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

} // namespace headkit
