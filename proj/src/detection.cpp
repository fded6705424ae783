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
#include "headkit/detection.hpp"

#include "headkit/errors.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace headkit {

AnchorGrid make_anchor_grid(int image_side, const std::vector<int>& strides)
{
    if (strides.empty()) {
        throw InvalidArgument("anchor grid needs at least one stride");
    }
    if (image_side < 1) {
        throw InvalidArgument("image side must be positive");
    }
    AnchorGrid grid;
    grid.image_side = image_side;
    grid.strides = strides;
    std::size_t total = 0;
    for (const int stride : strides) {
        if (stride < 1) {
            throw InvalidArgument("strides must be positive, got " + std::to_string(stride));
        }
        const auto n = static_cast<std::size_t>((image_side + stride - 1) / stride);
        grid.cells.push_back(n);
        total += n * n;
    }
    grid.centers.resize(static_cast<Eigen::Index>(total), 2);
    grid.anchor_stride.reserve(total);
    const double side = image_side;
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < strides.size(); ++l) {
        const double stride = strides[l];
        for (std::size_t y = 0; y < grid.cells[l]; ++y) {
            for (std::size_t x = 0; x < grid.cells[l]; ++x) {
                grid.centers(k, 0) = std::min((static_cast<double>(x) + 0.5) * stride, side);
                grid.centers(k, 1) = std::min((static_cast<double>(y) + 0.5) * stride, side);
                grid.anchor_stride.push_back(strides[l]);
                ++k;
            }
        }
    }
    return grid;
}

double logistic(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<Detection> decode(
    const std::vector<RawPrediction>& raw, const AnchorGrid& grid, double conf_threshold, int threads)
{
    if (raw.size() != grid.size()) {
        throw InvalidArgument(
            "decode: " + std::to_string(raw.size()) + " predictions for " + std::to_string(grid.size()) + " anchors");
    }
    std::vector<std::optional<Detection>> slots(raw.size());
    detail::parallel_chunks(raw.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const RawPrediction& r = raw[i];
            if (!std::isfinite(r.dx) || !std::isfinite(r.dy) || !std::isfinite(r.dw) || !std::isfinite(r.dh) ||
                !std::isfinite(r.logit)) {
                throw InvalidArgument("decode: prediction " + std::to_string(i) + " has a non-finite entry");
            }
            const double confidence = logistic(r.logit);
            if (confidence < conf_threshold) {
                continue;
            }
            const double stride = grid.anchor_stride[i];
            const auto row = static_cast<Eigen::Index>(i);
            const double cx = grid.centers(row, 0) + r.dx * stride;
            const double cy = grid.centers(row, 1) + r.dy * stride;
            const double w = stride * std::exp(r.dw);
            const double h = stride * std::exp(r.dh);
            if (!(w > 0.0 && h > 0.0 && std::isfinite(w) && std::isfinite(h))) {
                throw InvalidArgument("decode: prediction " + std::to_string(i) + " has a degenerate size");
            }
            slots[i] = Detection{BBox{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}, confidence, r.params};
        }
    });
    std::vector<Detection> out;
    for (auto& s : slots) {
        if (s) {
            out.push_back(std::move(*s));
        }
    }
    return out;
}

double iou(const BBox& a, const BBox& b)
{
    if (!(a.width() > 0.0 && a.height() > 0.0 && b.width() > 0.0 && b.height() > 0.0)) {
        return 0.0;
    }
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold)
{
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
        throw InvalidArgument("nms: IoU threshold must lie in [0, 1]");
    }
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.confidence != b.confidence) {
            return a.confidence > b.confidence;
        }
        if (a.bbox.x1 != b.bbox.x1) {
            return a.bbox.x1 < b.bbox.x1;
        }
        return a.bbox.y1 < b.bbox.y1;
    });
    std::vector<Detection> kept;
    for (auto& d : dets) {
        const bool clear = std::all_of(
            kept.begin(), kept.end(), [&](const Detection& k) { return iou(k.bbox, d.bbox) <= iou_threshold; });
        if (clear) {
            kept.push_back(std::move(d));
        }
    }
    return kept;
}

} // namespace headkit
