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
#include "headkit/metrics.hpp"

#include "headkit/errors.hpp"
#include "headkit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace headkit {

PoseErrorReport PoseErrorReport::in_degrees() const
{
    const double k = 180.0 / std::numbers::pi;
    return PoseErrorReport{mae_yaw * k, mae_pitch * k, mae_roll * k, mae_mean * k};
}

PoseErrorReport pose_mae(const std::vector<RotationMatrix>& preds, const std::vector<RotationMatrix>& gts)
{
    if (preds.size() != gts.size() || preds.empty()) {
        throw InvalidArgument("pose_mae: prediction and ground-truth lists must be non-empty and of equal length");
    }
    PoseErrorReport r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const EulerPose p = matrix_to_euler(preds[i]);
        const EulerPose g = matrix_to_euler(gts[i]);
        r.mae_yaw += std::abs(wrap_angle(p.yaw - g.yaw));
        r.mae_pitch += std::abs(wrap_angle(p.pitch - g.pitch));
        r.mae_roll += std::abs(wrap_angle(p.roll - g.roll));
    }
    const auto n = static_cast<double>(preds.size());
    r.mae_yaw /= n;
    r.mae_pitch /= n;
    r.mae_roll /= n;
    r.mae_mean = (r.mae_yaw + r.mae_pitch + r.mae_roll) / 3.0;
    return r;
}

double nme(const Points2& pred, const Points2& gt, const BBox& gt_box)
{
    if (pred.rows() != gt.rows() || pred.rows() == 0) {
        throw InvalidArgument("nme: landmark sets must be non-empty and of equal size");
    }
    if (!(gt_box.width() > 0.0 && gt_box.height() > 0.0)) {
        throw InvalidArgument("nme: ground-truth box has zero area");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        sum += (pred.row(i) - gt.row(i)).norm();
    }
    return sum / static_cast<double>(pred.rows()) / std::sqrt(gt_box.width() * gt_box.height());
}

double average_precision(
    const std::vector<std::vector<Detection>>& dets, const std::vector<std::vector<BBox>>& gts, double iou_threshold)
{
    if (dets.size() != gts.size()) {
        throw InvalidArgument("average_precision: detection and ground-truth image counts differ");
    }
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw InvalidArgument("average_precision: IoU threshold must lie in (0, 1)");
    }
    std::size_t n_gt = 0;
    for (const auto& g : gts) {
        n_gt += g.size();
    }
    if (n_gt == 0) {
        return 0.0;
    }

    struct Ref
    {
        double confidence;
        std::size_t image;
        std::size_t index;
    };
    std::vector<Ref> order;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (std::size_t j = 0; j < dets[i].size(); ++j) {
            order.push_back(Ref{dets[i][j].confidence, i, j});
        }
    }
    std::stable_sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) { return a.confidence > b.confidence; });

    std::vector<std::vector<bool>> matched(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) {
        matched[i].assign(gts[i].size(), false);
    }
    std::vector<double> precision, recall;
    precision.reserve(order.size());
    recall.reserve(order.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Ref& ref = order[k];
        const BBox& box = dets[ref.image][ref.index].bbox;
        double best = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < gts[ref.image].size(); ++j) {
            if (matched[ref.image][j]) {
                continue;
            }
            const double v = iou(box, gts[ref.image][j]);
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        if (best >= iou_threshold) {
            matched[ref.image][best_j] = true;
            ++tp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }

    // Precision envelope, then area under the stepwise curve.
    for (std::size_t k = precision.size(); k-- > 1;) {
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

} // namespace headkit
