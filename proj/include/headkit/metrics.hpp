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

#include "headkit/detection.hpp"
#include "headkit/types.hpp"

#include <vector>

namespace headkit {

/// Per-angle mean absolute errors in radians.
struct PoseErrorReport
{
    double mae_yaw = 0.0;
    double mae_pitch = 0.0;
    double mae_roll = 0.0;
    double mae_mean = 0.0;

    PoseErrorReport in_degrees() const;
};

/**
 * Both sides go through matrix_to_euler; each angle error is the absolute
 * difference wrapped to (-pi, pi], so it lies in [0, pi].
 */
PoseErrorReport pose_mae(const std::vector<RotationMatrix>& preds, const std::vector<RotationMatrix>& gts);

/// Mean landmark distance over sqrt(w * h) of the ground-truth box.
double nme(const Points2& pred, const Points2& gt, const BBox& gt_box);

/**
 * Detection AP at one IoU threshold with all-point interpolation.
 * dets[i] and gts[i] belong to image i. Detections are pooled and visited by
 * descending confidence (ties keep image order, then list order); each is
 * matched to the unmatched ground truth of highest IoU in its image (ties to
 * the lower index) and counts as a true positive when that IoU reaches the
 * threshold. Returns 0 when there is no ground truth at all.
 */
double average_precision(
    const std::vector<std::vector<Detection>>& dets, const std::vector<std::vector<BBox>>& gts, double iou_threshold);

} // namespace headkit
