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

namespace headkit {

/**
 * Yaw (about y, up), pitch (about x, right) and roll (about z, toward the
 * viewer), radians.
 *
 * Composition: R = R_y(yaw) * R_x(pitch) * R_z(roll). Ranges after
 * extraction: yaw and roll in (-pi, pi], pitch in [-pi/2, pi/2]. At the
 * gimbal (|pitch| = pi/2) roll is set to zero.
 */
struct EulerPose
{
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

/// True when R^T R = I and det R = 1 within `tol` (infinity norm).
bool is_rotation(const Mat3& r, double tol = 1e-10);

/**
 * Gram-Schmidt on the two 3-vectors a[0..3], a[3..6]; result columns are
 * (b1, b2, b1 x b2). Throws SingularInput when either triple is degenerate
 * (norm below 1e-12 before or after orthogonalization).
 */
RotationMatrix rot6d_to_matrix(const Vec6& a);

/**
 * Backpropagates dL/dR through rot6d_to_matrix. Returns dL/da.
 */
Vec6 rot6d_backward(const Vec6& a, const Mat3& grad_r);

/// Rodrigues formula; second-order Taylor expansion below |w| = 1e-8.
RotationMatrix axis_angle_to_matrix(const Vec3& w);

/// dR/dw_i for i = 0, 1, 2.
std::array<Mat3, 3> axis_angle_jacobian(const Vec3& w);

/// Angle of R1 R2^T in [0, pi]. Exactly zero and exactly symmetric for identical inputs.
double geodesic_distance(const RotationMatrix& r1, const RotationMatrix& r2);

EulerPose matrix_to_euler(const RotationMatrix& r);
RotationMatrix euler_to_matrix(const EulerPose& e);

/// Maps an angle to (-pi, pi].
double wrap_angle(double a);

/// First two columns of R packed as a 6D rotation.
Vec6 matrix_to_rot6d(const RotationMatrix& r);

} // namespace headkit
