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
#include "headkit/rotation.hpp"

#include "headkit/errors.hpp"

#include <cmath>
#include <numbers>

namespace headkit {

namespace {

constexpr double kSingularNorm = 1e-12;
constexpr double kSmallAngle = 1e-8;
constexpr double kGimbalCos = 1e-12;

Mat3 skew(const Vec3& v)
{
    Mat3 k;
    k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return k;
}

} // namespace

bool is_rotation(const Mat3& r, double tol)
{
    const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().rowwise().sum().maxCoeff();
    return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RotationMatrix rot6d_to_matrix(const Vec6& a)
{
    const Vec3 a1 = a.head<3>();
    const Vec3 a2 = a.tail<3>();
    const double n1 = a1.norm();
    if (!(n1 >= kSingularNorm)) {
        throw SingularInput("6D rotation: first column is degenerate");
    }
    const Vec3 b1 = a1 / n1;
    const Vec3 w = a2 - b1.dot(a2) * b1;
    const double n2 = w.norm();
    if (!(n2 >= kSingularNorm)) {
        throw SingularInput("6D rotation: second column is parallel to the first");
    }
    const Vec3 b2 = w / n2;

    RotationMatrix r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b1.cross(b2);
    return r;
}

Vec6 rot6d_backward(const Vec6& a, const Mat3& grad_r)
{
    const Vec3 a1 = a.head<3>();
    const Vec3 a2 = a.tail<3>();
    const double n1 = a1.norm();
    const Vec3 b1 = a1 / n1;
    const double proj = b1.dot(a2);
    const Vec3 w = a2 - proj * b1;
    const double n2 = w.norm();
    const Vec3 b2 = w / n2;

    const Vec3 g3 = grad_r.col(2);
    // b3 = b1 x b2
    Vec3 g_b1 = grad_r.col(0) + b2.cross(g3);
    const Vec3 g_b2 = grad_r.col(1) + g3.cross(b1);

    // b2 = w / |w|
    const Vec3 g_w = (g_b2 - b2 * b2.dot(g_b2)) / n2;
    // w = a2 - (b1 . a2) b1
    const Vec3 g_a2 = g_w - b1 * b1.dot(g_w);
    g_b1 -= proj * g_w + a2 * b1.dot(g_w);
    // b1 = a1 / |a1|
    const Vec3 g_a1 = (g_b1 - b1 * b1.dot(g_b1)) / n1;

    Vec6 out;
    out << g_a1, g_a2;
    return out;
}

RotationMatrix axis_angle_to_matrix(const Vec3& w)
{
    const double theta = w.norm();
    const Mat3 k = skew(w);
    if (theta < kSmallAngle) {
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    return Mat3::Identity() + (std::sin(theta) / theta) * k + ((1.0 - std::cos(theta)) / (theta * theta)) * k * k;
}

std::array<Mat3, 3> axis_angle_jacobian(const Vec3& w)
{
    std::array<Mat3, 3> d;
    const double theta2 = w.squaredNorm();
    if (std::sqrt(theta2) < kSmallAngle) {
        const Mat3 k = skew(w);
        for (int i = 0; i < 3; ++i) {
            const Mat3 e = skew(Vec3::Unit(i));
            d[static_cast<std::size_t>(i)] = e + 0.5 * (e * k + k * e);
        }
        return d;
    }
    // dR/dw_i = (w_i [w]x + [w x (I - R) e_i]x) R / |w|^2
    const Mat3 r = axis_angle_to_matrix(w);
    const Mat3 k = skew(w);
    for (int i = 0; i < 3; ++i) {
        const Vec3 col = (Mat3::Identity() - r).col(i);
        d[static_cast<std::size_t>(i)] = (w[i] * k + skew(w.cross(col))) * r / theta2;
    }
    return d;
}

double geodesic_distance(const RotationMatrix& r1, const RotationMatrix& r2)
{
    // atan2 of the sine and cosine parts of R1 R2^T: accurate at both ends of
    // [0, pi]. Entries are summed in a fixed order so that swapping the inputs
    // transposes m exactly and m is exactly symmetric when r1 == r2.
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            m(i, j) = r1(i, 0) * r2(j, 0) + r1(i, 1) * r2(j, 1) + r1(i, 2) * r2(j, 2);
        }
    }
    const Vec3 s(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    const double c = 0.5 * (m.trace() - 1.0);
    return std::atan2(0.5 * s.norm(), c);
}

double wrap_angle(double a)
{
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w <= -std::numbers::pi) {
        w += two_pi;
    } else if (w > std::numbers::pi) {
        w -= two_pi;
    }
    return w;
}

RotationMatrix euler_to_matrix(const EulerPose& e)
{
    const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
    const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
    const double cr = std::cos(e.roll), sr = std::sin(e.roll);
    Mat3 ry, rx, rz;
    ry << cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy;
    rx << 1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp;
    rz << cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0;
    return ry * rx * rz;
}

EulerPose matrix_to_euler(const RotationMatrix& r)
{
    // Row 1 is (cos p sin r, cos p cos r, -sin p); column 2 is (sin y cos p, ., cos y cos p).
    EulerPose e;
    const double cp = std::hypot(r(1, 0), r(1, 1));
    e.pitch = std::atan2(-r(1, 2), cp);
    if (cp > kGimbalCos) {
        e.yaw = std::atan2(r(0, 2), r(2, 2));
        e.roll = std::atan2(r(1, 0), r(1, 1));
    } else {
        e.roll = 0.0;
        e.yaw = std::atan2(-r(2, 0), r(0, 0));
    }
    e.yaw = wrap_angle(e.yaw);
    e.roll = wrap_angle(e.roll);
    return e;
}

Vec6 matrix_to_rot6d(const RotationMatrix& r)
{
    Vec6 out;
    out << r.col(0), r.col(1);
    return out;
}

} // namespace headkit
