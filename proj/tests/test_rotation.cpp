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
#include "headkit/errors.hpp"
#include "headkit/rotation.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace headkit;
using headkit::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

Vec6 random_vec6(Rng& rng)
{
    std::normal_distribution<double> n;
    Vec6 a;
    for (int i = 0; i < 6; ++i) {
        a[i] = n(rng);
    }
    return a;
}

double ortho_error(const Mat3& r) { return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(); }

} // namespace

TEST(Rot6d, IdentityInput)
{
    Vec6 a;
    a << 1, 0, 0, 0, 1, 0;
    EXPECT_TRUE(rot6d_to_matrix(a) == Mat3::Identity());
}

TEST(Rot6d, ScaledColumnsGiveSameRotation)
{
    Vec6 a;
    a << 2, 0, 0, 0.5, 3, 0;
    EXPECT_LE((rot6d_to_matrix(a) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rot6d, OutputsAreRotations)
{
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const Mat3 r = rot6d_to_matrix(random_vec6(rng));
        EXPECT_LE(ortho_error(r), 1e-12);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
        EXPECT_TRUE(is_rotation(r));
    }
}

TEST(Rot6d, SingularInputs)
{
    Vec6 a = Vec6::Zero();
    a[4] = 1.0;
    EXPECT_THROW(rot6d_to_matrix(a), SingularInput);
    a << 1, 2, 3, 2, 4, 6;
    EXPECT_THROW(rot6d_to_matrix(a), SingularInput);
}

TEST(Rot6d, RoundTripThroughMatrix)
{
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const Mat3 r = headkit::testing::random_rotation(rng);
        EXPECT_LE((rot6d_to_matrix(matrix_to_rot6d(r)) - r).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Rot6d, BackwardMatchesFiniteDifferences)
{
    Rng rng(3);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        const Vec6 a = random_vec6(rng);
        Mat3 g;
        for (int i = 0; i < 9; ++i) {
            g(i / 3, i % 3) = n(rng);
        }
        const Vec6 an = rot6d_backward(a, g);
        for (int i = 0; i < 6; ++i) {
            Vec6 up = a, down = a;
            up[i] += 1e-6;
            down[i] -= 1e-6;
            const double fd =
                ((rot6d_to_matrix(up).array() * g.array()).sum() - (rot6d_to_matrix(down).array() * g.array()).sum()) / 2e-6;
            EXPECT_NEAR(an[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(AxisAngle, MatchesEigen)
{
    Rng rng(4);
    std::normal_distribution<double> n;
    for (int t = 0; t < 100; ++t) {
        const Vec3 w(n(rng), n(rng), n(rng));
        EXPECT_LE((axis_angle_to_matrix(w) - headkit::testing::angle_axis(w.norm(), w)).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_TRUE(axis_angle_to_matrix(Vec3::Zero()) == Mat3::Identity());
    const Vec3 tiny(1e-10, -2e-10, 3e-10);
    EXPECT_LE((axis_angle_to_matrix(tiny) - headkit::testing::angle_axis(tiny.norm(), tiny)).cwiseAbs().maxCoeff(), 1e-18);
}

TEST(AxisAngle, JacobianMatchesFiniteDifferences)
{
    Rng rng(5);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        const Vec3 w = t == 0 ? Vec3(1e-9, 0, 0) : Vec3(n(rng), n(rng), n(rng));
        const auto jac = axis_angle_jacobian(w);
        for (int i = 0; i < 3; ++i) {
            Vec3 up = w, down = w;
            up[i] += 1e-6;
            down[i] -= 1e-6;
            const Mat3 fd = (axis_angle_to_matrix(up) - axis_angle_to_matrix(down)) / 2e-6;
            EXPECT_LE((jac[static_cast<std::size_t>(i)] - fd).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(Geodesic, MatchesQuaternionOracle)
{
    Rng rng(6);
    for (int t = 0; t < 1000; ++t) {
        const Mat3 a = headkit::testing::random_rotation(rng);
        const Mat3 b = headkit::testing::random_rotation(rng);
        EXPECT_NEAR(geodesic_distance(a, b), headkit::testing::quaternion_geodesic(a, b), 1e-9);
    }
}

TEST(Geodesic, RecoversKnownAngle)
{
    Rng rng(7);
    std::uniform_real_distribution<double> angle(0.0, kPi);
    for (int t = 0; t < 100; ++t) {
        const Mat3 r = headkit::testing::random_rotation(rng);
        const Vec3 axis = headkit::testing::random_quaternion(rng).vec();
        const double theta = t == 0 ? kPi : (t == 1 ? 1e-7 : angle(rng));
        EXPECT_NEAR(geodesic_distance(r, r * headkit::testing::angle_axis(theta, axis)), theta, 1e-9);
    }
}

TEST(Geodesic, ZeroAndSymmetric)
{
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const Mat3 a = headkit::testing::random_rotation(rng);
        const Mat3 b = headkit::testing::random_rotation(rng);
        EXPECT_EQ(geodesic_distance(a, a), 0.0);
        EXPECT_EQ(geodesic_distance(a, b), geodesic_distance(b, a));
        const double d = geodesic_distance(a, b);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, kPi);
    }
}

TEST(Euler, RoundTripAwayFromGimbal)
{
    Rng rng(9);
    std::uniform_real_distribution<double> yaw(-kPi + 1e-6, kPi), pitch(-kPi / 2 + 1e-3, kPi / 2 - 1e-3), roll(-kPi + 1e-6, kPi);
    for (int t = 0; t < 1000; ++t) {
        const EulerPose e{yaw(rng), pitch(rng), roll(rng)};
        const EulerPose back = matrix_to_euler(euler_to_matrix(e));
        EXPECT_NEAR(back.yaw, e.yaw, 1e-9);
        EXPECT_NEAR(back.pitch, e.pitch, 1e-9);
        EXPECT_NEAR(back.roll, e.roll, 1e-9);
    }
}

TEST(Euler, ExtractionReconstructsEveryRotation)
{
    Rng rng(10);
    for (int t = 0; t < 1000; ++t) {
        const Mat3 r = headkit::testing::random_rotation(rng);
        const EulerPose e = matrix_to_euler(r);
        EXPECT_LE((euler_to_matrix(e) - r).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GT(e.yaw, -kPi);
        EXPECT_LE(e.yaw, kPi);
        EXPECT_GE(e.pitch, -kPi / 2);
        EXPECT_LE(e.pitch, kPi / 2);
    }
}

TEST(Euler, GimbalLockPinsRollToZero)
{
    for (const double pitch : {kPi / 2, -kPi / 2}) {
        const Mat3 r = euler_to_matrix({0.4, pitch, 0.3});
        const EulerPose e = matrix_to_euler(r);
        EXPECT_EQ(e.roll, 0.0);
        EXPECT_NEAR(e.pitch, pitch, 1e-12);
        EXPECT_LE((euler_to_matrix(e) - r).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Euler, SingleAxisAngles)
{
    const EulerPose yaw_only = matrix_to_euler(headkit::testing::angle_axis(0.3, Vec3::UnitY()));
    EXPECT_NEAR(yaw_only.yaw, 0.3, 1e-15);
    EXPECT_NEAR(yaw_only.pitch, 0.0, 1e-15);
    EXPECT_NEAR(yaw_only.roll, 0.0, 1e-15);
    const EulerPose pitch_only = matrix_to_euler(headkit::testing::angle_axis(0.2, Vec3::UnitX()));
    EXPECT_NEAR(pitch_only.pitch, 0.2, 1e-15);
    const EulerPose roll_only = matrix_to_euler(headkit::testing::angle_axis(-0.1, Vec3::UnitZ()));
    EXPECT_NEAR(roll_only.roll, -0.1, 1e-15);
}

TEST(WrapAngle, RangeAndValues)
{
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(6.2), 6.2 - 2 * kPi, 1e-15);
    EXPECT_NEAR(wrap_angle(-3.1 - 3.1), 2 * kPi - 6.2, 1e-15);
    Rng rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int t = 0; t < 1000; ++t) {
        const double w = wrap_angle(u(rng));
        EXPECT_GT(w, -kPi);
        EXPECT_LE(w, kPi);
    }
}
