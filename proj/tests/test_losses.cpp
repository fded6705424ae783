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
#include "headkit/losses.hpp"
#include "headkit/rotation.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace headkit;
using headkit::testing::Rng;

namespace {

Points3 random_points(Rng& rng, Eigen::Index n)
{
    std::normal_distribution<double> g;
    Points3 p(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.row(i) << g(rng), g(rng), g(rng);
    }
    return p;
}

// Independent normalisation: per-axis extents by a scan, then shift and divide.
Points3 oracle_normalize(const Points3& v)
{
    double lo[3], hi[3];
    for (int c = 0; c < 3; ++c) {
        lo[c] = hi[c] = v(0, c);
        for (Eigen::Index i = 1; i < v.rows(); ++i) {
            lo[c] = std::min(lo[c], v(i, c));
            hi[c] = std::max(hi[c], v(i, c));
        }
    }
    const double s = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
    Points3 out(v.rows(), 3);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (int c = 0; c < 3; ++c) {
            out(i, c) = (v(i, c) - 0.5 * (lo[c] + hi[c])) / s + 0.5;
        }
    }
    return out;
}

} // namespace

TEST(Reprojection, Examples)
{
    Points2 gt(3, 2);
    gt << 0, 0, 10, 5, -3, 2;
    const auto same = reprojection_loss(gt, gt);
    EXPECT_EQ(same.value, 0.0);
    EXPECT_TRUE(same.gradient.isZero(0.0));

    Points2 shifted = gt;
    shifted.col(0).array() += 1.0;
    EXPECT_DOUBLE_EQ(reprojection_loss(shifted, gt).value, 1.0);
    shifted = gt;
    shifted.col(0).array() += 3.0;
    shifted.col(1).array() += 4.0;
    EXPECT_DOUBLE_EQ(reprojection_loss(shifted, gt).value, 7.0);
    EXPECT_DOUBLE_EQ(reprojection_loss(shifted, gt).gradient(0, 0), 1.0 / 3.0);
}

TEST(Reprojection, ShapeMismatch)
{
    EXPECT_THROW(reprojection_loss(Points2::Zero(3, 2), Points2::Zero(2, 2)), InvalidArgument);
    EXPECT_THROW(reprojection_loss(Points2(0, 2), Points2(0, 2)), InvalidArgument);
}

TEST(UnitCube, Examples)
{
    Points3 cube(2, 3);
    cube << 0, 0, 0, 2, 2, 2;
    const auto n = normalize_unit_cube(cube);
    EXPECT_TRUE(n.vertices.row(0).isZero(0.0));
    EXPECT_TRUE(n.vertices.row(1).isOnes(0.0));

    Points3 box(2, 3);
    box << 0, 0, 0, 4, 2, 1;
    const auto b = normalize_unit_cube(box);
    EXPECT_DOUBLE_EQ(b.vertices(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(b.vertices(1, 1), 0.75);
    EXPECT_DOUBLE_EQ(b.vertices(0, 2), 0.375);
    EXPECT_DOUBLE_EQ(b.vertices(1, 2), 0.625);
    EXPECT_DOUBLE_EQ(b.scale_used, 4.0);
}

TEST(UnitCube, LongestEdgeIsOne)
{
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const Points3 v = random_points(rng, 50);
        const Points3 n = normalize_unit_cube(v).vertices;
        const Eigen::RowVector3d lo = n.colwise().minCoeff(), hi = n.colwise().maxCoeff();
        EXPECT_NEAR((hi - lo).maxCoeff(), 1.0, 1e-12);
        EXPECT_GE(lo.minCoeff(), 0.0);
        EXPECT_LE(hi.maxCoeff(), 1.0);
        EXPECT_LE((n - oracle_normalize(v)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(UnitCube, DegenerateInputs)
{
    EXPECT_THROW(normalize_unit_cube(Points3::Zero(1, 3)), DegenerateGeometry);
    EXPECT_THROW(normalize_unit_cube(Points3::Ones(5, 3)), DegenerateGeometry);
}

TEST(Vertices3d, FixedPointsAndInvariance)
{
    Rng rng(2);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
        const Points3 v = random_points(rng, 40);
        EXPECT_EQ(vertices_loss_3d(v, v).value, 0.0);
        const double s = scale(rng);
        const Eigen::RowVector3d tr(10 * g(rng), 10 * g(rng), 10 * g(rng));
        const Points3 w = (s * v).rowwise() + tr;
        EXPECT_NEAR(vertices_loss_3d(v, w).value, 0.0, 1e-12);
        EXPECT_NEAR(vertices_loss_3d(2.0 * v, v).value, 0.0, 1e-12);
    }
}

TEST(Vertices3d, MatchesOracle)
{
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Points3 p = random_points(rng, 30), q = random_points(rng, 30);
        const Points3 d = oracle_normalize(p) - oracle_normalize(q);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            sum += d.row(i).norm();
        }
        EXPECT_NEAR(vertices_loss_3d(p, q).value, sum / 30.0, 1e-12);
    }
}

TEST(Vertices3d, FrozenNormGradient)
{
    Rng rng(4);
    const Points3 p = random_points(rng, 12), q = random_points(rng, 12);
    const CubeNormalization norm = CubeNormalization::fit(p);
    const auto an = vertices_loss_3d(p, q, norm);
    EXPECT_EQ(an.value, vertices_loss_3d(p, q).value);
    VecX x = Eigen::Map<const VecX>(p.data(), p.size());
    VecX g = Eigen::Map<const VecX>(an.gradient.data(), an.gradient.size());
    auto f = [&](const VecX& v) { return vertices_loss_3d(Eigen::Map<const Points3>(v.data(), 12, 3), q, norm).value; };
    EXPECT_LE(finite_difference_check(f, x, g), 1e-6);
}

TEST(Rotation, Examples)
{
    EXPECT_EQ(rotation_loss(Mat3::Identity(), Mat3::Identity()).value, 0.0);
    EXPECT_TRUE(rotation_loss(Mat3::Identity(), Mat3::Identity()).gradient.isZero(0.0));
    const Mat3 rx = headkit::testing::angle_axis(std::numbers::pi / 2, Vec3::UnitX());
    EXPECT_NEAR(rotation_loss(Mat3::Identity(), rx).value, std::numbers::pi / 2, 1e-12);
}

TEST(Rotation, MatchesGeodesicAndFiniteDifferences)
{
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const Mat3 a = headkit::testing::random_rotation(rng), b = headkit::testing::random_rotation(rng);
        const auto an = rotation_loss(a, b);
        EXPECT_NEAR(an.value, geodesic_distance(a, b), 1e-12);
        // central differences lose accuracy as the half turn is approached
        if (an.value > std::numbers::pi - 0.05) {
            continue;
        }
        VecX x = Eigen::Map<const VecX>(a.data(), 9);
        VecX g = Eigen::Map<const VecX>(an.gradient.data(), 9);
        auto f = [&](const VecX& v) { return rotation_loss(Eigen::Map<const Mat3>(v.data()), b).value; };
        EXPECT_LE(finite_difference_check(f, x, g), 1e-5);
    }
}

TEST(Focal, Examples)
{
    EXPECT_NEAR(focal_loss(0.5, true, 1.0, 0.0).value, std::log(2.0), 1e-15);
    EXPECT_NEAR(focal_loss(1.0 - 1e-7, true).value, 0.0, 1e-12);
    EXPECT_NEAR(focal_loss(0.9, true).value, 0.25 * 0.01 * -std::log(0.9), 1e-15);
    EXPECT_NEAR(focal_loss(0.9, true).value, 2.6341e-4, 1e-8);
    EXPECT_NEAR(focal_loss(1e-7, false).value, 0.0, 1e-12);
}

TEST(Focal, ClampsProbability)
{
    EXPECT_EQ(focal_loss(0.0, true).value, focal_loss(1e-7, true).value);
    EXPECT_EQ(focal_loss(0.0, true).gradient, 0.0);
    EXPECT_EQ(focal_loss(1.0, false).gradient, 0.0);
    EXPECT_TRUE(std::isfinite(focal_loss(1.0, false).value));
}

TEST(Focal, GradientMatchesFiniteDifferences)
{
    for (const bool label : {true, false}) {
        for (double p = 0.05; p < 0.96; p += 0.05) {
            const auto an = focal_loss(p, label);
            auto f = [&](const VecX& x) { return focal_loss(x[0], label).value; };
            EXPECT_LE(finite_difference_check(f, VecX::Constant(1, p), VecX::Constant(1, an.gradient)), 1e-6);
        }
    }
}

TEST(Ciou, Examples)
{
    const BBox a{0, 0, 2, 2}, b{1, 1, 3, 3};
    EXPECT_EQ(ciou_loss(a, a).value, 0.0);
    EXPECT_NEAR(ciou_loss(a, b).value, 1.0 - 1.0 / 7.0 + 1.0 / 9.0, 1e-12);
    EXPECT_GT(ciou_loss(a, BBox{100, 100, 110, 104}).value, 1.0);
    EXPECT_THROW(ciou_loss(BBox{0, 0, 0, 2}, b), InvalidArgument);
    EXPECT_THROW(ciou_loss(a, BBox{3, 3, 1, 1}), InvalidArgument);
}

TEST(Ciou, GradientWithFrozenAlpha)
{
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const BBox p = headkit::testing::random_box(rng, 100, 50), g = headkit::testing::random_box(rng, 100, 50);
        const double alpha = ciou_alpha(p, g);
        const auto an = ciou_loss(p, g, alpha);
        EXPECT_EQ(an.value, ciou_loss(p, g).value);
        auto f = [&](const VecX& x) { return ciou_loss(BBox{x[0], x[1], x[2], x[3]}, g, alpha).value; };
        EXPECT_LE(finite_difference_check(f, Eigen::Vector4d(p.x1, p.y1, p.x2, p.y2), an.gradient), 1e-4);
    }
}

TEST(Total, DefaultWeights)
{
    const LossWeights w;
    EXPECT_EQ(total_loss(1, 1, 1, 1, 1, w).total, 55.0);
    EXPECT_EQ(total_loss(0, 0, 0, 0, 0, w).total, 0.0);
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int t = 0; t < 100; ++t) {
        const LossWeights r{u(rng), u(rng), u(rng), u(rng), u(rng)};
        const Eigen::Matrix<double, 5, 1> c(u(rng), u(rng), u(rng), u(rng), u(rng));
        const Eigen::Matrix<double, 5, 1> wv(r.w_3d, r.w_rot, r.w_reproj, r.w_cls, r.w_reg);
        EXPECT_NEAR(total_loss(c[0], c[1], c[2], c[3], c[4], r).total, wv.dot(c), 1e-12);
    }
}

TEST(Total, WeightValidation)
{
    LossWeights w;
    EXPECT_NO_THROW(w.validate());
    w.w_cls = -0.5;
    EXPECT_THROW(w.validate(), InvalidArgument);
    w.w_cls = std::numeric_limits<double>::infinity();
    EXPECT_THROW(w.validate(), InvalidArgument);
}

TEST(FiniteDifference, Examples)
{
    auto sq = [](const VecX& x) { return x[0] * x[0]; };
    EXPECT_LE(finite_difference_check(sq, VecX::Constant(1, 3.0), VecX::Constant(1, 6.0)), 1e-9);
    EXPECT_NEAR(finite_difference_check(sq, VecX::Constant(1, 3.0), VecX::Constant(1, 12.0)), 0.5, 1e-6);
    EXPECT_THROW(finite_difference_check(sq, VecX::Constant(1, 3.0), VecX::Zero(2)), InvalidArgument);

    Rng rng(8);
    std::uniform_real_distribution<double> px(0.0, 100.0);
    Points2 pred(8, 2), gt(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
        pred.row(i) << px(rng), px(rng);
        gt.row(i) << px(rng), px(rng);
    }
    const auto an = reprojection_loss(pred, gt);
    auto f = [&](const VecX& x) { return reprojection_loss(Eigen::Map<const Points2>(x.data(), 8, 2), gt).value; };
    EXPECT_LE(
        finite_difference_check(
            f, Eigen::Map<const VecX>(pred.data(), 16), Eigen::Map<const VecX>(an.gradient.data(), 16)),
        1e-6);
}
