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
#include "headkit/camera.hpp"
#include "headkit/errors.hpp"
#include "headkit/fitting.hpp"
#include "headkit/rotation.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace headkit;
using headkit::testing::Rng;

namespace {

const ModelAssets& toy()
{
    static const ModelAssets assets = generate_toy_assets(7, 162, 4, 2, 16);
    return assets;
}

ProjectedHead from_points(const Points2& pts, const Mat3& r = Mat3::Identity())
{
    ProjectedHead p;
    p.points2d = pts;
    p.depth = VecX::Zero(pts.rows());
    p.rotation = r;
    return p;
}

} // namespace

TEST(Project, FlipsYAxis)
{
    Points3 v(2, 3);
    v << 1, 2, 3, -4, 5, -6;
    const ProjectedHead p = project(v, Mat3::Identity(), 1.0, Vec2::Zero());
    EXPECT_EQ(p.points2d(0, 0), 1.0);
    EXPECT_EQ(p.points2d(0, 1), -2.0);
    EXPECT_EQ(p.points2d(1, 0), -4.0);
    EXPECT_EQ(p.points2d(1, 1), -5.0);
    EXPECT_EQ(p.depth[0], 3.0);
}

TEST(Project, ScaleAndTranslation)
{
    Points3 v(1, 3);
    v << 1, 1, 9;
    const ProjectedHead p = project(v, Mat3::Identity(), 2.0, Vec2(10, 5));
    EXPECT_EQ(p.points2d(0, 0), 12.0);
    EXPECT_EQ(p.points2d(0, 1), 3.0);
    EXPECT_EQ(p.depth[0], 18.0);
}

TEST(Project, MatchesMatrixOracle)
{
    Rng rng(1);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        Points3 v(30, 3);
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            v.row(i) << n(rng), n(rng), n(rng);
        }
        const Mat3 r = headkit::testing::random_rotation(rng);
        const double s = std::exp(n(rng));
        const Vec2 tr(n(rng) * 50, n(rng) * 50);
        const ProjectedHead p = project(v, r, s, tr);
        Eigen::Matrix<double, 2, 3> flip;
        flip << 1, 0, 0, 0, -1, 0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const Vec3 q = r * v.row(i).transpose();
            const Vec2 expected = s * flip * q + tr;
            EXPECT_NEAR(p.points2d(i, 0), expected.x(), 1e-12 * (1 + std::abs(expected.x())));
            EXPECT_NEAR(p.points2d(i, 1), expected.y(), 1e-12 * (1 + std::abs(expected.y())));
            EXPECT_NEAR(p.depth[i], s * q.z(), 1e-12 * (1 + std::abs(s * q.z())));
        }
    }
}

TEST(Project, RejectsNonPositiveScale)
{
    Points3 v = Points3::Zero(1, 3);
    EXPECT_THROW(project(v, Mat3::Identity(), 0.0, Vec2::Zero()), InvalidArgument);
    EXPECT_THROW(project(v, Mat3::Identity(), -1.0, Vec2::Zero()), InvalidArgument);
}

TEST(HeadBox, Examples)
{
    Points2 pts(2, 2);
    pts << 0, 0, 4, 2;
    EXPECT_EQ(head_bbox(from_points(pts)), (BBox{0, 0, 4, 2}));
    Points2 one(1, 2);
    one << 3, 3;
    EXPECT_EQ(head_bbox(from_points(one)), (BBox{3, 3, 3, 3}));
    EXPECT_THROW(head_bbox(from_points(Points2(0, 2))), InvalidArgument);
}

TEST(HeadBox, ContainsEveryProjectedPoint)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const ProjectedHead p = project_head(toy(), random_head_params(toy(), s));
        const BBox b = head_bbox(p);
        double x1 = p.points2d(0, 0), x2 = x1, y1 = p.points2d(0, 1), y2 = y1;
        for (Eigen::Index i = 0; i < p.points2d.rows(); ++i) {
            x1 = std::min(x1, p.points2d(i, 0));
            x2 = std::max(x2, p.points2d(i, 0));
            y1 = std::min(y1, p.points2d(i, 1));
            y2 = std::max(y2, p.points2d(i, 1));
        }
        EXPECT_EQ(b, (BBox{x1, y1, x2, y2}));
    }
}

TEST(FaceBox, AbsentWhenFacingAway)
{
    ProjectedHead p = project_head(toy(), HeadParams::zeros(4, 2));
    p.rotation = euler_to_matrix({2.0, 0.0, 0.0});
    EXPECT_FALSE(face_bbox(p, toy()).has_value());
    p.rotation = euler_to_matrix({-2.0, 0.1, 0.0});
    EXPECT_FALSE(face_bbox(p, toy()).has_value());
}

TEST(FaceBox, QuarterTurnIsStillPresent)
{
    ProjectedHead p = project_head(toy(), HeadParams::zeros(4, 2));
    Mat3 r;
    r << 0, 0, 1, 0, 1, 0, -1, 0, 0; // yaw of exactly pi/2
    ASSERT_EQ(matrix_to_euler(r).yaw, std::numbers::pi / 2);
    p.rotation = r;
    EXPECT_TRUE(face_bbox(p, toy()).has_value());
}

TEST(FaceBox, MinMaxOverFaceVertices)
{
    ModelAssets a = toy();
    a.face_indices = {0, 1};
    Points2 pts = Points2::Zero(static_cast<Eigen::Index>(a.n_vertices), 2);
    pts.row(0) << 1, 1;
    pts.row(1) << 2, 3;
    pts.row(2) << 50, 50;
    const auto box = face_bbox(from_points(pts), a);
    ASSERT_TRUE(box.has_value());
    EXPECT_EQ(*box, (BBox{1, 1, 2, 3}));
}

TEST(FaceBox, InsideHeadBox)
{
    for (std::uint64_t s = 0; s < 100; ++s) {
        const ProjectedHead p = project_head(toy(), random_head_params(toy(), s));
        const auto f = face_bbox(p, toy());
        if (!f) {
            continue;
        }
        const BBox h = head_bbox(p);
        EXPECT_GE(f->x1, h.x1);
        EXPECT_GE(f->y1, h.y1);
        EXPECT_LE(f->x2, h.x2);
        EXPECT_LE(f->y2, h.y2);
    }
}

TEST(Crop, Arithmetic)
{
    ProjectedHead p;
    p.translation = Vec2(100, 50);
    p.scale = 2.0;
    const double d = template_diameter(toy());
    const BBox c = alignment_crop(p, toy(), 40.0 / d);
    EXPECT_NEAR(c.x1, 60.0, 1e-12);
    EXPECT_NEAR(c.y1, 10.0, 1e-12);
    EXPECT_NEAR(c.x2, 140.0, 1e-12);
    EXPECT_NEAR(c.y2, 90.0, 1e-12);
}

TEST(Crop, CentredOnProjectedOriginAndRotationInvariant)
{
    Rng rng(2);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        HeadParams params = random_head_params(toy(), s);
        const ProjectedHead p = project_head(toy(), params);
        const BBox c = alignment_crop(p, toy());
        const ProjectedHead origin = project(Points3::Zero(1, 3), p.rotation, p.scale, p.translation);
        EXPECT_NEAR(c.center_x(), origin.points2d(0, 0), 1e-9);
        EXPECT_NEAR(c.center_y(), origin.points2d(0, 1), 1e-9);
        EXPECT_NEAR(c.width(), c.height(), 1e-9);

        params.rot6d = matrix_to_rot6d(headkit::testing::random_rotation(rng));
        const BBox other = alignment_crop(project_head(toy(), params), toy());
        EXPECT_EQ(other.width(), c.width());
    }
}

TEST(Crop, RejectsNonPositiveMargin)
{
    ProjectedHead p;
    EXPECT_THROW(alignment_crop(p, toy(), 0.0), InvalidArgument);
    EXPECT_THROW(alignment_crop(p, toy(), -1.3), InvalidArgument);
}
