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
#include "headkit/pncc.hpp"

#include "headkit/errors.hpp"
#include "headkit/losses.hpp"
#include "headkit/rotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace headkit {

namespace {

struct Edge
{
    double a, b, c; // value at p is a * p.x + b * p.y + c
    bool inclusive; // top or left edge under the top-left rule

    Edge(const Vec2& p, const Vec2& q)
        : a(-(q.y() - p.y())), b(q.x() - p.x()), c(-(a * p.x() + b * p.y())), inclusive(a > 0.0 || (a == 0.0 && b > 0.0))
    {
    }

    double at(double x, double y) const { return a * x + b * y + c; }
    bool covers(double w) const { return w > 0.0 || (w == 0.0 && inclusive); }
};

} // namespace

RasterImage::RasterImage(int w, int h) : width(w), height(h), rgb(3 * static_cast<std::size_t>(w) * h, 0) {}

Points3 ncc_encode(const Points3& vertices) { return CubeNormalization::fit(vertices).apply(vertices); }

std::uint8_t quantize_channel(double c)
{
    return static_cast<std::uint8_t>(std::floor(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5));
}

RasterImage rasterize(
    const ProjectedHead& proj, const std::vector<Triangle>& triangles, const Points3& colors, int width, int height)
{
    if (width < 1 || height < 1) {
        throw InvalidArgument("rasterize: image dimensions must be positive");
    }
    const auto n = static_cast<std::size_t>(proj.points2d.rows());
    if (static_cast<std::size_t>(colors.rows()) != n || static_cast<std::size_t>(proj.depth.size()) != n) {
        throw InvalidArgument("rasterize: colours and depths must match the projected vertices");
    }
    for (const auto& t : triangles) {
        if (t[0] >= n || t[1] >= n || t[2] >= n) {
            throw InvalidArgument("rasterize: triangle index out of range");
        }
    }

    RasterImage img(width, height);
    std::vector<double> zbuf(static_cast<std::size_t>(width) * height, -std::numeric_limits<double>::infinity());
    std::vector<char> covered(zbuf.size(), 0);

    for (const auto& tri : triangles) {
        std::array<std::size_t, 3> v = tri;
        std::array<Vec2, 3> p;
        for (int k = 0; k < 3; ++k) {
            p[k] = proj.points2d.row(static_cast<Eigen::Index>(v[k])).transpose();
        }
        const double area = Edge(p[0], p[1]).at(p[2].x(), p[2].y());
        if (area == 0.0 || !std::isfinite(area)) {
            continue;
        }
        if (area < 0.0) {
            std::swap(v[1], v[2]);
            std::swap(p[1], p[2]);
        }
        // Weight of vertex k is the edge opposite to it.
        const std::array<Edge, 3> edges{Edge(p[1], p[2]), Edge(p[2], p[0]), Edge(p[0], p[1])};
        const double total = std::abs(area);

        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (int k = 0; k < 3; ++k) {
            const Vec3 c = colors.row(static_cast<Eigen::Index>(v[k])).transpose();
            lo = lo.cwiseMin(c);
            hi = hi.cwiseMax(c);
        }

        const double min_x = std::min({p[0].x(), p[1].x(), p[2].x()});
        const double max_x = std::max({p[0].x(), p[1].x(), p[2].x()});
        const double min_y = std::min({p[0].y(), p[1].y(), p[2].y()});
        const double max_y = std::max({p[0].y(), p[1].y(), p[2].y()});
        const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_x - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_y - 0.5)));

        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                std::array<double, 3> w;
                bool inside = true;
                for (int k = 0; k < 3 && inside; ++k) {
                    w[k] = edges[k].at(px, py);
                    inside = edges[k].covers(w[k]);
                }
                if (!inside) {
                    continue;
                }
                double depth = 0.0;
                Vec3 color = Vec3::Zero();
                for (int k = 0; k < 3; ++k) {
                    const double b = w[k] / total;
                    depth += b * proj.depth[static_cast<Eigen::Index>(v[k])];
                    color += b * colors.row(static_cast<Eigen::Index>(v[k])).transpose();
                }
                color = color.cwiseMax(lo).cwiseMin(hi);
                const std::array<std::uint8_t, 3> rgb{
                    quantize_channel(color.x()), quantize_channel(color.y()), quantize_channel(color.z())};

                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                std::uint8_t* dst = img.pixel(x, y);
                bool wins = !covered[idx] || depth > zbuf[idx];
                if (covered[idx] && depth == zbuf[idx]) {
                    wins = std::lexicographical_compare(rgb.begin(), rgb.end(), dst, dst + 3);
                }
                if (wins) {
                    covered[idx] = 1;
                    zbuf[idx] = depth;
                    std::copy(rgb.begin(), rgb.end(), dst);
                }
            }
        }
    }
    return img;
}

RasterImage render_pncc(const ModelAssets& assets, const HeadParams& params, int width, int height)
{
    const Points3 canonical = forward_canonical(assets, params);
    const ProjectedHead proj = project(canonical, rot6d_to_matrix(params.rot6d), params.scale, params.translation);
    return rasterize(proj, assets.triangles, ncc_encode(canonical), width, height);
}

std::string encode_ppm(const RasterImage& img)
{
    if (img.rgb.size() != 3 * static_cast<std::size_t>(img.width) * img.height) {
        throw InvalidArgument("encode_ppm: pixel buffer does not match the image size");
    }
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    return out;
}

void write_ppm(const RasterImage& img, const std::filesystem::path& path)
{
    const std::string bytes = encode_ppm(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("failed to write '" + path.string() + "'");
    }
}

} // namespace headkit
