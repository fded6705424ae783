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

#include "headkit/camera.hpp"
#include "headkit/morphable_model.hpp"
#include "headkit/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace headkit {

struct RasterImage
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb; // row-major, three bytes per pixel

    RasterImage() = default;
    RasterImage(int w, int h);

    std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* pixel(int x, int y) const
    {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }

    bool operator==(const RasterImage&) const = default;
};

/// Unit-cube normalised coordinates used directly as RGB in [0, 1].
Points3 ncc_encode(const Points3& vertices);

/// Round half up to 0..255 after clamping to [0, 1].
std::uint8_t quantize_channel(double c);

/**
 * Z-buffer rasterisation of the projected mesh.
 *
 * Pixels are sampled at their centres (x + 0.5, y + 0.5) and coverage uses
 * edge functions with the top-left fill rule; both windings are drawn. The
 * fragment with the larger depth (closer to the viewer) wins; exact depth
 * ties go to the smaller colour in byte order, so the result does not depend
 * on triangle order. Colours are interpolated barycentrically, kept within
 * the triangle's per-channel colour range, and quantised with
 * quantize_channel. The background is black.
 */
RasterImage rasterize(
    const ProjectedHead& proj, const std::vector<Triangle>& triangles, const Points3& colors, int width, int height);

/// PNCC of the canonical mesh of `params`, rasterised under its pose.
RasterImage render_pncc(const ModelAssets& assets, const HeadParams& params, int width, int height);

/// Binary P6 with header "P6\n<w> <h>\n255\n".
std::string encode_ppm(const RasterImage& img);
void write_ppm(const RasterImage& img, const std::filesystem::path& path);

} // namespace headkit
