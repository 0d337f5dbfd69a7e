// Copyright (C) 2026 The mudoc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mudoc/util.hpp"

namespace mudoc {

struct Rgb {
    std::uint8_t r = 255;
    std::uint8_t g = 255;
    std::uint8_t b = 255;

    bool operator==(const Rgb&) const = default;
};

/// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
    bool operator==(const PixelRect&) const = default;
};

/// 8-bit RGB image. The dpi records the scale it was rendered at (points = pixels * 72 / dpi).
class Raster {
 public:
    Raster() = default;
    Raster(int width, int height, double dpi = 72.0, Rgb fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double dpi() const noexcept { return dpi_; }
    void set_dpi(double dpi) noexcept { dpi_ = dpi; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    Rgb at(int x, int y) const noexcept {
        const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) noexcept {
        auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    void fill_rect(PixelRect rect, Rgb color) noexcept;

    /// Copies the intersection of rect with the image; dpi is preserved.
    Raster crop(PixelRect rect) const;

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    bool operator==(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
    }

 private:
    int width_ = 0;
    int height_ = 0;
    double dpi_ = 72.0;
    std::vector<std::uint8_t> pixels_;
};

/// PNG codec (8-bit RGB). decode_png raises DecodeError on malformed data.
Bytes encode_png(const Raster& image);
Raster decode_png(std::span<const std::uint8_t> png, double dpi = 72.0);

}  // namespace mudoc
