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

#include "mudoc/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

#include "mudoc/error.hpp"

namespace mudoc {

Raster::Raster(int width, int height, double dpi, Rgb fill) : width_(width), height_(height), dpi_(dpi) {
    if (width < 0 || height < 0) raise(ErrorCode::kInvalidArgument, "negative raster size");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

void Raster::fill_rect(PixelRect rect, Rgb color) noexcept {
    const int x0 = std::max(rect.x0, 0);
    const int y0 = std::max(rect.y0, 0);
    const int x1 = std::min(rect.x1, width_);
    const int y1 = std::min(rect.y1, height_);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) set(x, y, color);
    }
}

Raster Raster::crop(PixelRect rect) const {
    const int x0 = std::clamp(rect.x0, 0, width_);
    const int y0 = std::clamp(rect.y0, 0, height_);
    const int x1 = std::clamp(rect.x1, x0, width_);
    const int y1 = std::clamp(rect.y1, y0, height_);
    Raster out(x1 - x0, y1 - y0, dpi_);
    for (int y = y0; y < y1; ++y) {
        std::memcpy(&out.pixels_[static_cast<std::size_t>(y - y0) * out.width_ * 3],
                    &pixels_[(static_cast<std::size_t>(y) * width_ + x0) * 3], static_cast<std::size_t>(x1 - x0) * 3);
    }
    return out;
}

Bytes encode_png(const Raster& image) {
    if (image.empty()) raise(ErrorCode::kInvalidArgument, "cannot encode an empty image");
    png_image desc;
    std::memset(&desc, 0, sizeof(desc));
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(image.width());
    desc.height = static_cast<png_uint_32>(image.height());
    desc.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&desc, nullptr, &size, 0, image.pixels().data(), 0, nullptr)) {
        raise(ErrorCode::kIoError, std::string("png sizing failed: ") + desc.message);
    }
    Bytes out(size);
    if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.pixels().data(), 0, nullptr)) {
        raise(ErrorCode::kIoError, std::string("png encode failed: ") + desc.message);
    }
    out.resize(size);
    return out;
}

Raster decode_png(std::span<const std::uint8_t> png, double dpi) {
    png_image desc;
    std::memset(&desc, 0, sizeof(desc));
    desc.version = PNG_IMAGE_VERSION;
    if (png.empty() || !png_image_begin_read_from_memory(&desc, png.data(), png.size())) {
        raise(ErrorCode::kDecodeError, std::string("not a PNG image: ") + desc.message);
    }
    desc.format = PNG_FORMAT_RGB;
    Raster out(static_cast<int>(desc.width), static_cast<int>(desc.height), dpi);
    if (!png_image_finish_read(&desc, nullptr, out.pixels().data(), 0, nullptr)) {
        png_image_free(&desc);
        raise(ErrorCode::kDecodeError, std::string("PNG decode failed: ") + desc.message);
    }
    return out;
}

}  // namespace mudoc
