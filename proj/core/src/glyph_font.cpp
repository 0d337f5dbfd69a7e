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

#include "mudoc/glyph_font.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mudoc::glyphs {
namespace {

constexpr int kFirst = 32;
constexpr int kLast = 126;

constexpr GlyphMask kAtlas[kLast - kFirst + 1] = {
#include "glyph_atlas.inc"
};

const std::map<GlyphMask, char>& reverse_table() {
    static const auto table = [] {
        std::map<GlyphMask, char> t;
        for (int c = kFirst; c <= kLast; ++c) t.emplace(kAtlas[c - kFirst], static_cast<char>(c));
        return t;
    }();
    return table;
}

}  // namespace

const GlyphMask& mask_for(char c) noexcept {
    const int code = static_cast<unsigned char>(c);
    if (code < kFirst || code > kLast) return kAtlas['?' - kFirst];
    return kAtlas[code - kFirst];
}

std::optional<char> char_for(const GlyphMask& mask) noexcept {
    const auto& table = reverse_table();
    if (auto it = table.find(mask); it != table.end()) return it->second;
    return std::nullopt;
}

int scale_for_pixel_size(double pixel_size) noexcept {
    return std::max(1, static_cast<int>(std::lround(pixel_size / kCellHeight)));
}

int draw_text(Raster& image, int left_x, int baseline_y, std::string_view text, int scale, Rgb color) {
    const int top = baseline_y - kBaselineRow * scale;
    int x = left_x;
    for (char c : text) {
        // One cell per code point: continuation bytes of a multibyte sequence are skipped.
        if ((static_cast<unsigned char>(c) & 0xc0) == 0x80) continue;
        const auto& mask = mask_for(c);
        for (int row = 0; row < kCellHeight; ++row) {
            const auto bits = mask[row];
            if (bits == 0) continue;
            for (int col = 0; col < kCellWidth; ++col) {
                if (((bits >> (kCellWidth - 1 - col)) & 1U) == 0) continue;
                image.fill_rect({x + col * scale, top + row * scale, x + (col + 1) * scale, top + (row + 1) * scale},
                                color);
            }
        }
        x += kCellWidth * scale;
    }
    return x;
}

}  // namespace mudoc::glyphs
