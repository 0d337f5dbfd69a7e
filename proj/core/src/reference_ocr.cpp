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

#include <algorithm>
#include <numeric>
#include <optional>

#include "mudoc/error.hpp"
#include "mudoc/glyph_font.hpp"
#include "mudoc/reference.hpp"

namespace mudoc {
namespace {

using glyphs::kCellHeight;
using glyphs::kCellWidth;

constexpr int kMaxScale = 8;

class InkMap {
 public:
    explicit InkMap(const Raster& img) : w_(img.width()), h_(img.height()), ink_(static_cast<std::size_t>(w_) * h_) {
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const Rgb c = img.at(x, y);
                ink_[static_cast<std::size_t>(y) * w_ + x] = (c.r * 299 + c.g * 587 + c.b * 114) < 128000;
            }
        }
    }
    int width() const { return w_; }
    int height() const { return h_; }
    // Outside the image reads as paper.
    bool at(int x, int y) const {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return false;
        return ink_[static_cast<std::size_t>(y) * w_ + x] != 0;
    }

 private:
    int w_;
    int h_;
    std::vector<char> ink_;
};

struct Band {
    int top = 0;
    int bottom = 0;  // inclusive
    int left = 0;
    int right = 0;  // inclusive
};

std::vector<Band> find_bands(const InkMap& ink) {
    std::vector<Band> bands;
    bool open = false;
    for (int y = 0; y < ink.height(); ++y) {
        int left = -1;
        int right = -1;
        for (int x = 0; x < ink.width(); ++x) {
            if (!ink.at(x, y)) continue;
            if (left < 0) left = x;
            right = x;
        }
        if (left < 0) {
            open = false;
            continue;
        }
        if (!open) {
            bands.push_back({y, y, left, right});
            open = true;
        } else {
            auto& b = bands.back();
            b.bottom = y;
            b.left = std::min(b.left, left);
            b.right = std::max(b.right, right);
        }
    }
    return bands;
}

// Reads the cell at (ox, oy); nullopt when a block is not uniform or the mask is unknown.
std::optional<char> read_cell(const InkMap& ink, int ox, int oy, int s) {
    glyphs::GlyphMask mask{};
    for (int r = 0; r < kCellHeight; ++r) {
        std::uint16_t bits = 0;
        for (int c = 0; c < kCellWidth; ++c) {
            const int bx = ox + c * s;
            const int by = oy + r * s;
            const bool v = ink.at(bx, by);
            for (int dy = 0; dy < s; ++dy) {
                for (int dx = 0; dx < s; ++dx) {
                    if (ink.at(bx + dx, by + dy) != v) return std::nullopt;
                }
            }
            if (v) bits |= static_cast<std::uint16_t>(1u << (kCellWidth - 1 - c));
        }
        mask[r] = bits;
    }
    return glyphs::char_for(mask);
}

struct LineRead {
    std::string text;
    int cell_height = 0;
    int matched = 0;
    bool complete = false;
};

// Walks the grid anchored at (ox, oy). Stops at the first unreadable cell unless lenient.
LineRead read_grid(const InkMap& ink, const Band& band, int ox, int oy, int s, bool lenient) {
    LineRead out;
    out.cell_height = kCellHeight * s;
    const int cell_w = kCellWidth * s;
    for (int x = ox; x <= band.right; x += cell_w) {
        const auto ch = read_cell(ink, x, oy, s);
        if (!ch) {
            if (!lenient) return out;
            out.text.push_back('?');
            continue;
        }
        out.text.push_back(*ch);
        ++out.matched;
    }
    while (!out.text.empty() && out.text.back() == ' ') out.text.pop_back();
    out.complete = true;
    return out;
}

// Every run of ink or paper inside a rendered line is a multiple of the glyph scale.
int estimate_scale(const InkMap& ink, const Band& band) {
    int g = 0;
    auto add_run = [&](int len) { g = std::gcd(g, len); };
    for (int y = band.top; y <= band.bottom; ++y) {
        int run = 0;
        bool seen_ink = false;
        bool prev = false;
        for (int x = band.left; x <= band.right + 1; ++x) {
            const bool v = ink.at(x, y);
            if (x > band.left && v != prev) {
                if (prev || seen_ink) add_run(run);
                run = 0;
            }
            seen_ink = seen_ink || v;
            prev = v;
            ++run;
        }
    }
    for (int x = band.left; x <= band.right; ++x) {
        int run = 0;
        bool seen_ink = false;
        bool prev = false;
        for (int y = band.top; y <= band.bottom + 1; ++y) {
            const bool v = ink.at(x, y);
            if (y > band.top && v != prev) {
                if (prev || seen_ink) add_run(run);
                run = 0;
            }
            seen_ink = seen_ink || v;
            prev = v;
            ++run;
        }
    }
    return std::clamp(g, 1, kMaxScale);
}

LineRead read_line(const InkMap& ink, const Band& band) {
    const int band_h = band.bottom - band.top + 1;
    LineRead best;
    int best_s = 0;
    int best_ox = 0;
    int best_oy = 0;
    const int estimated = estimate_scale(ink, band);
    for (int s = estimated; s >= 1; --s) {
        if (estimated % s != 0) continue;
        const int cell_h = kCellHeight * s;
        if (band_h > cell_h) continue;
        // The band's first ink row and column fall inside the first cell, on the scale grid.
        for (int ky = 0; ky < kCellHeight; ++ky) {
            const int oy = band.top - ky * s;
            if (oy + cell_h <= band.bottom) continue;
            for (int kx = 0; kx < kCellWidth; ++kx) {
                const int ox = band.left - kx * s;
                auto line = read_grid(ink, band, ox, oy, s, false);
                if (line.complete) return line;
                if (line.matched > best.matched || best_s == 0) {
                    best = line;
                    best_s = s;
                    best_ox = ox;
                    best_oy = oy;
                }
            }
        }
    }
    if (best_s == 0) {
        // Taller than any cell at the estimated scale: report one unknown glyph per cell width.
        LineRead unknown;
        unknown.cell_height = band_h;
        const int cells = std::max(1, (band.right - band.left + 1) * kCellHeight / std::max(1, band_h * kCellWidth));
        unknown.text.assign(static_cast<std::size_t>(cells), '?');
        return unknown;
    }
    return read_grid(ink, band, best_ox, best_oy, best_s, true);
}

}  // namespace

std::string ReferenceOcr::ocr_text(const Raster& image) {
    if (image.empty()) raise(ErrorCode::kDecodeError, "empty snippet image");
    const InkMap ink(image);
    const auto bands = find_bands(ink);
    std::string out;
    int previous_bottom = -1;
    for (const auto& band : bands) {
        const auto line = read_line(ink, band);
        if (line.text.empty()) continue;
        if (previous_bottom >= 0) {
            // A gap taller than a text line separates paragraphs.
            out += band.top - previous_bottom - 1 > line.cell_height ? "\n\n" : "\n";
        }
        out += line.text;
        previous_bottom = band.bottom;
    }
    return out;
}

}  // namespace mudoc
