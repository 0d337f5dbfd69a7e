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
#include <cmath>
#include <numeric>

#include "mudoc/error.hpp"
#include "mudoc/reference.hpp"

namespace mudoc {
namespace {

// Anything visibly different from white paper counts as foreground.
bool is_foreground(Rgb c) { return c.r < 232 || c.g < 232 || c.b < 232; }

bool is_colored_or_gray(Rgb c) {
    const int hi = std::max({c.r, c.g, c.b});
    const int lo = std::min({c.r, c.g, c.b});
    if (hi - lo > 40) return true;
    const int luma = (c.r * 299 + c.g * 587 + c.b * 114) / 1000;
    return luma >= 64 && luma < 200;
}

class UnionFind {
 public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

 private:
    std::vector<std::uint32_t> parent_;
};

struct Component {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive pixel extent of foreground
    std::size_t ink = 0;
};

}  // namespace

ReferenceLayoutDetector::ReferenceLayoutDetector() : ReferenceLayoutDetector(Options{}) {}
ReferenceLayoutDetector::ReferenceLayoutDetector(Options options) : options_(options) {}

void sort_reading_order(std::vector<LayoutRegion>& regions, double row_tolerance_pt) {
    std::stable_sort(regions.begin(), regions.end(),
                     [](const LayoutRegion& a, const LayoutRegion& b) { return a.bbox.y0 < b.bbox.y0; });
    std::size_t row_start = 0;
    while (row_start < regions.size()) {
        std::size_t row_end = row_start + 1;
        while (row_end < regions.size() && regions[row_end].bbox.y0 - regions[row_start].bbox.y0 <= row_tolerance_pt) {
            ++row_end;
        }
        std::stable_sort(regions.begin() + static_cast<std::ptrdiff_t>(row_start),
                         regions.begin() + static_cast<std::ptrdiff_t>(row_end),
                         [](const LayoutRegion& a, const LayoutRegion& b) { return a.bbox.x0 < b.bbox.x0; });
        row_start = row_end;
    }
}

std::vector<LayoutRegion> ReferenceLayoutDetector::detect_layout(const Raster& page, int page_index) {
    if (page.empty()) raise(ErrorCode::kDecodeError, "empty page image");
    const int w = page.width();
    const int h = page.height();
    const double px_per_pt = page.dpi() / 72.0;
    const int hgap = std::max(1, static_cast<int>(std::lround(options_.horizontal_gap_pt * px_per_pt)));
    const int vgap = std::max(1, static_cast<int>(std::lround(options_.vertical_gap_pt * px_per_pt)));

    std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) fg[static_cast<std::size_t>(y) * w + x] = is_foreground(page.at(x, y)) ? 1 : 0;
    }

    // Smear short background runs between foreground pixels, horizontally and vertically.
    std::vector<std::uint8_t> smeared = fg;
    for (int y = 0; y < h; ++y) {
        const auto* row = &fg[static_cast<std::size_t>(y) * w];
        int last = -1;
        for (int x = 0; x < w; ++x) {
            if (!row[x]) continue;
            if (last >= 0 && x - last - 1 <= hgap) {
                for (int k = last + 1; k < x; ++k) smeared[static_cast<std::size_t>(y) * w + k] = 1;
            }
            last = x;
        }
    }
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (!fg[static_cast<std::size_t>(y) * w + x]) continue;
            if (last >= 0 && y - last - 1 <= vgap) {
                for (int k = last + 1; k < y; ++k) smeared[static_cast<std::size_t>(k) * w + x] = 1;
            }
            last = y;
        }
    }

    UnionFind uf(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto i = static_cast<std::uint32_t>(y * w + x);
            if (!smeared[i]) continue;
            if (x > 0 && smeared[i - 1]) uf.unite(i, i - 1);
            if (y > 0 && smeared[i - static_cast<std::uint32_t>(w)]) uf.unite(i, i - static_cast<std::uint32_t>(w));
        }
    }

    std::vector<std::int32_t> slot(static_cast<std::size_t>(w) * h, -1);
    std::vector<Component> comps;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto i = static_cast<std::uint32_t>(y * w + x);
            if (!fg[i]) continue;
            const auto root = uf.find(i);
            if (slot[root] < 0) {
                slot[root] = static_cast<std::int32_t>(comps.size());
                comps.push_back({x, y, x, y, 0});
            }
            auto& c = comps[static_cast<std::size_t>(slot[root])];
            c.x0 = std::min(c.x0, x);
            c.y0 = std::min(c.y0, y);
            c.x1 = std::max(c.x1, x);
            c.y1 = std::max(c.y1, y);
            ++c.ink;
        }
    }

    // Words set in large type sit further apart than the fixed gap; join pieces of one line
    // when the gap between them is small relative to their height.
    for (bool merged = true; merged;) {
        merged = false;
        for (std::size_t i = 0; i < comps.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < comps.size() && !merged; ++j) {
                auto& a = comps[i];
                auto& b = comps[j];
                const int overlap = std::min(a.y1, b.y1) - std::max(a.y0, b.y0) + 1;
                const int shorter = std::min(a.y1 - a.y0, b.y1 - b.y0) + 1;
                if (overlap * 2 < shorter) continue;
                const int gap = std::max(a.x0, b.x0) - std::min(a.x1, b.x1) - 1;
                const int taller = std::max(a.y1 - a.y0, b.y1 - b.y0) + 1;
                if (gap > taller * 3 / 2) continue;
                a = {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1), a.ink + b.ink};
                comps.erase(comps.begin() + static_cast<std::ptrdiff_t>(j));
                merged = true;
            }
        }
    }

    const double page_w = w / px_per_pt;
    const double page_h = h / px_per_pt;
    std::vector<LayoutRegion> regions;
    for (const auto& c : comps) {
        LayoutRegion region;
        region.page_index = page_index;
        region.bbox = {c.x0 / px_per_pt, c.y0 / px_per_pt, std::min(page_w, (c.x1 + 1) / px_per_pt),
                       std::min(page_h, (c.y1 + 1) / px_per_pt)};

        std::size_t tinted = 0;
        std::vector<int> row_ink(static_cast<std::size_t>(c.y1 - c.y0 + 1), 0);
        for (int y = c.y0; y <= c.y1; ++y) {
            for (int x = c.x0; x <= c.x1; ++x) {
                const Rgb px = page.at(x, y);
                if (!is_foreground(px)) continue;
                ++row_ink[static_cast<std::size_t>(y - c.y0)];
                if (is_colored_or_gray(px)) ++tinted;
            }
        }
        int bands = 0;
        int tallest_band = 0;
        int run = 0;
        for (int v : row_ink) {
            if (v > 0) {
                if (run == 0) ++bands;
                ++run;
                tallest_band = std::max(tallest_band, run);
            } else {
                run = 0;
            }
        }
        const double area = static_cast<double>(c.x1 - c.x0 + 1) * (c.y1 - c.y0 + 1);
        const double density = static_cast<double>(c.ink) / area;
        const bool speck = region.bbox.width() <= options_.speck_max_extent_pt &&
                           region.bbox.height() <= options_.speck_max_extent_pt;
        if (speck) {
            region.region_class = RegionClass::kText;
            region.confidence = 0.3;
        } else if (static_cast<double>(tinted) > 0.2 * static_cast<double>(c.ink) || (density > 0.6 && bands == 1)) {
            region.region_class = RegionClass::kFigure;
            region.confidence = 0.9;
        } else if (bands == 1 && tallest_band / px_per_pt >= options_.title_min_line_height_pt) {
            region.region_class = RegionClass::kTitle;
            region.confidence = 0.9;
        } else {
            region.region_class = RegionClass::kText;
            region.confidence = 0.95;
        }
        regions.push_back(region);
    }
    sort_reading_order(regions);
    return regions;
}

}  // namespace mudoc
