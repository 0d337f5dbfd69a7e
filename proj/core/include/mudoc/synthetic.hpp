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
#include <string>
#include <vector>

#include "mudoc/geometry.hpp"
#include "mudoc/raster.hpp"
#include "mudoc/util.hpp"

namespace mudoc::synthetic {

// Generator for test and demo PDFs with known geometry. Text is set in Courier at sizes
// the built-in rasterizer reproduces glyph-exactly at 100, 200 or 300 dpi, so the
// reference layout detector and OCR can be checked against the generator's own record.

inline constexpr double kPageWidth = 612.0;
inline constexpr double kPageHeight = 792.0;
inline constexpr double kMargin = 54.0;
inline constexpr double kTopMargin = 72.0;
inline constexpr double kBodySize = 14.4;
inline constexpr double kTitleSize = 28.8;
inline constexpr double kLinePitch = 18.0;
inline constexpr double kBlockGap = 24.0;
inline constexpr int kColumns = 56;

struct BlockSpec {
    RegionClass cls = RegionClass::kText;
    std::string text;  // title and text blocks; wrapped to kColumns
    Raster image;      // figure blocks
    double width = 0;  // figure size in points
    double height = 0;
};

struct PageSpec {
    std::vector<BlockSpec> blocks;
};

/// Ground-truth record for one placed block. Text keeps the wrapped line breaks.
struct Block {
    int page = 0;
    RegionClass cls = RegionClass::kText;
    BBox bbox;
    std::string text;
};

struct Document {
    Bytes pdf;
    int pages = 0;
    std::vector<Block> blocks;

    std::size_t count(RegionClass cls) const;
};

/// Lays the blocks of each page out top to bottom. Raises InvalidArgument when a page overflows.
Document compose(const std::vector<PageSpec>& pages);

struct Options {
    int pages = 5;
    int figures = 2;
    std::uint32_t seed = 1;
    int paragraphs_per_page = 3;
    int words_per_paragraph = 50;
    bool title = true;
};

/// Pseudo-textbook: a title on the first page, paragraphs on every page, figures with a
/// caption line spread over distinct pages.
Document generate(const Options& options);

/// Greedy word wrap at a column limit; overlong words are hard-split.
std::string wrap(const std::string& text, int columns = kColumns);

/// Deterministic colorful picture.
Raster figure_image(std::uint32_t seed, int width, int height);

/// Deterministic prose from a fixed vocabulary.
std::string prose(std::uint32_t seed, int words);

}  // namespace mudoc::synthetic
