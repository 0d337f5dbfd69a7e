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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "mudoc/raster.hpp"

namespace mudoc::glyphs {

// Built-in monospace bitmap face covering printable ASCII. The same table drives text
// rendering in the PDF rasterizer and the reference OCR engine, so rendered text can be
// read back exactly.

inline constexpr int kCellWidth = 12;
inline constexpr int kCellHeight = 20;
inline constexpr int kBaselineRow = 15;

/// Fraction of the font size above the baseline, and advance width per font size unit.
inline constexpr double kAscent = static_cast<double>(kBaselineRow) / kCellHeight;
inline constexpr double kAdvance = static_cast<double>(kCellWidth) / kCellHeight;

using GlyphMask = std::array<std::uint16_t, kCellHeight>;

const GlyphMask& mask_for(char c) noexcept;

/// Inverse lookup; space maps from the empty mask.
std::optional<char> char_for(const GlyphMask& mask) noexcept;

/// Integer magnification used for a font of the given pixel height.
int scale_for_pixel_size(double pixel_size) noexcept;

/// Draws one line of text; the cell top sits kBaselineRow*scale pixels above baseline_y.
/// Characters outside printable ASCII render as '?'. Returns the x after the last cell.
int draw_text(Raster& image, int left_x, int baseline_y, std::string_view text, int scale, Rgb color = {0, 0, 0});

}  // namespace mudoc::glyphs
