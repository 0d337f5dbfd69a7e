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
#include <optional>
#include <string>
#include <string_view>

namespace mudoc {

/// Axis-aligned box in PDF points with a top-left origin: x grows right, y grows down the page.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }
    bool valid() const noexcept { return x0 < x1 && y0 < y1; }
    bool within(double page_width, double page_height, double slack = 1e-6) const noexcept {
        return x0 >= -slack && y0 >= -slack && x1 <= page_width + slack && y1 <= page_height + slack;
    }
    std::array<double, 4> to_array() const noexcept { return {x0, y0, x1, y1}; }

    bool operator==(const BBox&) const = default;
};

/// Layout classes a region can carry. Nothing else is ever emitted.
enum class RegionClass { kTitle, kText, kFigure, kList, kTable };

std::string_view to_string(RegionClass cls) noexcept;
std::optional<RegionClass> parse_region_class(std::string_view name) noexcept;

}  // namespace mudoc
