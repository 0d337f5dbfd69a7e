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

#include "mudoc/geometry.hpp"

namespace mudoc {

std::string_view to_string(RegionClass cls) noexcept {
    switch (cls) {
        case RegionClass::kTitle: return "title";
        case RegionClass::kText: return "text";
        case RegionClass::kFigure: return "figure";
        case RegionClass::kList: return "list";
        case RegionClass::kTable: return "table";
    }
    return "text";
}

std::optional<RegionClass> parse_region_class(std::string_view name) noexcept {
    if (name == "title") return RegionClass::kTitle;
    if (name == "text") return RegionClass::kText;
    if (name == "figure") return RegionClass::kFigure;
    if (name == "list") return RegionClass::kList;
    if (name == "table") return RegionClass::kTable;
    return std::nullopt;
}

}  // namespace mudoc
