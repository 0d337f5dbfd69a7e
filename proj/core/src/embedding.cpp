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

#include "mudoc/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "mudoc/error.hpp"

namespace mudoc {

std::string_view to_string(EmbeddingFamily family) noexcept {
    switch (family) {
        case EmbeddingFamily::kCtxText: return "ctx_text";
        case EmbeddingFamily::kQueryText: return "query_text";
        case EmbeddingFamily::kJointText: return "joint_text";
        case EmbeddingFamily::kJointImage: return "joint_image";
    }
    return "ctx_text";
}

std::optional<EmbeddingFamily> parse_family(std::string_view name) noexcept {
    for (auto f : kAllFamilies) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

int default_dim(EmbeddingFamily family) noexcept {
    return family == EmbeddingFamily::kCtxText || family == EmbeddingFamily::kQueryText ? 768 : 512;
}

void normalize(std::vector<float>& values) {
    double sq = 0.0;
    for (float v : values) {
        if (!std::isfinite(v)) raise(ErrorCode::kInvalidArgument, "embedding has a non-finite component");
        sq += static_cast<double>(v) * v;
    }
    if (sq == 0.0) raise(ErrorCode::kZeroVector, "cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : values) v = static_cast<float>(v * inv);
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double sum = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        raise(ErrorCode::kDimMismatch,
              "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        if (!std::isfinite(x) || !std::isfinite(y)) raise(ErrorCode::kInvalidArgument, "non-finite component");
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0) raise(ErrorCode::kZeroVector, "cosine of a zero vector");
    return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.values, b.values); }

}  // namespace mudoc
