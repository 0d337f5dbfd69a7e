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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mudoc {

/// The four vector spaces in play: a context/query text pair for passage retrieval and a
/// joint text/image pair for cross-modal retrieval.
enum class EmbeddingFamily { kCtxText, kQueryText, kJointText, kJointImage };

inline constexpr EmbeddingFamily kAllFamilies[] = {EmbeddingFamily::kCtxText, EmbeddingFamily::kQueryText,
                                                   EmbeddingFamily::kJointText, EmbeddingFamily::kJointImage};

std::string_view to_string(EmbeddingFamily family) noexcept;
std::optional<EmbeddingFamily> parse_family(std::string_view name) noexcept;

/// 768 for the text pair, 512 for the joint pair.
int default_dim(EmbeddingFamily family) noexcept;

struct EmbeddingVector {
    EmbeddingFamily family = EmbeddingFamily::kCtxText;
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
};

/// Scales to unit length. Raises ZeroVector for a zero vector and InvalidArgument for
/// non-finite components.
void normalize(std::vector<float>& values);

/// Dot product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b) noexcept;

/// dot(a, b) / (|a| |b|). Raises DimMismatch, ZeroVector, or InvalidArgument (non-finite input).
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace mudoc
