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
#include <cctype>
#include <cstdio>

#include "mudoc/error.hpp"
#include "mudoc/reference.hpp"

namespace mudoc {
namespace {

constexpr int kThumb = 8;
constexpr int kBins = 4;
constexpr int kImageFeatures = kThumb * kThumb * 3 + kBins * kBins * kBins;

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

void add_feature(std::vector<float>& v, std::string_view feature, std::uint64_t space, float weight) {
    const std::uint64_t h = fnv1a64(feature, space);
    const auto idx = static_cast<std::size_t>(h % v.size());
    v[idx] += ((h >> 40) & 1u) != 0 ? weight : -weight;
}

// Fixed +-1 projection entry, identical across runs and platforms.
float projection_sign(std::uint64_t seed, int row, int col) {
    char key[32];
    const int n = std::snprintf(key, sizeof key, "%d:%d", row, col);
    return (fnv1a64(std::string_view(key, static_cast<std::size_t>(n)), seed) >> 33) & 1u ? 1.0f : -1.0f;
}

}  // namespace

HashingEmbedder::HashingEmbedder(int text_dim, int joint_dim, std::uint64_t seed)
    : text_dim_(text_dim), joint_dim_(joint_dim), seed_(seed) {
    if (text_dim < 8 || joint_dim < 8) raise(ErrorCode::kInvalidArgument, "embedding dims must be at least 8");
    const std::uint64_t space = seed_ ^ 0xc2b2ae3d27d4eb4fULL;
    projection_.resize(static_cast<std::size_t>(kImageFeatures) * joint_dim_);
    for (int i = 0; i < kImageFeatures; ++i) {
        for (int j = 0; j < joint_dim_; ++j) {
            projection_[static_cast<std::size_t>(i) * joint_dim_ + j] = projection_sign(space, i, j);
        }
    }
}

int HashingEmbedder::dim(EmbeddingFamily family) const {
    return family == EmbeddingFamily::kCtxText || family == EmbeddingFamily::kQueryText ? text_dim_ : joint_dim_;
}

std::string HashingEmbedder::id() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "hashing-v1:%d:%d:%llx", text_dim_, joint_dim_, static_cast<unsigned long long>(seed_));
    return buf;
}

EmbeddingVector HashingEmbedder::embed_text(std::string_view text, EmbeddingFamily family) {
    check_modality(family, false);
    // The context and query encoders share one space; the joint text encoder has its own.
    const std::uint64_t space = family == EmbeddingFamily::kJointText ? seed_ ^ 0x9e3779b97f4a7c15ULL : seed_;
    EmbeddingVector out{family, std::vector<float>(static_cast<std::size_t>(dim(family)), 0.0f)};
    const auto words = words_of(text);
    for (const auto& w : words) {
        add_feature(out.values, w, space, 1.0f);
        const std::string padded = "#" + w + "#";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            add_feature(out.values, std::string_view(padded).substr(i, 3), space + 1, 0.5f);
        }
    }
    if (words.empty()) add_feature(out.values, "<empty>", space, 1.0f);
    if (std::all_of(out.values.begin(), out.values.end(), [](float v) { return v == 0.0f; })) {
        // Features cancelled out exactly; fall back to a marker so the vector stays usable.
        add_feature(out.values, "<cancelled>", space, 1.0f);
    }
    normalize(out.values);
    return out;
}

EmbeddingVector HashingEmbedder::embed_image(const Raster& image, EmbeddingFamily family) {
    check_modality(family, true);
    if (image.empty()) raise(ErrorCode::kDecodeError, "empty image");
    std::vector<double> features(kImageFeatures, 0.0);
    std::vector<double> counts(kThumb * kThumb, 0.0);
    const int w = image.width();
    const int h = image.height();
    for (int y = 0; y < h; ++y) {
        const int ty = y * kThumb / h;
        for (int x = 0; x < w; ++x) {
            const int tx = x * kThumb / w;
            const Rgb c = image.at(x, y);
            const int cell = ty * kThumb + tx;
            features[static_cast<std::size_t>(cell * 3 + 0)] += c.r;
            features[static_cast<std::size_t>(cell * 3 + 1)] += c.g;
            features[static_cast<std::size_t>(cell * 3 + 2)] += c.b;
            counts[static_cast<std::size_t>(cell)] += 1.0;
            const int bin = (c.r * kBins / 256) * kBins * kBins + (c.g * kBins / 256) * kBins + (c.b * kBins / 256);
            features[static_cast<std::size_t>(kThumb * kThumb * 3 + bin)] += 1.0;
        }
    }
    for (int cell = 0; cell < kThumb * kThumb; ++cell) {
        for (int ch = 0; ch < 3; ++ch) {
            auto& f = features[static_cast<std::size_t>(cell * 3 + ch)];
            f = counts[static_cast<std::size_t>(cell)] > 0 ? (f / counts[static_cast<std::size_t>(cell)] - 128.0) / 128.0 : 0.0;
        }
    }
    const double pixels = static_cast<double>(w) * h;
    for (int b = 0; b < kBins * kBins * kBins; ++b) features[static_cast<std::size_t>(kThumb * kThumb * 3 + b)] *= 4.0 / pixels;

    EmbeddingVector out{family, std::vector<float>(static_cast<std::size_t>(joint_dim_), 0.0f)};
    std::vector<double> acc(static_cast<std::size_t>(joint_dim_), 0.0);
    for (int i = 0; i < kImageFeatures; ++i) {
        const double f = features[static_cast<std::size_t>(i)];
        if (f == 0.0) continue;
        const float* row = &projection_[static_cast<std::size_t>(i) * joint_dim_];
        for (int j = 0; j < joint_dim_; ++j) acc[static_cast<std::size_t>(j)] += f * row[j];
    }
    for (int j = 0; j < joint_dim_; ++j) out.values[static_cast<std::size_t>(j)] = static_cast<float>(acc[static_cast<std::size_t>(j)]);
    if (std::all_of(out.values.begin(), out.values.end(), [](float v) { return v == 0.0f; })) out.values[0] = 1.0f;
    normalize(out.values);
    return out;
}

}  // namespace mudoc
