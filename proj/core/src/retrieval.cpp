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

#include "mudoc/retrieval.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <spdlog/spdlog.h>

#include "mudoc/error.hpp"

namespace mudoc {

std::string_view to_string(TextVariant variant) noexcept {
    switch (variant) {
        case TextVariant::kRaw: return "raw";
        case TextVariant::kCleaned: return "cleaned";
        case TextVariant::kSummary: return "summary";
    }
    return "raw";
}

namespace {

constexpr double kUnset = -std::numeric_limits<double>::infinity();

// Folds every row of one matrix into best[id] using cosine against the query.
template <typename Fold>
void scan(const EmbeddingMatrix& m, std::span<const float> query, Fold&& fold) {
    if (m.rows() == 0) return;
    if (static_cast<std::size_t>(m.dim()) != query.size()) {
        raise(ErrorCode::kDimMismatch, "query has " + std::to_string(query.size()) + " values, matrix expects " +
                                           std::to_string(m.dim()));
    }
    for (std::size_t r = 0; r < m.rows(); ++r) fold(m.ids()[r], cosine(query, m.row(r)));
}

template <typename T>
void take_top(std::vector<T>& items, std::size_t k, auto id_of) {
    auto better = [&](const T& a, const T& b) {
        if (a.score != b.score) return a.score > b.score;
        return id_of(a) < id_of(b);
    };
    if (k < items.size()) {
        std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(), better);
        items.resize(k);
    } else {
        std::sort(items.begin(), items.end(), better);
    }
}

}  // namespace

std::vector<ScoredChunk> rank_chunks(const DocumentIndex& index, std::span<const float> query, std::size_t k) {
    std::vector<ScoredChunk> scored;
    scored.reserve(index.chunks.size());
    std::unordered_map<std::string_view, std::size_t> slot;
    for (const auto& c : index.chunks) {
        slot.emplace(c.chunk_id, scored.size());
        scored.push_back({c.chunk_id, kUnset, TextVariant::kRaw});
    }
    const std::pair<std::string_view, TextVariant> variants[] = {{matrix::kChunkRaw, TextVariant::kRaw},
                                                                 {matrix::kChunkCleaned, TextVariant::kCleaned},
                                                                 {matrix::kChunkSummary, TextVariant::kSummary}};
    for (const auto& [name, variant] : variants) {
        const auto it = index.matrices.find(name);
        if (it == index.matrices.end()) continue;
        scan(it->second, query, [&, v = variant](const std::string& id, double s) {
            const auto pos = slot.find(id);
            if (pos == slot.end()) return;
            auto& entry = scored[pos->second];
            if (s > entry.score) {
                entry.score = s;
                entry.best_variant = v;
            }
        });
    }
    std::erase_if(scored, [](const ScoredChunk& c) { return c.score == kUnset; });
    take_top(scored, k, [](const ScoredChunk& c) -> const std::string& { return c.chunk_id; });
    return scored;
}

std::vector<ScoredFigure> rank_figures(const DocumentIndex& index, std::span<const float> query_dpr,
                                       std::span<const float> query_clip, std::size_t k,
                                       std::vector<std::string>* skipped) {
    std::vector<ScoredFigure> scored;
    scored.reserve(index.figures.size());
    std::unordered_map<std::string_view, std::size_t> slot;
    for (const auto& f : index.figures) {
        slot.emplace(f.figure_id, scored.size());
        scored.push_back({f.figure_id, 0.0, kUnset, kUnset});
    }
    auto fold_into = [&](double ScoredFigure::*side) {
        return [&, side](const std::string& id, double s) {
            const auto pos = slot.find(id);
            if (pos == slot.end()) return;
            auto& entry = scored[pos->second];
            entry.*side = std::max(entry.*side, s);
        };
    };
    for (auto name : {matrix::kFigureCaptionCtx, matrix::kFigureDescriptionCtx}) {
        if (auto it = index.matrices.find(name); it != index.matrices.end()) {
            scan(it->second, query_dpr, fold_into(&ScoredFigure::dpr_max));
        }
    }
    for (auto name : {matrix::kFigureImage, matrix::kFigureCaptionJoint, matrix::kFigureDescriptionJoint}) {
        if (auto it = index.matrices.find(name); it != index.matrices.end()) {
            scan(it->second, query_clip, fold_into(&ScoredFigure::clip_max));
        }
    }
    std::erase_if(scored, [&](const ScoredFigure& f) {
        if (f.dpr_max != kUnset && f.clip_max != kUnset) return false;
        if (skipped != nullptr) skipped->push_back(f.figure_id);
        spdlog::warn("figure {} lacks {} vectors and is left out of image retrieval", f.figure_id,
                     f.dpr_max == kUnset ? "context-space" : "joint-space");
        return true;
    });
    for (auto& f : scored) f.score = (f.dpr_max + f.clip_max) / 2.0;
    take_top(scored, k, [](const ScoredFigure& f) -> const std::string& { return f.figure_id; });
    return scored;
}

Retriever::Retriever(std::shared_ptr<const DocumentIndex> index, std::shared_ptr<Embedder> embedder)
    : index_(std::move(index)), embedder_(std::move(embedder)) {
    if (!index_ || !embedder_) raise(ErrorCode::kInvalidArgument, "retriever needs an index and an embedder");
}

std::vector<ScoredChunk> Retriever::retrieve_text(std::string_view query, std::size_t k) const {
    if (trim(query).empty()) raise(ErrorCode::kInvalidArgument, "empty text query");
    if (index_->chunks.empty() || k == 0) return {};
    const auto q = embedder_->embed_text(query, EmbeddingFamily::kQueryText);
    return rank_chunks(*index_, q.values, k);
}

std::vector<ScoredFigure> Retriever::retrieve_images(std::string_view query, std::size_t k) const {
    if (trim(query).empty()) raise(ErrorCode::kInvalidArgument, "empty image query");
    if (index_->figures.empty() || k == 0) return {};
    const auto dpr = embedder_->embed_text(query, EmbeddingFamily::kQueryText);
    const auto clip = embedder_->embed_text(query, EmbeddingFamily::kJointText);
    return rank_figures(*index_, dpr.values, clip.values, k);
}

}  // namespace mudoc
