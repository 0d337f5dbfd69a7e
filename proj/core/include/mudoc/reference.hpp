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
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "mudoc/error.hpp"
#include "mudoc/providers.hpp"

namespace mudoc {

// Deterministic in-process providers. They need no model weights or network and are
// what the test suite, the benchmarks and the offline demo run against. Real backends
// plug in through the HTTP adapters instead.

/// Run-length smearing layout analysis for clean renders: ink is grouped into blocks,
/// colored or gray blocks become figures, single large-glyph lines become titles, and
/// everything else is text.
class ReferenceLayoutDetector final : public LayoutDetector {
 public:
    struct Options {
        double horizontal_gap_pt = 24.0;
        double vertical_gap_pt = 14.0;
        double title_min_line_height_pt = 16.0;
        double speck_max_extent_pt = 3.0;
    };

    ReferenceLayoutDetector();
    explicit ReferenceLayoutDetector(Options options);

    std::vector<LayoutRegion> detect_layout(const Raster& page_image, int page_index) override;
    std::string id() const override { return "reference-layout-v1"; }

 private:
    Options options_;
};

/// Sort key used for reading order: rows by top edge with a tolerance, then left edge.
void sort_reading_order(std::vector<LayoutRegion>& regions, double row_tolerance_pt = 10.0);

/// Exact decoder for text drawn with the built-in bitmap face at any integer scale.
/// Cells that match no glyph read as '?'.
class ReferenceOcr final : public OcrEngine {
 public:
    std::string ocr_text(const Raster& snippet_image) override;
    std::string id() const override { return "reference-ocr-v1"; }
};

/// Feature-hashing text encoder (word unigrams and character trigrams) and a random
/// projection of color layout features for images. The context and query families share
/// one feature space so that query-to-context cosine is meaningful.
class HashingEmbedder final : public Embedder {
 public:
    explicit HashingEmbedder(int text_dim = 768, int joint_dim = 512, std::uint64_t seed = 0x6d75646f63ULL);

    EmbeddingVector embed_text(std::string_view text, EmbeddingFamily family) override;
    EmbeddingVector embed_image(const Raster& image, EmbeddingFamily family) override;
    int dim(EmbeddingFamily family) const override;
    std::string id() const override;

 private:
    int text_dim_;
    int joint_dim_;
    std::uint64_t seed_;
    std::vector<float> projection_;  // image features x joint_dim, entries +-1
};

/// Extractive stand-in for a chat model. It recognizes the cleaning, summarization and
/// figure-description prompts by their task heading, and in chat mode searches text,
/// then images, then answers by quoting the best retrieved passages.
class ReferenceChatProvider final : public ChatProvider {
 public:
    ChatOutcome chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                              const TokenSink& sink = {}) override;
    std::string id() const override { return "reference-chat-v1"; }
};

/// Replays a fixed script, one step per call. With tools disabled, tool steps are
/// skipped up to the next final step; an exhausted script answers with the fallback text.
class ScriptedChatProvider final : public ChatProvider {
 public:
    struct Step {
        enum class Kind { kFinal, kToolCall, kError };
        Kind kind = Kind::kFinal;
        std::string text;
        ToolName tool = ToolName::kSearchText;
        std::string query;
        ErrorCode error = ErrorCode::kProviderUnavailable;

        static Step final_text(std::string text);
        static Step tool_call(ToolName tool, std::string query);
        static Step failure(ErrorCode code, std::string message = "scripted failure");
    };

    explicit ScriptedChatProvider(std::vector<Step> script, std::string fallback = "I have no further information.");

    ChatOutcome chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                              const TokenSink& sink = {}) override;
    std::string id() const override { return "scripted-chat"; }

    /// Every request received so far, in order.
    std::vector<std::vector<ChatMessage>> requests() const;
    std::size_t remaining() const;

 private:
    mutable std::mutex mutex_;
    std::deque<Step> script_;
    std::string fallback_;
    std::vector<std::vector<ChatMessage>> requests_;
    int calls_ = 0;
};

/// Splits text into streaming deltas: each word keeps its trailing whitespace.
std::vector<std::string> split_tokens(std::string_view text);

}  // namespace mudoc
