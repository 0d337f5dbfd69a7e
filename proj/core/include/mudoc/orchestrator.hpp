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

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mudoc/chat.hpp"
#include "mudoc/config.hpp"
#include "mudoc/error.hpp"
#include "mudoc/index.hpp"
#include "mudoc/providers.hpp"
#include "mudoc/retrieval.hpp"

namespace mudoc {

/// Bit-exact status strings shown while a turn runs.
namespace status {
inline constexpr std::string_view kGathering = "Gathering information";
inline constexpr std::string_view kGenerating = "Generating a response";
std::string retrieving_text(std::string_view query);    // "Retrieving text for <query>"
std::string retrieving_images(std::string_view query);  // "Retrieving images for <query>"
}  // namespace status

struct RenderedBlock {
    enum class Kind { kParagraph, kFigure };
    Kind kind = Kind::kParagraph;
    std::string text;       // paragraph text
    std::string figure_id;  // figure blocks
    std::string caption;    // figure blocks
    std::optional<SourceAnchor> anchor;
    std::optional<double> map_score;
    std::string flag;  // "", "unknown_figure" or "mapping_failed"
};

struct ContextWindow {
    std::vector<ChatMessage> messages;  // system message first
    std::size_t history_chars = 0;      // char_len sum over the included history
    std::size_t included = 0;           // history messages included
    bool oversize = false;              // newest message group alone exceeds the budget
};

/// System message plus the longest suffix of history within budget characters. A tool call,
/// its result and its image attachment enter or leave the window together.
ContextWindow build_context(const ChatMessage& system_message, const std::vector<ChatMessage>& history,
                            std::size_t budget);

/// Splits final text into paragraphs on blank lines and turns image tags into figure blocks.
/// caption_of returns nullopt for unknown figure ids; those tags stay as flagged paragraphs.
std::vector<RenderedBlock> render_response(
    std::string_view final_text, const std::function<std::optional<std::string>(std::string_view)>& caption_of);

struct MappingOptions {
    double threshold = 0.60;
    std::size_t min_chars = 100;
};

/// Anchors paragraphs of at least min_chars to the most similar snippet of at least min_chars,
/// if that similarity reaches the threshold. Embedding failures leave paragraphs unmapped and flagged.
void map_paragraphs(std::vector<RenderedBlock>& blocks, const std::vector<const DocumentIndex*>& indices,
                    Embedder& embedder, const MappingOptions& options);

/// Renders the versioned system prompt for a document.
std::string system_message(const OrchestratorConfig& config, std::string_view doc_title);

std::vector<ToolSpec> tool_specs(const OrchestratorConfig& config);

/// Tool result bodies handed back to the chat model.
std::string format_text_results(const std::vector<std::pair<const TextChunk*, double>>& hits);
std::string format_image_results(const std::vector<const FigureRecord*>& hits);

struct TurnEvent {
    enum class Type { kStatus, kToken, kBlock, kAnchors, kDone, kError };
    Type type = Type::kStatus;
    std::uint64_t seq = 0;
    std::string text;  // status text, token delta, or error message
    RenderedBlock block;
    std::size_t block_index = 0;
    std::vector<std::pair<std::size_t, SourceAnchor>> anchors;  // block index -> anchor
    std::string turn_id;
    ErrorCode error_code = ErrorCode::kInvalidArgument;
    bool flagged = false;  // done: the turn was force-finalized or a block is flagged
};

std::string_view to_string(TurnEvent::Type type) noexcept;

using EventSink = std::function<void(const TurnEvent&)>;

struct Session {
    std::string session_id;
    std::vector<std::string> doc_ids;
    std::vector<ChatMessage> history;  // never holds the system message
    int turns = 0;
    std::string system_prompt_hash;
    std::atomic<bool> active{false};
    std::mutex mutex;
};

struct TurnResult {
    std::string turn_id;
    std::string final_text;
    std::vector<RenderedBlock> blocks;
    int tool_calls = 0;
    bool forced = false;
    bool oversize_context = false;
    std::optional<Error> error;
};

class Orchestrator {
 public:
    using IndexMap = std::map<std::string, std::shared_ptr<const DocumentIndex>>;

    Orchestrator(IndexMap indices, ProviderSet providers, OrchestratorConfig config, RetrievalConfig retrieval = {});

    /// Raises UnknownId for a doc that is not mounted.
    std::shared_ptr<Session> create_session(std::vector<std::string> doc_ids);

    /// Runs one turn. Raises Busy when the session already runs a turn; other failures are
    /// reported through an error event and TurnResult::error with the history rolled back.
    TurnResult run_turn(Session& session, std::string_view user_text, const EventSink& sink = {});

    ChatMessage system_message_for(const Session& session) const;

    const IndexMap& indices() const noexcept { return indices_; }
    const DocumentIndex* find_index(std::string_view doc_id) const;
    const OrchestratorConfig& config() const noexcept { return config_; }
    const ProviderSet& providers() const noexcept { return providers_; }

    /// Searches run by tool calls; exposed for debugging and tests.
    std::vector<std::pair<const TextChunk*, double>> search_text(const Session& session, std::string_view query) const;
    std::vector<const FigureRecord*> search_images(const Session& session, std::string_view query) const;

 private:
    std::vector<const DocumentIndex*> session_indices(const Session& session) const;
    std::optional<std::string> caption_of(const Session& session, std::string_view figure_id) const;

    IndexMap indices_;
    ProviderSet providers_;
    OrchestratorConfig config_;
    RetrievalConfig retrieval_;
};

}  // namespace mudoc
