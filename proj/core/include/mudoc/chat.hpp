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

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mudoc/util.hpp"

namespace mudoc {

enum class ChatRole { kSystem, kUser, kAssistant, kToolResult, kImageAttachment };

std::string_view to_string(ChatRole role) noexcept;
std::optional<ChatRole> parse_chat_role(std::string_view name) noexcept;

/// The two search tools the chat model may call.
enum class ToolName { kSearchText, kSearchImages };

std::string_view to_string(ToolName tool) noexcept;
std::optional<ToolName> parse_tool_name(std::string_view name) noexcept;

struct FigureRef {
    std::string figure_id;
    std::string caption;
    std::string description;

    bool operator==(const FigureRef&) const = default;
};

/// One history unit. An assistant message with tool_name set is a tool call; its
/// tool_result (and, for image searches, an image_attachment) follows it directly.
struct ChatMessage {
    ChatRole role = ChatRole::kUser;
    std::string content;
    std::optional<ToolName> tool_name;
    std::string tool_query;
    std::string tool_call_id;
    std::vector<FigureRef> figure_refs;
    std::vector<std::shared_ptr<const Bytes>> images;  // PNG, parallel to figure_refs when present
    std::size_t char_len = 0;

    bool is_tool_call() const noexcept { return role == ChatRole::kAssistant && tool_name.has_value(); }

    /// Recomputes char_len: content code points, plus tool name and query for a tool call.
    void update_char_len();

    static ChatMessage system(std::string text);
    static ChatMessage user(std::string text);
    static ChatMessage assistant(std::string text);
    static ChatMessage tool_call(ToolName tool, std::string query, std::string call_id);
    static ChatMessage tool_result(ToolName tool, std::string call_id, std::string text,
                                   std::vector<FigureRef> figures = {});
    static ChatMessage image_attachment(std::vector<FigureRef> figures, std::vector<std::shared_ptr<const Bytes>> images);
};

struct ChatOutcome {
    enum class Kind { kFinalText, kToolCall };

    Kind kind = Kind::kFinalText;
    std::string text;
    ToolName tool_name = ToolName::kSearchText;
    std::string tool_query;
    std::string tool_call_id;

    static ChatOutcome final_text(std::string text);
    static ChatOutcome tool_call(ToolName tool, std::string query, std::string call_id = {});

    bool operator==(const ChatOutcome&) const = default;
};

struct ToolSpec {
    ToolName name = ToolName::kSearchText;
    std::string description;
    std::string query_description;
};

struct ChatOptions {
    bool tools_enabled = false;
    std::vector<ToolSpec> tools;
    /// Hint for single-shot tasks such as cleaning; chat turns leave it unset.
    std::optional<int> max_tokens;
};

/// Receives streamed content deltas in order; their concatenation equals the final text.
using TokenSink = std::function<void(std::string_view)>;

}  // namespace mudoc
