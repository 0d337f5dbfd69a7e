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

#include "mudoc/chat.hpp"

namespace mudoc {

std::string_view to_string(ChatRole role) noexcept {
    switch (role) {
        case ChatRole::kSystem: return "system";
        case ChatRole::kUser: return "user";
        case ChatRole::kAssistant: return "assistant";
        case ChatRole::kToolResult: return "tool_result";
        case ChatRole::kImageAttachment: return "image_attachment";
    }
    return "user";
}

std::optional<ChatRole> parse_chat_role(std::string_view name) noexcept {
    for (auto r : {ChatRole::kSystem, ChatRole::kUser, ChatRole::kAssistant, ChatRole::kToolResult,
                   ChatRole::kImageAttachment}) {
        if (to_string(r) == name) return r;
    }
    return std::nullopt;
}

std::string_view to_string(ToolName tool) noexcept {
    return tool == ToolName::kSearchText ? "search_text" : "search_images";
}

std::optional<ToolName> parse_tool_name(std::string_view name) noexcept {
    if (name == "search_text") return ToolName::kSearchText;
    if (name == "search_images") return ToolName::kSearchImages;
    return std::nullopt;
}

void ChatMessage::update_char_len() {
    char_len = utf8_length(content);
    if (is_tool_call()) char_len += to_string(*tool_name).size() + utf8_length(tool_query);
}

ChatMessage ChatMessage::system(std::string text) {
    ChatMessage m;
    m.role = ChatRole::kSystem;
    m.content = std::move(text);
    m.update_char_len();
    return m;
}

ChatMessage ChatMessage::user(std::string text) {
    ChatMessage m;
    m.role = ChatRole::kUser;
    m.content = std::move(text);
    m.update_char_len();
    return m;
}

ChatMessage ChatMessage::assistant(std::string text) {
    ChatMessage m;
    m.role = ChatRole::kAssistant;
    m.content = std::move(text);
    m.update_char_len();
    return m;
}

ChatMessage ChatMessage::tool_call(ToolName tool, std::string query, std::string call_id) {
    ChatMessage m;
    m.role = ChatRole::kAssistant;
    m.tool_name = tool;
    m.tool_query = std::move(query);
    m.tool_call_id = std::move(call_id);
    m.update_char_len();
    return m;
}

ChatMessage ChatMessage::tool_result(ToolName tool, std::string call_id, std::string text,
                                     std::vector<FigureRef> figures) {
    ChatMessage m;
    m.role = ChatRole::kToolResult;
    m.content = std::move(text);
    m.tool_call_id = std::move(call_id);
    m.figure_refs = std::move(figures);
    m.update_char_len();
    m.tool_name = tool;
    return m;
}

ChatMessage ChatMessage::image_attachment(std::vector<FigureRef> figures,
                                          std::vector<std::shared_ptr<const Bytes>> images) {
    ChatMessage m;
    m.role = ChatRole::kImageAttachment;
    std::string text = "Images returned by the last search_images call, in order:";
    for (const auto& f : figures) text += "\n" + f.figure_id;
    m.content = std::move(text);
    m.figure_refs = std::move(figures);
    m.images = std::move(images);
    m.update_char_len();
    return m;
}

ChatOutcome ChatOutcome::final_text(std::string text) {
    ChatOutcome o;
    o.kind = Kind::kFinalText;
    o.text = std::move(text);
    return o;
}

ChatOutcome ChatOutcome::tool_call(ToolName tool, std::string query, std::string call_id) {
    ChatOutcome o;
    o.kind = Kind::kToolCall;
    o.tool_name = tool;
    o.tool_query = std::move(query);
    o.tool_call_id = std::move(call_id);
    return o;
}

}  // namespace mudoc
