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
#include <nlohmann/json.hpp>
#include <sstream>

#include "mudoc/error.hpp"
#include "mudoc/reference.hpp"

namespace mudoc {
namespace {

constexpr std::string_view kTaskHeading = "### Task: ";

// Text under "### <name>" up to the next heading.
std::string section(std::string_view prompt, std::string_view name) {
    const std::string heading = "### " + std::string(name) + "\n";
    auto at = prompt.find(heading);
    if (at == std::string_view::npos) return {};
    at += heading.size();
    auto end = prompt.find("\n### ", at);
    return std::string(trim(prompt.substr(at, end == std::string_view::npos ? std::string_view::npos : end - at)));
}

std::string collapse_spaces(std::string_view text) {
    std::string out;
    bool space = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::string clean(std::string_view raw) {
    std::string out;
    for (const auto& para : split_paragraphs(raw)) {
        // Rejoin words hyphenated across a line break, then unwrap.
        std::string joined = replace_all(para, "-\n", "");
        if (!out.empty()) out += "\n\n";
        out += collapse_spaces(joined);
    }
    return out.empty() ? std::string(trim(raw)) : out;
}

// Leading sentences, stopping at the first sentence end past min_chars and never beyond max_chars.
std::string lead(std::string_view text, std::size_t min_chars, std::size_t max_chars) {
    const std::string flat = collapse_spaces(text);
    std::size_t cut = std::string::npos;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if ((flat[i] == '.' || flat[i] == '!' || flat[i] == '?') && (i + 1 == flat.size() || flat[i + 1] == ' ')) {
            if (i + 1 > max_chars) break;
            cut = i + 1;
            if (cut >= min_chars) break;
        }
    }
    if (cut == std::string::npos) return utf8_truncate(flat, max_chars);
    return flat.substr(0, cut);
}

struct Passage {
    std::string header;
    std::string body;
};

std::vector<Passage> parse_passages(std::string_view result) {
    std::vector<Passage> out;
    std::istringstream in{std::string(result)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.size() > 3 && line[0] == '[' && std::isdigit(static_cast<unsigned char>(line[1]))) {
            out.push_back({line, {}});
        } else if (!out.empty()) {
            if (!out.back().body.empty()) out.back().body.push_back('\n');
            out.back().body += line;
        }
    }
    return out;
}

struct FigureLine {
    std::string file;
    std::string caption;
};

std::vector<FigureLine> parse_figures(std::string_view result) {
    std::vector<FigureLine> out;
    std::istringstream in{std::string(result)};
    std::string line;
    while (std::getline(in, line)) {
        const auto bar = line.find(" | ");
        if (bar == std::string::npos) continue;
        const auto bar2 = line.find(" | ", bar + 3);
        out.push_back({line.substr(0, bar), line.substr(bar + 3, bar2 == std::string::npos ? std::string::npos : bar2 - bar - 3)});
    }
    return out;
}

std::string query_from(std::string_view user_text) {
    const auto open = user_text.find('"');
    const auto close = user_text.rfind('"');
    std::string_view q = user_text;
    if (open != std::string_view::npos && close > open + 1) q = user_text.substr(open + 1, close - open - 1);
    return utf8_truncate(collapse_spaces(q), 300);
}

std::string color_name(const Bytes& png) {
    Raster img;
    try {
        img = decode_png(png);
    } catch (const Error&) {
        return {};
    }
    double r = 0, g = 0, b = 0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto c = img.at(x, y);
            r += c.r;
            g += c.g;
            b += c.b;
        }
    }
    const double n = std::max(1.0, static_cast<double>(img.width()) * img.height());
    r /= n;
    g /= n;
    b /= n;
    struct Named {
        const char* name;
        double r, g, b;
    };
    static constexpr Named kPalette[] = {{"white", 255, 255, 255}, {"black", 0, 0, 0},     {"gray", 128, 128, 128},
                                         {"red", 200, 40, 40},     {"green", 40, 160, 60}, {"blue", 40, 80, 200},
                                         {"yellow", 220, 200, 40}, {"purple", 120, 50, 160}, {"teal", 50, 150, 150},
                                         {"orange", 230, 130, 30}};
    const Named* best = &kPalette[0];
    double best_d = 1e300;
    for (const auto& p : kPalette) {
        const double d = (p.r - r) * (p.r - r) + (p.g - g) * (p.g - g) + (p.b - b) * (p.b - b);
        if (d < best_d) {
            best_d = d;
            best = &p;
        }
    }
    return best->name;
}

std::string describe(const ChatMessage& request) {
    const std::string_view prompt = request.content;
    int page = 0;
    if (auto at = prompt.find("from page "); at != std::string_view::npos) {
        page = std::atoi(std::string(prompt.substr(at + 10, 8)).c_str());
    }
    const std::string current = section(prompt, "Current page");
    std::string caption;
    for (const auto& para : split_paragraphs(current)) {
        if (para.rfind("Figure", 0) == 0 || para.rfind("Fig.", 0) == 0) {
            caption = utf8_truncate(collapse_spaces(para), 300);
            break;
        }
    }
    if (caption.empty()) caption = "Figure on page " + std::to_string(page);
    std::string description = "An illustration from page " + std::to_string(page) + " of the document.";
    if (!request.images.empty() && request.images.front()) {
        const auto color = color_name(*request.images.front());
        if (!color.empty()) description += " Its dominant color is " + color + ".";
    }
    const std::string context = lead(current, 80, 240);
    if (!context.empty()) description += " It accompanies the passage: " + context;
    return nlohmann::json{{"caption", caption}, {"description", description}}.dump();
}

std::string answer(const std::vector<ChatMessage>& turn) {
    std::vector<Passage> passages;
    std::vector<FigureLine> figures;
    for (const auto& m : turn) {
        if (m.role != ChatRole::kToolResult || !m.tool_name) continue;
        if (*m.tool_name == ToolName::kSearchText) {
            for (auto& p : parse_passages(m.content)) passages.push_back(std::move(p));
        } else {
            for (auto& f : parse_figures(m.content)) figures.push_back(std::move(f));
        }
    }
    std::vector<std::string> paragraphs;
    if (!passages.empty()) paragraphs.push_back(lead(passages[0].body, 200, 700));
    if (!figures.empty()) {
        paragraphs.push_back("<figure><img src=\"" + figures[0].file + "\"><figcaption>" + figures[0].caption +
                             "</figcaption></figure>");
        paragraphs.push_back("The figure above is taken from the document: " + figures[0].caption);
    }
    if (passages.size() > 1) paragraphs.push_back(lead(passages[1].body, 150, 500));
    if (paragraphs.empty()) return "The document does not seem to cover this question.";
    std::string out;
    for (const auto& p : paragraphs) {
        if (!out.empty()) out += "\n\n";
        out += p;
    }
    return out;
}

ChatOutcome finish(std::string text, const TokenSink& sink) {
    if (sink) {
        for (const auto& t : split_tokens(text)) sink(t);
    }
    return ChatOutcome::final_text(std::move(text));
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ' && text[j] != '\n') ++j;
        while (j < text.size() && (text[j] == ' ' || text[j] == '\n')) ++j;
        out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

ChatOutcome ReferenceChatProvider::chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                                                 const TokenSink& sink) {
    check_chat_request(messages);
    std::size_t last_user = 0;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (messages[i].role == ChatRole::kUser) last_user = i;
    }
    const auto& request = messages[last_user];
    if (request.role == ChatRole::kUser && request.content.rfind(kTaskHeading, 0) == 0) {
        const std::string_view task = std::string_view(request.content).substr(kTaskHeading.size());
        if (task.rfind("clean", 0) == 0) return finish(clean(section(request.content, "Raw text")), sink);
        if (task.rfind("summarize", 0) == 0) return finish(lead(section(request.content, "Text"), 120, 400), sink);
        if (task.rfind("describe", 0) == 0) return finish(describe(request), sink);
    }

    const std::vector<ChatMessage> turn(messages.begin() + static_cast<std::ptrdiff_t>(last_user), messages.end());
    bool searched_text = false;
    bool searched_images = false;
    int calls = 0;
    for (const auto& m : messages) calls += m.is_tool_call() ? 1 : 0;
    for (const auto& m : turn) {
        if (!m.is_tool_call()) continue;
        searched_text = searched_text || *m.tool_name == ToolName::kSearchText;
        searched_images = searched_images || *m.tool_name == ToolName::kSearchImages;
    }
    const bool has_text_tool = std::any_of(options.tools.begin(), options.tools.end(),
                                           [](const ToolSpec& t) { return t.name == ToolName::kSearchText; });
    const bool has_image_tool = std::any_of(options.tools.begin(), options.tools.end(),
                                            [](const ToolSpec& t) { return t.name == ToolName::kSearchImages; });
    const std::string call_id = "call_" + std::to_string(calls + 1);
    if (options.tools_enabled && request.role == ChatRole::kUser) {
        if (!searched_text && has_text_tool) {
            return ChatOutcome::tool_call(ToolName::kSearchText, query_from(request.content), call_id);
        }
        if (!searched_images && has_image_tool) {
            return ChatOutcome::tool_call(ToolName::kSearchImages, query_from(request.content), call_id);
        }
    }
    return finish(answer(turn), sink);
}

ScriptedChatProvider::Step ScriptedChatProvider::Step::final_text(std::string text) {
    Step s;
    s.kind = Kind::kFinal;
    s.text = std::move(text);
    return s;
}

ScriptedChatProvider::Step ScriptedChatProvider::Step::tool_call(ToolName tool, std::string query) {
    Step s;
    s.kind = Kind::kToolCall;
    s.tool = tool;
    s.query = std::move(query);
    return s;
}

ScriptedChatProvider::Step ScriptedChatProvider::Step::failure(ErrorCode code, std::string message) {
    Step s;
    s.kind = Kind::kError;
    s.error = code;
    s.text = std::move(message);
    return s;
}

ScriptedChatProvider::ScriptedChatProvider(std::vector<Step> script, std::string fallback)
    : script_(script.begin(), script.end()), fallback_(std::move(fallback)) {}

ChatOutcome ScriptedChatProvider::chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                                                const TokenSink& sink) {
    check_chat_request(messages);
    Step step;
    int call_number = 0;
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(messages);
        call_number = ++calls_;
        if (!options.tools_enabled) {
            while (!script_.empty() && script_.front().kind == Step::Kind::kToolCall) script_.pop_front();
        }
        if (script_.empty()) {
            step = Step::final_text(fallback_);
        } else {
            step = std::move(script_.front());
            script_.pop_front();
        }
    }
    switch (step.kind) {
        case Step::Kind::kError:
            raise(step.error, step.text);
        case Step::Kind::kToolCall:
            return ChatOutcome::tool_call(step.tool, step.query, "call_" + std::to_string(call_number));
        case Step::Kind::kFinal:
            break;
    }
    return finish(std::move(step.text), sink);
}

std::vector<std::vector<ChatMessage>> ScriptedChatProvider::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::size_t ScriptedChatProvider::remaining() const {
    std::lock_guard lock(mutex_);
    return script_.size();
}

}  // namespace mudoc
