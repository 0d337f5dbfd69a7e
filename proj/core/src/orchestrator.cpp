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

#include "mudoc/orchestrator.hpp"

#include <algorithm>
#include <random>
#include <regex>

#include <spdlog/spdlog.h>

#include "mudoc/prompts.hpp"

namespace mudoc {

std::string status::retrieving_text(std::string_view query) { return "Retrieving text for " + std::string(query); }

std::string status::retrieving_images(std::string_view query) { return "Retrieving images for " + std::string(query); }

std::string_view to_string(TurnEvent::Type type) noexcept {
    switch (type) {
        case TurnEvent::Type::kStatus: return "status";
        case TurnEvent::Type::kToken: return "token";
        case TurnEvent::Type::kBlock: return "block";
        case TurnEvent::Type::kAnchors: return "anchors";
        case TurnEvent::Type::kDone: return "done";
        case TurnEvent::Type::kError: return "error";
    }
    return "status";
}

// ---------------------------------------------------------------------------------------------
// Context window

ContextWindow build_context(const ChatMessage& system_message, const std::vector<ChatMessage>& history,
                            std::size_t budget) {
    // Unit boundaries: a tool call opens a group that its result and attachment join.
    std::vector<std::size_t> unit_start;
    bool group_open = false;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& m = history[i];
        const bool follower = m.role == ChatRole::kToolResult || m.role == ChatRole::kImageAttachment;
        if (follower && group_open) continue;
        unit_start.push_back(i);
        group_open = m.is_tool_call();
    }

    ContextWindow window;
    std::size_t first = history.size();
    std::size_t end = history.size();
    for (auto it = unit_start.rbegin(); it != unit_start.rend(); ++it) {
        std::size_t chars = 0;
        for (std::size_t i = *it; i < end; ++i) chars += history[i].char_len;
        if (window.history_chars + chars > budget) {
            if (first == history.size()) {
                // The newest unit alone is over budget; it still goes out so the model sees the request.
                window.oversize = true;
                window.history_chars = chars;
                first = *it;
            }
            break;
        }
        window.history_chars += chars;
        first = *it;
        end = *it;
    }
    window.messages.reserve(history.size() - first + 1);
    window.messages.push_back(system_message);
    window.messages.insert(window.messages.end(), history.begin() + static_cast<std::ptrdiff_t>(first), history.end());
    window.included = history.size() - first;
    return window;
}

// ---------------------------------------------------------------------------------------------
// Rendering and mapping

namespace {

void append_paragraphs(std::vector<RenderedBlock>& blocks, std::string_view text) {
    for (auto& p : split_paragraphs(text)) {
        RenderedBlock b;
        b.kind = RenderedBlock::Kind::kParagraph;
        b.text = std::move(p);
        blocks.push_back(std::move(b));
    }
}

std::optional<std::string> image_source(const std::string& tag) {
    static const std::regex src(R"re(<img\b[^>]*?\bsrc\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+)))re", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(tag, m, src)) return std::nullopt;
    std::string value = m[1].matched ? m[1].str() : m[2].matched ? m[2].str() : m[3].str();
    const auto slash = value.find_last_of('/');
    if (slash != std::string::npos) value = value.substr(slash + 1);
    return value;
}

}  // namespace

std::vector<RenderedBlock> render_response(
    std::string_view final_text, const std::function<std::optional<std::string>(std::string_view)>& caption_of) {
    static const std::regex tag(R"(<figure\b[^>]*>[\s\S]*?</figure\s*>|<img\b[^>]*>)", std::regex::icase);
    std::vector<RenderedBlock> blocks;
    const std::string text(final_text);
    std::size_t cursor = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), tag); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const auto pos = static_cast<std::size_t>(m.position(0));
        append_paragraphs(blocks, std::string_view(text).substr(cursor, pos - cursor));
        cursor = pos + static_cast<std::size_t>(m.length(0));
        const std::string whole = m.str(0);
        const auto source = image_source(whole);
        std::optional<std::string> caption;
        if (source && caption_of) caption = caption_of(*source);
        RenderedBlock b;
        if (caption) {
            b.kind = RenderedBlock::Kind::kFigure;
            b.figure_id = *source;
            b.caption = std::move(*caption);
        } else {
            spdlog::warn("response references unknown figure {}", source.value_or("(no src)"));
            b.kind = RenderedBlock::Kind::kParagraph;
            b.text = whole;
            b.flag = "unknown_figure";
        }
        blocks.push_back(std::move(b));
    }
    append_paragraphs(blocks, std::string_view(text).substr(cursor));
    return blocks;
}

void map_paragraphs(std::vector<RenderedBlock>& blocks, const std::vector<const DocumentIndex*>& indices,
                    Embedder& embedder, const MappingOptions& options) {
    struct Candidate {
        const DocumentIndex* index;
        const EmbeddingMatrix* matrix;
        std::size_t row;
        const std::string* id;
    };
    std::vector<Candidate> candidates;
    for (const auto* idx : indices) {
        const auto it = idx->matrices.find(matrix::kSnippetRaw);
        if (it == idx->matrices.end()) continue;
        const auto& m = it->second;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto* s = idx->find_snippet(m.ids()[r]);
            // Short snippets such as headings attract spurious matches, so they are not targets.
            if (s == nullptr || utf8_length(s->raw_text) < options.min_chars) continue;
            candidates.push_back({idx, &m, r, &m.ids()[r]});
        }
    }
    if (candidates.empty()) return;
    for (auto& b : blocks) {
        if (b.kind != RenderedBlock::Kind::kParagraph || !b.flag.empty()) continue;
        if (utf8_length(b.text) < options.min_chars) continue;
        EmbeddingVector q;
        try {
            q = embedder.embed_text(b.text, EmbeddingFamily::kCtxText);
        } catch (const Error& e) {
            spdlog::warn("paragraph mapping skipped: {}", e.what());
            b.flag = "mapping_failed";
            continue;
        }
        const Candidate* best = nullptr;
        double best_score = 0.0;
        for (const auto& c : candidates) {
            if (static_cast<std::size_t>(c.matrix->dim()) != q.values.size()) continue;
            const double s = cosine(q.values, c.matrix->row(c.row));
            if (best == nullptr || s > best_score || (s == best_score && *c.id < *best->id)) {
                best = &c;
                best_score = s;
            }
        }
        if (best == nullptr) continue;
        b.map_score = best_score;
        if (best_score >= options.threshold) b.anchor = best->index->anchor_for(*best->id);
    }
}

// ---------------------------------------------------------------------------------------------
// Prompts and tool results

std::string system_message(const OrchestratorConfig& config, std::string_view doc_title) {
    return prompts::render(prompts::get("system_message").text,
                           {{"doc_title", std::string(doc_title)},
                            {"text_tool", std::string(to_string(ToolName::kSearchText))},
                            {"text_tool_description", config.text_tool_description},
                            {"image_tool", std::string(to_string(ToolName::kSearchImages))},
                            {"image_tool_description", config.image_tool_description}});
}

std::vector<ToolSpec> tool_specs(const OrchestratorConfig& config) {
    return {{ToolName::kSearchText, config.text_tool_description, config.text_query_description},
            {ToolName::kSearchImages, config.image_tool_description, config.image_query_description}};
}

namespace {

std::string single_line(std::string_view text) {
    std::string out;
    for (char c : trim(text)) out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    return out;
}

}  // namespace

std::string format_text_results(const std::vector<std::pair<const TextChunk*, double>>& hits) {
    if (hits.empty()) return "No matching text found.";
    std::string out;
    int n = 1;
    for (const auto& [chunk, score] : hits) {
        if (!out.empty()) out += "\n\n";
        out += "[" + std::to_string(n++) + "] " + chunk->chunk_id + " (page " + std::to_string(chunk->first_page + 1) +
               ")\n" + chunk->cleaned_text;
    }
    return out;
}

std::string format_image_results(const std::vector<const FigureRecord*>& hits) {
    if (hits.empty()) return "No matching images found.";
    std::string out;
    for (const auto* f : hits) {
        if (!out.empty()) out += "\n";
        out += f->figure_id + " | " + single_line(f->caption) + " | " + single_line(f->description);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Orchestrator

Orchestrator::Orchestrator(IndexMap indices, ProviderSet providers, OrchestratorConfig config, RetrievalConfig retrieval)
    : indices_(std::move(indices)), providers_(std::move(providers)), config_(std::move(config)), retrieval_(retrieval) {
    if (!providers_.chat || !providers_.embedder) raise(ErrorCode::kInvalidArgument, "orchestrator needs chat and embedder");
}

const DocumentIndex* Orchestrator::find_index(std::string_view doc_id) const {
    const auto it = indices_.find(std::string(doc_id));
    return it == indices_.end() ? nullptr : it->second.get();
}

std::shared_ptr<Session> Orchestrator::create_session(std::vector<std::string> doc_ids) {
    if (doc_ids.empty()) raise(ErrorCode::kInvalidArgument, "a session needs at least one document");
    for (const auto& d : doc_ids) {
        if (find_index(d) == nullptr) raise(ErrorCode::kUnknownId, "document not mounted: " + d);
    }
    static std::mutex rng_mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    auto session = std::make_shared<Session>();
    {
        std::lock_guard lock(rng_mutex);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
        session->session_id = buf;
    }
    session->doc_ids = std::move(doc_ids);
    session->system_prompt_hash = prompts::get("system_message").hash();
    return session;
}

ChatMessage Orchestrator::system_message_for(const Session& session) const {
    std::string title;
    for (const auto& d : session.doc_ids) {
        const auto* idx = find_index(d);
        const std::string t = idx != nullptr && !idx->manifest.title.empty() ? idx->manifest.title : d;
        title += title.empty() ? t : "; " + t;
    }
    return ChatMessage::system(system_message(config_, title));
}

std::vector<const DocumentIndex*> Orchestrator::session_indices(const Session& session) const {
    std::vector<const DocumentIndex*> out;
    for (const auto& d : session.doc_ids) {
        if (const auto* idx = find_index(d)) out.push_back(idx);
    }
    return out;
}

std::optional<std::string> Orchestrator::caption_of(const Session& session, std::string_view figure_id) const {
    for (const auto* idx : session_indices(session)) {
        if (const auto* f = idx->find_figure(figure_id)) return f->caption;
    }
    return std::nullopt;
}

std::vector<std::pair<const TextChunk*, double>> Orchestrator::search_text(const Session& session,
                                                                          std::string_view query) const {
    const auto k = static_cast<std::size_t>(retrieval_.k);
    const auto q = providers_.embedder->embed_text(query, EmbeddingFamily::kQueryText);
    std::vector<std::pair<const TextChunk*, double>> hits;
    for (const auto* idx : session_indices(session)) {
        for (const auto& s : rank_chunks(*idx, q.values, k)) hits.emplace_back(idx->find_chunk(s.chunk_id), s.score);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first->chunk_id < b.first->chunk_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<const FigureRecord*> Orchestrator::search_images(const Session& session, std::string_view query) const {
    const auto k = static_cast<std::size_t>(retrieval_.k);
    const auto dpr = providers_.embedder->embed_text(query, EmbeddingFamily::kQueryText);
    const auto clip = providers_.embedder->embed_text(query, EmbeddingFamily::kJointText);
    std::vector<std::pair<const FigureRecord*, double>> hits;
    for (const auto* idx : session_indices(session)) {
        for (const auto& s : rank_figures(*idx, dpr.values, clip.values, k)) {
            hits.emplace_back(idx->find_figure(s.figure_id), s.score);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first->figure_id < b.first->figure_id;
    });
    if (hits.size() > k) hits.resize(k);
    std::vector<const FigureRecord*> out;
    for (const auto& h : hits) out.push_back(h.first);
    return out;
}

TurnResult Orchestrator::run_turn(Session& session, std::string_view user_text, const EventSink& sink) {
    if (trim(user_text).empty()) raise(ErrorCode::kInvalidArgument, "empty message");
    bool expected = false;
    if (!session.active.compare_exchange_strong(expected, true)) {
        raise(ErrorCode::kBusy, "session " + session.session_id + " is already running a turn");
    }
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
    } release{session.active};
    std::lock_guard lock(session.mutex);

    TurnResult result;
    result.turn_id = session.session_id + "-t" + std::to_string(++session.turns);
    std::uint64_t seq = 0;
    auto emit = [&](TurnEvent e) {
        e.seq = ++seq;
        e.turn_id = result.turn_id;
        if (!sink) return;
        try {
            sink(e);
        } catch (const std::exception& ex) {
            // A vanished listener must not break the turn; it completes server-side.
            spdlog::debug("event sink failed: {}", ex.what());
        }
    };
    auto emit_status = [&](std::string text) {
        TurnEvent e;
        e.type = TurnEvent::Type::kStatus;
        e.text = std::move(text);
        emit(std::move(e));
    };

    const std::size_t snapshot = session.history.size();
    try {
        session.history.push_back(ChatMessage::user(std::string(user_text)));
        emit_status(std::string(status::kGathering));

        const ChatMessage system = system_message_for(session);
        std::string streamed;
        bool retrieved = false;
        bool generating = false;
        std::size_t call_streamed = 0;
        const TokenSink on_token = [&](std::string_view delta) {
            if (delta.empty()) return;
            if (retrieved && !generating) {
                emit_status(std::string(status::kGenerating));
                generating = true;
            }
            streamed += delta;
            call_streamed += delta.size();
            TurnEvent e;
            e.type = TurnEvent::Type::kToken;
            e.text = std::string(delta);
            emit(std::move(e));
        };

        ChatOutcome outcome;
        for (;;) {
            ChatOptions options;
            options.tools_enabled = result.tool_calls < config_.max_tool_calls;
            if (options.tools_enabled) options.tools = tool_specs(config_);
            const auto window = build_context(system, session.history, config_.context_chars);
            if (window.oversize) {
                spdlog::warn("turn {}: newest message group exceeds the {}-character context budget", result.turn_id,
                             config_.context_chars);
                result.oversize_context = true;
            }
            call_streamed = 0;
            outcome = providers_.chat->chat_complete(window.messages, options, on_token);
            if (outcome.kind == ChatOutcome::Kind::kFinalText) break;
            if (!options.tools_enabled) {
                // The model insisted on searching after the cap; close the turn with a fixed note.
                outcome = ChatOutcome::final_text("I could not finish searching the document within the allowed "
                                                  "number of steps. Please ask a narrower question.");
                result.forced = true;
                break;
            }

            ++result.tool_calls;
            std::string call_id = outcome.tool_call_id;
            if (call_id.empty()) call_id = "call_" + std::to_string(session.turns) + "_" + std::to_string(result.tool_calls);
            session.history.push_back(ChatMessage::tool_call(outcome.tool_name, outcome.tool_query, call_id));
            if (outcome.tool_name == ToolName::kSearchText) {
                emit_status(status::retrieving_text(outcome.tool_query));
                const auto hits = trim(outcome.tool_query).empty()
                                      ? std::vector<std::pair<const TextChunk*, double>>{}
                                      : search_text(session, outcome.tool_query);
                session.history.push_back(
                    ChatMessage::tool_result(ToolName::kSearchText, call_id, format_text_results(hits)));
            } else {
                emit_status(status::retrieving_images(outcome.tool_query));
                const auto hits = trim(outcome.tool_query).empty() ? std::vector<const FigureRecord*>{}
                                                                   : search_images(session, outcome.tool_query);
                std::vector<FigureRef> refs;
                std::vector<std::shared_ptr<const Bytes>> images;
                for (const auto* f : hits) {
                    refs.push_back({f->figure_id, f->caption, f->description});
                    for (const auto* idx : session_indices(session)) {
                        const auto a = idx->assets.find("figures/" + f->figure_id);
                        if (a != idx->assets.end()) {
                            images.push_back(std::make_shared<const Bytes>(a->second.read()));
                            break;
                        }
                    }
                }
                session.history.push_back(
                    ChatMessage::tool_result(ToolName::kSearchImages, call_id, format_image_results(hits), refs));
                // Chat APIs take images only in user messages, so they follow the tool result as one.
                if (!refs.empty()) session.history.push_back(ChatMessage::image_attachment(refs, std::move(images)));
            }
            retrieved = true;
        }
        if (result.tool_calls >= config_.max_tool_calls && config_.max_tool_calls > 0) result.forced = true;

        if (call_streamed == 0 && !outcome.text.empty()) on_token(outcome.text);
        result.final_text = streamed;
        session.history.push_back(ChatMessage::assistant(result.final_text));

        result.blocks = render_response(result.final_text,
                                        [&](std::string_view id) { return caption_of(session, id); });
        const auto indices = session_indices(session);
        for (auto& b : result.blocks) {
            if (b.kind != RenderedBlock::Kind::kFigure) continue;
            for (const auto* idx : indices) {
                if (idx->find_figure(b.figure_id) != nullptr) {
                    b.anchor = idx->anchor_for(b.figure_id);
                    break;
                }
            }
        }
        map_paragraphs(result.blocks, indices, *providers_.embedder,
                       {config_.map_threshold, static_cast<std::size_t>(std::max(0, config_.map_min_chars))});

        TurnEvent anchors;
        anchors.type = TurnEvent::Type::kAnchors;
        bool flagged = result.forced || result.oversize_context;
        for (std::size_t i = 0; i < result.blocks.size(); ++i) {
            TurnEvent e;
            e.type = TurnEvent::Type::kBlock;
            e.block = result.blocks[i];
            e.block_index = i;
            emit(std::move(e));
            if (result.blocks[i].anchor) anchors.anchors.emplace_back(i, *result.blocks[i].anchor);
            flagged = flagged || !result.blocks[i].flag.empty();
        }
        emit(std::move(anchors));
        TurnEvent done;
        done.type = TurnEvent::Type::kDone;
        done.flagged = flagged;
        emit(std::move(done));
    } catch (const Error& e) {
        session.history.resize(snapshot);
        result.error = e;
        TurnEvent ev;
        ev.type = TurnEvent::Type::kError;
        ev.text = e.what();
        ev.error_code = e.code();
        emit(std::move(ev));
    } catch (const std::exception& e) {
        session.history.resize(snapshot);
        result.error = Error(ErrorCode::kInvalidArgument, e.what());
        TurnEvent ev;
        ev.type = TurnEvent::Type::kError;
        ev.text = e.what();
        emit(std::move(ev));
    }
    return result;
}

}  // namespace mudoc
