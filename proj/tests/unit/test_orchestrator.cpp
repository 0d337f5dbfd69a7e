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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mudoc/orchestrator.hpp"
#include "mudoc/prompts.hpp"
#include "mudoc/reference.hpp"

using namespace mudoc;
using Step = ScriptedChatProvider::Step;

namespace {

ChatMessage user_of(std::size_t n) { return ChatMessage::user(std::string(n, 'a')); }

std::optional<std::string> known_caption(std::string_view id) {
    if (id == "doc-f1.png") return "A figure caption";
    return std::nullopt;
}

// Answers every request with a tool call, even when tools are disabled.
class StubbornChat final : public ChatProvider {
 public:
    ChatOutcome chat_complete(const std::vector<ChatMessage>&, const ChatOptions& options, const TokenSink&) override {
        if (!options.tools_enabled) ++disabled_calls;
        return ChatOutcome::tool_call(ToolName::kSearchText, "more");
    }
    std::string id() const override { return "stubborn"; }
    int disabled_calls = 0;
};

struct Fixture {
    std::shared_ptr<HashingEmbedder> embedder = std::make_shared<HashingEmbedder>(64, 32);
    std::shared_ptr<const DocumentIndex> index;

    Fixture() {
        fixtures::RandomIndexOptions o;
        o.embedder = embedder;
        o.seed = 21;
        o.max_snippet_chars = 1500;
        index = std::make_shared<DocumentIndex>(fixtures::random_index(o));
    }

    std::shared_ptr<Orchestrator> make(std::shared_ptr<ChatProvider> chat, OrchestratorConfig config = {}) {
        ProviderSet p;
        p.chat = std::move(chat);
        p.embedder = embedder;
        return std::make_shared<Orchestrator>(Orchestrator::IndexMap{{index->manifest.doc_id, index}}, p, config);
    }
};

std::vector<TurnEvent> run(Orchestrator& orch, Session& session, std::string_view text, TurnResult* out = nullptr) {
    std::vector<TurnEvent> events;
    auto r = orch.run_turn(session, text, [&](const TurnEvent& e) { events.push_back(e); });
    if (out != nullptr) *out = std::move(r);
    return events;
}

}  // namespace

TEST(BuildContext, SmallHistoryIsIncludedWhole) {
    const auto w = build_context(ChatMessage::system("sys"), {user_of(1000)}, 65536);
    EXPECT_EQ(w.included, 1u);
    EXPECT_EQ(w.history_chars, 1000u);
    ASSERT_EQ(w.messages.size(), 2u);
    EXPECT_EQ(w.messages[0].role, ChatRole::kSystem);
    EXPECT_FALSE(w.oversize);
}

TEST(BuildContext, TwoHundredThousandCharMessagesKeepSixtyFive) {
    std::vector<ChatMessage> history;
    for (int i = 0; i < 200; ++i) history.push_back(user_of(1000));
    const auto w = build_context(ChatMessage::system("sys"), history, 65536);
    EXPECT_EQ(w.included, 65u);  // 65 * 1000 <= 65536 < 66 * 1000
    EXPECT_EQ(w.history_chars, 65000u);
}

TEST(BuildContext, BoundaryAtExactBudgetIsIncluded) {
    std::vector<ChatMessage> history{user_of(536)};
    for (int i = 0; i < 65; ++i) history.push_back(user_of(1000));
    const auto w = build_context(ChatMessage::system("sys"), history, 65536);
    EXPECT_EQ(w.included, history.size());
    EXPECT_EQ(w.history_chars, 65536u);
    history.insert(history.begin(), user_of(1));
    EXPECT_EQ(build_context(ChatMessage::system("sys"), history, 65536).included, history.size() - 1);
}

TEST(BuildContext, ToolGroupLeavesTogether) {
    std::vector<ChatMessage> history;
    history.push_back(user_of(100));
    history.push_back(ChatMessage::tool_call(ToolName::kSearchImages, std::string(40, 'q'), "c1"));
    history.push_back(ChatMessage::tool_result(ToolName::kSearchImages, "c1", std::string(300, 'r')));
    history.push_back(ChatMessage::image_attachment({{"f", "c", "d"}}, {std::make_shared<const Bytes>(Bytes{1, 2})}));
    history.push_back(user_of(200));
    std::size_t group = 0;
    for (std::size_t i = 1; i <= 3; ++i) group += history[i].char_len;
    // Room for the last message and part of the group: the whole group is dropped.
    const auto w = build_context(ChatMessage::system("sys"), history, 200 + group - 1);
    EXPECT_EQ(w.included, 1u);
    const auto w2 = build_context(ChatMessage::system("sys"), history, 200 + group);
    EXPECT_EQ(w2.included, 4u);
    EXPECT_TRUE(w2.messages[1].is_tool_call());
}

TEST(BuildContext, OversizeNewestMessageIsSentAlone) {
    const auto w = build_context(ChatMessage::system("s"), {user_of(10), user_of(70000)}, 65536);
    EXPECT_TRUE(w.oversize);
    EXPECT_EQ(w.included, 1u);
}

TEST(RenderResponse, ParagraphsAndFigure) {
    const auto blocks = render_response("Intro.\n\n<img src=\"doc-f1.png\">\n\nOutro.", known_caption);
    ASSERT_EQ(blocks.size(), 3u);
    EXPECT_EQ(blocks[0].kind, RenderedBlock::Kind::kParagraph);
    EXPECT_EQ(blocks[0].text, "Intro.");
    EXPECT_EQ(blocks[1].kind, RenderedBlock::Kind::kFigure);
    EXPECT_EQ(blocks[1].figure_id, "doc-f1.png");
    EXPECT_EQ(blocks[1].caption, "A figure caption");
    EXPECT_EQ(blocks[2].text, "Outro.");
}

TEST(RenderResponse, FigureElementAndPathSource) {
    const auto blocks = render_response(
        "<figure><img src=\"/api/figures/doc-f1.png\" alt=\"x\"><figcaption>Model caption</figcaption></figure>\nAfter.",
        known_caption);
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].figure_id, "doc-f1.png");
    EXPECT_EQ(blocks[0].caption, "A figure caption");
    EXPECT_EQ(blocks[1].text, "After.");
}

TEST(RenderResponse, UnknownTagStaysAsFlaggedParagraph) {
    const std::string tag = "<img src=\"missing.png\">";
    const auto blocks = render_response("Before.\n\n" + tag, known_caption);
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[1].kind, RenderedBlock::Kind::kParagraph);
    EXPECT_EQ(blocks[1].text, tag);
    EXPECT_EQ(blocks[1].flag, "unknown_figure");
}

TEST(RenderResponse, EmptyTextGivesNoBlocks) { EXPECT_TRUE(render_response("  \n\n ", known_caption).empty()); }

TEST(MapParagraphs, ExactSnippetMapsAtOneAndShortNeverMaps) {
    Fixture f;
    const Snippet* target = nullptr;
    for (const auto& s : f.index->snippets) {
        if (s.region_class != RegionClass::kFigure && utf8_length(s.raw_text) >= 300) {
            target = &s;
            break;
        }
    }
    ASSERT_NE(target, nullptr);
    std::vector<RenderedBlock> blocks(3);
    blocks[0].text = target->raw_text;
    blocks[1].text = utf8_truncate(target->raw_text, 99);
    blocks[2].kind = RenderedBlock::Kind::kFigure;
    blocks[2].figure_id = "x";
    map_paragraphs(blocks, {f.index.get()}, *f.embedder, {0.6, 100});
    ASSERT_TRUE(blocks[0].anchor.has_value());
    EXPECT_NEAR(*blocks[0].map_score, 1.0, 1e-6);
    EXPECT_EQ(blocks[0].anchor->snippet_id, target->snippet_id);
    EXPECT_EQ(blocks[0].anchor->page_index, target->page_index);
    EXPECT_FALSE(blocks[1].anchor.has_value());
    EXPECT_FALSE(blocks[1].map_score.has_value());
    EXPECT_FALSE(blocks[2].anchor.has_value());
}

TEST(MapParagraphs, ThresholdOneOnlyKeepsExactMatches) {
    Fixture f;
    std::mt19937_64 rng(3);
    std::vector<RenderedBlock> blocks(1);
    blocks[0].text = fixtures::random_text(rng, 400);
    map_paragraphs(blocks, {f.index.get()}, *f.embedder, {0.0, 100});
    EXPECT_TRUE(blocks[0].anchor.has_value());
    blocks[0].anchor.reset();
    map_paragraphs(blocks, {f.index.get()}, *f.embedder, {1.0, 100});
    EXPECT_FALSE(blocks[0].anchor.has_value());
    EXPECT_TRUE(blocks[0].map_score.has_value());
}

TEST(Prompts, SystemMessageNamesTitleAndTools) {
    OrchestratorConfig c;
    const auto text = system_message(c, "Deep Learning Basics");
    EXPECT_NE(text.find("Deep Learning Basics"), std::string::npos);
    EXPECT_NE(text.find("search_text"), std::string::npos);
    EXPECT_NE(text.find("search_images"), std::string::npos);
    EXPECT_NE(text.find("<img"), std::string::npos);
    const auto specs = tool_specs(c);
    ASSERT_EQ(specs.size(), 2u);
    EXPECT_EQ(specs[0].name, ToolName::kSearchText);
    EXPECT_EQ(specs[1].name, ToolName::kSearchImages);
}

TEST(Prompts, ToolResultFormats) {
    TextChunk c;
    c.chunk_id = "d-c1";
    c.cleaned_text = "Clean text.";
    c.first_page = 2;
    EXPECT_EQ(format_text_results({{&c, 0.9}}), "[1] d-c1 (page 3)\nClean text.");
    EXPECT_EQ(format_text_results({}), "No matching text found.");
    FigureRecord fr{"d-f1.png", "d", "s", "Cap", "Desc", false};
    EXPECT_EQ(format_image_results({&fr}), "d-f1.png | Cap | Desc");
    EXPECT_EQ(format_image_results({}), "No matching images found.");
}

TEST(StatusStrings, BitExact) {
    EXPECT_EQ(status::kGathering, "Gathering information");
    EXPECT_EQ(status::kGenerating, "Generating a response");
    EXPECT_EQ(status::retrieving_text("q1"), "Retrieving text for q1");
    EXPECT_EQ(status::retrieving_images("cats"), "Retrieving images for cats");
}

TEST(Orchestrator, SessionsAreDistinctAndValidated) {
    Fixture f;
    auto orch = f.make(std::make_shared<ScriptedChatProvider>(std::vector<Step>{}));
    const auto a = orch->create_session({f.index->manifest.doc_id});
    const auto b = orch->create_session({f.index->manifest.doc_id});
    EXPECT_NE(a->session_id, b->session_id);
    EXPECT_EQ(a->system_prompt_hash, b->system_prompt_hash);
    EXPECT_FALSE(a->system_prompt_hash.empty());
    EXPECT_THROW(orch->create_session({"nope"}), Error);
    EXPECT_THROW(orch->create_session({}), Error);
    const auto sys = orch->system_message_for(*a);
    EXPECT_EQ(sys.role, ChatRole::kSystem);
}

TEST(Orchestrator, DirectAnswerEventsAndHistory) {
    Fixture f;
    auto orch = f.make(std::make_shared<ScriptedChatProvider>(std::vector<Step>{Step::final_text("Hello there")}));
    auto s = orch->create_session({f.index->manifest.doc_id});
    TurnResult r;
    const auto events = run(*orch, *s, "Hi", &r);
    ASSERT_FALSE(events.empty());
    EXPECT_EQ(events.front().type, TurnEvent::Type::kStatus);
    EXPECT_EQ(events.front().text, status::kGathering);
    std::string tokens;
    std::uint64_t seq = 0;
    for (const auto& e : events) {
        EXPECT_GT(e.seq, seq);
        seq = e.seq;
        EXPECT_EQ(e.turn_id, r.turn_id);
        if (e.type == TurnEvent::Type::kToken) tokens += e.text;
    }
    EXPECT_EQ(tokens, "Hello there");
    EXPECT_EQ(events.back().type, TurnEvent::Type::kDone);
    EXPECT_FALSE(events.back().flagged);
    ASSERT_EQ(s->history.size(), 2u);
    EXPECT_EQ(s->history[0].role, ChatRole::kUser);
    EXPECT_EQ(s->history[1].content, "Hello there");
    EXPECT_EQ(r.tool_calls, 0);
}

TEST(Orchestrator, ToolCallEmitsRetrievalStatus) {
    Fixture f;
    auto chat = std::make_shared<ScriptedChatProvider>(
        std::vector<Step>{Step::tool_call(ToolName::kSearchText, "q1"), Step::final_text("Answer.")});
    auto orch = f.make(chat);
    auto s = orch->create_session({f.index->manifest.doc_id});
    const auto events = run(*orch, *s, "Question");
    std::vector<std::string> statuses;
    for (const auto& e : events) {
        if (e.type == TurnEvent::Type::kStatus) statuses.push_back(e.text);
    }
    EXPECT_EQ(statuses, (std::vector<std::string>{"Gathering information", "Retrieving text for q1",
                                                  "Generating a response"}));
    ASSERT_EQ(s->history.size(), 4u);
    EXPECT_TRUE(s->history[1].is_tool_call());
    EXPECT_EQ(s->history[2].role, ChatRole::kToolResult);
    EXPECT_EQ(s->history[2].tool_call_id, s->history[1].tool_call_id);
    EXPECT_EQ(s->history[2].content.rfind("[1] ", 0), 0u);
    // The second request carries the tool result.
    const auto reqs = chat->requests();
    ASSERT_EQ(reqs.size(), 2u);
    EXPECT_EQ(reqs[1].back().role, ChatRole::kToolResult);
}

TEST(Orchestrator, ImageSearchAttachesImages) {
    Fixture f;
    auto chat = std::make_shared<ScriptedChatProvider>(
        std::vector<Step>{Step::tool_call(ToolName::kSearchImages, "figure"), Step::final_text("Done.")});
    auto orch = f.make(chat);
    auto s = orch->create_session({f.index->manifest.doc_id});
    TurnResult r;
    run(*orch, *s, "Show a figure", &r);
    ASSERT_EQ(s->history.size(), 5u);
    EXPECT_EQ(s->history[3].role, ChatRole::kImageAttachment);
    EXPECT_FALSE(s->history[3].images.empty());
    EXPECT_EQ(s->history[3].images.size(), s->history[3].figure_refs.size());
}

TEST(Orchestrator, ForcedFinalizationAfterToolCap) {
    Fixture f;
    auto chat = std::make_shared<StubbornChat>();
    auto orch = f.make(chat);
    auto s = orch->create_session({f.index->manifest.doc_id});
    TurnResult r;
    const auto events = run(*orch, *s, "Loop forever", &r);
    EXPECT_EQ(r.tool_calls, 6);
    EXPECT_TRUE(r.forced);
    EXPECT_EQ(chat->disabled_calls, 1);
    EXPECT_EQ(events.back().type, TurnEvent::Type::kDone);
    EXPECT_TRUE(events.back().flagged);
}

TEST(Orchestrator, BusySessionRejectsSecondTurn) {
    Fixture f;
    auto orch = f.make(std::make_shared<ScriptedChatProvider>(std::vector<Step>{}));
    auto s = orch->create_session({f.index->manifest.doc_id});
    s->active = true;
    try {
        orch->run_turn(*s, "Hi");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kBusy);
    }
    s->active = false;
    EXPECT_THROW(orch->run_turn(*s, "  "), Error);
}

TEST(Orchestrator, ProviderFailureRollsBackHistory) {
    Fixture f;
    auto chat = std::make_shared<ScriptedChatProvider>(
        std::vector<Step>{Step::final_text("First."), Step::tool_call(ToolName::kSearchText, "x"),
                          Step::failure(ErrorCode::kProviderUnavailable)});
    auto orch = f.make(chat);
    auto s = orch->create_session({f.index->manifest.doc_id});
    run(*orch, *s, "One");
    ASSERT_EQ(s->history.size(), 2u);
    TurnResult r;
    const auto events = run(*orch, *s, "Two", &r);
    ASSERT_TRUE(r.error.has_value());
    EXPECT_EQ(r.error->code(), ErrorCode::kProviderUnavailable);
    EXPECT_EQ(events.back().type, TurnEvent::Type::kError);
    EXPECT_EQ(events.back().error_code, ErrorCode::kProviderUnavailable);
    EXPECT_EQ(s->history.size(), 2u);
    EXPECT_FALSE(s->active);
}

TEST(Orchestrator, ThrowingSinkDoesNotBreakTurn) {
    Fixture f;
    auto orch = f.make(std::make_shared<ScriptedChatProvider>(std::vector<Step>{Step::final_text("Fine.")}));
    auto s = orch->create_session({f.index->manifest.doc_id});
    const auto r = orch->run_turn(*s, "Hi", [](const TurnEvent&) { throw std::runtime_error("gone"); });
    EXPECT_FALSE(r.error.has_value());
    EXPECT_EQ(s->history.size(), 2u);
}
