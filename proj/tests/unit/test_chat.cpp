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

#include <thread>

#include <gtest/gtest.h>

#include "mudoc/chat.hpp"
#include "mudoc/error.hpp"
#include "mudoc/providers.hpp"
#include "mudoc/reference.hpp"

using namespace mudoc;

using Step = ScriptedChatProvider::Step;

namespace {

std::vector<ChatMessage> conversation(std::string user = "hello") {
    return {ChatMessage::system("system"), ChatMessage::user(std::move(user))};
}

// Fails with the given code a fixed number of times, then answers.
class FlakyChat final : public ChatProvider {
 public:
    FlakyChat(int failures, ErrorCode code, bool stream_before_failing = false)
        : failures_(failures), code_(code), stream_(stream_before_failing) {}
    ChatOutcome chat_complete(const std::vector<ChatMessage>&, const ChatOptions&, const TokenSink& sink) override {
        ++calls;
        if (failures_ > 0) {
            --failures_;
            if (stream_ && sink) sink("partial ");
            raise(code_, "flaky");
        }
        if (sink) sink("fine");
        return ChatOutcome::final_text("fine");
    }
    std::string id() const override { return "flaky"; }
    int calls = 0;

 private:
    int failures_;
    ErrorCode code_;
    bool stream_;
};

}  // namespace

TEST(ChatMessage, CharLenCountsCodePointsAndToolCallFields) {
    EXPECT_EQ(ChatMessage::user("caf\xc3\xa9").char_len, 4u);
    const auto call = ChatMessage::tool_call(ToolName::kSearchText, "abc", "id1");
    EXPECT_TRUE(call.is_tool_call());
    EXPECT_EQ(call.char_len, std::string("search_text").size() + 3);
    EXPECT_EQ(ChatMessage::tool_result(ToolName::kSearchImages, "id1", "12345").char_len, 5u);
}

TEST(ChatNames, RoundTrip) {
    for (auto r : {ChatRole::kSystem, ChatRole::kUser, ChatRole::kAssistant, ChatRole::kToolResult, ChatRole::kImageAttachment}) {
        EXPECT_EQ(parse_chat_role(to_string(r)), r);
    }
    EXPECT_EQ(to_string(ToolName::kSearchText), "search_text");
    EXPECT_EQ(to_string(ToolName::kSearchImages), "search_images");
    EXPECT_EQ(parse_tool_name("search_images"), ToolName::kSearchImages);
    EXPECT_FALSE(parse_tool_name("browse").has_value());
}

TEST(ScriptedChat, AnswersOk) {
    ScriptedChatProvider chat({Step::final_text("OK")});
    EXPECT_EQ(chat.chat_complete(conversation(), {}), ChatOutcome::final_text("OK"));
}

TEST(ScriptedChat, RequestsSearch) {
    ScriptedChatProvider chat({Step::tool_call(ToolName::kSearchText, "incremental concept learning")});
    ChatOptions options;
    options.tools_enabled = true;
    const auto out = chat.chat_complete(conversation(), options);
    EXPECT_EQ(out.kind, ChatOutcome::Kind::kToolCall);
    EXPECT_EQ(out.tool_name, ToolName::kSearchText);
    EXPECT_EQ(out.tool_query, "incremental concept learning");
}

TEST(ScriptedChat, ToolsDisabledAlwaysYieldsFinalText) {
    ScriptedChatProvider chat({Step::tool_call(ToolName::kSearchText, "a"), Step::tool_call(ToolName::kSearchImages, "b")});
    const auto out = chat.chat_complete(conversation(), {});
    EXPECT_EQ(out.kind, ChatOutcome::Kind::kFinalText);
}

TEST(ScriptedChat, StreamsTokensThatConcatenateToTheText) {
    const std::string text = "Two  words\n\nand a paragraph.";
    ScriptedChatProvider chat({Step::final_text(text)});
    std::string streamed;
    int deltas = 0;
    chat.chat_complete(conversation(), {}, [&](std::string_view d) {
        streamed += d;
        ++deltas;
    });
    EXPECT_EQ(streamed, text);
    EXPECT_GT(deltas, 1);
}

TEST(ScriptedChat, RejectsRequestWithoutSystemMessage) {
    ScriptedChatProvider chat({Step::final_text("x")});
    EXPECT_THROW(chat.chat_complete({ChatMessage::user("hi")}, {}), Error);
}

TEST(SplitTokens, KeepsTrailingWhitespace) {
    const auto t = split_tokens("a bc\n\nd ");
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0], "a ");
    EXPECT_EQ(t[1], "bc\n\n");
    EXPECT_EQ(t[2], "d ");
}

TEST(CallGuard, RetriesTransientFailuresWithBackoff) {
    std::vector<long long> sleeps;
    CallGuard guard(2, {3, std::chrono::milliseconds(100), 2.0}, [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    int attempts = 0;
    guard.run([&] {
        if (++attempts < 3) raise(ErrorCode::kProviderUnavailable, "down");
    });
    EXPECT_EQ(attempts, 3);
    EXPECT_EQ(sleeps, (std::vector<long long>{100, 200}));
    EXPECT_EQ(guard.retries(), 2u);
}

TEST(CallGuard, GivesUpAfterConfiguredAttempts) {
    CallGuard guard(1, {2, std::chrono::milliseconds(1), 2.0}, [](auto) {});
    int attempts = 0;
    try {
        guard.run([&] {
            ++attempts;
            raise(ErrorCode::kProviderUnavailable, "down");
        });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
    }
    EXPECT_EQ(attempts, 2);
}

TEST(CallGuard, NonTransientFailuresAreNotRetried) {
    CallGuard guard(1, {5, std::chrono::milliseconds(1), 2.0}, [](auto) {});
    int attempts = 0;
    EXPECT_THROW(guard.run([&] {
        ++attempts;
        raise(ErrorCode::kProviderRefusal, "no");
    }),
                 Error);
    EXPECT_EQ(attempts, 1);
}

TEST(CallGuard, CapsCallsInFlight) {
    CallGuard guard(2, {}, [](auto) {});
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] { guard.run([] { std::this_thread::sleep_for(std::chrono::milliseconds(20)); }); });
    }
    for (auto& t : threads) t.join();
    EXPECT_LE(guard.semaphore().peak(), 2);
    EXPECT_EQ(guard.semaphore().in_use(), 0);
}

TEST(GuardProviders, CountsCallsAndRetriesChat) {
    ProviderSet raw;
    auto flaky = std::make_shared<FlakyChat>(1, ErrorCode::kProviderUnavailable);
    raw.chat = flaky;
    raw.embedder = std::make_shared<HashingEmbedder>(32, 16);
    const auto set = guard_providers(raw, 2, {3, std::chrono::milliseconds(1), 2.0}, [](auto) {});
    EXPECT_EQ(set.chat->chat_complete(conversation(), {}).text, "fine");
    EXPECT_EQ(flaky->calls, 2);
    set.embedder->embed_text("x", EmbeddingFamily::kCtxText);
    EXPECT_EQ(set.counters->chat, 2u);
    EXPECT_EQ(set.counters->embed, 1u);
    EXPECT_EQ(set.counters->total(), 3u);
    EXPECT_EQ(set.embedder->dim(EmbeddingFamily::kJointText), 16);
}

TEST(GuardProviders, NoRetryOnceTokensWereStreamed) {
    ProviderSet raw;
    auto flaky = std::make_shared<FlakyChat>(1, ErrorCode::kProviderUnavailable, true);
    raw.chat = flaky;
    const auto set = guard_providers(raw, 1, {3, std::chrono::milliseconds(1), 2.0}, [](auto) {});
    std::string streamed;
    EXPECT_THROW(set.chat->chat_complete(conversation(), {}, [&](std::string_view d) { streamed += d; }), Error);
    EXPECT_EQ(flaky->calls, 1);
    EXPECT_EQ(streamed, "partial ");
}

TEST(Modality, CheckRejectsMismatch) {
    EXPECT_NO_THROW(check_modality(EmbeddingFamily::kJointImage, true));
    EXPECT_NO_THROW(check_modality(EmbeddingFamily::kQueryText, false));
    EXPECT_THROW(check_modality(EmbeddingFamily::kJointText, true), Error);
}
