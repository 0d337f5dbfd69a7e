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
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "mudoc/config.hpp"
#include "mudoc/error.hpp"
#include "mudoc/prompts.hpp"
#include "mudoc/util.hpp"

using namespace mudoc;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::kIoError;
}

}  // namespace

TEST(Config, DefaultsCarryThePublishedConstants) {
    const Config c;
    EXPECT_EQ(c.ingestion.chunk_size, 2000);
    EXPECT_EQ(c.ingestion.chunk_overlap, 500);
    EXPECT_EQ(c.ingestion.summary_threshold, 1000);
    EXPECT_EQ(c.retrieval.k, 5);
    EXPECT_EQ(c.orchestrator.context_chars, 65536u);
    EXPECT_EQ(c.orchestrator.map_min_chars, 100);
    EXPECT_DOUBLE_EQ(c.orchestrator.map_threshold, 0.60);
    EXPECT_EQ(c.orchestrator.max_tool_calls, 6);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, MergeOverlaysAndRejectsUnknownKeys) {
    Config c;
    c.merge_json(R"({"retrieval":{"k":8},"server":{"port":9000},"providers":{"chat":{"model":"m"}}})");
    EXPECT_EQ(c.retrieval.k, 8);
    EXPECT_EQ(c.server.port, 9000);
    EXPECT_EQ(c.providers.chat.model, "m");
    EXPECT_EQ(c.ingestion.chunk_size, 2000);
    EXPECT_EQ(code_of([&] { c.merge_json(R"({"retrieval":{"kk":1}})"); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([&] { c.merge_json(R"({"nonsense":{}})"); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([&] { c.merge_json(R"({"retrieval":{"k":"five"}})"); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([&] { c.merge_json("not json"); }), ErrorCode::kInvalidArgument);
}

TEST(Config, DottedSetParsesValues) {
    Config c;
    c.set("ingestion.dpi", "150");
    c.set("providers.chat.url", "http://localhost:1/v1");
    c.set("index.mmap", "false");
    EXPECT_DOUBLE_EQ(c.ingestion.dpi, 150.0);
    EXPECT_EQ(c.providers.chat.url, "http://localhost:1/v1");
    EXPECT_FALSE(c.index.mmap);
    EXPECT_EQ(code_of([&] { c.set("ingestion.nope", "1"); }), ErrorCode::kInvalidArgument);
}

TEST(Config, ValidateRejectsOutOfRange) {
    Config c;
    c.ingestion.chunk_overlap = 2000;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
    c = Config{};
    c.retrieval.k = 0;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Config, EnvironmentOverridesProviders) {
    Config c;
    c.apply_environment([](const char* name) -> std::optional<std::string> {
        const std::string n = name;
        if (n == "MUDOC_CHAT_URL") return "http://chat:1/v1";
        if (n == "OPENAI_API_KEY") return "sk-test";
        if (n == "MUDOC_PROVIDER_TIMEOUT") return "5";
        return std::nullopt;
    });
    EXPECT_EQ(c.providers.chat.url, "http://chat:1/v1");
    EXPECT_EQ(c.providers.chat.api_key, "sk-test");
    EXPECT_EQ(c.providers.timeout, std::chrono::milliseconds(5000));
}

TEST(Config, JsonRoundTripMasksSecrets) {
    Config c;
    c.providers.chat.api_key = "sk-secret";
    c.retrieval.k = 7;
    const auto masked = json::parse(c.to_json());
    EXPECT_EQ(masked["providers"]["chat"]["api_key"], "***");
    Config d;
    d.merge_json(c.to_json(true));
    EXPECT_EQ(d.retrieval.k, 7);
    EXPECT_EQ(d.providers.chat.api_key, "sk-secret");
    EXPECT_EQ(json::parse(d.to_json(true)), json::parse(c.to_json(true)));
}

TEST(Config, LoadFromFile) {
    fixtures::TempDir dir;
    write_file_atomic(dir / "c.json", std::string_view(R"({"ingestion":{"workers":2}})"));
    EXPECT_EQ(load_config(dir / "c.json").ingestion.workers, 2);
    EXPECT_EQ(code_of([&] { load_config(dir / "missing.json"); }), ErrorCode::kIoError);
}

TEST(Config, ReferenceProvidersWhenNoUrls) {
    const auto set = make_providers(Config{}.providers);
    ASSERT_TRUE(set.layout && set.ocr && set.chat && set.embedder);
    EXPECT_EQ(set.chat->id(), "reference-chat-v1");
    EXPECT_EQ(set.embedder->dim(EmbeddingFamily::kCtxText), 768);
    EXPECT_EQ(set.embedder->dim(EmbeddingFamily::kJointImage), 512);
}

TEST(Prompts, RenderSubstitutesAndLeavesJsonBracesAlone) {
    EXPECT_EQ(prompts::render("a {x} b {\"k\": 1} {y}", {{"x", "1"}, {"y", "2"}}), "a 1 b {\"k\": 1} 2");
    EXPECT_THROW(prompts::render("{missing}", {}), Error);
}

TEST(Prompts, SelectionTemplates) {
    EXPECT_EQ(prompts::render(trim(prompts::get("summarize_selection").text), {{"selection", "abc"}}),
              "Summarize the following passage: \"abc\"");
    EXPECT_EQ(prompts::render(trim(prompts::get("eli10_selection").text), {{"selection", "abc"}}),
              "Explain the following passage like I'm 10 years old: \"abc\"");
}

TEST(Prompts, EveryTemplateIsVersionedAndHashed) {
    EXPECT_GE(prompts::all().size(), 7u);
    for (const auto& p : prompts::all()) {
        EXPECT_GE(p.version, 1);
        EXPECT_EQ(p.hash(), sha256_hex(p.text));
    }
    EXPECT_THROW(prompts::get("no_such_prompt"), Error);
}
