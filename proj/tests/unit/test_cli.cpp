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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "mudoc/config.hpp"
#include "mudoc/retrieval.hpp"

using namespace mudoc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun mudoc_cli(std::vector<std::string> args) {
    args.insert(args.begin(), {"mudoc", "--no-config-echo", "--log-level", "error"});
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, '\t');) out.push_back(cell);
    return out;
}

// One synthetic book ingested once for the whole suite.
class CliSuite : public ::testing::Test {
 protected:
    static void SetUpTestSuite() {
        dir_ = new fixtures::TempDir();
        const auto synth = mudoc_cli({"synth", "--out", (*dir_ / "book.pdf").string(), "--pages", "3", "--figures", "2"});
        ASSERT_EQ(synth.code, 0) << synth.err;
        ingest_ = mudoc_cli({"ingest", (*dir_ / "book.pdf").string(), "--out", (*dir_ / "book").string(), "--json"});
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }

    static fs::path index_dir() { return *dir_ / "book"; }
    static fs::path pdf() { return *dir_ / "book.pdf"; }

    static fixtures::TempDir* dir_;
    static CliRun ingest_;
};

fixtures::TempDir* CliSuite::dir_ = nullptr;
CliRun CliSuite::ingest_;

}  // namespace

TEST_F(CliSuite, IngestReportsCounts) {
    ASSERT_EQ(ingest_.code, 0) << ingest_.err;
    const auto report = json::parse(ingest_.out);
    EXPECT_EQ(report.at("doc_id"), "book");
    EXPECT_EQ(report.at("pages"), 3);
    EXPECT_EQ(report.at("figures"), 2);
    EXPECT_EQ(report.at("snippets_by_class").at("figure"), 2);
    EXPECT_GT(report.at("chunks").get<int>(), 0);
    EXPECT_GT(report.at("provider_calls").get<int>(), 0);
    EXPECT_DOUBLE_EQ(report.at("chunk_coverage").get<double>(), 1.0);
}

TEST_F(CliSuite, SecondIngestExecutesNothing) {
    const auto again = mudoc_cli({"ingest", pdf().string(), "--out", index_dir().string()});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_NE(again.out.find("0 stages executed"), std::string::npos) << again.out;
    const auto as_json = mudoc_cli({"ingest", pdf().string(), "--out", index_dir().string(), "--json"});
    EXPECT_EQ(json::parse(as_json.out).at("provider_calls"), 0);
}

TEST_F(CliSuite, VerifyPassesOnFreshIndex) {
    const auto r = mudoc_cli({"verify", index_dir().string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("ok: ", 0), 0u) << r.out;
}

TEST_F(CliSuite, VerifyFailsWithThreeOnCorruption) {
    fixtures::TempDir copy;
    fs::copy(index_dir(), copy / "book", fs::copy_options::recursive);
    {
        std::ofstream f(copy / "book" / "figures.jsonl", std::ios::app);
        f << " ";
    }
    const auto r = mudoc_cli({"verify", (copy / "book").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("figures.jsonl\tfile hash"), std::string::npos) << r.out;
    const auto j = mudoc_cli({"verify", (copy / "book").string(), "--json"});
    EXPECT_EQ(j.code, 3);
    EXPECT_FALSE(json::parse(j.out).at("ok").get<bool>());
}

TEST_F(CliSuite, QueryMatchesRetrieverOracle) {
    const auto r = mudoc_cli({"query", index_dir().string(), "neural network training", "-k", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    auto index = std::make_shared<const DocumentIndex>(load_index(index_dir()));
    const Retriever oracle(index, make_providers(Config{}.providers).embedder);
    const auto hits = oracle.retrieve_text("neural network training", 3);
    ASSERT_EQ(rows.size(), hits.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto cells = split_tabs(rows[i]);
        ASSERT_GE(cells.size(), 5u);
        EXPECT_EQ(cells[0], std::to_string(i + 1));
        EXPECT_EQ(cells[1], hits[i].chunk_id);
        EXPECT_NEAR(std::stod(cells[2]), hits[i].score, 1e-6);
    }

    const auto images = mudoc_cli({"query", index_dir().string(), "figure", "--images", "--json"});
    ASSERT_EQ(images.code, 0);
    const auto j = json::parse(images.out);
    ASSERT_EQ(j.size(), 2u);
    for (const auto& row : j) {
        EXPECT_NEAR(row.at("score").get<double>(),
                    (row.at("dpr_max").get<double>() + row.at("clip_max").get<double>()) / 2, 1e-12);
    }
}

TEST_F(CliSuite, ProviderOutageExitsTwo) {
    fixtures::TempDir out;
    const auto r = mudoc_cli({"--set", "providers.chat.url=http://127.0.0.1:1", "--set", "providers.retry_attempts=1",
                              "ingest", pdf().string(), "--out", (out / "idx").string()});
    EXPECT_EQ(r.code, 2) << r.err;
    EXPECT_NE(r.err.find("ProviderUnavailable"), std::string::npos) << r.err;
}

TEST(Cli, InputErrorsExitOne) {
    fixtures::TempDir dir;
    std::ofstream(dir / "empty.pdf").close();
    EXPECT_EQ(mudoc_cli({"ingest", (dir / "empty.pdf").string(), "--out", (dir / "idx").string()}).code, 1);
    EXPECT_EQ(mudoc_cli({"ingest", (dir / "missing.pdf").string(), "--out", (dir / "idx").string()}).code, 1);
    EXPECT_EQ(mudoc_cli({"query", (dir / "nowhere").string(), "x"}).code, 1);
    EXPECT_EQ(mudoc_cli({"serve", "--index", (dir / "nowhere").string(), "--port", "0"}).code, 1);
    EXPECT_EQ(mudoc_cli({"--set", "ingestion.chunk_size=oops", "query", dir.path().string(), "x"}).code, 1);
    EXPECT_EQ(mudoc_cli({"bogus"}).code, 1);
    EXPECT_EQ(mudoc_cli({"--help"}).code, 0);
}

TEST(Cli, CorruptIndexQueryExitsThree) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index({}), dir / "idx");
    const auto file = dir / "idx" / "emb" / "chunk.raw.ctx_text.f32";
    fs::resize_file(file, fs::file_size(file) - 4);
    EXPECT_EQ(mudoc_cli({"query", (dir / "idx").string(), "anything"}).code, 3);
}

TEST(Cli, SynthWritesTruth) {
    fixtures::TempDir dir;
    const auto r = mudoc_cli({"synth", "--out", (dir / "s.pdf").string(), "--truth", (dir / "t.json").string(),
                              "--pages", "2", "--figures", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "s.pdf"));
    std::ifstream in(dir / "t.json");
    const auto truth = json::parse(in);
    EXPECT_FALSE(truth.empty());
}
