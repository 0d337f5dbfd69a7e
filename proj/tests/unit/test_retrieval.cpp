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
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mudoc/error.hpp"
#include "mudoc/reference.hpp"
#include "mudoc/retrieval.hpp"

using namespace mudoc;

namespace {

long double ref_cosine(std::span<const float> a, std::span<const float> b) {
    long double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<long double>(a[i]) * b[i];
        aa += static_cast<long double>(a[i]) * a[i];
        bb += static_cast<long double>(b[i]) * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

struct OracleHit {
    std::string id;
    long double score;
};

// Brute-force ranking written independently of the library: max over named matrices, full sort.
std::vector<OracleHit> oracle_rank(const DocumentIndex& index, const std::vector<std::string_view>& names,
                                   std::span<const float> q) {
    std::map<std::string, long double> best;
    for (auto name : names) {
        const auto& m = index.matrix(name);
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto s = ref_cosine(q, m.row(r));
            auto [it, fresh] = best.emplace(m.ids()[r], s);
            if (!fresh) it->second = std::max(it->second, s);
        }
    }
    std::vector<OracleHit> out;
    for (const auto& [id, s] : best) out.push_back({id, s});
    std::stable_sort(out.begin(), out.end(), [](const OracleHit& a, const OracleHit& b) { return a.score > b.score; });
    return out;
}

std::vector<float> with_cosine(double c, int dim, int axis) {
    // Unit vector whose cosine against e0 is exactly c.
    std::vector<float> v(static_cast<std::size_t>(dim), 0.0f);
    v[0] = static_cast<float>(c);
    v[static_cast<std::size_t>(axis)] = static_cast<float>(std::sqrt(1.0 - c * c));
    return v;
}

std::vector<float> e0(int dim) {
    std::vector<float> v(static_cast<std::size_t>(dim), 0.0f);
    v[0] = 1.0f;
    return v;
}

DocumentIndex one_figure_index(double cap_ctx, double desc_ctx, double image, double cap_joint, double desc_joint) {
    DocumentIndex index;
    index.figures.push_back({"f1", "d", "s1", "caption", "description", false});
    constexpr int kDim = 8;
    auto put = [&](std::string_view name, EmbeddingFamily fam, double c, int axis) {
        EmbeddingMatrix m(fam, kDim);
        m.append("f1", with_cosine(c, kDim, axis));
        index.matrices.insert_or_assign(std::string(name), std::move(m));
    };
    put(matrix::kFigureCaptionCtx, EmbeddingFamily::kCtxText, cap_ctx, 1);
    put(matrix::kFigureDescriptionCtx, EmbeddingFamily::kCtxText, desc_ctx, 2);
    put(matrix::kFigureImage, EmbeddingFamily::kJointImage, image, 3);
    put(matrix::kFigureCaptionJoint, EmbeddingFamily::kJointText, cap_joint, 4);
    put(matrix::kFigureDescriptionJoint, EmbeddingFamily::kJointText, desc_joint, 5);
    index.reindex();
    return index;
}

}  // namespace

TEST(RankChunks, MatchesBruteForceOracle) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        fixtures::RandomIndexOptions o;
        o.seed = seed;
        o.pages = 4;
        const auto index = fixtures::random_index(o);
        std::mt19937_64 rng(seed * 77);
        const auto q = fixtures::random_unit_vector(rng, o.text_dim);
        const auto expected = oracle_rank(index, {matrix::kChunkRaw, matrix::kChunkCleaned, matrix::kChunkSummary}, q);
        for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{5}, std::size_t{1000}}) {
            const auto got = rank_chunks(index, q, k);
            ASSERT_EQ(got.size(), std::min(k, expected.size()));
            for (std::size_t i = 0; i < got.size(); ++i) {
                EXPECT_EQ(got[i].chunk_id, expected[i].id) << "seed " << seed << " rank " << i;
                EXPECT_NEAR(got[i].score, static_cast<double>(expected[i].score), 1e-9);
            }
        }
    }
}

TEST(RankChunks, TiesBreakByAscendingId) {
    DocumentIndex index;
    for (auto id : {"c3", "c1", "c2"}) index.chunks.push_back({id, "d", {"s"}, "t", "t", std::nullopt, 0, false});
    EmbeddingMatrix raw(EmbeddingFamily::kCtxText, 4);
    for (auto id : {"c3", "c1", "c2"}) raw.append(id, std::vector<float>{0.5f, 0.5f, 0.5f, 0.5f});
    index.matrices.emplace(std::string(matrix::kChunkRaw), std::move(raw));
    index.reindex();
    const auto got = rank_chunks(index, std::vector<float>{1, 0, 0, 0}, 5);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].chunk_id, "c1");
    EXPECT_EQ(got[1].chunk_id, "c2");
    EXPECT_EQ(got[2].chunk_id, "c3");
}

TEST(RankChunks, BestVariantIsReported) {
    DocumentIndex index;
    index.chunks.push_back({"c1", "d", {"s"}, "t", "t", std::string("s"), 0, false});
    auto add = [&](std::string_view name, double c, int axis) {
        EmbeddingMatrix m(EmbeddingFamily::kCtxText, 8);
        m.append("c1", with_cosine(c, 8, axis));
        index.matrices.emplace(std::string(name), std::move(m));
    };
    add(matrix::kChunkRaw, 0.2, 1);
    add(matrix::kChunkCleaned, 0.3, 2);
    add(matrix::kChunkSummary, 0.9, 3);
    index.reindex();
    const auto got = rank_chunks(index, e0(8), 5);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].best_variant, TextVariant::kSummary);
    EXPECT_NEAR(got[0].score, 0.9, 1e-6);
}

TEST(RankFigures, WorkedExampleScoresFiftyFivePercent) {
    const auto index = one_figure_index(0.4, 0.6, 0.5, 0.3, 0.1);
    const auto got = rank_figures(index, e0(8), e0(8), 5);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_NEAR(got[0].dpr_max, 0.6, 1e-6);
    EXPECT_NEAR(got[0].clip_max, 0.5, 1e-6);
    EXPECT_NEAR(got[0].score, 0.55, 1e-6);
}

TEST(RankFigures, IdenticalVectorsScoreOne) {
    const auto index = one_figure_index(1.0, 1.0, 1.0, 1.0, 1.0);
    const auto got = rank_figures(index, e0(8), e0(8), 5);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_NEAR(got[0].score, 1.0, 1e-9);
}

TEST(RankFigures, MatchesBruteForceOracle) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        fixtures::RandomIndexOptions o;
        o.seed = seed;
        o.figures = 6;
        const auto index = fixtures::random_index(o);
        std::mt19937_64 rng(seed * 31);
        const auto qd = fixtures::random_unit_vector(rng, o.text_dim);
        const auto qc = fixtures::random_unit_vector(rng, o.joint_dim);
        const auto dpr = oracle_rank(index, {matrix::kFigureCaptionCtx, matrix::kFigureDescriptionCtx}, qd);
        const auto clip =
            oracle_rank(index, {matrix::kFigureImage, matrix::kFigureCaptionJoint, matrix::kFigureDescriptionJoint}, qc);
        std::map<std::string, long double> d, c;
        for (const auto& h : dpr) d[h.id] = h.score;
        for (const auto& h : clip) c[h.id] = h.score;
        std::vector<OracleHit> expected;
        for (const auto& [id, s] : d) expected.push_back({id, (s + c.at(id)) / 2});
        std::stable_sort(expected.begin(), expected.end(),
                         [](const OracleHit& a, const OracleHit& b) { return a.score > b.score; });
        const auto got = rank_figures(index, qd, qc, 100);
        ASSERT_EQ(got.size(), expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].figure_id, expected[i].id);
            EXPECT_NEAR(got[i].score, static_cast<double>(expected[i].score), 1e-9);
        }
    }
}

TEST(RankFigures, FigureMissingOneSideIsSkipped) {
    auto index = one_figure_index(0.4, 0.6, 0.5, 0.3, 0.1);
    index.figures.push_back({"f2", "d", "s2", "c", "d", false});
    EmbeddingMatrix image(EmbeddingFamily::kJointImage, 8);
    image.append("f1", with_cosine(0.5, 8, 3));
    image.append("f2", with_cosine(0.9, 8, 3));
    index.matrices.insert_or_assign(std::string(matrix::kFigureImage), std::move(image));
    index.reindex();
    std::vector<std::string> skipped;
    const auto got = rank_figures(index, e0(8), e0(8), 5, &skipped);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].figure_id, "f1");
    EXPECT_EQ(skipped, std::vector<std::string>{"f2"});
}

TEST(RankChunks, QueryDimMismatchRaises) {
    const auto index = fixtures::random_index({});
    try {
        rank_chunks(index, std::vector<float>(7, 1.0f), 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
    }
}

TEST(Retriever, DefaultsToFiveAndSingleChunkIndex) {
    auto embedder = std::make_shared<HashingEmbedder>(64, 32);
    fixtures::RandomIndexOptions o;
    o.embedder = embedder;
    o.pages = 6;
    o.min_snippets_per_page = 4;
    auto big = std::make_shared<DocumentIndex>(fixtures::random_index(o));
    ASSERT_GT(big->chunks.size(), 5u);
    Retriever r(big, embedder);
    EXPECT_EQ(r.retrieve_text("transformer attention").size(), 5u);

    o.pages = 1;
    o.min_snippets_per_page = o.max_snippets_per_page = 1;
    o.min_snippet_chars = o.max_snippet_chars = 300;
    auto one = std::make_shared<DocumentIndex>(fixtures::random_index(o));
    ASSERT_EQ(one->chunks.size(), 1u);
    EXPECT_EQ(Retriever(one, embedder).retrieve_text("anything", 5).size(), 1u);
}

TEST(Retriever, EmptyQueryRaisesAndEmptyIndexReturnsNothing) {
    auto embedder = std::make_shared<HashingEmbedder>(64, 32);
    auto index = std::make_shared<DocumentIndex>(fixtures::random_index({}));
    Retriever r(index, embedder);
    for (auto q : {"", "   "}) {
        try {
            r.retrieve_text(q);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
        }
        EXPECT_THROW(r.retrieve_images(q), Error);
    }
    auto empty = std::make_shared<DocumentIndex>();
    EXPECT_TRUE(Retriever(empty, embedder).retrieve_text("x").empty());
    EXPECT_TRUE(Retriever(empty, embedder).retrieve_images("x").empty());
}

TEST(Retriever, QueryMatchingChunkTextRanksItFirst) {
    auto embedder = std::make_shared<HashingEmbedder>(256, 64);
    fixtures::RandomIndexOptions o;
    o.embedder = embedder;
    o.text_dim = 256;
    o.joint_dim = 64;
    o.pages = 5;
    auto index = std::make_shared<DocumentIndex>(fixtures::random_index(o));
    Retriever r(index, embedder);
    const auto& target = index->chunks.back();
    const auto hits = r.retrieve_text(target.raw_text, 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].chunk_id, target.chunk_id);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-5);
}
