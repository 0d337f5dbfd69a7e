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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mudoc/error.hpp"
#include "mudoc/index.hpp"
#include "mudoc/util.hpp"

using namespace mudoc;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::kInvalidArgument;
}

EmbeddingMatrix sample_matrix(int rows, int dim, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    EmbeddingMatrix m(EmbeddingFamily::kCtxText, dim);
    for (int r = 0; r < rows; ++r) m.append("id-" + std::to_string(r), fixtures::random_unit_vector(rng, dim));
    return m;
}

bool has_violation(const VerifyReport& report, std::string_view rule, std::string_view location = {}) {
    for (const auto& v : report.violations) {
        if (v.rule == rule && (location.empty() || v.location == location)) return true;
    }
    return false;
}

fixtures::RandomIndexOptions small(std::uint64_t seed) {
    fixtures::RandomIndexOptions o;
    o.seed = seed;
    o.max_snippet_chars = 2500;
    return o;
}

}  // namespace

TEST(EmbeddingMatrix, SerializeReadRoundTripWithAndWithoutMmap) {
    fixtures::TempDir dir;
    const auto m = sample_matrix(17, 24);
    write_file_atomic(dir / "m.f32", m.serialize());
    const auto copied = EmbeddingMatrix::read(dir / "m.f32", EmbeddingFamily::kCtxText, false);
    const auto mapped = EmbeddingMatrix::read(dir / "m.f32", EmbeddingFamily::kCtxText, true);
    EXPECT_EQ(copied, m);
    EXPECT_EQ(mapped, m);
    EXPECT_FALSE(copied.memory_mapped());
    EXPECT_EQ(mapped.find("id-5"), 5u);
    EXPECT_FALSE(mapped.find("id-99").has_value());
}

TEST(EmbeddingMatrix, AppendEnforcesDimAndUniqueIds) {
    EmbeddingMatrix m(EmbeddingFamily::kJointText, 512);
    const std::vector<float> small(64, 0.1f);
    EXPECT_EQ(code_of([&] { m.append("a", small); }), ErrorCode::kDimMismatch);
    const std::vector<float> ok(512, 0.1f);
    m.append("a", ok);
    EXPECT_EQ(code_of([&] { m.append("a", ok); }), ErrorCode::kInvalidArgument);
}

TEST(EmbeddingMatrix, TruncatedOrPaddedFileIsCorrupt) {
    fixtures::TempDir dir;
    auto bytes = sample_matrix(4, 8).serialize();
    Bytes truncated(bytes.begin(), bytes.end() - 3);
    write_file_atomic(dir / "t.f32", truncated);
    EXPECT_EQ(code_of([&] { EmbeddingMatrix::read(dir / "t.f32", EmbeddingFamily::kCtxText, true); }), ErrorCode::kCorruptIndex);
    bytes.push_back(0);
    write_file_atomic(dir / "p.f32", bytes);
    EXPECT_EQ(code_of([&] { EmbeddingMatrix::read(dir / "p.f32", EmbeddingFamily::kCtxText, false); }), ErrorCode::kCorruptIndex);
    write_file_atomic(dir / "x.f32", std::string_view("JUNKJUNKJUNKJUNK"));
    EXPECT_EQ(code_of([&] { EmbeddingMatrix::read(dir / "x.f32", EmbeddingFamily::kCtxText, false); }), ErrorCode::kCorruptIndex);
}

TEST(EmbeddingMatrix, NewerFormatVersionIsRejected) {
    fixtures::TempDir dir;
    auto bytes = sample_matrix(2, 8).serialize();
    bytes[4] = 99;  // little-endian version field follows the magic
    write_file_atomic(dir / "v.f32", bytes);
    EXPECT_EQ(code_of([&] { EmbeddingMatrix::read(dir / "v.f32", EmbeddingFamily::kCtxText, false); }), ErrorCode::kVersionMismatch);
}

TEST(IndexStore, SaveLoadIsStructurallyEqualAndVerifies) {
    for (std::uint64_t seed : {1, 2, 3}) {
        fixtures::TempDir dir;
        const auto index = fixtures::random_index(small(seed));
        save_index(index, dir / "idx");
        for (bool mmap : {true, false}) {
            const auto loaded = load_index(dir / "idx", {mmap, true});
            EXPECT_TRUE(structurally_equal(index, loaded)) << "seed " << seed;
        }
        const auto report = verify_index(dir / "idx");
        EXPECT_TRUE(report.ok()) << report.violations.front().location << " " << report.violations.front().rule;
        EXPECT_GT(report.checks, 50u);
    }
}

TEST(IndexStore, ManifestHashChangesIffContentChanges) {
    fixtures::TempDir dir;
    auto index = fixtures::random_index(small(5));
    const auto h1 = save_index(index, dir / "a");
    const auto h2 = save_index(index, dir / "b");
    EXPECT_EQ(h1, h2);
    EXPECT_EQ(manifest_hash(dir / "a"), h1);

    // Flip one float of one vector.
    auto& m = index.matrices.at(std::string(matrix::kChunkRaw));
    EmbeddingMatrix changed(m.family(), m.dim());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<float> row(m.row(r).begin(), m.row(r).end());
        if (r == 0) row[0] = -row[0] + 0.5f;
        changed.append(m.ids()[r], row);
    }
    m = std::move(changed);
    EXPECT_NE(save_index(index, dir / "c"), h1);

    auto index2 = fixtures::random_index(small(5));
    index2.chunks[0].cleaned_text += " edited";
    EXPECT_NE(save_index(index2, dir / "d"), h1);
}

TEST(IndexStore, ResaveReplacesDirectoryAtomically) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index(small(6)), dir / "idx");
    const auto second = fixtures::random_index(small(7));
    save_index(second, dir / "idx");
    EXPECT_TRUE(structurally_equal(load_index(dir / "idx"), second));
    for (const auto& e : fs::directory_iterator(dir.path())) EXPECT_EQ(e.path().filename(), "idx");
}

TEST(IndexStore, EmptyFigureIndexLoadsWithZeroRowImageMatrices) {
    fixtures::TempDir dir;
    auto o = small(8);
    o.figures = 0;
    save_index(fixtures::random_index(o), dir / "idx");
    const auto loaded = load_index(dir / "idx");
    EXPECT_TRUE(loaded.figures.empty());
    EXPECT_EQ(loaded.matrix(matrix::kFigureImage).rows(), 0u);
    EXPECT_EQ(loaded.matrix(matrix::kFigureCaptionJoint).rows(), 0u);
    EXPECT_TRUE(verify_index(dir / "idx").ok());
}

TEST(IndexStore, TruncatedEmbeddingFileFailsLoad) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index(small(9)), dir / "idx");
    const auto file = dir / "idx" / "emb" / "chunk.raw.ctx_text.f32";
    fs::resize_file(file, fs::file_size(file) - 5);
    EXPECT_EQ(code_of([&] { load_index(dir / "idx"); }), ErrorCode::kCorruptIndex);
}

TEST(IndexStore, TamperedRecordTableFailsLoad) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index(small(10)), dir / "idx");
    std::ofstream(dir / "idx" / "chunks.jsonl", std::ios::app) << "\n";
    EXPECT_EQ(code_of([&] { load_index(dir / "idx"); }), ErrorCode::kCorruptIndex);
}

TEST(IndexStore, MissingDirectoryFailsLoad) {
    fixtures::TempDir dir;
    EXPECT_THROW(load_index(dir / "nope"), Error);
}

TEST(Verify, CorruptedVectorFileIsNamed) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index(small(11)), dir / "idx");
    const auto file = dir / "idx" / "emb" / "snippet.raw.ctx_text.f32";
    auto bytes = read_file(file);
    bytes[bytes.size() - 2] ^= 0x5a;
    write_file_atomic(file, bytes);
    const auto report = verify_index(dir / "idx");
    EXPECT_FALSE(report.ok());
    EXPECT_TRUE(has_violation(report, "file hash", "emb/snippet.raw.ctx_text.f32"));
}

TEST(Verify, OversizeChunkIsReported) {
    fixtures::TempDir dir;
    auto index = fixtures::random_index(small(12));
    std::mt19937_64 rng(1);
    index.chunks[0].raw_text = fixtures::random_text(rng, 2001);
    save_index(index, dir / "idx");
    const auto report = verify_index(dir / "idx");
    EXPECT_TRUE(has_violation(report, "chunk size", index.chunks[0].chunk_id));
}

TEST(Verify, UnlistedAndMissingFiles) {
    fixtures::TempDir dir;
    save_index(fixtures::random_index(small(13)), dir / "idx");
    write_file_atomic(dir / "idx" / "stray.txt", std::string_view("x"));
    fs::remove(dir / "idx" / "figures.jsonl");
    const auto report = verify_index(dir / "idx");
    EXPECT_TRUE(has_violation(report, "unlisted file", "stray.txt"));
    EXPECT_TRUE(has_violation(report, "missing file", "figures.jsonl"));
}

TEST(Verify, MissingManifest) {
    fixtures::TempDir dir;
    fs::create_directories(dir / "idx");
    const auto report = verify_index(dir / "idx");
    EXPECT_TRUE(has_violation(report, "manifest"));
}

TEST(Anchors, FigureChunkSnippetAndUnknown) {
    auto index = fixtures::random_index(small(14));
    ASSERT_FALSE(index.figures.empty());
    const auto& fig = index.figures.front();
    const auto a = index.anchor_for(fig.figure_id);
    EXPECT_EQ(a.kind, AnchorKind::kFigure);
    EXPECT_EQ(a.snippet_id, fig.snippet_id);
    EXPECT_EQ(a.bbox, index.find_snippet(fig.snippet_id)->bbox);
    EXPECT_EQ(to_string(a.kind), "figure");

    // A chunk that spans pages anchors at its first snippet's page.
    for (const auto& c : index.chunks) {
        const auto* first = index.find_snippet(c.snippet_ids.front());
        const auto* last = index.find_snippet(c.snippet_ids.back());
        const auto anchor = index.anchor_for(c.chunk_id);
        EXPECT_EQ(anchor.page_index, first->page_index);
        EXPECT_EQ(anchor.snippet_id, first->snippet_id);
        EXPECT_EQ(anchor.kind, AnchorKind::kTextSnippet);
        EXPECT_LE(first->page_index, last->page_index);
    }
    EXPECT_EQ(code_of([&] { index.anchor_for("nope"); }), ErrorCode::kUnknownId);
}

TEST(Anchors, ChunkAcrossPagesFixture) {
    // Two short snippets on pages 4 and 5 fall into a single chunk.
    DocumentIndex index;
    index.manifest.doc_id = "d";
    for (int p = 0; p < 6; ++p) index.manifest.page_sizes.push_back({612, 792});
    for (int p : {4, 5}) {
        Snippet s;
        s.doc_id = "d";
        s.snippet_id = "d-p" + std::to_string(p) + "-r0";
        s.page_index = p;
        s.bbox = {10, 10 + p, 100, 50};
        s.raw_text = "text on page " + std::to_string(p);
        index.snippets.push_back(s);
    }
    TextChunk c;
    c.chunk_id = "d-c1";
    c.doc_id = "d";
    c.snippet_ids = {"d-p4-r0", "d-p5-r0"};
    index.chunks.push_back(c);
    index.reindex();
    const auto a = index.anchor_for("d-c1");
    EXPECT_EQ(a.page_index, 4);
    EXPECT_EQ(a.bbox, index.snippets[0].bbox);
}

TEST(Matrices, NamesAndFamilies) {
    EXPECT_EQ(matrix::family_of(matrix::kFigureImage), EmbeddingFamily::kJointImage);
    EXPECT_EQ(matrix::family_of(matrix::kFigureCaptionJoint), EmbeddingFamily::kJointText);
    EXPECT_EQ(matrix::family_of(matrix::kChunkSummary), EmbeddingFamily::kCtxText);
    EXPECT_EQ(std::size(matrix::kAll), 9u);
}
