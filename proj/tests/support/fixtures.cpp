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

#include "fixtures.hpp"

#include <unistd.h>

#include <sstream>

#include "mudoc/config.hpp"
#include "mudoc/embedding.hpp"
#include "mudoc/error.hpp"
#include "mudoc/ingestion.hpp"
#include "mudoc/raster.hpp"
#include "mudoc/synthetic.hpp"
#include "mudoc/util.hpp"

namespace mudoc::fixtures {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::string pattern = (fs::temp_directory_path() / "mudoc-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) raise(ErrorCode::kIoError, "mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string random_text(std::mt19937_64& rng, std::size_t chars) {
    static const char* const kWords[] = {"layout", "chunk", "figure", "retrieval", "vector", "cosine", "summary",
                                         "caption", "textbook", "page", "snippet", "index", "gradient", "model",
                                         "caf\xc3\xa9", "na\xc3\xafve", "entropy", "graph", "signal", "proof"};
    std::string out;
    std::size_t n = 0;
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kWords) - 1);
    while (n < chars) {
        if (n > 0) {
            out.push_back(' ');
            ++n;
            if (n == chars) break;
        }
        const std::string_view w = kWords[pick(rng)];
        const std::size_t len = utf8_length(w);
        if (n + len <= chars) {
            out += w;
            n += len;
        } else {
            out += utf8_truncate(w, chars - n);
            n = chars;
        }
    }
    // A trailing space would be trimmed away by consumers, so end on a letter.
    if (!out.empty() && out.back() == ' ') out.back() = 'x';
    return out;
}

std::vector<float> random_unit_vector(std::mt19937_64& rng, int dim) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = normal(rng);
    normalize(v);
    return v;
}

DocumentIndex random_index(const RandomIndexOptions& o) {
    std::mt19937_64 rng(o.seed);
    DocumentIndex index;
    auto& m = index.manifest;
    m.doc_id = "rnd" + std::to_string(o.seed);
    m.title = "Random textbook " + std::to_string(o.seed);
    m.source_sha256 = sha256_hex("source " + m.doc_id);
    m.config_hash = sha256_hex("config " + m.doc_id);
    m.ingestion = o.ingestion;
    m.created_at = "2026-01-01T00:00:00Z";
    m.providers = {{"layout", "test"}, {"ocr", "test"}, {"chat", "test"}, {"embed", "test"}};
    const int text_dim = o.embedder ? o.embedder->dim(EmbeddingFamily::kCtxText) : o.text_dim;
    const int joint_dim = o.embedder ? o.embedder->dim(EmbeddingFamily::kJointText) : o.joint_dim;
    m.dims = {{"ctx_text", text_dim}, {"query_text", text_dim}, {"joint_text", joint_dim}, {"joint_image", joint_dim}};
    for (int p = 0; p < o.pages; ++p) m.page_sizes.push_back({612.0, 792.0});

    // Figures go on random pages, after the text of that page.
    std::vector<int> figure_pages;
    for (int f = 0; f < o.figures; ++f) figure_pages.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(o.pages)));
    std::uniform_int_distribution<int> per_page(o.min_snippets_per_page, o.max_snippets_per_page);
    std::uniform_int_distribution<std::size_t> length(o.min_snippet_chars, o.max_snippet_chars);
    std::vector<std::pair<std::string, Bytes>> crops;
    int figure_seq = 0;
    for (int p = 0; p < o.pages; ++p) {
        const int count = per_page(rng);
        int rank = 0;
        double y = 40.0;
        auto next_box = [&](double height) {
            const BBox b{50.0, y, 560.0, std::min(780.0, y + height)};
            y = std::min(770.0, y + height + 2.0);
            return b;
        };
        for (int i = 0; i < count; ++i) {
            Snippet s;
            s.doc_id = m.doc_id;
            s.page_index = p;
            s.snippet_id = m.doc_id + "-p" + std::to_string(p) + "-r" + std::to_string(rank++);
            s.region_class = i == 0 && p == 0 ? RegionClass::kTitle : RegionClass::kText;
            s.bbox = next_box(20.0);
            s.confidence = 0.9;
            s.raw_text = random_text(rng, length(rng));
            index.snippets.push_back(std::move(s));
        }
        for (int f = 0; f < o.figures; ++f) {
            if (figure_pages[static_cast<std::size_t>(f)] != p) continue;
            Snippet s;
            s.doc_id = m.doc_id;
            s.page_index = p;
            s.snippet_id = m.doc_id + "-p" + std::to_string(p) + "-r" + std::to_string(rank++);
            s.region_class = RegionClass::kFigure;
            s.bbox = next_box(60.0);
            s.confidence = 0.95;
            FigureRecord fr;
            fr.doc_id = m.doc_id;
            fr.figure_id = m.doc_id + "-f" + std::to_string(++figure_seq) + ".png";
            fr.snippet_id = s.snippet_id;
            fr.caption = "Figure " + std::to_string(figure_seq) + ". " + random_text(rng, 40);
            fr.description = random_text(rng, 120);
            s.image_ref = "figures/" + fr.figure_id;
            Raster img(16 + static_cast<int>(rng() % 16), 16 + static_cast<int>(rng() % 16));
            for (int yy = 0; yy < img.height(); ++yy) {
                for (int xx = 0; xx < img.width(); ++xx) {
                    img.set(xx, yy, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
                }
            }
            crops.emplace_back(fr.figure_id, encode_png(img));
            index.snippets.push_back(std::move(s));
            index.figures.push_back(std::move(fr));
        }
    }

    index.chunks = ingest::build_chunks(index.snippets, o.ingestion);
    for (auto& c : index.chunks) {
        c.cleaned_text = c.raw_text;
        if (utf8_length(c.raw_text) > static_cast<std::size_t>(o.ingestion.summary_threshold)) {
            c.summary_text = utf8_truncate(c.raw_text, 200);
        }
    }

    for (auto name : matrix::kAll) {
        const auto family = matrix::family_of(name);
        index.matrices.emplace(std::string(name), EmbeddingMatrix(family, m.dims.at(std::string(to_string(family)))));
    }
    auto add = [&](std::string_view name, const std::string& id, const std::string& text, EmbeddingFamily family) {
        auto& matrix = index.matrices.at(std::string(name));
        if (o.embedder) {
            matrix.append(id, o.embedder->embed_text(text, family).values);
        } else {
            matrix.append(id, random_unit_vector(rng, matrix.dim()));
        }
    };
    for (const auto& s : index.snippets) {
        if (s.region_class != RegionClass::kFigure) add(matrix::kSnippetRaw, s.snippet_id, s.raw_text, EmbeddingFamily::kCtxText);
    }
    for (const auto& c : index.chunks) {
        add(matrix::kChunkRaw, c.chunk_id, c.raw_text, EmbeddingFamily::kCtxText);
        add(matrix::kChunkCleaned, c.chunk_id, c.cleaned_text, EmbeddingFamily::kCtxText);
        if (c.summary_text) add(matrix::kChunkSummary, c.chunk_id, *c.summary_text, EmbeddingFamily::kCtxText);
    }
    for (std::size_t i = 0; i < index.figures.size(); ++i) {
        const auto& f = index.figures[i];
        auto& image = index.matrices.at(std::string(matrix::kFigureImage));
        if (o.embedder) {
            image.append(f.figure_id, o.embedder->embed_image(decode_png(crops[i].second), EmbeddingFamily::kJointImage).values);
        } else {
            image.append(f.figure_id, random_unit_vector(rng, image.dim()));
        }
        add(matrix::kFigureCaptionJoint, f.figure_id, f.caption, EmbeddingFamily::kJointText);
        add(matrix::kFigureCaptionCtx, f.figure_id, f.caption, EmbeddingFamily::kCtxText);
        add(matrix::kFigureDescriptionJoint, f.figure_id, f.description, EmbeddingFamily::kJointText);
        add(matrix::kFigureDescriptionCtx, f.figure_id, f.description, EmbeddingFamily::kCtxText);
    }

    Bytes pdf(64 + rng() % 64);
    for (auto& b : pdf) b = static_cast<std::uint8_t>(rng());
    index.assets.emplace("source.pdf", Asset::from_bytes(std::move(pdf)));
    for (auto& [id, png] : crops) index.assets.emplace("figures/" + id, Asset::from_bytes(std::move(png)));
    index.reindex();
    return index;
}

DocumentIndex synthetic_index(const fs::path& dir, const std::string& doc_id) {
    const auto doc = synthetic::generate({});
    Config config;
    const auto providers = make_providers(config.providers);
    ingest::IngestOptions options;
    options.doc_id = doc_id;
    ingest::ingest_document(doc.pdf, dir, config.ingestion, providers, options);
    return load_index(dir);
}

std::vector<SseEvent> parse_sse(const std::string& body) {
    std::vector<SseEvent> events;
    SseEvent current;
    bool any = false;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (any) events.push_back(std::move(current));
            current = {};
            any = false;
            continue;
        }
        const auto colon = line.find(':');
        const std::string field = line.substr(0, colon);
        std::string value = colon == std::string::npos ? "" : line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (field == "event") current.type = value;
        if (field == "id") current.id = value;
        if (field == "data") current.data += current.data.empty() ? value : "\n" + value;
        any = true;
    }
    if (any) events.push_back(std::move(current));
    return events;
}

}  // namespace mudoc::fixtures
