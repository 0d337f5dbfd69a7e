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

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mudoc/config.hpp"
#include "mudoc/index.hpp"
#include "mudoc/pdf.hpp"
#include "mudoc/providers.hpp"

namespace mudoc::ingest {

struct Page {
    int page_index = 0;
    pdf::PageSize size;
    Raster image;
};

/// Renders every page. Raises MalformedPdf.
std::vector<Page> paginate(const Bytes& pdf_bytes, double dpi);

/// Text of the neighbouring pages, each the OCR text of that page's non-figure snippets.
struct PageContext {
    int page_index = 0;
    std::string prev_text;
    std::string curr_text;
    std::string next_text;
};

PageContext page_context(const std::vector<std::string>& page_texts, int page_index);

/// Point-space bbox to the pixel rectangle covering it on a page rendered at dpi.
PixelRect pixel_rect(const BBox& bbox, double dpi, int width, int height);

/// One snippet with its crop; figure crops feed captioning and image embedding.
struct ExtractedSnippet {
    Snippet snippet;
    Raster crop;
};

/// Layout, confidence filter and OCR for one page. Regions whose OCR text is blank are dropped.
/// Snippet ids are "<doc>-p<page>-r<rank>" with rank counted over the kept regions.
std::vector<ExtractedSnippet> extract_page(const std::string& doc_id, const Page& page, LayoutDetector& layout,
                                           OcrEngine& ocr, const IngestionConfig& config);

/// extract_page over all pages in order. A page whose layout or OCR call fails with anything
/// but ProviderUnavailable is skipped and described in warnings.
std::vector<ExtractedSnippet> extract_snippets(const std::string& doc_id, const std::vector<Page>& pages,
                                               LayoutDetector& layout, OcrEngine& ocr, const IngestionConfig& config,
                                               std::vector<std::string>* warnings = nullptr);

/// Chunk windows over the non-figure snippets joined by the separator. Summary and cleaned
/// text are left empty.
std::vector<TextChunk> build_chunks(const std::vector<Snippet>& snippets, const IngestionConfig& config);

struct CleanResult {
    std::string cleaned_text;
    std::optional<std::string> summary_text;
    bool fallback = false;
};

std::vector<ChatMessage> clean_request(const TextChunk& chunk, const PageContext& ctx);
std::vector<ChatMessage> summarize_request(const TextChunk& chunk, const PageContext& ctx);

/// Summary exactly when the raw text is longer than summary_threshold. A refused cleaning keeps the
/// raw text; a refused summary keeps the raw text's opening sentences. Both set fallback.
CleanResult clean_and_summarize(const TextChunk& chunk, const PageContext& ctx, ChatProvider& chat,
                                const IngestionConfig& config);

struct FigureText {
    std::string caption;
    std::string description;
    bool fallback = false;
};

std::vector<ChatMessage> describe_request(const Snippet& snippet, const Bytes& png, const PageContext& ctx);

/// Caption truncated to caption_max_chars. Failures other than ProviderUnavailable give
/// caption "Figure on page N" (1-based N) and an empty description.
FigureText describe_figure(const Snippet& snippet, const Bytes& png, const PageContext& ctx, ChatProvider& chat,
                           const IngestionConfig& config);

/// (matrix name, vector) pairs: raw and cleaned, plus summary when present.
std::vector<std::pair<std::string, EmbeddingVector>> embed_chunk(const TextChunk& chunk, Embedder& embedder);

/// (matrix name, vector) pairs: image, caption in both spaces, description in both spaces when non-empty.
std::vector<std::pair<std::string, EmbeddingVector>> embed_figure(const FigureRecord& figure, const Raster& image,
                                                                  Embedder& embedder);

/// Lowercase letters, digits and dashes derived from a file name.
std::string doc_id_from_path(const std::filesystem::path& pdf_path);

/// Hash of everything that shapes the index besides the PDF: ingestion settings, provider ids, prompt templates.
std::string config_hash(const IngestionConfig& config, const ProviderSet& providers);

struct IngestReport {
    std::string doc_id;
    std::string manifest_hash;
    int pages = 0;
    std::map<std::string, std::size_t> snippets_by_class;
    std::size_t chunks = 0;
    std::size_t figures = 0;
    std::vector<std::string> warnings;
    std::size_t stages_executed = 0;  // stage units run in this invocation
    std::size_t stages_resumed = 0;   // stage units replayed from the checkpoint journal
    std::uint64_t provider_calls = 0;
    double chunk_coverage = 0.0;
    bool reused = false;  // an up-to-date index was already in place
};

struct IngestOptions {
    std::string doc_id;  // derived from the output directory name when empty
    bool force = false;  // rebuild even when an up-to-date index exists
    std::function<void(const std::string&)> progress;
};

/// Builds and saves the index for pdf_bytes into out. Holds an exclusive lock on "<out>.lock" and
/// journals finished stage units in "<out>.ckpt" so a failed run resumes where it stopped.
/// Raises MalformedPdf, ProviderUnavailable (journal kept), Busy (another build holds the lock), IoError.
IngestReport ingest_document(const Bytes& pdf_bytes, const std::filesystem::path& out, const IngestionConfig& config,
                             const ProviderSet& providers, const IngestOptions& options = {});

}  // namespace mudoc::ingest
