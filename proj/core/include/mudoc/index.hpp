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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mudoc/config.hpp"
#include "mudoc/embedding.hpp"
#include "mudoc/geometry.hpp"
#include "mudoc/pdf.hpp"
#include "mudoc/util.hpp"

namespace mudoc {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

struct Snippet {
    std::string snippet_id;
    std::string doc_id;
    int page_index = 0;
    BBox bbox;  // points, origin at the top-left corner of the page
    RegionClass region_class = RegionClass::kText;
    double confidence = 0.0;
    std::string image_ref;  // index-relative path of the raster holding the region
    std::string raw_text;   // empty for figures

    bool operator==(const Snippet&) const = default;
};

struct TextChunk {
    std::string chunk_id;
    std::string doc_id;
    std::vector<std::string> snippet_ids;
    std::string raw_text;
    std::string cleaned_text;
    std::optional<std::string> summary_text;
    int first_page = 0;
    bool cleaning_fallback = false;  // cleaned_text is the raw text because the provider refused

    bool operator==(const TextChunk&) const = default;
};

struct FigureRecord {
    std::string figure_id;
    std::string doc_id;
    std::string snippet_id;
    std::string caption;
    std::string description;
    bool caption_fallback = false;

    bool operator==(const FigureRecord&) const = default;
};

enum class AnchorKind { kFigure, kTextSnippet };

std::string_view to_string(AnchorKind kind) noexcept;

struct SourceAnchor {
    std::string doc_id;
    int page_index = 0;
    BBox bbox;
    AnchorKind kind = AnchorKind::kTextSnippet;
    std::string snippet_id;

    bool operator==(const SourceAnchor&) const = default;
};

/// Embedding matrix names, "<kind>.<variant>.<family>". Every index carries all of them, possibly with zero rows.
namespace matrix {
inline constexpr std::string_view kChunkRaw = "chunk.raw.ctx_text";
inline constexpr std::string_view kChunkCleaned = "chunk.cleaned.ctx_text";
inline constexpr std::string_view kChunkSummary = "chunk.summary.ctx_text";
inline constexpr std::string_view kSnippetRaw = "snippet.raw.ctx_text";
inline constexpr std::string_view kFigureImage = "figure.image.joint_image";
inline constexpr std::string_view kFigureCaptionJoint = "figure.caption.joint_text";
inline constexpr std::string_view kFigureDescriptionJoint = "figure.description.joint_text";
inline constexpr std::string_view kFigureCaptionCtx = "figure.caption.ctx_text";
inline constexpr std::string_view kFigureDescriptionCtx = "figure.description.ctx_text";

inline constexpr std::string_view kAll[] = {kChunkRaw,         kChunkCleaned,       kChunkSummary,
                                            kSnippetRaw,       kFigureImage,        kFigureCaptionJoint,
                                            kFigureDescriptionJoint, kFigureCaptionCtx, kFigureDescriptionCtx};

/// Family encoded in the trailing component of a matrix name.
EmbeddingFamily family_of(std::string_view name);
}  // namespace matrix

/// Row-major float matrix with one id per row. Rows either live in owned memory or in a
/// read-only file mapping shared between copies.
class EmbeddingMatrix {
 public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(EmbeddingFamily family, int dim);

    /// Raises DimMismatch when row.size() != dim(), InvalidArgument for a duplicate id.
    void append(std::string id, std::span<const float> row);

    EmbeddingFamily family() const noexcept { return family_; }
    int dim() const noexcept { return dim_; }
    std::size_t rows() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t i) const noexcept {
        return {data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    std::optional<std::size_t> find(std::string_view id) const;
    bool memory_mapped() const noexcept { return mapping_ != nullptr; }

    /// The MDEM file image.
    Bytes serialize() const;
    /// Raises CorruptIndex on a bad magic, truncation or trailing bytes; VersionMismatch on a newer format.
    static EmbeddingMatrix read(const std::filesystem::path& file, EmbeddingFamily family, bool use_mmap);

    bool operator==(const EmbeddingMatrix& other) const;

 private:
    const float* data() const noexcept { return mapped_rows_ != nullptr ? mapped_rows_ : owned_.data(); }

    EmbeddingFamily family_ = EmbeddingFamily::kCtxText;
    int dim_ = 0;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> lookup_;
    std::vector<float> owned_;
    std::shared_ptr<const void> mapping_;
    const float* mapped_rows_ = nullptr;
};

/// Binary content of an index file that is not a record table, such as the source PDF or a PNG crop.
/// Either held in memory or read from disk on demand.
struct Asset {
    std::shared_ptr<const Bytes> data;
    std::filesystem::path file;

    static Asset from_bytes(Bytes bytes);
    static Asset from_file(std::filesystem::path path);
    Bytes read() const;
};

struct Manifest {
    std::uint32_t format_version = kIndexFormatVersion;
    std::string doc_id;
    std::string title;
    std::string source_sha256;
    std::string config_hash;
    std::vector<pdf::PageSize> page_sizes;
    std::map<std::string, int> dims;             // family name -> dim
    std::map<std::string, std::string> providers;  // layout/ocr/chat/embed -> provider id
    std::map<std::string, std::string> prompts;    // prompt name -> template hash
    IngestionConfig ingestion;
    double chunk_coverage = 1.0;  // share of non-figure snippet characters covered by chunks
    std::vector<std::string> warnings;
    std::string created_at;  // informational; excluded from hashes and equality
    std::map<std::string, std::string> files;    // relative path -> sha256, filled by save_index
};

struct DocumentIndex {
    Manifest manifest;
    std::vector<Snippet> snippets;
    std::vector<TextChunk> chunks;
    std::vector<FigureRecord> figures;
    std::map<std::string, EmbeddingMatrix, std::less<>> matrices;
    std::map<std::string, Asset> assets;  // relative path -> content ("source.pdf", "figures/..", "pages/..")

    /// Rebuilds the id lookups; call after mutating the record tables.
    void reindex();

    const Snippet* find_snippet(std::string_view id) const;
    const TextChunk* find_chunk(std::string_view id) const;
    const FigureRecord* find_figure(std::string_view id) const;

    /// Raises UnknownId when no snippet, chunk or figure carries the id.
    SourceAnchor anchor_for(std::string_view record_id) const;

    /// Raises UnknownId for a missing matrix.
    const EmbeddingMatrix& matrix(std::string_view name) const;

    std::size_t count(RegionClass cls) const;

 private:
    std::unordered_map<std::string, std::size_t> snippet_pos_;
    std::unordered_map<std::string, std::size_t> chunk_pos_;
    std::unordered_map<std::string, std::size_t> figure_pos_;
};

/// Structural equality: manifests (without timestamps and file hashes), records, matrices and asset bytes.
bool structurally_equal(const DocumentIndex& a, const DocumentIndex& b);

/// Writes the directory through a temporary sibling and swaps it into place.
/// Returns the manifest hash. Raises DimMismatch, IoError.
std::string save_index(const DocumentIndex& index, const std::filesystem::path& dir);

struct LoadOptions {
    bool use_mmap = true;
    bool verify_assets = false;  // PDF and PNG hashes are otherwise checked only by verify_index
};

/// Raises CorruptIndex or VersionMismatch.
DocumentIndex load_index(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Hash over the manifest body, excluding the timestamp.
std::string manifest_hash(const std::filesystem::path& dir);

struct Violation {
    std::string location;  // file or record id
    std::string rule;      // e.g. "chunk size", "file hash"
    std::string detail;
};

struct VerifyReport {
    std::vector<Violation> violations;
    std::size_t checks = 0;
    bool ok() const noexcept { return violations.empty(); }
};

/// Checks every on-disk and record-level invariant without stopping at the first failure.
VerifyReport verify_index(const std::filesystem::path& dir);

}  // namespace mudoc
