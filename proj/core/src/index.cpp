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

#include "mudoc/index.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mudoc/error.hpp"

namespace mudoc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(AnchorKind kind) noexcept {
    return kind == AnchorKind::kFigure ? "figure" : "text_snippet";
}

EmbeddingFamily matrix::family_of(std::string_view name) {
    const auto dot = name.rfind('.');
    const auto family = parse_family(dot == std::string_view::npos ? name : name.substr(dot + 1));
    if (!family) raise(ErrorCode::kInvalidArgument, "matrix name has no family: " + std::string(name));
    return *family;
}

// ---------------------------------------------------------------------------------------------
// EmbeddingMatrix

namespace {

constexpr char kMagic[4] = {'M', 'D', 'E', 'M'};

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint32_t to_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) raise(ErrorCode::kInvalidArgument, std::string(what) + " does not fit the MDEM header");
    return static_cast<std::uint32_t>(v);
}

struct Mapping {
    void* addr = nullptr;
    std::size_t size = 0;
    ~Mapping() {
        if (addr != nullptr) ::munmap(addr, size);
    }
};

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(EmbeddingFamily family, int dim) : family_(family), dim_(dim) {
    if (dim <= 0) raise(ErrorCode::kInvalidArgument, "matrix dim must be positive");
}

void EmbeddingMatrix::append(std::string id, std::span<const float> row) {
    if (mapping_) raise(ErrorCode::kInvalidArgument, "cannot append to a mapped matrix");
    if (row.size() != static_cast<std::size_t>(dim_)) {
        raise(ErrorCode::kDimMismatch, "row " + id + " has " + std::to_string(row.size()) + " values, matrix " +
                                           std::string(to_string(family_)) + " expects " + std::to_string(dim_));
    }
    if (lookup_.contains(id)) raise(ErrorCode::kInvalidArgument, "duplicate matrix row id " + id);
    lookup_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    owned_.insert(owned_.end(), row.begin(), row.end());
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
    const auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

Bytes EmbeddingMatrix::serialize() const {
    Bytes out(kMagic, kMagic + 4);
    put_u32(out, kIndexFormatVersion);
    put_u32(out, to_u32(ids_.size(), "row count"));
    put_u32(out, to_u32(static_cast<std::size_t>(dim_), "dim"));
    for (const auto& id : ids_) {
        put_u32(out, to_u32(id.size(), "row id"));
        out.insert(out.end(), id.begin(), id.end());
    }
    const std::size_t n = ids_.size() * static_cast<std::size_t>(dim_);
    const auto* values = data();
    out.reserve(out.size() + n * 4);
    for (std::size_t i = 0; i < n; ++i) put_u32(out, std::bit_cast<std::uint32_t>(values[i]));
    return out;
}

EmbeddingMatrix EmbeddingMatrix::read(const fs::path& file, EmbeddingFamily family, bool use_mmap) {
    const std::string name = file.filename().string();
    auto corrupt = [&](const std::string& why) -> Error { return Error(ErrorCode::kCorruptIndex, name + ": " + why); };

    std::shared_ptr<Mapping> mapping;
    Bytes owned_bytes;
    const std::uint8_t* base = nullptr;
    std::size_t size = 0;
    if (use_mmap) {
        const int fd = ::open(file.c_str(), O_RDONLY | O_CLOEXEC);
        if (fd < 0) throw corrupt("cannot open");
        struct stat st {};
        if (::fstat(fd, &st) != 0) {
            ::close(fd);
            throw corrupt("cannot stat");
        }
        size = static_cast<std::size_t>(st.st_size);
        mapping = std::make_shared<Mapping>();
        if (size > 0) {
            void* addr = ::mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
            if (addr == MAP_FAILED) {
                ::close(fd);
                throw corrupt("mmap failed");
            }
            mapping->addr = addr;
            mapping->size = size;
            base = static_cast<const std::uint8_t*>(addr);
        }
        ::close(fd);
    } else {
        try {
            owned_bytes = read_file(file);
        } catch (const Error&) {
            throw corrupt("cannot read");
        }
        base = owned_bytes.data();
        size = owned_bytes.size();
    }

    if (size < 16 || std::memcmp(base, kMagic, 4) != 0) throw corrupt("bad MDEM header");
    const auto version = get_u32(base + 4);
    if (version > kIndexFormatVersion) {
        raise(ErrorCode::kVersionMismatch, name + ": format version " + std::to_string(version) + " is newer than " +
                                               std::to_string(kIndexFormatVersion));
    }
    if (version == 0) throw corrupt("format version 0");
    const auto rows = get_u32(base + 8);
    const auto dim = get_u32(base + 12);
    if (dim == 0 || dim > (1u << 20)) throw corrupt("implausible dim " + std::to_string(dim));

    EmbeddingMatrix m(family, static_cast<int>(dim));
    std::size_t pos = 16;
    m.ids_.reserve(rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
        if (size - pos < 4) throw corrupt("truncated row ids");
        const auto len = get_u32(base + pos);
        pos += 4;
        if (size - pos < len) throw corrupt("truncated row ids");
        std::string id(reinterpret_cast<const char*>(base + pos), len);
        pos += len;
        if (!m.lookup_.emplace(id, m.ids_.size()).second) throw corrupt("duplicate row id " + id);
        m.ids_.push_back(std::move(id));
    }
    const std::size_t values = static_cast<std::size_t>(rows) * dim;
    if ((size - pos) / 4 < values || (size - pos) < values * 4) throw corrupt("truncated vector data");
    if (size - pos != values * 4) throw corrupt("trailing bytes after vector data");

    const std::uint8_t* rows_ptr = base + pos;
    const bool aligned = reinterpret_cast<std::uintptr_t>(rows_ptr) % alignof(float) == 0;
    if (mapping && aligned && std::endian::native == std::endian::little) {
        m.mapping_ = mapping;
        m.mapped_rows_ = reinterpret_cast<const float*>(rows_ptr);
    } else {
        // The id table can leave the floats unaligned; those files are copied instead of mapped.
        m.owned_.resize(values);
        for (std::size_t i = 0; i < values; ++i) m.owned_[i] = std::bit_cast<float>(get_u32(rows_ptr + 4 * i));
    }
    return m;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
    if (family_ != other.family_ || dim_ != other.dim_ || ids_ != other.ids_) return false;
    const std::size_t n = ids_.size() * static_cast<std::size_t>(dim_);
    return n == 0 || std::memcmp(data(), other.data(), n * sizeof(float)) == 0;
}

// ---------------------------------------------------------------------------------------------
// Asset

Asset Asset::from_bytes(Bytes bytes) { return Asset{std::make_shared<const Bytes>(std::move(bytes)), {}}; }

Asset Asset::from_file(fs::path path) { return Asset{nullptr, std::move(path)}; }

Bytes Asset::read() const {
    if (data) return *data;
    if (file.empty()) return {};
    return read_file(file);
}

// ---------------------------------------------------------------------------------------------
// Record serialization

namespace {

json bbox_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from(const json& j) {
    if (!j.is_array() || j.size() != 4) throw json::type_error::create(302, "bbox must hold four numbers", j);
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json snippet_json(const Snippet& s) {
    return {{"snippet_id", s.snippet_id}, {"doc_id", s.doc_id},
            {"page_index", s.page_index}, {"bbox", bbox_json(s.bbox)},
            {"region_class", to_string(s.region_class)}, {"confidence", s.confidence},
            {"image_ref", s.image_ref},   {"raw_text", s.raw_text}};
}

Snippet snippet_from(const json& j) {
    Snippet s;
    s.snippet_id = j.at("snippet_id").get<std::string>();
    s.doc_id = j.at("doc_id").get<std::string>();
    s.page_index = j.at("page_index").get<int>();
    s.bbox = bbox_from(j.at("bbox"));
    const auto cls = parse_region_class(j.at("region_class").get<std::string>());
    if (!cls) throw json::type_error::create(302, "unknown region_class", j);
    s.region_class = *cls;
    s.confidence = j.at("confidence").get<double>();
    s.image_ref = j.at("image_ref").get<std::string>();
    s.raw_text = j.at("raw_text").get<std::string>();
    return s;
}

json chunk_json(const TextChunk& c) {
    return {{"chunk_id", c.chunk_id},
            {"doc_id", c.doc_id},
            {"snippet_ids", c.snippet_ids},
            {"first_page", c.first_page},
            {"raw_text", c.raw_text},
            {"cleaned_text", c.cleaned_text},
            {"summary_text", c.summary_text ? json(*c.summary_text) : json(nullptr)},
            {"cleaning_fallback", c.cleaning_fallback}};
}

TextChunk chunk_from(const json& j) {
    TextChunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.snippet_ids = j.at("snippet_ids").get<std::vector<std::string>>();
    c.first_page = j.at("first_page").get<int>();
    c.raw_text = j.at("raw_text").get<std::string>();
    c.cleaned_text = j.at("cleaned_text").get<std::string>();
    if (const auto& s = j.at("summary_text"); !s.is_null()) c.summary_text = s.get<std::string>();
    c.cleaning_fallback = j.at("cleaning_fallback").get<bool>();
    return c;
}

json figure_json(const FigureRecord& f) {
    return {{"figure_id", f.figure_id}, {"doc_id", f.doc_id},           {"snippet_id", f.snippet_id},
            {"caption", f.caption},     {"description", f.description}, {"caption_fallback", f.caption_fallback}};
}

FigureRecord figure_from(const json& j) {
    FigureRecord f;
    f.figure_id = j.at("figure_id").get<std::string>();
    f.doc_id = j.at("doc_id").get<std::string>();
    f.snippet_id = j.at("snippet_id").get<std::string>();
    f.caption = j.at("caption").get<std::string>();
    f.description = j.at("description").get<std::string>();
    f.caption_fallback = j.at("caption_fallback").get<bool>();
    return f;
}

json ingestion_json(const IngestionConfig& c) {
    return {{"dpi", c.dpi},
            {"chunk_size", c.chunk_size},
            {"chunk_overlap", c.chunk_overlap},
            {"summary_threshold", c.summary_threshold},
            {"confidence_threshold", c.confidence_threshold},
            {"separator", c.separator},
            {"caption_max_chars", c.caption_max_chars}};
}

IngestionConfig ingestion_from(const json& j) {
    IngestionConfig c;
    c.dpi = j.at("dpi").get<double>();
    c.chunk_size = j.at("chunk_size").get<int>();
    c.chunk_overlap = j.at("chunk_overlap").get<int>();
    c.summary_threshold = j.at("summary_threshold").get<int>();
    c.confidence_threshold = j.at("confidence_threshold").get<double>();
    c.separator = j.at("separator").get<std::string>();
    c.caption_max_chars = j.at("caption_max_chars").get<int>();
    return c;
}

// Everything in the manifest except the timestamp and the file table.
json manifest_core_json(const Manifest& m) {
    json sizes = json::array();
    for (const auto& p : m.page_sizes) sizes.push_back(json::array({p.width, p.height}));
    return {{"format_version", m.format_version},
            {"doc_id", m.doc_id},
            {"title", m.title},
            {"source_sha256", m.source_sha256},
            {"config_hash", m.config_hash},
            {"page_sizes", sizes},
            {"dims", m.dims},
            {"providers", m.providers},
            {"prompts", m.prompts},
            {"ingestion", ingestion_json(m.ingestion)},
            {"chunk_coverage", m.chunk_coverage},
            {"warnings", m.warnings}};
}

Manifest manifest_from(const json& j) {
    Manifest m;
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version > kIndexFormatVersion) {
        raise(ErrorCode::kVersionMismatch, "index format version " + std::to_string(m.format_version) +
                                               " is newer than supported version " +
                                               std::to_string(kIndexFormatVersion));
    }
    m.doc_id = j.at("doc_id").get<std::string>();
    m.title = j.at("title").get<std::string>();
    m.source_sha256 = j.at("source_sha256").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& p : j.at("page_sizes")) m.page_sizes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    m.dims = j.at("dims").get<std::map<std::string, int>>();
    m.providers = j.at("providers").get<std::map<std::string, std::string>>();
    m.prompts = j.at("prompts").get<std::map<std::string, std::string>>();
    m.ingestion = ingestion_from(j.at("ingestion"));
    m.chunk_coverage = j.at("chunk_coverage").get<double>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.created_at = j.value("created_at", "");
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    return m;
}

// Integrity hash over every manifest field, the timestamp included, except itself.
std::string content_hash_of(json body) {
    body.erase("content_hash");
    return sha256_hex(body.dump());
}

std::string hash_manifest_json(const json& manifest) {
    json body = manifest;
    body.erase("created_at");
    body.erase("content_hash");  // covers the timestamp
    return sha256_hex(body.dump());
}

template <typename T, typename F>
std::string to_jsonl(const std::vector<T>& records, F&& to_json) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

bool is_asset_path(const std::string& rel) {
    return rel == "source.pdf" || rel.rfind("figures/", 0) == 0 || rel.rfind("pages/", 0) == 0;
}

std::string emb_path(std::string_view name) { return "emb/" + std::string(name) + ".f32"; }

}  // namespace

// ---------------------------------------------------------------------------------------------
// DocumentIndex

void DocumentIndex::reindex() {
    snippet_pos_.clear();
    chunk_pos_.clear();
    figure_pos_.clear();
    for (std::size_t i = 0; i < snippets.size(); ++i) snippet_pos_.emplace(snippets[i].snippet_id, i);
    for (std::size_t i = 0; i < chunks.size(); ++i) chunk_pos_.emplace(chunks[i].chunk_id, i);
    for (std::size_t i = 0; i < figures.size(); ++i) figure_pos_.emplace(figures[i].figure_id, i);
}

const Snippet* DocumentIndex::find_snippet(std::string_view id) const {
    const auto it = snippet_pos_.find(std::string(id));
    return it == snippet_pos_.end() ? nullptr : &snippets[it->second];
}

const TextChunk* DocumentIndex::find_chunk(std::string_view id) const {
    const auto it = chunk_pos_.find(std::string(id));
    return it == chunk_pos_.end() ? nullptr : &chunks[it->second];
}

const FigureRecord* DocumentIndex::find_figure(std::string_view id) const {
    const auto it = figure_pos_.find(std::string(id));
    return it == figure_pos_.end() ? nullptr : &figures[it->second];
}

SourceAnchor DocumentIndex::anchor_for(std::string_view record_id) const {
    auto from_snippet = [&](const Snippet& s) {
        return SourceAnchor{s.doc_id, s.page_index, s.bbox,
                            s.region_class == RegionClass::kFigure ? AnchorKind::kFigure : AnchorKind::kTextSnippet,
                            s.snippet_id};
    };
    if (const auto* f = find_figure(record_id)) {
        const auto* s = find_snippet(f->snippet_id);
        if (s == nullptr) raise(ErrorCode::kUnknownId, "figure " + f->figure_id + " names a missing snippet");
        auto anchor = from_snippet(*s);
        anchor.kind = AnchorKind::kFigure;
        return anchor;
    }
    if (const auto* c = find_chunk(record_id)) {
        const auto* s = c->snippet_ids.empty() ? nullptr : find_snippet(c->snippet_ids.front());
        if (s == nullptr) raise(ErrorCode::kUnknownId, "chunk " + c->chunk_id + " names a missing snippet");
        return from_snippet(*s);
    }
    if (const auto* s = find_snippet(record_id)) return from_snippet(*s);
    raise(ErrorCode::kUnknownId, "unknown record id: " + std::string(record_id));
}

const EmbeddingMatrix& DocumentIndex::matrix(std::string_view name) const {
    const auto it = matrices.find(name);
    if (it == matrices.end()) raise(ErrorCode::kUnknownId, "index has no matrix " + std::string(name));
    return it->second;
}

std::size_t DocumentIndex::count(RegionClass cls) const {
    return static_cast<std::size_t>(
        std::count_if(snippets.begin(), snippets.end(), [&](const Snippet& s) { return s.region_class == cls; }));
}

bool structurally_equal(const DocumentIndex& a, const DocumentIndex& b) {
    if (manifest_core_json(a.manifest) != manifest_core_json(b.manifest)) return false;
    if (a.snippets != b.snippets || a.chunks != b.chunks || a.figures != b.figures) return false;
    if (a.matrices.size() != b.matrices.size()) return false;
    for (const auto& [name, m] : a.matrices) {
        const auto it = b.matrices.find(name);
        if (it == b.matrices.end() || !(it->second == m)) return false;
    }
    if (a.assets.size() != b.assets.size()) return false;
    for (const auto& [path, asset] : a.assets) {
        const auto it = b.assets.find(path);
        if (it == b.assets.end() || it->second.read() != asset.read()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------------------------
// Save

std::string save_index(const DocumentIndex& index, const fs::path& dir) {
    Manifest manifest = index.manifest;
    manifest.format_version = kIndexFormatVersion;
    for (const auto& [name, m] : index.matrices) {
        const auto family = matrix::family_of(name);
        if (m.family() != family) {
            raise(ErrorCode::kDimMismatch, "matrix " + name + " holds " + std::string(to_string(m.family())) + " vectors");
        }
        const auto key = std::string(to_string(family));
        const auto it = manifest.dims.find(key);
        if (it == manifest.dims.end()) {
            manifest.dims[key] = m.dim();
        } else if (it->second != m.dim()) {
            raise(ErrorCode::kDimMismatch, "matrix " + name + " has dim " + std::to_string(m.dim()) + " but family " +
                                               key + " is " + std::to_string(it->second));
        }
    }
    for (auto name : matrix::kAll) {
        if (!index.matrices.contains(name) && !manifest.dims.contains(std::string(to_string(matrix::family_of(name))))) {
            raise(ErrorCode::kDimMismatch, "no dim known for empty matrix " + std::string(name));
        }
    }

    const fs::path target = fs::absolute(dir).lexically_normal();
    const fs::path parent = target.parent_path();
    std::error_code ec;
    fs::create_directories(parent, ec);
    const std::string stem = "." + target.filename().string();
    const fs::path tmp = parent / (stem + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(tmp, ec);
    if (!fs::create_directories(tmp / "emb", ec) || ec) raise(ErrorCode::kIoError, "cannot create " + tmp.string());
    fs::create_directories(tmp / "figures");
    fs::create_directories(tmp / "pages");

    try {
        auto put = [&](const std::string& rel, std::span<const std::uint8_t> bytes) {
            const fs::path path = tmp / rel;
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out) raise(ErrorCode::kIoError, "write failed for " + path.string());
            manifest.files[rel] = sha256_hex(bytes);
        };
        auto put_text = [&](const std::string& rel, const std::string& text) {
            put(rel, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        };
        manifest.files.clear();
        put_text("snippets.jsonl", to_jsonl(index.snippets, snippet_json));
        put_text("chunks.jsonl", to_jsonl(index.chunks, chunk_json));
        put_text("figures.jsonl", to_jsonl(index.figures, figure_json));
        for (auto name : matrix::kAll) {
            const auto it = index.matrices.find(name);
            const auto family = matrix::family_of(name);
            const EmbeddingMatrix empty(family, manifest.dims.at(std::string(to_string(family))));
            put(emb_path(name), (it == index.matrices.end() ? empty : it->second).serialize());
        }
        for (const auto& [name, m] : index.matrices) {
            if (std::find(std::begin(matrix::kAll), std::end(matrix::kAll), name) == std::end(matrix::kAll)) {
                put(emb_path(name), m.serialize());
            }
        }
        for (const auto& [rel, asset] : index.assets) {
            if (!is_asset_path(rel) || rel.find("..") != std::string::npos) {
                raise(ErrorCode::kInvalidArgument, "asset path outside the index layout: " + rel);
            }
            put(rel, asset.read());
        }

        json body = manifest_core_json(manifest);
        body["created_at"] = manifest.created_at.empty() ? utc_timestamp() : manifest.created_at;
        body["files"] = manifest.files;
        body["counts"] = {{"pages", manifest.page_sizes.size()},
                          {"snippets", index.snippets.size()},
                          {"chunks", index.chunks.size()},
                          {"figures", index.figures.size()}};
        body["content_hash"] = content_hash_of(body);
        const std::string text = body.dump(2) + "\n";
        write_file_atomic(tmp / "manifest.json", text);

        // Swap: the old directory moves aside before the new one takes its name.
        const fs::path old = parent / (stem + ".old-" + std::to_string(::getpid()));
        fs::remove_all(old, ec);
        const bool had_old = fs::exists(target);
        if (had_old) {
            fs::rename(target, old, ec);
            if (ec) raise(ErrorCode::kIoError, "cannot move aside " + target.string() + ": " + ec.message());
        }
        fs::rename(tmp, target, ec);
        if (ec) {
            if (had_old) fs::rename(old, target);
            raise(ErrorCode::kIoError, "cannot rename into " + target.string() + ": " + ec.message());
        }
        if (had_old) fs::remove_all(old, ec);
        return hash_manifest_json(body);
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

// ---------------------------------------------------------------------------------------------
// Load

namespace {

json read_manifest_json(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    if (!fs::exists(path)) raise(ErrorCode::kCorruptIndex, "missing manifest.json in " + dir.string());
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        raise(ErrorCode::kCorruptIndex, std::string("manifest.json is not valid JSON: ") + e.what());
    }
}

template <typename T, typename F>
std::vector<T> read_jsonl(const fs::path& path, F&& from_json) {
    std::vector<T> out;
    const auto text = read_text_file(path);
    std::size_t line_no = 0;
    for (std::size_t start = 0; start < text.size();) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const auto line = std::string_view(text).substr(start, end - start);
        start = end + 1;
        if (trim(line).empty()) continue;
        try {
            out.push_back(from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(ErrorCode::kCorruptIndex,
                  path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::string manifest_hash(const fs::path& dir) { return hash_manifest_json(read_manifest_json(dir)); }

DocumentIndex load_index(const fs::path& dir, const LoadOptions& options) {
    if (!fs::is_directory(dir)) raise(ErrorCode::kIoError, "index directory not found: " + dir.string());
    const json body = read_manifest_json(dir);
    DocumentIndex index;
    try {
        index.manifest = manifest_from(body);
        if (body.at("content_hash").get<std::string>() != content_hash_of(body)) {
            raise(ErrorCode::kCorruptIndex, "manifest content hash does not match its body");
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::kCorruptIndex, std::string("manifest.json: ") + e.what());
    }
    for (const auto& [rel, expected] : index.manifest.files) {
        const fs::path path = dir / rel;
        if (!fs::exists(path)) raise(ErrorCode::kCorruptIndex, "missing file " + rel);
        if (is_asset_path(rel) && !options.verify_assets) continue;
        if (sha256_hex(read_file(path)) != expected) raise(ErrorCode::kCorruptIndex, "hash mismatch in " + rel);
    }
    for (const char* table : {"snippets.jsonl", "chunks.jsonl", "figures.jsonl"}) {
        if (!index.manifest.files.contains(table)) raise(ErrorCode::kCorruptIndex, std::string("manifest lacks ") + table);
    }
    index.snippets = read_jsonl<Snippet>(dir / "snippets.jsonl", snippet_from);
    index.chunks = read_jsonl<TextChunk>(dir / "chunks.jsonl", chunk_from);
    index.figures = read_jsonl<FigureRecord>(dir / "figures.jsonl", figure_from);
    for (const auto& [rel, hash] : index.manifest.files) {
        if (rel.rfind("emb/", 0) == 0 && rel.size() > 8 && rel.ends_with(".f32")) {
            const std::string name = rel.substr(4, rel.size() - 8);
            auto family = matrix::family_of(name);
            auto m = EmbeddingMatrix::read(dir / rel, family, options.use_mmap);
            const auto dim_it = index.manifest.dims.find(std::string(to_string(family)));
            if (dim_it == index.manifest.dims.end() || dim_it->second != m.dim()) {
                raise(ErrorCode::kCorruptIndex, rel + " dim disagrees with the manifest");
            }
            index.matrices.emplace(name, std::move(m));
        } else if (is_asset_path(rel)) {
            index.assets.emplace(rel, Asset::from_file(dir / rel));
        }
    }
    for (auto name : matrix::kAll) {
        if (!index.matrices.contains(name)) raise(ErrorCode::kCorruptIndex, "missing matrix " + std::string(name));
    }
    index.reindex();
    return index;
}

// ---------------------------------------------------------------------------------------------
// Verify

VerifyReport verify_index(const fs::path& dir) {
    VerifyReport report;
    auto violation = [&](std::string location, std::string rule, std::string detail) {
        report.violations.push_back({std::move(location), std::move(rule), std::move(detail)});
    };
    auto check = [&](bool ok, const std::string& location, const std::string& rule, const std::string& detail) {
        ++report.checks;
        if (!ok) violation(location, rule, detail);
        return ok;
    };

    json body;
    Manifest manifest;
    try {
        body = read_manifest_json(dir);
        manifest = manifest_from(body);
    } catch (const Error& e) {
        violation("manifest.json", e.code() == ErrorCode::kVersionMismatch ? "format version" : "manifest", e.what());
        return report;
    } catch (const json::exception& e) {
        violation("manifest.json", "manifest", e.what());
        return report;
    }
    check(body.contains("content_hash") && body["content_hash"].is_string() &&
              body["content_hash"].get<std::string>() == content_hash_of(body),
          "manifest.json", "content hash", "content_hash does not match the manifest body");
    check(read_text_file(dir / "manifest.json") == body.dump(2) + "\n", "manifest.json", "canonical form",
          "manifest bytes differ from their canonical serialization");

    // File hashes, including assets.
    std::set<std::string> healthy;
    for (const auto& [rel, expected] : manifest.files) {
        const fs::path path = dir / rel;
        if (!check(fs::exists(path), rel, "missing file", "listed in the manifest but absent")) continue;
        Bytes bytes;
        try {
            bytes = read_file(path);
        } catch (const Error& e) {
            violation(rel, "unreadable file", e.what());
            continue;
        }
        if (check(sha256_hex(bytes) == expected, rel, "file hash", "sha256 differs from the manifest")) healthy.insert(rel);
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        check(manifest.files.contains(rel), rel, "unlisted file", "present on disk but not in the manifest");
    }

    // Record tables.
    std::vector<Snippet> snippets;
    std::vector<TextChunk> chunks;
    std::vector<FigureRecord> figures;
    auto load_table = [&](const char* name, auto& out, auto from) {
        if (!check(manifest.files.contains(name), name, "missing file", "record table not listed")) return;
        if (!fs::exists(dir / name)) return;
        try {
            out = read_jsonl<typename std::decay_t<decltype(out)>::value_type>(dir / name, from);
        } catch (const Error& e) {
            violation(name, "record parse", e.what());
        }
    };
    load_table("snippets.jsonl", snippets, snippet_from);
    load_table("chunks.jsonl", chunks, chunk_from);
    load_table("figures.jsonl", figures, figure_from);

    std::map<std::string, const Snippet*> snippet_by_id;
    std::map<std::string, const TextChunk*> chunk_by_id;
    std::map<std::string, const FigureRecord*> figure_by_id;
    for (const auto& s : snippets) {
        check(snippet_by_id.emplace(s.snippet_id, &s).second, s.snippet_id, "duplicate id", "snippet id repeats");
        const bool page_ok = s.page_index >= 0 && static_cast<std::size_t>(s.page_index) < manifest.page_sizes.size();
        check(page_ok, s.snippet_id, "page index", "page outside the document");
        if (page_ok) {
            const auto& size = manifest.page_sizes[static_cast<std::size_t>(s.page_index)];
            check(s.bbox.valid() && s.bbox.within(size.width, size.height), s.snippet_id, "bbox",
                  "bbox empty or outside the page");
        }
        if (s.region_class == RegionClass::kFigure) {
            check(s.raw_text.empty(), s.snippet_id, "figure text", "figure snippets carry no OCR text");
        }
        check(s.image_ref.empty() || manifest.files.contains(s.image_ref), s.snippet_id, "image ref",
              "image_ref " + s.image_ref + " is not in the index");
    }
    for (const auto& c : chunks) {
        check(chunk_by_id.emplace(c.chunk_id, &c).second, c.chunk_id, "duplicate id", "chunk id repeats");
    }
    for (const auto& f : figures) {
        check(figure_by_id.emplace(f.figure_id, &f).second, f.figure_id, "duplicate id", "figure id repeats");
    }

    // Chunk bounds, summary predicate and provenance.
    const auto& ing = manifest.ingestion;
    for (const auto& c : chunks) {
        const auto len = utf8_length(c.raw_text);
        check(len <= static_cast<std::size_t>(ing.chunk_size), c.chunk_id, "chunk size",
              std::to_string(len) + " characters exceed " + std::to_string(ing.chunk_size));
        check(c.summary_text.has_value() == (len > static_cast<std::size_t>(ing.summary_threshold)), c.chunk_id,
              "summary presence", "summary must exist exactly when raw text exceeds " +
                                      std::to_string(ing.summary_threshold) + " characters");
        check(!c.snippet_ids.empty(), c.chunk_id, "chunk provenance", "chunk lists no snippets");
        for (const auto& sid : c.snippet_ids) {
            const auto it = snippet_by_id.find(sid);
            check(it != snippet_by_id.end() && it->second->region_class != RegionClass::kFigure, c.chunk_id,
                  "referential integrity", "snippet " + sid + " missing or a figure");
        }
    }

    // Chunks must tile the joined snippet text in order, with the configured overlap.
    {
        std::string joined;
        bool first = true;
        for (const auto& s : snippets) {
            if (s.region_class == RegionClass::kFigure) continue;
            if (!first) joined += ing.separator;
            joined += s.raw_text;
            first = false;
        }
        const auto total = utf8_length(joined);
        std::size_t search_from = 0;
        std::size_t covered = 0;  // code points [0, covered) are covered
        std::optional<std::size_t> prev_end;
        bool coverage_ok = true;
        for (const auto& c : chunks) {
            const auto at = joined.find(c.raw_text, search_from);
            if (!check(at != std::string::npos, c.chunk_id, "chunk coverage", "chunk text is not a window of the document")) {
                coverage_ok = false;
                break;
            }
            const auto start = utf8_length(std::string_view(joined).substr(0, at));
            const auto end = start + utf8_length(c.raw_text);
            if (start > covered) {
                violation(c.chunk_id, "chunk coverage", "characters before this chunk are not covered");
                coverage_ok = false;
            }
            if (prev_end) {
                const auto overlap = *prev_end > start ? *prev_end - start : 0;
                const bool tail = end - start < static_cast<std::size_t>(ing.chunk_overlap);
                check(overlap >= static_cast<std::size_t>(ing.chunk_overlap) || tail, c.chunk_id, "chunk overlap",
                      std::to_string(overlap) + " shared characters, expected " + std::to_string(ing.chunk_overlap));
            }
            covered = std::max(covered, end);
            prev_end = end;
            search_from = at + 1;
        }
        if (coverage_ok) {
            check(covered == total, dir.filename().string(), "chunk coverage",
                  std::to_string(total - std::min(total, covered)) + " trailing characters are not covered");
        }
    }

    // Figures: one record per figure snippet, with its crop present.
    std::map<std::string, int> figure_per_snippet;
    for (const auto& f : figures) {
        const auto it = snippet_by_id.find(f.snippet_id);
        check(it != snippet_by_id.end() && it->second->region_class == RegionClass::kFigure, f.figure_id,
              "referential integrity", "snippet " + f.snippet_id + " missing or not a figure");
        ++figure_per_snippet[f.snippet_id];
        check(manifest.files.contains("figures/" + f.figure_id), f.figure_id, "figure crop", "figures/" + f.figure_id + " missing");
        check(!f.caption.empty() && utf8_length(f.caption) <= static_cast<std::size_t>(ing.caption_max_chars), f.figure_id,
              "caption length", "caption empty or longer than " + std::to_string(ing.caption_max_chars));
    }
    for (const auto& s : snippets) {
        if (s.region_class != RegionClass::kFigure) continue;
        check(figure_per_snippet[s.snippet_id] == 1, s.snippet_id, "figure bijection",
              "figure snippet has " + std::to_string(figure_per_snippet[s.snippet_id]) + " figure records");
    }

    // Embedding matrices: readable, right dims, finite, rows resolve, required rows present.
    std::map<std::string, std::set<std::string>> rows;
    for (auto name : matrix::kAll) {
        const std::string rel = emb_path(name);
        if (!check(manifest.files.contains(rel), rel, "missing file", "embedding matrix not listed")) continue;
        if (!fs::exists(dir / rel)) continue;
        const auto family = matrix::family_of(name);
        try {
            const auto m = EmbeddingMatrix::read(dir / rel, family, false);
            const auto dim_it = manifest.dims.find(std::string(to_string(family)));
            check(dim_it != manifest.dims.end() && dim_it->second == m.dim(), rel, "embedding dim",
                  "dim " + std::to_string(m.dim()) + " disagrees with the manifest");
            bool finite = true;
            for (std::size_t r = 0; r < m.rows() && finite; ++r) {
                for (float v : m.row(r)) finite = finite && std::isfinite(v);
            }
            check(finite, rel, "finite vectors", "matrix holds NaN or Inf");
            rows[std::string(name)] = std::set<std::string>(m.ids().begin(), m.ids().end());
        } catch (const Error& e) {
            violation(rel, "embedding file", e.what());
        }
    }
    auto expect_rows = [&](std::string_view name, const std::set<std::string>& ids) {
        const auto it = rows.find(std::string(name));
        if (it == rows.end()) return;
        const std::string rel = emb_path(name);
        for (const auto& id : it->second) check(ids.contains(id), rel, "orphan row", "row " + id + " has no record");
        for (const auto& id : ids) check(it->second.contains(id), rel, "missing row", "record " + id + " has no row");
    };
    std::set<std::string> chunk_ids, summary_ids, text_snippet_ids, figure_ids, caption_ids, description_ids;
    for (const auto& c : chunks) {
        chunk_ids.insert(c.chunk_id);
        if (c.summary_text) summary_ids.insert(c.chunk_id);
    }
    for (const auto& s : snippets) {
        if (s.region_class != RegionClass::kFigure) text_snippet_ids.insert(s.snippet_id);
    }
    for (const auto& f : figures) {
        figure_ids.insert(f.figure_id);
        if (!f.caption.empty()) caption_ids.insert(f.figure_id);
        if (!f.description.empty()) description_ids.insert(f.figure_id);
    }
    expect_rows(matrix::kChunkRaw, chunk_ids);
    expect_rows(matrix::kChunkCleaned, chunk_ids);
    expect_rows(matrix::kChunkSummary, summary_ids);
    expect_rows(matrix::kSnippetRaw, text_snippet_ids);
    expect_rows(matrix::kFigureImage, figure_ids);
    expect_rows(matrix::kFigureCaptionJoint, caption_ids);
    expect_rows(matrix::kFigureCaptionCtx, caption_ids);
    expect_rows(matrix::kFigureDescriptionJoint, description_ids);
    expect_rows(matrix::kFigureDescriptionCtx, description_ids);

    return report;
}

}  // namespace mudoc
