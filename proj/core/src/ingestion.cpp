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

#include "mudoc/ingestion.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mudoc/error.hpp"
#include "mudoc/prompts.hpp"
#include "mudoc/reference.hpp"

namespace mudoc::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Pages and snippets

std::vector<Page> paginate(const Bytes& pdf_bytes, double dpi) {
    const auto doc = pdf::Document::parse(pdf_bytes);
    std::vector<Page> pages;
    pages.reserve(doc.page_count());
    for (std::size_t i = 0; i < doc.page_count(); ++i) {
        pages.push_back({static_cast<int>(i), doc.page_size(i), doc.render_page(i, dpi)});
    }
    return pages;
}

PageContext page_context(const std::vector<std::string>& page_texts, int page_index) {
    PageContext ctx;
    ctx.page_index = page_index;
    const auto n = static_cast<int>(page_texts.size());
    if (page_index > 0 && page_index - 1 < n) ctx.prev_text = page_texts[static_cast<std::size_t>(page_index - 1)];
    if (page_index >= 0 && page_index < n) ctx.curr_text = page_texts[static_cast<std::size_t>(page_index)];
    if (page_index + 1 < n) ctx.next_text = page_texts[static_cast<std::size_t>(page_index + 1)];
    return ctx;
}

PixelRect pixel_rect(const BBox& bbox, double dpi, int width, int height) {
    const double k = dpi / 72.0;
    PixelRect r{static_cast<int>(std::floor(bbox.x0 * k)), static_cast<int>(std::floor(bbox.y0 * k)),
                static_cast<int>(std::ceil(bbox.x1 * k)), static_cast<int>(std::ceil(bbox.y1 * k))};
    r.x0 = std::clamp(r.x0, 0, width);
    r.x1 = std::clamp(r.x1, 0, width);
    r.y0 = std::clamp(r.y0, 0, height);
    r.y1 = std::clamp(r.y1, 0, height);
    return r;
}

namespace {

struct AcceptedRegion {
    LayoutRegion region;
    std::string text;
};

std::vector<AcceptedRegion> analyse_page(const Page& page, LayoutDetector& layout, OcrEngine& ocr,
                                         const IngestionConfig& config) {
    auto regions = layout.detect_layout(page.image, page.page_index);
    std::erase_if(regions, [&](const LayoutRegion& r) {
        return r.confidence < config.confidence_threshold || !r.bbox.valid();
    });
    sort_reading_order(regions);
    std::vector<AcceptedRegion> out;
    for (auto& r : regions) {
        r.bbox.x0 = std::clamp(r.bbox.x0, 0.0, page.size.width);
        r.bbox.x1 = std::clamp(r.bbox.x1, 0.0, page.size.width);
        r.bbox.y0 = std::clamp(r.bbox.y0, 0.0, page.size.height);
        r.bbox.y1 = std::clamp(r.bbox.y1, 0.0, page.size.height);
        if (!r.bbox.valid()) continue;
        std::string text;
        if (r.region_class != RegionClass::kFigure) {
            const auto rect = pixel_rect(r.bbox, page.image.dpi(), page.image.width(), page.image.height());
            if (rect.empty()) continue;
            text = std::string(trim(ocr.ocr_text(page.image.crop(rect))));
            if (text.empty()) continue;  // specks and rules carry no text
        }
        out.push_back({r, std::move(text)});
    }
    return out;
}

std::vector<ExtractedSnippet> materialize(const std::string& doc_id, const Page& page,
                                          const std::vector<AcceptedRegion>& regions) {
    std::vector<ExtractedSnippet> out;
    int rank = 0;
    for (const auto& a : regions) {
        ExtractedSnippet e;
        e.snippet.snippet_id = doc_id + "-p" + std::to_string(page.page_index) + "-r" + std::to_string(rank++);
        e.snippet.doc_id = doc_id;
        e.snippet.page_index = page.page_index;
        e.snippet.bbox = a.region.bbox;
        e.snippet.region_class = a.region.region_class;
        e.snippet.confidence = a.region.confidence;
        e.snippet.raw_text = a.text;
        if (a.region.region_class == RegionClass::kFigure) {
            e.crop = page.image.crop(pixel_rect(a.region.bbox, page.image.dpi(), page.image.width(), page.image.height()));
        }
        out.push_back(std::move(e));
    }
    return out;
}

bool skippable(const Error& e) { return !e.transient(); }

}  // namespace

std::vector<ExtractedSnippet> extract_page(const std::string& doc_id, const Page& page, LayoutDetector& layout,
                                           OcrEngine& ocr, const IngestionConfig& config) {
    return materialize(doc_id, page, analyse_page(page, layout, ocr, config));
}

std::vector<ExtractedSnippet> extract_snippets(const std::string& doc_id, const std::vector<Page>& pages,
                                               LayoutDetector& layout, OcrEngine& ocr, const IngestionConfig& config,
                                               std::vector<std::string>* warnings) {
    std::vector<ExtractedSnippet> out;
    for (const auto& page : pages) {
        try {
            for (auto& e : extract_page(doc_id, page, layout, ocr, config)) out.push_back(std::move(e));
        } catch (const Error& e) {
            if (!skippable(e)) throw;
            const std::string msg = "page " + std::to_string(page.page_index) + " skipped: " + e.what();
            spdlog::warn("{}", msg);
            if (warnings != nullptr) warnings->push_back(msg);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Chunking

std::vector<TextChunk> build_chunks(const std::vector<Snippet>& snippets, const IngestionConfig& config) {
    const std::size_t size = static_cast<std::size_t>(std::max(1, config.chunk_size));
    const std::size_t overlap = static_cast<std::size_t>(std::clamp(config.chunk_overlap, 0, config.chunk_size - 1));
    const std::size_t sep_len = utf8_length(config.separator);

    std::vector<const Snippet*> parts;
    std::vector<std::size_t> starts;
    std::vector<std::size_t> ends;
    std::string joined;
    std::size_t cp = 0;
    for (const auto& s : snippets) {
        if (s.region_class == RegionClass::kFigure) continue;
        if (!parts.empty()) {
            joined += config.separator;
            cp += sep_len;
        }
        starts.push_back(cp);
        joined += s.raw_text;
        cp += utf8_length(s.raw_text);
        ends.push_back(cp);
        parts.push_back(&s);
    }
    const std::size_t total = cp;
    std::vector<TextChunk> chunks;
    if (parts.empty() || total == 0) return chunks;
    const auto bounds = utf8_boundaries(joined);
    const std::string& doc_id = parts.front()->doc_id;

    std::size_t a = 0;
    std::size_t prev_b = 0;
    for (int seq = 1;; ++seq) {
        const std::size_t limit = std::min(a + size, total);
        std::size_t b = limit;
        if (limit < total) {
            // Furthest whole-snippet end inside the window; otherwise split at character granularity.
            const auto it = std::upper_bound(ends.begin(), ends.end(), limit);
            if (it != ends.begin()) {
                const std::size_t e = *(it - 1);
                if (e > a && e - a > overlap && e > prev_b) b = e;
            }
        }
        TextChunk c;
        c.chunk_id = doc_id + "-c" + std::to_string(seq);
        c.doc_id = doc_id;
        c.raw_text = joined.substr(bounds[a], bounds[b] - bounds[a]);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (starts[i] < b && ends[i] > a) c.snippet_ids.push_back(parts[i]->snippet_id);
        }
        if (c.snippet_ids.empty()) {
            // The window holds only separator characters; attribute it to the snippet that follows.
            const auto it = std::lower_bound(starts.begin(), starts.end(), a);
            c.snippet_ids.push_back(parts[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
                                              it - starts.begin(), static_cast<std::ptrdiff_t>(parts.size()) - 1))]
                                        ->snippet_id);
        }
        for (const auto* p : parts) {
            if (p->snippet_id == c.snippet_ids.front()) {
                c.first_page = p->page_index;
                break;
            }
        }
        chunks.push_back(std::move(c));
        if (b >= total) break;

        // Restart at the latest snippet start that keeps the overlap, else at exactly b - overlap.
        const std::size_t target = b - overlap;
        std::size_t next = target;
        const auto it = std::upper_bound(starts.begin(), starts.end(), target);
        if (it != starts.begin() && *(it - 1) > a) next = *(it - 1);
        prev_b = b;
        a = next;
    }
    return chunks;
}

// ---------------------------------------------------------------------------------------------
// Cleaning, summaries and captions

namespace {

std::vector<ChatMessage> task(std::string prompt, std::vector<std::shared_ptr<const Bytes>> images = {}) {
    std::vector<ChatMessage> messages;
    messages.push_back(ChatMessage::system(std::string(prompts::get("task_system").text)));
    auto user = ChatMessage::user(std::move(prompt));
    user.images = std::move(images);
    user.update_char_len();
    messages.push_back(std::move(user));
    return messages;
}

std::map<std::string, std::string> context_vars(const PageContext& ctx) {
    return {{"prev_page", ctx.prev_text}, {"curr_page", ctx.curr_text}, {"next_page", ctx.next_text}};
}

bool recoverable(const Error& e) {
    return e.code() == ErrorCode::kProviderRefusal || e.code() == ErrorCode::kBudgetExceeded ||
           e.code() == ErrorCode::kDecodeError;
}

// First sentences of the raw text, used when the summary call is refused.
std::string extractive_summary(std::string_view raw) {
    std::string flat;
    for (char c : raw) {
        const bool space = c == '\n' || c == '\t' || c == '\r' || c == ' ';
        if (space) {
            if (!flat.empty() && flat.back() != ' ') flat.push_back(' ');
        } else {
            flat.push_back(c);
        }
    }
    std::size_t cut = 0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if ((flat[i] == '.' || flat[i] == '!' || flat[i] == '?') && (i + 1 == flat.size() || flat[i + 1] == ' ')) {
            if (utf8_length(std::string_view(flat).substr(0, i + 1)) > 400) break;
            cut = i + 1;
            if (cut >= 150) break;
        }
    }
    return cut > 0 ? flat.substr(0, cut) : utf8_truncate(flat, 400);
}

}  // namespace

std::vector<ChatMessage> clean_request(const TextChunk& chunk, const PageContext& ctx) {
    auto vars = context_vars(ctx);
    vars["raw_text"] = chunk.raw_text;
    return task(prompts::render(prompts::get("clean_text").text, vars));
}

std::vector<ChatMessage> summarize_request(const TextChunk& chunk, const PageContext& ctx) {
    auto vars = context_vars(ctx);
    vars["text"] = chunk.raw_text;
    return task(prompts::render(prompts::get("summarize_text").text, vars));
}

CleanResult clean_and_summarize(const TextChunk& chunk, const PageContext& ctx, ChatProvider& chat,
                                const IngestionConfig& config) {
    if (chunk.raw_text.empty()) raise(ErrorCode::kInvalidArgument, "chunk " + chunk.chunk_id + " has no raw text");
    CleanResult result;
    ChatOptions options;
    try {
        result.cleaned_text = std::string(trim(chat.chat_complete(clean_request(chunk, ctx), options).text));
    } catch (const Error& e) {
        if (!recoverable(e)) throw;
        spdlog::warn("cleaning {} fell back to raw text: {}", chunk.chunk_id, e.what());
        result.fallback = true;
    }
    if (result.cleaned_text.empty()) {
        result.cleaned_text = chunk.raw_text;
        result.fallback = true;
    }
    if (utf8_length(chunk.raw_text) > static_cast<std::size_t>(config.summary_threshold)) {
        std::string summary;
        try {
            summary = std::string(trim(chat.chat_complete(summarize_request(chunk, ctx), options).text));
        } catch (const Error& e) {
            if (!recoverable(e)) throw;
            spdlog::warn("summary of {} fell back to leading sentences: {}", chunk.chunk_id, e.what());
        }
        if (summary.empty()) {
            summary = extractive_summary(chunk.raw_text);
            result.fallback = true;
        }
        result.summary_text = std::move(summary);
    }
    return result;
}

std::vector<ChatMessage> describe_request(const Snippet& snippet, const Bytes& png, const PageContext& ctx) {
    auto vars = context_vars(ctx);
    vars["page_number"] = std::to_string(snippet.page_index + 1);
    return task(prompts::render(prompts::get("describe_figure").text, vars), {std::make_shared<const Bytes>(png)});
}

FigureText describe_figure(const Snippet& snippet, const Bytes& png, const PageContext& ctx, ChatProvider& chat,
                           const IngestionConfig& config) {
    if (snippet.region_class != RegionClass::kFigure) {
        raise(ErrorCode::kInvalidArgument, "snippet " + snippet.snippet_id + " is not a figure");
    }
    FigureText out;
    try {
        const auto reply = chat.chat_complete(describe_request(snippet, png, ctx), ChatOptions{}).text;
        const auto open = reply.find('{');
        const auto close = reply.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close < open) {
            raise(ErrorCode::kProviderRefusal, "caption reply is not a JSON object");
        }
        json j;
        try {
            j = json::parse(reply.substr(open, close - open + 1));
        } catch (const json::exception& e) {
            raise(ErrorCode::kProviderRefusal, std::string("caption reply is not valid JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("caption") || !j["caption"].is_string()) {
            raise(ErrorCode::kProviderRefusal, "caption reply lacks a caption");
        }
        out.caption = std::string(trim(j["caption"].get<std::string>()));
        if (j.contains("description") && j["description"].is_string()) {
            out.description = std::string(trim(j["description"].get<std::string>()));
        }
        if (out.caption.empty()) raise(ErrorCode::kProviderRefusal, "caption reply has an empty caption");
    } catch (const Error& e) {
        if (!recoverable(e)) throw;
        spdlog::warn("captioning {} fell back to a placeholder: {}", snippet.snippet_id, e.what());
        out = {"Figure on page " + std::to_string(snippet.page_index + 1), "", true};
    }
    out.caption = utf8_truncate(out.caption, static_cast<std::size_t>(std::max(1, config.caption_max_chars)));
    return out;
}

// ---------------------------------------------------------------------------------------------
// Embeddings

std::vector<std::pair<std::string, EmbeddingVector>> embed_chunk(const TextChunk& chunk, Embedder& embedder) {
    std::vector<std::pair<std::string, EmbeddingVector>> out;
    out.emplace_back(matrix::kChunkRaw, embedder.embed_text(chunk.raw_text, EmbeddingFamily::kCtxText));
    out.emplace_back(matrix::kChunkCleaned, embedder.embed_text(chunk.cleaned_text, EmbeddingFamily::kCtxText));
    if (chunk.summary_text) {
        out.emplace_back(matrix::kChunkSummary, embedder.embed_text(*chunk.summary_text, EmbeddingFamily::kCtxText));
    }
    return out;
}

std::vector<std::pair<std::string, EmbeddingVector>> embed_figure(const FigureRecord& figure, const Raster& image,
                                                                  Embedder& embedder) {
    std::vector<std::pair<std::string, EmbeddingVector>> out;
    out.emplace_back(matrix::kFigureImage, embedder.embed_image(image, EmbeddingFamily::kJointImage));
    if (!figure.caption.empty()) {
        out.emplace_back(matrix::kFigureCaptionJoint, embedder.embed_text(figure.caption, EmbeddingFamily::kJointText));
        out.emplace_back(matrix::kFigureCaptionCtx, embedder.embed_text(figure.caption, EmbeddingFamily::kCtxText));
    }
    if (!figure.description.empty()) {
        out.emplace_back(matrix::kFigureDescriptionJoint,
                         embedder.embed_text(figure.description, EmbeddingFamily::kJointText));
        out.emplace_back(matrix::kFigureDescriptionCtx,
                         embedder.embed_text(figure.description, EmbeddingFamily::kCtxText));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Document build

std::string doc_id_from_path(const fs::path& pdf_path) {
    std::string out;
    for (char c : pdf_path.stem().string()) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            out.push_back(static_cast<char>(std::tolower(u)));
        } else if (!out.empty() && out.back() != '-') {
            out.push_back('-');
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "doc" : out;
}

namespace {

constexpr const char* kHashedPrompts[] = {"task_system", "clean_text", "summarize_text", "describe_figure"};

json ingestion_settings(const IngestionConfig& c) {
    return {{"dpi", c.dpi},
            {"chunk_size", c.chunk_size},
            {"chunk_overlap", c.chunk_overlap},
            {"summary_threshold", c.summary_threshold},
            {"confidence_threshold", c.confidence_threshold},
            {"separator", c.separator},
            {"caption_max_chars", c.caption_max_chars},
            {"keep_page_rasters", c.keep_page_rasters}};
}

std::map<std::string, std::string> provider_ids(const ProviderSet& p) {
    return {{"layout", p.layout->id()}, {"ocr", p.ocr->id()}, {"chat", p.chat->id()}, {"embed", p.embedder->id()}};
}

std::map<std::string, std::string> prompt_hashes() {
    std::map<std::string, std::string> out;
    for (const char* name : kHashedPrompts) {
        const auto& p = prompts::get(name);
        out[std::string(p.name) + ".v" + std::to_string(p.version)] = p.hash();
    }
    return out;
}

// Exclusive advisory lock held for the lifetime of the object.
class DirLock {
 public:
    explicit DirLock(const fs::path& path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) raise(ErrorCode::kIoError, "cannot open lock file " + path.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            raise(ErrorCode::kBusy, "another build holds " + path.string());
        }
    }
    ~DirLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

 private:
    int fd_ = -1;
};

// Append-only record of finished stage units. The first line binds the journal to one
// (source, configuration) pair; a mismatch starts a fresh journal.
class Journal {
 public:
    Journal(const fs::path& dir, const std::string& binding) : path_(dir / "journal.jsonl") {
        fs::create_directories(dir);
        bool valid = false;
        if (std::ifstream in(path_); in) {
            std::string line;
            if (std::getline(in, line)) {
                try {
                    valid = json::parse(line).at("binding").get<std::string>() == binding;
                } catch (const json::exception&) {
                    valid = false;
                }
            }
            while (valid && std::getline(in, line)) {
                try {
                    auto j = json::parse(line);
                    entries_[j.at("stage").get<std::string>() + "/" + j.at("key").get<std::string>()] = j.at("data");
                } catch (const json::exception&) {
                    break;  // torn final line from an interrupted run
                }
            }
        }
        out_.open(path_, valid ? std::ios::app : std::ios::trunc);
        if (!out_) raise(ErrorCode::kIoError, "cannot write checkpoint journal " + path_.string());
        if (!valid) {
            entries_.clear();
            out_ << json{{"binding", binding}}.dump() << '\n';
            out_.flush();
        }
    }

    std::optional<json> lookup(const std::string& stage, const std::string& key) {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(stage + "/" + key);
        if (it == entries_.end()) return std::nullopt;
        ++replayed_;
        return it->second;
    }

    void record(const std::string& stage, const std::string& key, json data) {
        std::lock_guard lock(mutex_);
        out_ << json{{"stage", stage}, {"key", key}, {"data", data}}.dump() << '\n';
        out_.flush();
        entries_[stage + "/" + key] = std::move(data);
        ++executed_;
    }

    std::size_t executed() const { return executed_; }
    std::size_t replayed() const { return replayed_; }

 private:
    fs::path path_;
    std::ofstream out_;
    std::mutex mutex_;
    std::unordered_map<std::string, json> entries_;
    std::size_t executed_ = 0;
    std::size_t replayed_ = 0;
};

// Runs fn(0..n-1) on up to `workers` threads. The first exception stops further work and is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        while (!stop) {
            const std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                stop = true;
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string floats_to_base64(const std::vector<float>& values) {
    Bytes bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(u >> (8 * b));
    }
    return base64_encode(bytes);
}

std::vector<float> floats_from_base64(const std::string& text) {
    const Bytes bytes = base64_decode(text);
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[i * 4 + static_cast<std::size_t>(b)]} << (8 * b);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

json regions_json(const std::vector<AcceptedRegion>& regions) {
    json arr = json::array();
    for (const auto& a : regions) {
        const auto& b = a.region.bbox;
        arr.push_back({{"bbox", {b.x0, b.y0, b.x1, b.y1}},
                       {"class", to_string(a.region.region_class)},
                       {"confidence", a.region.confidence},
                       {"text", a.text}});
    }
    return arr;
}

std::vector<AcceptedRegion> regions_from(const json& arr, int page_index) {
    std::vector<AcceptedRegion> out;
    for (const auto& r : arr) {
        AcceptedRegion a;
        a.region.page_index = page_index;
        const auto& b = r.at("bbox");
        a.region.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
        a.region.region_class = parse_region_class(r.at("class").get<std::string>()).value_or(RegionClass::kText);
        a.region.confidence = r.at("confidence").get<double>();
        a.text = r.at("text").get<std::string>();
        out.push_back(std::move(a));
    }
    return out;
}

std::string join_texts(const std::vector<const Snippet*>& snippets, const std::string& sep) {
    std::string out;
    for (const auto* s : snippets) {
        if (!out.empty()) out += sep;
        out += s->raw_text;
    }
    return out;
}

std::string one_line(std::string_view text) {
    std::string out;
    for (char c : trim(text)) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

IngestReport report_for(const DocumentIndex& index) {
    IngestReport r;
    r.doc_id = index.manifest.doc_id;
    r.pages = static_cast<int>(index.manifest.page_sizes.size());
    for (auto cls : {RegionClass::kTitle, RegionClass::kText, RegionClass::kFigure, RegionClass::kList,
                     RegionClass::kTable}) {
        r.snippets_by_class[std::string(to_string(cls))] = index.count(cls);
    }
    r.chunks = index.chunks.size();
    r.figures = index.figures.size();
    r.warnings = index.manifest.warnings;
    r.chunk_coverage = index.manifest.chunk_coverage;
    return r;
}

}  // namespace

std::string config_hash(const IngestionConfig& config, const ProviderSet& providers) {
    const json body{{"ingestion", ingestion_settings(config)},
                    {"providers", provider_ids(providers)},
                    {"prompts", prompt_hashes()},
                    {"format_version", kIndexFormatVersion}};
    return sha256_hex(body.dump());
}

IngestReport ingest_document(const Bytes& pdf_bytes, const fs::path& out, const IngestionConfig& config,
                             const ProviderSet& providers, const IngestOptions& options) {
    if (!providers.layout || !providers.ocr || !providers.chat || !providers.embedder) {
        raise(ErrorCode::kInvalidArgument, "ingestion needs all four providers");
    }
    auto progress = [&](const std::string& msg) {
        spdlog::info("{}", msg);
        if (options.progress) options.progress(msg);
    };
    const fs::path target = fs::absolute(out).lexically_normal();
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string doc_id = options.doc_id.empty() ? doc_id_from_path(target) : options.doc_id;
    const std::string source_sha = sha256_hex(pdf_bytes);
    const std::string cfg_hash = config_hash(config, providers);
    const auto calls_before = providers.counters ? providers.counters->total() : 0;

    DirLock lock(fs::path(target.string() + ".lock"));

    if (!options.force && fs::exists(target / "manifest.json")) {
        try {
            auto existing = load_index(target);
            if (existing.manifest.source_sha256 == source_sha && existing.manifest.config_hash == cfg_hash &&
                existing.manifest.doc_id == doc_id) {
                auto report = report_for(existing);
                report.manifest_hash = manifest_hash(target);
                report.reused = true;
                progress("index is up to date, 0 stages executed");
                return report;
            }
        } catch (const Error& e) {
            spdlog::warn("existing index at {} is unusable and will be rebuilt: {}", target.string(), e.what());
        }
    }

    const auto doc = pdf::Document::parse(pdf_bytes);
    const int page_count = static_cast<int>(doc.page_count());
    const fs::path ckpt_dir(target.string() + ".ckpt");
    Journal journal(ckpt_dir, sha256_hex(source_sha + ":" + cfg_hash + ":" + doc_id));
    std::vector<std::string> warnings;
    std::mutex warnings_mutex;
    auto warn = [&](std::string msg) {
        spdlog::warn("{}", msg);
        std::lock_guard lk(warnings_mutex);
        warnings.push_back(std::move(msg));
    };

    // Stage 1: render, detect layout and OCR each page.
    progress("analysing " + std::to_string(page_count) + " pages");
    std::vector<std::vector<ExtractedSnippet>> per_page(static_cast<std::size_t>(page_count));
    std::vector<Bytes> page_png(static_cast<std::size_t>(page_count));
    std::vector<std::string> page_warning(static_cast<std::size_t>(page_count));
    std::vector<pdf::PageSize> page_sizes(static_cast<std::size_t>(page_count));
    parallel_for(static_cast<std::size_t>(page_count), config.workers, [&](std::size_t i) {
        Page page{static_cast<int>(i), doc.page_size(i), doc.render_page(i, config.dpi)};
        page_sizes[i] = page.size;
        if (config.keep_page_rasters) page_png[i] = encode_png(page.image);
        const std::string key = std::to_string(i);
        std::vector<AcceptedRegion> regions;
        if (auto saved = journal.lookup("page", key)) {
            if (saved->contains("warning")) {
                page_warning[i] = saved->at("warning").get<std::string>();
                return;
            }
            regions = regions_from(saved->at("regions"), page.page_index);
        } else {
            try {
                regions = analyse_page(page, *providers.layout, *providers.ocr, config);
            } catch (const Error& e) {
                if (!skippable(e)) throw;
                page_warning[i] = "page " + key + " skipped: " + e.what();
                journal.record("page", key, {{"warning", page_warning[i]}});
                return;
            }
            journal.record("page", key, {{"regions", regions_json(regions)}});
        }
        per_page[i] = materialize(doc_id, page, regions);
    });
    for (const auto& w : page_warning) {
        if (!w.empty()) warn(w);
    }

    DocumentIndex index;
    std::vector<Raster> figure_crops;
    std::vector<std::string> page_texts(static_cast<std::size_t>(page_count));
    for (int p = 0; p < page_count; ++p) {
        std::vector<const Snippet*> text_snippets;
        for (auto& e : per_page[static_cast<std::size_t>(p)]) {
            if (e.snippet.region_class == RegionClass::kFigure) {
                const std::string figure_id = doc_id + "-f" + std::to_string(index.figures.size() + 1) + ".png";
                e.snippet.image_ref = "figures/" + figure_id;
                index.figures.push_back({figure_id, doc_id, e.snippet.snippet_id, "", "", false});
                figure_crops.push_back(std::move(e.crop));
            } else if (config.keep_page_rasters) {
                e.snippet.image_ref = "pages/" + std::to_string(p) + ".png";
            }
            index.snippets.push_back(std::move(e.snippet));
        }
        for (const auto& s : index.snippets) {
            if (s.page_index == p && s.region_class != RegionClass::kFigure) text_snippets.push_back(&s);
        }
        page_texts[static_cast<std::size_t>(p)] = join_texts(text_snippets, config.separator);
    }
    per_page.clear();
    index.reindex();

    // Stage 2: chunk, clean and summarize.
    index.chunks = build_chunks(index.snippets, config);
    progress("cleaning " + std::to_string(index.chunks.size()) + " chunks");
    parallel_for(index.chunks.size(), config.workers, [&](std::size_t i) {
        auto& c = index.chunks[i];
        json data;
        if (auto saved = journal.lookup("clean", c.chunk_id)) {
            data = *saved;
        } else {
            const auto r = clean_and_summarize(c, page_context(page_texts, c.first_page), *providers.chat, config);
            data = {{"cleaned", r.cleaned_text},
                    {"summary", r.summary_text ? json(*r.summary_text) : json(nullptr)},
                    {"fallback", r.fallback}};
            journal.record("clean", c.chunk_id, data);
        }
        c.cleaned_text = data.at("cleaned").get<std::string>();
        if (!data.at("summary").is_null()) c.summary_text = data.at("summary").get<std::string>();
        c.cleaning_fallback = data.at("fallback").get<bool>();
    });
    for (const auto& c : index.chunks) {
        if (c.cleaning_fallback) warn("chunk " + c.chunk_id + " kept fallback text after a refused cleaning call");
    }

    // Stage 3: captions and descriptions.
    progress("describing " + std::to_string(index.figures.size()) + " figures");
    std::vector<Bytes> figure_png(index.figures.size());
    parallel_for(index.figures.size(), config.workers, [&](std::size_t i) {
        auto& f = index.figures[i];
        figure_png[i] = encode_png(figure_crops[i]);
        json data;
        if (auto saved = journal.lookup("describe", f.figure_id)) {
            data = *saved;
        } else {
            const auto* s = index.find_snippet(f.snippet_id);
            const auto r = describe_figure(*s, figure_png[i], page_context(page_texts, s->page_index), *providers.chat,
                                           config);
            data = {{"caption", r.caption}, {"description", r.description}, {"fallback", r.fallback}};
            journal.record("describe", f.figure_id, data);
        }
        f.caption = data.at("caption").get<std::string>();
        f.description = data.at("description").get<std::string>();
        f.caption_fallback = data.at("fallback").get<bool>();
    });
    for (const auto& f : index.figures) {
        if (f.caption_fallback) warn("figure " + f.figure_id + " uses a placeholder caption");
    }

    // Stage 4: embeddings, one job per record.
    struct Job {
        std::string key;
        std::function<std::vector<std::pair<std::string, EmbeddingVector>>()> run;
    };
    std::vector<Job> jobs;
    for (const auto& c : index.chunks) {
        jobs.push_back({"chunk/" + c.chunk_id, [&] { return embed_chunk(c, *providers.embedder); }});
    }
    for (std::size_t i = 0; i < index.figures.size(); ++i) {
        const auto& f = index.figures[i];
        jobs.push_back({"figure/" + f.figure_id, [&, i] { return embed_figure(f, figure_crops[i], *providers.embedder); }});
    }
    for (const auto& s : index.snippets) {
        if (s.region_class == RegionClass::kFigure) continue;
        jobs.push_back({"snippet/" + s.snippet_id, [&] {
                            std::vector<std::pair<std::string, EmbeddingVector>> v;
                            v.emplace_back(matrix::kSnippetRaw,
                                           providers.embedder->embed_text(s.raw_text, EmbeddingFamily::kCtxText));
                            return v;
                        }});
    }
    progress("embedding " + std::to_string(jobs.size()) + " records");
    std::vector<json> results(jobs.size());
    parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
        if (auto saved = journal.lookup("embed", jobs[i].key)) {
            results[i] = std::move(*saved);
            return;
        }
        json data = json::array();
        for (const auto& [name, vec] : jobs[i].run()) data.push_back({{"matrix", name}, {"values", floats_to_base64(vec.values)}});
        journal.record("embed", jobs[i].key, data);
        results[i] = std::move(data);
    });

    for (auto family : kAllFamilies) {
        index.manifest.dims[std::string(to_string(family))] = providers.embedder->dim(family);
    }
    for (auto name : matrix::kAll) {
        const auto family = matrix::family_of(name);
        index.matrices.emplace(std::string(name), EmbeddingMatrix(family, providers.embedder->dim(family)));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::string id = jobs[i].key.substr(jobs[i].key.find('/') + 1);
        for (const auto& entry : results[i]) {
            const auto values = floats_from_base64(entry.at("values").get<std::string>());
            index.matrices.at(entry.at("matrix").get<std::string>()).append(id, values);
        }
    }

    // Assemble and persist.
    auto& m = index.manifest;
    m.doc_id = doc_id;
    m.source_sha256 = source_sha;
    m.config_hash = cfg_hash;
    m.page_sizes = page_sizes;
    m.providers = provider_ids(providers);
    m.prompts = prompt_hashes();
    m.ingestion = config;
    m.warnings = warnings;
    m.title = doc_id;
    for (const auto& s : index.snippets) {
        if (s.region_class == RegionClass::kTitle) {
            m.title = one_line(s.raw_text);
            break;
        }
    }
    {
        std::size_t text_chars = 0;
        for (const auto& s : index.snippets) {
            if (s.region_class != RegionClass::kFigure) text_chars += utf8_length(s.raw_text);
        }
        // Chunks are windows over the joined text, so coverage is measured on the union of windows.
        std::size_t covered_text = 0;
        if (!index.chunks.empty()) {
            std::string joined;
            for (const auto& s : index.snippets) {
                if (s.region_class == RegionClass::kFigure) continue;
                if (!joined.empty()) joined += config.separator;
                joined += s.raw_text;
            }
            std::vector<bool> hit(utf8_length(joined), false);
            std::size_t from = 0;
            for (const auto& c : index.chunks) {
                const auto at = joined.find(c.raw_text, from);
                if (at == std::string::npos) break;
                const auto start = utf8_length(std::string_view(joined).substr(0, at));
                const auto len = utf8_length(c.raw_text);
                std::fill(hit.begin() + static_cast<std::ptrdiff_t>(start),
                          hit.begin() + static_cast<std::ptrdiff_t>(start + len), true);
                from = at + 1;
            }
            // Separators are not snippet text; count only snippet positions.
            std::size_t cp = 0;
            bool first = true;
            const auto sep_len = utf8_length(config.separator);
            for (const auto& s : index.snippets) {
                if (s.region_class == RegionClass::kFigure) continue;
                if (!first) cp += sep_len;
                first = false;
                const auto len = utf8_length(s.raw_text);
                for (std::size_t k = 0; k < len; ++k) covered_text += hit[cp + k] ? 1 : 0;
                cp += len;
            }
        }
        m.chunk_coverage = text_chars == 0 ? 1.0 : static_cast<double>(covered_text) / static_cast<double>(text_chars);
    }

    index.assets.emplace("source.pdf", Asset::from_bytes(pdf_bytes));
    for (std::size_t i = 0; i < index.figures.size(); ++i) {
        index.assets.emplace("figures/" + index.figures[i].figure_id, Asset::from_bytes(std::move(figure_png[i])));
    }
    if (config.keep_page_rasters) {
        for (int p = 0; p < page_count; ++p) {
            index.assets.emplace("pages/" + std::to_string(p) + ".png",
                                 Asset::from_bytes(std::move(page_png[static_cast<std::size_t>(p)])));
        }
    }
    progress("writing index to " + target.string());
    const std::string hash = save_index(index, target);
    std::error_code ec;
    fs::remove_all(ckpt_dir, ec);

    auto report = report_for(index);
    report.manifest_hash = hash;
    report.stages_executed = journal.executed();
    report.stages_resumed = journal.replayed();
    report.provider_calls = providers.counters ? providers.counters->total() - calls_before : 0;
    progress(std::to_string(report.stages_executed) + " stages executed");
    return report;
}

}  // namespace mudoc::ingest
