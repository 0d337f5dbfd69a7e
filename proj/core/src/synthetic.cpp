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

#include "mudoc/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <sstream>
#include <string_view>

#include "mudoc/error.hpp"
#include "mudoc/glyph_font.hpp"
#include "mudoc/pdf.hpp"

namespace mudoc::synthetic {
namespace {

constexpr std::array<std::string_view, 120> kVocabulary = {
    "agent",      "learning",    "concept",     "knowledge",  "model",      "reasoning", "problem",    "solution",
    "memory",     "case",        "analogy",     "frame",      "script",     "goal",      "plan",       "search",
    "state",      "operator",    "heuristic",   "constraint", "network",    "semantic",  "design",     "system",
    "example",    "feature",     "category",    "rule",       "logic",      "inference", "belief",     "evidence",
    "diagnosis",  "explanation", "abstraction", "structure",  "behavior",   "function",  "mapping",    "transfer",
    "generalize", "specialize",  "incremental", "version",    "space",      "boundary",  "hypothesis", "training",
    "instance",   "positive",    "negative",    "near",       "miss",       "arch",      "block",      "table",
    "robot",      "vision",      "language",    "sentence",   "meaning",    "context",   "theme",      "role",
    "verb",       "noun",        "action",      "event",      "sequence",   "story",     "answer",     "question",
    "query",      "index",       "retrieval",   "store",      "adapt",      "evaluate",  "test",       "repair",
    "failure",    "success",     "cognitive",   "human",      "machine",    "method",    "process",    "level",
    "simple",     "complex",     "general",     "specific",   "useful",     "novel",     "classic",    "formal",
    "the",        "a",           "of",          "and",        "to",         "in",        "with",       "for",
    "each",       "every",       "this",        "that",       "from",       "into",      "by",         "on",
    "is",         "are",         "can",         "may",        "will",       "often",     "rarely",     "then",
};

std::string capitalize(std::string word) {
    if (!word.empty()) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    return word;
}

std::vector<std::string> wrapped_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    std::istringstream in(wrap(text));
    while (std::getline(in, current)) lines.push_back(current);
    return lines;
}

double block_height(const BlockSpec& block) {
    switch (block.cls) {
        case RegionClass::kTitle:
            return kTitleSize;
        case RegionClass::kFigure:
            return block.height;
        default: {
            const auto n = std::max<std::size_t>(1, wrapped_lines(block.text).size());
            return static_cast<double>(n - 1) * kLinePitch + kBodySize;
        }
    }
}

constexpr double kBottomLimit = kPageHeight - kMargin;

}  // namespace

std::size_t Document::count(RegionClass cls) const {
    return static_cast<std::size_t>(
        std::count_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.cls == cls; }));
}

std::string wrap(const std::string& text, int columns) {
    std::string out;
    std::string line;
    std::istringstream words(text);
    std::string word;
    auto flush = [&] {
        if (!out.empty()) out.push_back('\n');
        out += line;
        line.clear();
    };
    while (words >> word) {
        while (static_cast<int>(word.size()) > columns) {
            if (!line.empty()) flush();
            line = word.substr(0, static_cast<std::size_t>(columns));
            flush();
            word.erase(0, static_cast<std::size_t>(columns));
        }
        if (line.empty()) {
            line = word;
        } else if (static_cast<int>(line.size() + 1 + word.size()) <= columns) {
            line += ' ';
            line += word;
        } else {
            flush();
            line = word;
        }
    }
    if (!line.empty()) flush();
    return out;
}

std::string prose(std::uint32_t seed, int words) {
    std::mt19937 rng(seed);
    std::string out;
    int sentence_left = 0;
    for (int i = 0; i < words; ++i) {
        std::string word(kVocabulary[rng() % kVocabulary.size()]);
        if (sentence_left == 0) {
            word = capitalize(word);
            sentence_left = 8 + static_cast<int>(rng() % 7);
        }
        if (!out.empty()) out.push_back(' ');
        out += word;
        if (--sentence_left == 0 || i + 1 == words) out.push_back('.');
    }
    return out;
}

Raster figure_image(std::uint32_t seed, int width, int height) {
    std::mt19937 rng(seed);
    auto channel = [&] { return static_cast<std::uint8_t>(rng() % 256); };
    Raster img(width, height);
    const Rgb top{channel(), channel(), 230};
    for (int y = 0; y < height; ++y) {
        const double t = static_cast<double>(y) / std::max(1, height - 1);
        const Rgb row{static_cast<std::uint8_t>(top.r * (1 - t) + 40 * t),
                      static_cast<std::uint8_t>(top.g * (1 - t) + 160 * t), static_cast<std::uint8_t>(top.b * (1 - t))};
        img.fill_rect({0, y, width, y + 1}, row);
    }
    const int shapes = 3 + static_cast<int>(rng() % 4);
    for (int s = 0; s < shapes; ++s) {
        const Rgb color{channel(), channel(), channel()};
        const int cx = static_cast<int>(rng() % static_cast<unsigned>(width));
        const int cy = static_cast<int>(rng() % static_cast<unsigned>(height));
        const int r = std::max(4, static_cast<int>(rng() % static_cast<unsigned>(std::max(5, height / 3))));
        if (rng() % 2 == 0) {
            img.fill_rect({cx - r, cy - r / 2, cx + r, cy + r / 2}, color);
        } else {
            for (int y = std::max(0, cy - r); y < std::min(height, cy + r); ++y) {
                for (int x = std::max(0, cx - r); x < std::min(width, cx + r); ++x) {
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y, color);
                }
            }
        }
    }
    return img;
}

Document compose(const std::vector<PageSpec>& pages) {
    pdf::Writer writer;
    Document doc;
    doc.pages = static_cast<int>(pages.size());
    for (std::size_t p = 0; p < pages.size(); ++p) {
        auto& page = writer.add_page(kPageWidth, kPageHeight);
        double y = kTopMargin;
        for (const auto& spec : pages[p].blocks) {
            const double height = block_height(spec);
            if (y + height > kBottomLimit) {
                raise(ErrorCode::kInvalidArgument, "page " + std::to_string(p) + " overflows");
            }
            Block block;
            block.page = static_cast<int>(p);
            block.cls = spec.cls;
            if (spec.cls == RegionClass::kFigure) {
                if (spec.image.empty() || spec.width <= 0 || spec.height <= 0) {
                    raise(ErrorCode::kInvalidArgument, "figure block needs an image and a size");
                }
                const double x = (kPageWidth - spec.width) / 2.0;
                page.image(x, kPageHeight - y - spec.height, spec.width, spec.height, spec.image);
                block.bbox = {x, y, x + spec.width, y + spec.height};
            } else {
                const bool title = spec.cls == RegionClass::kTitle;
                const double size = title ? kTitleSize : kBodySize;
                const auto lines = title ? std::vector<std::string>{spec.text} : wrapped_lines(spec.text);
                std::size_t widest = 0;
                for (std::size_t i = 0; i < lines.size(); ++i) {
                    const double baseline = y + size * glyphs::kAscent + static_cast<double>(i) * kLinePitch;
                    page.text(kMargin, kPageHeight - baseline, size, lines[i]);
                    widest = std::max(widest, lines[i].size());
                }
                block.bbox = {kMargin, y, kMargin + static_cast<double>(widest) * size * glyphs::kAdvance, y + height};
                for (std::size_t i = 0; i < lines.size(); ++i) {
                    if (i > 0) block.text.push_back('\n');
                    block.text += lines[i];
                }
            }
            doc.blocks.push_back(std::move(block));
            y += height + kBlockGap;
        }
    }
    doc.pdf = writer.finish();
    return doc;
}

Document generate(const Options& options) {
    if (options.pages <= 0) raise(ErrorCode::kInvalidArgument, "pages must be positive");
    if (options.figures < 0 || options.figures > options.pages) {
        raise(ErrorCode::kInvalidArgument, "figures must be between 0 and the page count");
    }
    std::vector<int> figure_pages;
    for (int f = 0; f < options.figures; ++f) figure_pages.push_back(((2 * f + 1) * options.pages) / (2 * options.figures));

    std::vector<PageSpec> pages(static_cast<std::size_t>(options.pages));
    int figure_seq = 0;
    for (int p = 0; p < options.pages; ++p) {
        auto& blocks = pages[static_cast<std::size_t>(p)].blocks;
        double used = 0.0;
        auto add = [&](BlockSpec spec) {
            const double h = block_height(spec);
            if (kTopMargin + used + h > kBottomLimit) return false;
            used += h + kBlockGap;
            blocks.push_back(std::move(spec));
            return true;
        };
        if (p == 0 && options.title) {
            const std::string title = "Chapter 1 " + capitalize(std::string(kVocabulary[options.seed % 40])) + " " +
                                      capitalize(std::string(kVocabulary[(options.seed / 40 + 7) % 40]));
            add({RegionClass::kTitle, title, {}, 0, 0});
        }
        const bool has_figure = std::find(figure_pages.begin(), figure_pages.end(), p) != figure_pages.end();
        for (int i = 0; i < options.paragraphs_per_page; ++i) {
            const auto seed = options.seed * 7919u + static_cast<std::uint32_t>(p * 101 + i);
            if (has_figure && i == 1) {
                ++figure_seq;
                BlockSpec fig{RegionClass::kFigure, {}, figure_image(seed, 320, 200), 288.0, 180.0};
                BlockSpec caption{RegionClass::kText,
                                  "Figure " + std::to_string(figure_seq) + ". " + prose(seed ^ 0x5bd1e995u, 8), {}, 0, 0};
                if (!add(std::move(fig))) raise(ErrorCode::kInvalidArgument, "figure does not fit on its page");
                add(std::move(caption));
            }
            add({RegionClass::kText, prose(seed, options.words_per_paragraph), {}, 0, 0});
        }
        if (has_figure && options.paragraphs_per_page < 2) {
            ++figure_seq;
            const auto seed = options.seed * 7919u + static_cast<std::uint32_t>(p * 101 + 99);
            if (!add({RegionClass::kFigure, {}, figure_image(seed, 320, 200), 288.0, 180.0})) {
                raise(ErrorCode::kInvalidArgument, "figure does not fit on its page");
            }
        }
    }
    return compose(pages);
}

}  // namespace mudoc::synthetic
