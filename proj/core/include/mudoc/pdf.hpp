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

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mudoc/raster.hpp"
#include "mudoc/util.hpp"

namespace mudoc::pdf {

struct PageSize {
    double width = 0.0;   // points
    double height = 0.0;  // points
};

/// Read-only view of a PDF file with a small built-in rasterizer.
///
/// The rasterizer covers what generated and simple documents use: vector paths and
/// rectangles, image XObjects (uncompressed, Flate, ASCIIHex/ASCII85; gray, RGB, CMYK,
/// indexed, stencil masks), form XObjects, and text drawn with the built-in monospace
/// bitmap face. Embedded font outlines, clipping, shading and JPEG images are not
/// interpreted; JPEG images render as a gray placeholder box.
class Document {
 public:
    /// Raises MalformedPdf for unreadable, encrypted, or page-less input.
    static Document parse(Bytes data);

    Document(Document&&) noexcept;
    Document& operator=(Document&&) noexcept;
    ~Document();

    std::size_t page_count() const noexcept;
    PageSize page_size(std::size_t page_index) const;

    /// Raster of round(width * dpi / 72) x round(height * dpi / 72) pixels.
    Raster render_page(std::size_t page_index, double dpi) const;

 private:
    struct Impl;
    explicit Document(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Builds simple PDFs with Courier text, filled rectangles and RGB images. Coordinates
/// here are native PDF user space (origin bottom-left, y up).
class Writer {
 public:
    class Page {
     public:
        void text(double x, double baseline_y, double font_size, std::string_view line);
        void rect(double x, double y, double width, double height, Rgb color);
        void image(double x, double y, double width, double height, const Raster& image);

     private:
        friend class Writer;
        PageSize size_;
        std::string content_;
        std::vector<Raster> images_;
    };

    Page& add_page(double width = 612.0, double height = 792.0);
    std::size_t page_count() const noexcept { return pages_.size(); }

    Bytes finish() const;

 private:
    std::vector<std::unique_ptr<Page>> pages_;
};

/// zlib helpers shared with the reader.
Bytes deflate(std::span<const std::uint8_t> data);
Bytes inflate(std::span<const std::uint8_t> data);

}  // namespace mudoc::pdf
