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

#include <zlib.h>

#include <cstdio>
#include <string>

#include "mudoc/error.hpp"
#include "mudoc/pdf.hpp"

namespace mudoc::pdf {
namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string escape_literal(std::string_view text) {
    std::string out;
    out.reserve(text.size() + 2);
    out.push_back('(');
    for (char c : text) {
        if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back(')');
    return out;
}

std::string color_op(Rgb c) {
    return fmt_num(c.r / 255.0) + " " + fmt_num(c.g / 255.0) + " " + fmt_num(c.b / 255.0) + " rg\n";
}

}  // namespace

Bytes deflate(std::span<const std::uint8_t> data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    Bytes out(bound);
    if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), Z_BEST_COMPRESSION) != Z_OK) {
        raise(ErrorCode::kIoError, "deflate failed");
    }
    out.resize(bound);
    return out;
}

Bytes inflate(std::span<const std::uint8_t> data) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) raise(ErrorCode::kDecodeError, "inflateInit failed");
    Bytes out;
    std::uint8_t buf[1 << 15];
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = ::inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
            inflateEnd(&zs);
            raise(ErrorCode::kDecodeError, "corrupt Flate stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        // Truncated streams end without Z_STREAM_END; keep what was decoded.
        if (rc == Z_BUF_ERROR || (zs.avail_in == 0 && zs.avail_out != 0)) break;
    }
    inflateEnd(&zs);
    return out;
}

void Writer::Page::text(double x, double baseline_y, double font_size, std::string_view line) {
    content_ += "BT /F1 " + fmt_num(font_size) + " Tf " + fmt_num(x) + " " + fmt_num(baseline_y) + " Td " +
                escape_literal(line) + " Tj ET\n";
}

void Writer::Page::rect(double x, double y, double width, double height, Rgb color) {
    content_ += "q " + color_op(color) + fmt_num(x) + " " + fmt_num(y) + " " + fmt_num(width) + " " +
                fmt_num(height) + " re f Q\n";
}

void Writer::Page::image(double x, double y, double width, double height, const Raster& img) {
    const auto name = "Im" + std::to_string(images_.size());
    images_.push_back(img);
    content_ += "q " + fmt_num(width) + " 0 0 " + fmt_num(height) + " " + fmt_num(x) + " " + fmt_num(y) + " cm /" +
                name + " Do Q\n";
}

Writer::Page& Writer::add_page(double width, double height) {
    auto page = std::make_unique<Page>();
    page->size_ = {width, height};
    pages_.push_back(std::move(page));
    return *pages_.back();
}

Bytes Writer::finish() const {
    std::string out = "%PDF-1.4\n%\xe2\xe3\xcf\xd3\n";
    std::vector<std::size_t> offsets;

    auto begin_obj = [&](std::size_t num) {
        if (offsets.size() < num) offsets.resize(num);
        offsets[num - 1] = out.size();
        out += std::to_string(num) + " 0 obj\n";
    };
    auto add_stream = [&](std::size_t num, const std::string& dict_extra, std::span<const std::uint8_t> raw) {
        const auto packed = deflate(raw);
        begin_obj(num);
        out += "<< " + dict_extra + "/Filter /FlateDecode /Length " + std::to_string(packed.size()) + " >>\nstream\n";
        out.append(reinterpret_cast<const char*>(packed.data()), packed.size());
        out += "\nendstream\nendobj\n";
    };

    // Object numbering: 1 catalog, 2 page tree, 3 font, then per page: page, content, images.
    std::vector<std::size_t> page_nums;
    std::size_t next = 4;
    for (const auto& page : pages_) {
        page_nums.push_back(next);
        next += 2 + page->images_.size();
    }

    begin_obj(1);
    out += "<< /Type /Catalog /Pages 2 0 R >>\nendobj\n";
    begin_obj(2);
    out += "<< /Type /Pages /Kids [";
    for (auto n : page_nums) out += " " + std::to_string(n) + " 0 R";
    out += " ] /Count " + std::to_string(pages_.size()) + " >>\nendobj\n";
    begin_obj(3);
    out += "<< /Type /Font /Subtype /Type1 /BaseFont /Courier /Encoding /WinAnsiEncoding >>\nendobj\n";

    for (std::size_t p = 0; p < pages_.size(); ++p) {
        const auto& page = *pages_[p];
        const std::size_t num = page_nums[p];
        begin_obj(num);
        out += "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 " + fmt_num(page.size_.width) + " " +
               fmt_num(page.size_.height) + "] /Resources << /Font << /F1 3 0 R >>";
        if (!page.images_.empty()) {
            out += " /XObject <<";
            for (std::size_t i = 0; i < page.images_.size(); ++i) {
                out += " /Im" + std::to_string(i) + " " + std::to_string(num + 2 + i) + " 0 R";
            }
            out += " >>";
        }
        out += " >> /Contents " + std::to_string(num + 1) + " 0 R >>\nendobj\n";
        add_stream(num + 1, "",
                   std::span(reinterpret_cast<const std::uint8_t*>(page.content_.data()), page.content_.size()));
        for (std::size_t i = 0; i < page.images_.size(); ++i) {
            const auto& img = page.images_[i];
            add_stream(num + 2 + i,
                       "/Type /XObject /Subtype /Image /Width " + std::to_string(img.width()) + " /Height " +
                           std::to_string(img.height()) + " /ColorSpace /DeviceRGB /BitsPerComponent 8 ",
                       img.pixels());
        }
    }

    const std::size_t xref_at = out.size();
    out += "xref\n0 " + std::to_string(offsets.size() + 1) + "\n0000000000 65535 f \n";
    for (auto off : offsets) {
        char line[32];
        std::snprintf(line, sizeof(line), "%010zu 00000 n \n", off);
        out += line;
    }
    out += "trailer\n<< /Size " + std::to_string(offsets.size() + 1) + " /Root 1 0 R >>\nstartxref\n" +
           std::to_string(xref_at) + "\n%%EOF\n";
    return Bytes(out.begin(), out.end());
}

}  // namespace mudoc::pdf
