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

#include <cmath>

#include <gtest/gtest.h>

#include "mudoc/error.hpp"
#include "mudoc/geometry.hpp"
#include "mudoc/pdf.hpp"
#include "mudoc/raster.hpp"
#include "mudoc/synthetic.hpp"

using namespace mudoc;

TEST(Geometry, RegionClassNamesRoundTrip) {
    for (auto cls : {RegionClass::kTitle, RegionClass::kText, RegionClass::kFigure, RegionClass::kList, RegionClass::kTable}) {
        EXPECT_EQ(parse_region_class(to_string(cls)), cls);
    }
    EXPECT_FALSE(parse_region_class("caption").has_value());
}

TEST(Geometry, BBoxValidity) {
    EXPECT_TRUE((BBox{0, 0, 10, 10}).valid());
    EXPECT_FALSE((BBox{5, 0, 5, 10}).valid());
    EXPECT_TRUE((BBox{0, 0, 612, 792}).within(612, 792));
    EXPECT_FALSE((BBox{0, 0, 613, 792}).within(612, 792));
}

TEST(Png, RoundTripKeepsPixels) {
    Raster img(7, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) img.set(x, y, {static_cast<std::uint8_t>(x * 30), static_cast<std::uint8_t>(y * 50), 9});
    }
    const auto back = decode_png(encode_png(img));
    ASSERT_EQ(back.width(), 7);
    ASSERT_EQ(back.height(), 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) {
            EXPECT_EQ(back.at(x, y).r, img.at(x, y).r);
            EXPECT_EQ(back.at(x, y).g, img.at(x, y).g);
        }
    }
}

TEST(Png, GarbageRaisesDecodeError) {
    const Bytes junk{1, 2, 3, 4, 5};
    try {
        decode_png(junk);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDecodeError);
    }
}

TEST(Deflate, RoundTrip) {
    Bytes data(10000);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i % 17);
    EXPECT_EQ(pdf::inflate(pdf::deflate(data)), data);
}

TEST(Pdf, EmptyInputIsMalformed) {
    try {
        pdf::Document::parse({});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kMalformedPdf);
    }
}

TEST(Pdf, ZeroPageDocumentIsMalformed) {
    pdf::Writer w;
    try {
        pdf::Document::parse(w.finish());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kMalformedPdf);
    }
}

TEST(Pdf, WriterOutputParsesWithPageSizes) {
    pdf::Writer w;
    w.add_page(612, 792).text(72, 100, 14.4, "Hello");
    w.add_page(300, 400);
    const auto doc = pdf::Document::parse(w.finish());
    ASSERT_EQ(doc.page_count(), 2u);
    EXPECT_DOUBLE_EQ(doc.page_size(1).width, 300);
    EXPECT_DOUBLE_EQ(doc.page_size(1).height, 400);
}

TEST(Pdf, RasterSizeFollowsMediaBoxAndDpi) {
    pdf::Writer w;
    w.add_page(612, 792);
    w.add_page(595.3, 841.9);
    const auto doc = pdf::Document::parse(w.finish());
    for (double dpi : {72.0, 100.0, 150.0, 200.0}) {
        for (std::size_t p = 0; p < 2; ++p) {
            const auto size = doc.page_size(p);
            const auto r = doc.render_page(p, dpi);
            EXPECT_NEAR(r.width(), size.width * dpi / 72.0, 1.0);
            EXPECT_NEAR(r.height(), size.height * dpi / 72.0, 1.0);
        }
    }
}

TEST(Pdf, BlankPageRendersWhite) {
    pdf::Writer w;
    w.add_page(100, 100);
    const auto r = pdf::Document::parse(w.finish()).render_page(0, 72);
    for (int y = 0; y < r.height(); y += 7) {
        for (int x = 0; x < r.width(); x += 7) EXPECT_EQ(r.at(x, y).r, 255);
    }
}

TEST(Synthetic, GeneratorReportsPagesAndBlocks) {
    const auto doc = synthetic::generate({});
    EXPECT_EQ(doc.pages, 5);
    EXPECT_EQ(doc.count(RegionClass::kFigure), 2u);
    EXPECT_EQ(doc.count(RegionClass::kTitle), 1u);
    EXPECT_EQ(pdf::Document::parse(doc.pdf).page_count(), 5u);
    for (const auto& b : doc.blocks) {
        EXPECT_TRUE(b.bbox.valid());
        EXPECT_TRUE(b.bbox.within(synthetic::kPageWidth, synthetic::kPageHeight));
    }
}

TEST(Synthetic, WrapRespectsColumns) {
    const auto wrapped = synthetic::wrap(std::string(130, 'x') + " short words here", 56);
    std::size_t start = 0;
    while (start < wrapped.size()) {
        auto end = wrapped.find('\n', start);
        if (end == std::string::npos) end = wrapped.size();
        EXPECT_LE(end - start, 56u);
        start = end + 1;
    }
}
