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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mudoc/error.hpp"
#include "mudoc/util.hpp"

using namespace mudoc;

TEST(Utf8, LengthCountsCodePoints) {
    EXPECT_EQ(utf8_length(""), 0u);
    EXPECT_EQ(utf8_length("abc"), 3u);
    EXPECT_EQ(utf8_length("caf\xc3\xa9"), 4u);
    EXPECT_EQ(utf8_length("\xe2\x82\xac\xf0\x9f\x98\x80"), 2u);  // euro sign, emoji
}

TEST(Utf8, BoundariesEndWithByteLength) {
    const std::string s = "a\xc3\xa9z";
    const auto b = utf8_boundaries(s);
    ASSERT_EQ(b.size(), 4u);
    EXPECT_EQ(b[0], 0u);
    EXPECT_EQ(b[1], 1u);
    EXPECT_EQ(b[2], 3u);
    EXPECT_EQ(b[3], 4u);
}

TEST(Utf8, SliceAndTruncateNeverSplitACharacter) {
    const std::string s = "na\xc3\xafve caf\xc3\xa9";
    EXPECT_EQ(utf8_slice(s, 2, 5), "\xc3\xafve");
    EXPECT_EQ(utf8_truncate(s, 3), "na\xc3\xaf");
    EXPECT_EQ(utf8_truncate(s, 100), s);
}

TEST(Text, TrimAndParagraphs) {
    EXPECT_EQ(trim("  x y \n"), "x y");
    EXPECT_EQ(trim(" \t "), "");
    const auto p = split_paragraphs("First.\n\n\n  Second line\nstill second.\n \nThird.");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[0], "First.");
    EXPECT_EQ(p[1], "Second line\nstill second.");
    EXPECT_EQ(p[2], "Third.");
    EXPECT_TRUE(split_paragraphs(" \n\n ").empty());
}

TEST(Text, ReplaceAllAndLower) {
    EXPECT_EQ(replace_all("a-b-c", "-", "--"), "a--b--c");
    EXPECT_EQ(to_lower_ascii("MiXeD 1"), "mixed 1");
}

TEST(Hashing, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, Fnv1aKnownVector) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Base64, KnownVectorsAndRoundTrip) {
    const std::string s = "foobar";
    const Bytes b(s.begin(), s.end());
    EXPECT_EQ(base64_encode(b), "Zm9vYmFy");
    EXPECT_EQ(base64_encode(Bytes(b.begin(), b.begin() + 4)), "Zm9vYg==");
    EXPECT_EQ(base64_decode("Zm9vYg=="), Bytes(b.begin(), b.begin() + 4));
    Bytes all(256);
    for (int i = 0; i < 256; ++i) all[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    EXPECT_EQ(base64_decode(base64_encode(all)), all);
}

TEST(Files, AtomicWriteAndRead) {
    fixtures::TempDir dir;
    const auto path = dir / "nested.txt";
    write_file_atomic(path, std::string_view("hello"));
    EXPECT_EQ(read_text_file(path), "hello");
    write_file_atomic(path, std::string_view("again"));
    EXPECT_EQ(read_text_file(path), "again");
    try {
        read_file(dir / "missing");
        FAIL() << "expected IoError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kIoError);
    }
}

TEST(Errors, OnlyProviderUnavailableIsTransient) {
    EXPECT_TRUE(Error(ErrorCode::kProviderUnavailable, "x").transient());
    EXPECT_FALSE(Error(ErrorCode::kProviderRefusal, "x").transient());
    EXPECT_EQ(to_string(ErrorCode::kCorruptIndex), "CorruptIndex");
}
