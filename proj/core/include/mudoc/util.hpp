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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mudoc {

using Bytes = std::vector<std::uint8_t>;

// UTF-8 helpers. "Characters" throughout the library are Unicode code points;
// invalid sequences count one code point per byte.

std::size_t utf8_length(std::string_view text) noexcept;

/// Byte offset of every code point boundary, including the final one (size == length + 1).
std::vector<std::size_t> utf8_boundaries(std::string_view text);

/// Substring by code point positions [first, last).
std::string utf8_slice(std::string_view text, std::size_t first, std::size_t last);

/// Keeps at most max_chars code points.
std::string utf8_truncate(std::string_view text, std::size_t max_chars);

std::string_view trim(std::string_view text) noexcept;

/// Splits on runs of blank lines (a newline, optional horizontal whitespace, another newline).
/// Pieces are trimmed and empty pieces dropped.
std::vector<std::string> split_paragraphs(std::string_view text);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

std::string to_lower_ascii(std::string_view text);

// Hashing and encoding.

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

/// Current UTC time as ISO 8601, seconds precision.
std::string utc_timestamp();

// Files. Errors raise IoError.

Bytes read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace mudoc
