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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "mudoc/providers.hpp"

namespace mudoc {

struct IngestionConfig {
    double dpi = 200.0;
    int chunk_size = 2000;
    int chunk_overlap = 500;
    int summary_threshold = 1000;
    double confidence_threshold = 0.5;
    std::string separator = "\n\n";
    int caption_max_chars = 300;
    int workers = 4;
    bool keep_page_rasters = true;
};

struct RetrievalConfig {
    int k = 5;
};

struct OrchestratorConfig {
    std::size_t context_chars = 65536;
    double map_threshold = 0.60;
    int map_min_chars = 100;
    int max_tool_calls = 6;
    std::string text_tool_description =
        "Search the document text. Returns the most relevant passages with their chunk ids and pages.";
    std::string text_query_description = "A focused search query describing the information needed.";
    std::string image_tool_description =
        "Search the document figures. Returns figure filenames, captions and descriptions, followed by the images.";
    std::string image_query_description = "A short description of the figure being looked for.";
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors_origin = "*";
    std::string session_log;  // empty disables the append-only session log
    std::string static_dir;   // optional web UI bundle
};

/// One external service. An empty url selects the in-process reference implementation.
struct EndpointConfig {
    std::string url;
    std::string api_key;
    std::string model;
};

struct ProvidersConfig {
    EndpointConfig layout;
    EndpointConfig ocr;
    EndpointConfig embed;
    EndpointConfig chat{"", "", "gpt-4o"};
    bool chat_stream = true;
    std::chrono::milliseconds timeout{60000};
    int max_in_flight = 4;
    RetryPolicy retry;
    int text_dim = 768;
    int joint_dim = 512;
    std::uint64_t embed_seed = 0x6d75646f63ULL;
};

struct IndexConfig {
    bool mmap = true;
};

struct Config {
    IngestionConfig ingestion;
    RetrievalConfig retrieval;
    OrchestratorConfig orchestrator;
    ServerConfig server;
    ProvidersConfig providers;
    IndexConfig index;

    /// Pretty JSON of the effective values; API keys are masked unless reveal_secrets.
    std::string to_json(bool reveal_secrets = false) const;

    /// Overlays a JSON document on top of *this. Unknown keys raise InvalidArgument.
    void merge_json(std::string_view text);

    /// Sets one dotted key, e.g. "ingestion.dpi" = "150". The value is parsed as JSON
    /// when possible and taken as a plain string otherwise.
    void set(std::string_view dotted_key, std::string_view value);

    /// Applies MUDOC_* provider variables plus OPENAI_API_KEY as a chat key fallback.
    void apply_environment(const std::function<std::optional<std::string>(const char*)>& getenv = {});

    /// Raises InvalidArgument when a value is out of range.
    void validate() const;
};

/// Defaults, then the file (if given), then the environment.
Config load_config(const std::optional<std::filesystem::path>& file);

/// Builds the provider set described by the config and wraps it with the retry and in-flight guards.
ProviderSet make_providers(const ProvidersConfig& config, Sleeper sleeper = {});

}  // namespace mudoc
