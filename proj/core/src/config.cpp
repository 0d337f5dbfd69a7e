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

#include "mudoc/config.hpp"

#include <cstdlib>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mudoc/error.hpp"
#include "mudoc/http_providers.hpp"
#include "mudoc/reference.hpp"
#include "mudoc/util.hpp"

namespace mudoc {
namespace {

using nlohmann::json;

json endpoint_json(const EndpointConfig& e, bool reveal) {
    return {{"url", e.url}, {"api_key", reveal || e.api_key.empty() ? e.api_key : "***"}, {"model", e.model}};
}

void endpoint_from(const json& j, EndpointConfig& e) {
    e.url = j.at("url").get<std::string>();
    e.api_key = j.at("api_key").get<std::string>();
    e.model = j.at("model").get<std::string>();
}

json config_json(const Config& c, bool reveal) {
    const auto& p = c.providers;
    return {
        {"ingestion",
         {{"dpi", c.ingestion.dpi},
          {"chunk_size", c.ingestion.chunk_size},
          {"chunk_overlap", c.ingestion.chunk_overlap},
          {"summary_threshold", c.ingestion.summary_threshold},
          {"confidence_threshold", c.ingestion.confidence_threshold},
          {"separator", c.ingestion.separator},
          {"caption_max_chars", c.ingestion.caption_max_chars},
          {"workers", c.ingestion.workers},
          {"keep_page_rasters", c.ingestion.keep_page_rasters}}},
        {"retrieval", {{"k", c.retrieval.k}}},
        {"orchestrator",
         {{"context_chars", c.orchestrator.context_chars},
          {"map_threshold", c.orchestrator.map_threshold},
          {"map_min_chars", c.orchestrator.map_min_chars},
          {"max_tool_calls", c.orchestrator.max_tool_calls},
          {"text_tool_description", c.orchestrator.text_tool_description},
          {"text_query_description", c.orchestrator.text_query_description},
          {"image_tool_description", c.orchestrator.image_tool_description},
          {"image_query_description", c.orchestrator.image_query_description}}},
        {"server",
         {{"host", c.server.host},
          {"port", c.server.port},
          {"cors_origin", c.server.cors_origin},
          {"session_log", c.server.session_log},
          {"static_dir", c.server.static_dir}}},
        {"providers",
         {{"layout", endpoint_json(p.layout, reveal)},
          {"ocr", endpoint_json(p.ocr, reveal)},
          {"embed", endpoint_json(p.embed, reveal)},
          {"chat", endpoint_json(p.chat, reveal)},
          {"chat_stream", p.chat_stream},
          {"timeout_ms", p.timeout.count()},
          {"max_in_flight", p.max_in_flight},
          {"retry_attempts", p.retry.attempts},
          {"retry_backoff_ms", p.retry.initial_backoff.count()},
          {"retry_multiplier", p.retry.multiplier},
          {"text_dim", p.text_dim},
          {"joint_dim", p.joint_dim},
          {"embed_seed", p.embed_seed}}},
        {"index", {{"mmap", c.index.mmap}}},
    };
}

void config_from(const json& j, Config& c) {
    const auto& in = j.at("ingestion");
    c.ingestion.dpi = in.at("dpi").get<double>();
    c.ingestion.chunk_size = in.at("chunk_size").get<int>();
    c.ingestion.chunk_overlap = in.at("chunk_overlap").get<int>();
    c.ingestion.summary_threshold = in.at("summary_threshold").get<int>();
    c.ingestion.confidence_threshold = in.at("confidence_threshold").get<double>();
    c.ingestion.separator = in.at("separator").get<std::string>();
    c.ingestion.caption_max_chars = in.at("caption_max_chars").get<int>();
    c.ingestion.workers = in.at("workers").get<int>();
    c.ingestion.keep_page_rasters = in.at("keep_page_rasters").get<bool>();

    c.retrieval.k = j.at("retrieval").at("k").get<int>();

    const auto& o = j.at("orchestrator");
    c.orchestrator.context_chars = o.at("context_chars").get<std::size_t>();
    c.orchestrator.map_threshold = o.at("map_threshold").get<double>();
    c.orchestrator.map_min_chars = o.at("map_min_chars").get<int>();
    c.orchestrator.max_tool_calls = o.at("max_tool_calls").get<int>();
    c.orchestrator.text_tool_description = o.at("text_tool_description").get<std::string>();
    c.orchestrator.text_query_description = o.at("text_query_description").get<std::string>();
    c.orchestrator.image_tool_description = o.at("image_tool_description").get<std::string>();
    c.orchestrator.image_query_description = o.at("image_query_description").get<std::string>();

    const auto& s = j.at("server");
    c.server.host = s.at("host").get<std::string>();
    c.server.port = s.at("port").get<int>();
    c.server.cors_origin = s.at("cors_origin").get<std::string>();
    c.server.session_log = s.at("session_log").get<std::string>();
    c.server.static_dir = s.at("static_dir").get<std::string>();

    const auto& p = j.at("providers");
    endpoint_from(p.at("layout"), c.providers.layout);
    endpoint_from(p.at("ocr"), c.providers.ocr);
    endpoint_from(p.at("embed"), c.providers.embed);
    endpoint_from(p.at("chat"), c.providers.chat);
    c.providers.chat_stream = p.at("chat_stream").get<bool>();
    c.providers.timeout = std::chrono::milliseconds(p.at("timeout_ms").get<long long>());
    c.providers.max_in_flight = p.at("max_in_flight").get<int>();
    c.providers.retry.attempts = p.at("retry_attempts").get<int>();
    c.providers.retry.initial_backoff = std::chrono::milliseconds(p.at("retry_backoff_ms").get<long long>());
    c.providers.retry.multiplier = p.at("retry_multiplier").get<double>();
    c.providers.text_dim = p.at("text_dim").get<int>();
    c.providers.joint_dim = p.at("joint_dim").get<int>();
    c.providers.embed_seed = p.at("embed_seed").get<std::uint64_t>();

    c.index.mmap = j.at("index").at("mmap").get<bool>();
}

bool compatible(const json& base, const json& value) {
    if (base.is_number()) return value.is_number();
    return base.type() == value.type();
}

// Overlays patch onto base in place, insisting that every key already exists with a compatible type.
void overlay(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object()) raise(ErrorCode::kInvalidArgument, "config section " + path + " must be an object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string& key = it.key();
        const json& value = it.value();
        const std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) raise(ErrorCode::kInvalidArgument, "unknown config key: " + here);
        auto& slot = base[key];
        if (slot.is_object()) {
            overlay(slot, value, here);
        } else if (!compatible(slot, value)) {
            raise(ErrorCode::kInvalidArgument, "config key " + here + " expects a " + slot.type_name());
        } else {
            slot = value;
        }
    }
}

void apply_patch(Config& c, const json& patch) {
    json base = config_json(c, true);
    overlay(base, patch, "");
    Config next;
    try {
        config_from(base, next);
    } catch (const json::exception& e) {
        raise(ErrorCode::kInvalidArgument, std::string("bad config value: ") + e.what());
    }
    c = std::move(next);
}

}  // namespace

std::string Config::to_json(bool reveal_secrets) const { return config_json(*this, reveal_secrets).dump(2); }

void Config::merge_json(std::string_view text) {
    json patch;
    try {
        patch = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    apply_patch(*this, patch);
}

void Config::set(std::string_view dotted_key, std::string_view value) {
    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
        const auto dot = dotted_key.find('.', start);
        parts.emplace_back(dotted_key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (parts.back().empty()) raise(ErrorCode::kInvalidArgument, "bad config key: " + std::string(dotted_key));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    const json base = config_json(*this, true);
    const json* slot = &base;
    for (const auto& part : parts) {
        if (!slot->is_object() || !slot->contains(part)) {
            raise(ErrorCode::kInvalidArgument, "unknown config key: " + std::string(dotted_key));
        }
        slot = &(*slot)[part];
    }
    json patch;
    if (slot->is_string()) {
        patch = std::string(value);
    } else {
        try {
            patch = json::parse(value);
        } catch (const json::exception&) {
            raise(ErrorCode::kInvalidArgument, "config key " + std::string(dotted_key) + " expects a " + slot->type_name());
        }
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, std::move(patch)}};
    apply_patch(*this, patch);
}

void Config::apply_environment(const std::function<std::optional<std::string>(const char*)>& getenv) {
    auto get = [&](const char* name) -> std::optional<std::string> {
        if (getenv) return getenv(name);
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    };
    if (auto v = get("MUDOC_LAYOUT_URL")) providers.layout.url = *v;
    if (auto v = get("MUDOC_OCR_URL")) providers.ocr.url = *v;
    if (auto v = get("MUDOC_EMBED_URL")) providers.embed.url = *v;
    if (auto v = get("MUDOC_EMBED_API_KEY")) providers.embed.api_key = *v;
    if (auto v = get("MUDOC_CHAT_URL")) providers.chat.url = *v;
    if (auto v = get("MUDOC_CHAT_MODEL")) providers.chat.model = *v;
    if (auto v = get("MUDOC_CHAT_API_KEY")) {
        providers.chat.api_key = *v;
    } else if (auto k = get("OPENAI_API_KEY"); k && providers.chat.api_key.empty()) {
        providers.chat.api_key = *k;
    }
    if (auto v = get("MUDOC_PROVIDER_TIMEOUT")) {
        // Seconds, as fractional values are rarely useful for remote model calls.
        char* end = nullptr;
        const double secs = std::strtod(v->c_str(), &end);
        if (end == v->c_str() || *end != '\0' || !(secs > 0)) {
            raise(ErrorCode::kInvalidArgument, "MUDOC_PROVIDER_TIMEOUT must be a positive number of seconds");
        }
        providers.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
    }
}

void Config::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) raise(ErrorCode::kInvalidArgument, std::string("invalid config: ") + what);
    };
    require(ingestion.dpi >= 36 && ingestion.dpi <= 1200, "ingestion.dpi must be within [36, 1200]");
    require(ingestion.chunk_size > 0, "ingestion.chunk_size must be positive");
    require(ingestion.chunk_overlap >= 0 && ingestion.chunk_overlap < ingestion.chunk_size,
            "ingestion.chunk_overlap must be within [0, chunk_size)");
    require(ingestion.summary_threshold >= 0, "ingestion.summary_threshold must be non-negative");
    require(ingestion.confidence_threshold >= 0 && ingestion.confidence_threshold <= 1,
            "ingestion.confidence_threshold must be within [0, 1]");
    require(ingestion.caption_max_chars > 0, "ingestion.caption_max_chars must be positive");
    require(ingestion.workers > 0, "ingestion.workers must be positive");
    require(retrieval.k > 0, "retrieval.k must be positive");
    require(orchestrator.context_chars > 0, "orchestrator.context_chars must be positive");
    require(orchestrator.max_tool_calls >= 0, "orchestrator.max_tool_calls must be non-negative");
    require(orchestrator.map_min_chars >= 0, "orchestrator.map_min_chars must be non-negative");
    require(server.port >= 0 && server.port <= 65535, "server.port must be within [0, 65535]");
    require(providers.timeout.count() > 0, "providers.timeout_ms must be positive");
    require(providers.max_in_flight > 0, "providers.max_in_flight must be positive");
    require(providers.retry.attempts > 0, "providers.retry_attempts must be positive");
    require(providers.retry.multiplier >= 1, "providers.retry_multiplier must be at least 1");
    require(providers.text_dim >= 8 && providers.joint_dim >= 8, "embedding dims must be at least 8");
}

Config load_config(const std::optional<std::filesystem::path>& file) {
    Config config;
    if (file) config.merge_json(read_text_file(*file));
    config.apply_environment();
    config.validate();
    return config;
}

ProviderSet make_providers(const ProvidersConfig& config, Sleeper sleeper) {
    auto endpoint = [&](const EndpointConfig& e) { return HttpEndpoint{e.url, e.api_key, config.timeout, e.model}; };
    ProviderSet raw;
    if (config.layout.url.empty()) {
        raw.layout = std::make_shared<ReferenceLayoutDetector>();
    } else {
        raw.layout = std::make_shared<HttpLayoutDetector>(endpoint(config.layout));
    }
    if (config.ocr.url.empty()) {
        raw.ocr = std::make_shared<ReferenceOcr>();
    } else {
        raw.ocr = std::make_shared<HttpOcrEngine>(endpoint(config.ocr));
    }
    if (config.embed.url.empty()) {
        raw.embedder = std::make_shared<HashingEmbedder>(config.text_dim, config.joint_dim, config.embed_seed);
    } else {
        std::map<EmbeddingFamily, int> dims{{EmbeddingFamily::kCtxText, config.text_dim},
                                            {EmbeddingFamily::kQueryText, config.text_dim},
                                            {EmbeddingFamily::kJointText, config.joint_dim},
                                            {EmbeddingFamily::kJointImage, config.joint_dim}};
        raw.embedder = std::make_shared<HttpEmbedder>(endpoint(config.embed), dims);
    }
    if (config.chat.url.empty()) {
        raw.chat = std::make_shared<ReferenceChatProvider>();
    } else {
        raw.chat = std::make_shared<OpenAiChatProvider>(endpoint(config.chat), config.chat_stream);
    }
    return guard_providers(raw, config.max_in_flight, config.retry, std::move(sleeper));
}

}  // namespace mudoc
