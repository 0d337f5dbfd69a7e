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

#include "mudoc/http_providers.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "mudoc/error.hpp"
#include "mudoc/reference.hpp"

namespace mudoc {
namespace {

using nlohmann::json;

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

Url parse_url(const std::string& base) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) raise(ErrorCode::kInvalidArgument, "provider URL needs a scheme: " + base);
    const auto path_start = base.find('/', scheme_end + 3);
    Url url;
    url.origin = base.substr(0, path_start);
    url.prefix = path_start == std::string::npos ? "" : base.substr(path_start);
    while (!url.prefix.empty() && url.prefix.back() == '/') url.prefix.pop_back();
    return url;
}

httplib::Client make_client(const HttpEndpoint& ep, const Url& url) {
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
    client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
    client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));
    if (!ep.api_key.empty()) client.set_bearer_token_auth(ep.api_key);
    return client;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

// Raises the matching provider error for a failed exchange. client_error_code applies to 4xx.
[[noreturn]] void fail(const std::string& what, const httplib::Result& res, ErrorCode client_error_code) {
    if (!res) {
        raise(ErrorCode::kProviderUnavailable, what + " unreachable: " + httplib::to_string(res.error()));
    }
    const std::string detail = what + " returned HTTP " + std::to_string(res->status) + ": " +
                               utf8_truncate(res->body, 300);
    if (transient_status(res->status)) raise(ErrorCode::kProviderUnavailable, detail);
    raise(client_error_code, detail);
}

json post_json(const HttpEndpoint& ep, const std::string& route, const std::string& body, const std::string& what,
               ErrorCode client_error_code) {
    const auto url = parse_url(ep.base_url);
    auto client = make_client(ep, url);
    auto res = client.Post(url.prefix + route, body, "application/json");
    if (!res || res->status != 200) fail(what, res, client_error_code);
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        raise(ErrorCode::kProviderRefusal, what + " sent malformed JSON: " + e.what());
    }
}

std::string png_base64(const Raster& image) { return base64_encode(encode_png(image)); }

}  // namespace

// ---------------------------------------------------------------------------------------------

HttpLayoutDetector::HttpLayoutDetector(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    parse_url(endpoint_.base_url);
}

std::string HttpLayoutDetector::id() const { return "http-layout:" + endpoint_.base_url; }

std::vector<LayoutRegion> HttpLayoutDetector::detect_layout(const Raster& page, int page_index) {
    if (page.empty()) raise(ErrorCode::kDecodeError, "empty page image");
    const json body{{"image_png_base64", png_base64(page)}, {"page_index", page_index}, {"dpi", page.dpi()}};
    const auto reply = post_json(endpoint_, "/layout", body.dump(), "layout service", ErrorCode::kDecodeError);
    const double page_w = page.width() * 72.0 / page.dpi();
    const double page_h = page.height() * 72.0 / page.dpi();
    std::vector<LayoutRegion> regions;
    try {
        for (const auto& r : reply.at("regions")) {
            const auto cls = parse_region_class(r.at("class").get<std::string>());
            if (!cls) continue;  // outside the five-class set
            const auto& b = r.at("bbox");
            LayoutRegion region;
            region.page_index = page_index;
            region.region_class = *cls;
            region.bbox = {std::clamp(b.at(0).get<double>(), 0.0, page_w), std::clamp(b.at(1).get<double>(), 0.0, page_h),
                           std::clamp(b.at(2).get<double>(), 0.0, page_w), std::clamp(b.at(3).get<double>(), 0.0, page_h)};
            region.confidence = std::clamp(r.value("confidence", 1.0), 0.0, 1.0);
            if (region.bbox.valid()) regions.push_back(region);
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::kProviderRefusal, std::string("layout service sent an unexpected shape: ") + e.what());
    }
    sort_reading_order(regions);
    return regions;
}

// ---------------------------------------------------------------------------------------------

HttpOcrEngine::HttpOcrEngine(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) { parse_url(endpoint_.base_url); }

std::string HttpOcrEngine::id() const { return "http-ocr:" + endpoint_.base_url; }

std::string HttpOcrEngine::ocr_text(const Raster& image) {
    if (image.empty()) raise(ErrorCode::kDecodeError, "empty snippet image");
    const json body{{"image_png_base64", png_base64(image)}};
    const auto reply = post_json(endpoint_, "/ocr", body.dump(), "OCR service", ErrorCode::kDecodeError);
    try {
        return reply.at("text").get<std::string>();
    } catch (const json::exception& e) {
        raise(ErrorCode::kProviderRefusal, std::string("OCR service sent an unexpected shape: ") + e.what());
    }
}

// ---------------------------------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, std::map<EmbeddingFamily, int> dims)
    : endpoint_(std::move(endpoint)), dims_(std::move(dims)) {
    parse_url(endpoint_.base_url);
    for (auto f : kAllFamilies) {
        if (!dims_.contains(f)) dims_[f] = default_dim(f);
    }
}

std::string HttpEmbedder::id() const { return "http-embed:" + endpoint_.base_url + (endpoint_.model.empty() ? "" : "#" + endpoint_.model); }

int HttpEmbedder::dim(EmbeddingFamily family) const { return dims_.at(family); }

EmbeddingVector HttpEmbedder::request(const std::string& body, EmbeddingFamily family) {
    const auto reply = post_json(endpoint_, "/embed", body, "embedding service", ErrorCode::kProviderRefusal);
    EmbeddingVector out{family, {}};
    try {
        out.values = reply.at("embedding").get<std::vector<float>>();
    } catch (const json::exception& e) {
        raise(ErrorCode::kProviderRefusal, std::string("embedding service sent an unexpected shape: ") + e.what());
    }
    if (static_cast<int>(out.values.size()) != dim(family)) {
        raise(ErrorCode::kDimMismatch, "embedding service returned " + std::to_string(out.values.size()) +
                                           " values for " + std::string(to_string(family)) + ", expected " +
                                           std::to_string(dim(family)));
    }
    normalize(out.values);
    return out;
}

EmbeddingVector HttpEmbedder::embed_text(std::string_view text, EmbeddingFamily family) {
    check_modality(family, false);
    json body{{"family", to_string(family)}, {"text", std::string(text)}};
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;
    return request(body.dump(), family);
}

EmbeddingVector HttpEmbedder::embed_image(const Raster& image, EmbeddingFamily family) {
    check_modality(family, true);
    if (image.empty()) raise(ErrorCode::kDecodeError, "empty image");
    json body{{"family", to_string(family)}, {"image_png_base64", png_base64(image)}};
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;
    return request(body.dump(), family);
}

// ---------------------------------------------------------------------------------------------

OpenAiChatProvider::OpenAiChatProvider(HttpEndpoint endpoint, bool stream)
    : endpoint_(std::move(endpoint)), stream_(stream) {
    parse_url(endpoint_.base_url);
}

std::string OpenAiChatProvider::id() const { return "openai-chat:" + endpoint_.base_url + "#" + endpoint_.model; }

namespace {

json content_with_images(const ChatMessage& m) {
    if (m.images.empty()) return m.content;
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", m.content}});
    for (const auto& png : m.images) {
        if (!png) continue;
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(*png)}}}});
    }
    return parts;
}

json wire_message(const ChatMessage& m) {
    switch (m.role) {
        case ChatRole::kSystem:
            return {{"role", "system"}, {"content", m.content}};
        case ChatRole::kUser:
        case ChatRole::kImageAttachment:
            return {{"role", "user"}, {"content", content_with_images(m)}};
        case ChatRole::kToolResult:
            return {{"role", "tool"}, {"tool_call_id", m.tool_call_id}, {"content", m.content}};
        case ChatRole::kAssistant:
            break;
    }
    if (!m.is_tool_call()) return {{"role", "assistant"}, {"content", m.content}};
    const json args{{"query", m.tool_query}};
    return {{"role", "assistant"},
            {"content", nullptr},
            {"tool_calls", json::array({{{"id", m.tool_call_id},
                                         {"type", "function"},
                                         {"function", {{"name", to_string(*m.tool_name)}, {"arguments", args.dump()}}}}})}};
}

ChatOutcome outcome_from(const std::string& content, const std::string& tool_name, const std::string& arguments,
                         const std::string& call_id, bool tools_enabled) {
    if (!tool_name.empty()) {
        if (!tools_enabled) raise(ErrorCode::kProviderRefusal, "chat model called a tool while tools were disabled");
        const auto tool = parse_tool_name(tool_name);
        if (!tool) raise(ErrorCode::kProviderRefusal, "chat model called an unknown tool: " + tool_name);
        std::string query;
        try {
            query = json::parse(arguments).at("query").get<std::string>();
        } catch (const json::exception&) {
            raise(ErrorCode::kProviderRefusal, "chat model sent malformed tool arguments: " + utf8_truncate(arguments, 200));
        }
        return ChatOutcome::tool_call(*tool, std::move(query), call_id);
    }
    if (content.empty()) raise(ErrorCode::kProviderRefusal, "chat model returned neither text nor a tool call");
    return ChatOutcome::final_text(content);
}

[[noreturn]] void chat_failure(int status, const std::string& body) {
    const std::string detail = "chat service returned HTTP " + std::to_string(status) + ": " + utf8_truncate(body, 300);
    if (transient_status(status)) raise(ErrorCode::kProviderUnavailable, detail);
    if (body.find("context_length_exceeded") != std::string::npos) raise(ErrorCode::kBudgetExceeded, detail);
    raise(ErrorCode::kProviderRefusal, detail);
}

}  // namespace

std::string OpenAiChatProvider::request_body(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                                             bool stream) const {
    json body;
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;
    json wire = json::array();
    for (const auto& m : messages) wire.push_back(wire_message(m));
    body["messages"] = std::move(wire);
    if (options.tools_enabled && !options.tools.empty()) {
        json tools = json::array();
        for (const auto& t : options.tools) {
            tools.push_back(
                {{"type", "function"},
                 {"function",
                  {{"name", to_string(t.name)},
                   {"description", t.description},
                   {"strict", true},
                   {"parameters",
                    {{"type", "object"},
                     {"properties", {{"query", {{"type", "string"}, {"description", t.query_description}}}}},
                     {"required", json::array({"query"})},
                     {"additionalProperties", false}}}}}});
        }
        body["tools"] = std::move(tools);
        body["tool_choice"] = "auto";
        body["parallel_tool_calls"] = false;
    }
    if (options.max_tokens) body["max_tokens"] = *options.max_tokens;
    if (stream) body["stream"] = true;
    return body.dump();
}

ChatOutcome OpenAiChatProvider::chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                                              const TokenSink& sink) {
    check_chat_request(messages);
    const auto url = parse_url(endpoint_.base_url);
    auto client = make_client(endpoint_, url);
    const std::string path = url.prefix + "/chat/completions";

    if (!stream_) {
        auto res = client.Post(path, request_body(messages, options, false), "application/json");
        if (!res) fail("chat service", res, ErrorCode::kProviderRefusal);
        if (res->status != 200) chat_failure(res->status, res->body);
        std::string content, name, args, call_id;
        try {
            const auto reply = json::parse(res->body);
            const auto& msg = reply.at("choices").at(0).at("message");
            if (msg.contains("refusal") && msg["refusal"].is_string()) {
                raise(ErrorCode::kProviderRefusal, "chat model refused: " + msg["refusal"].get<std::string>());
            }
            if (msg.contains("content") && msg["content"].is_string()) content = msg["content"].get<std::string>();
            if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
                const auto& call = msg["tool_calls"][0];
                call_id = call.value("id", "");
                name = call.at("function").at("name").get<std::string>();
                args = call.at("function").value("arguments", "");
            }
        } catch (const json::exception& e) {
            raise(ErrorCode::kProviderRefusal, std::string("chat service sent an unexpected shape: ") + e.what());
        }
        if (sink && name.empty() && !content.empty()) sink(content);
        return outcome_from(content, name, args, call_id, options.tools_enabled);
    }

    httplib::Request req;
    req.method = "POST";
    req.path = path;
    req.body = request_body(messages, options, true);
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "text/event-stream");
    if (!endpoint_.api_key.empty()) req.set_header("Authorization", "Bearer " + endpoint_.api_key);

    int status = 0;
    std::string error_body;
    std::string pending;
    std::string content, name, args, call_id;
    bool done = false;
    std::optional<Error> stream_error;

    auto handle_event = [&](const std::string& data) {
        if (data == "[DONE]") {
            done = true;
            return;
        }
        json event;
        try {
            event = json::parse(data);
        } catch (const json::exception&) {
            stream_error = Error(ErrorCode::kProviderRefusal, "chat stream carried malformed JSON");
            return;
        }
        if (event.contains("error")) {
            const std::string text = event["error"].dump();
            stream_error = text.find("context_length_exceeded") != std::string::npos
                               ? Error(ErrorCode::kBudgetExceeded, "chat stream error: " + text)
                               : Error(ErrorCode::kProviderUnavailable, "chat stream error: " + text);
            return;
        }
        if (!event.contains("choices") || !event["choices"].is_array() || event["choices"].empty()) return;
        const auto& delta = event["choices"][0].value("delta", json::object());
        if (delta.contains("content") && delta["content"].is_string()) {
            const auto piece = delta["content"].get<std::string>();
            if (!piece.empty()) {
                content += piece;
                if (sink) sink(piece);
            }
        }
        if (delta.contains("refusal") && delta["refusal"].is_string()) {
            stream_error = Error(ErrorCode::kProviderRefusal, "chat model refused: " + delta["refusal"].get<std::string>());
        }
        if (delta.contains("tool_calls") && delta["tool_calls"].is_array()) {
            for (const auto& call : delta["tool_calls"]) {
                if (call.value("index", 0) != 0) continue;  // only the first call is honored
                if (call.contains("id") && call["id"].is_string()) call_id = call["id"].get<std::string>();
                if (call.contains("function")) {
                    const auto& fn = call["function"];
                    if (fn.contains("name") && fn["name"].is_string()) name += fn["name"].get<std::string>();
                    if (fn.contains("arguments") && fn["arguments"].is_string()) args += fn["arguments"].get<std::string>();
                }
            }
        }
    };

    req.response_handler = [&](const httplib::Response& response) {
        status = response.status;
        return true;
    };
    req.content_receiver = [&](const char* data, size_t n, uint64_t, uint64_t) {
        if (status != 200) {
            error_body.append(data, n);
            return true;
        }
        pending.append(data, n);
        std::size_t nl;
        while ((nl = pending.find('\n')) != std::string::npos) {
            std::string line = pending.substr(0, nl);
            pending.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.rfind("data:", 0) != 0) continue;
            std::string payload = line.substr(5);
            if (!payload.empty() && payload.front() == ' ') payload.erase(0, 1);
            handle_event(payload);
            if (stream_error || done) return !stream_error.has_value();
        }
        return true;
    };

    auto res = client.send(req);
    if (stream_error) throw *stream_error;
    if (status != 0 && status != 200) chat_failure(status, error_body);
    if (!res && !done) fail("chat service", res, ErrorCode::kProviderRefusal);
    if (!done && content.empty() && name.empty()) {
        raise(ErrorCode::kProviderUnavailable, "chat stream ended before completion");
    }
    return outcome_from(content, name, args, call_id, options.tools_enabled);
}

}  // namespace mudoc
