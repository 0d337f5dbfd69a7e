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
#include <map>
#include <string>

#include "mudoc/providers.hpp"

namespace mudoc {

/// Where an HTTP-backed provider lives. base_url may carry a path prefix, e.g.
/// "http://127.0.0.1:9000/v1".
struct HttpEndpoint {
    std::string base_url;
    std::string api_key;  // sent as "Authorization: Bearer <key>" when non-empty
    std::chrono::milliseconds timeout{60000};
    std::string model;  // chat and embedding adapters forward it when non-empty
};

/// POST {base}/layout with {"image_png_base64", "page_index", "dpi"}; expects
/// {"regions": [{"bbox": [x0, y0, x1, y1], "class": "...", "confidence": c}]} in points.
class HttpLayoutDetector final : public LayoutDetector {
 public:
    explicit HttpLayoutDetector(HttpEndpoint endpoint);
    std::vector<LayoutRegion> detect_layout(const Raster& page_image, int page_index) override;
    std::string id() const override;

 private:
    HttpEndpoint endpoint_;
};

/// POST {base}/ocr with {"image_png_base64"}; expects {"text": "..."}.
class HttpOcrEngine final : public OcrEngine {
 public:
    explicit HttpOcrEngine(HttpEndpoint endpoint);
    std::string ocr_text(const Raster& snippet_image) override;
    std::string id() const override;

 private:
    HttpEndpoint endpoint_;
};

/// POST {base}/embed with {"family", "text"} or {"family", "image_png_base64"}; expects
/// {"embedding": [floats]} of the configured dimension. Results are normalized here.
class HttpEmbedder final : public Embedder {
 public:
    HttpEmbedder(HttpEndpoint endpoint, std::map<EmbeddingFamily, int> dims);
    EmbeddingVector embed_text(std::string_view text, EmbeddingFamily family) override;
    EmbeddingVector embed_image(const Raster& image, EmbeddingFamily family) override;
    int dim(EmbeddingFamily family) const override;
    std::string id() const override;

 private:
    EmbeddingVector request(const std::string& body, EmbeddingFamily family);
    HttpEndpoint endpoint_;
    std::map<EmbeddingFamily, int> dims_;
};

/// Chat-completions client for the common wire format: POST {base}/chat/completions with
/// system/user/assistant/tool messages, strict function tools taking one "query" string,
/// and optional streamed deltas.
class OpenAiChatProvider final : public ChatProvider {
 public:
    explicit OpenAiChatProvider(HttpEndpoint endpoint, bool stream = true);
    ChatOutcome chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                              const TokenSink& sink = {}) override;
    std::string id() const override;

    /// The request body as sent; exposed for inspection and tests.
    std::string request_body(const std::vector<ChatMessage>& messages, const ChatOptions& options, bool stream) const;

 private:
    HttpEndpoint endpoint_;
    bool stream_;
};

}  // namespace mudoc
