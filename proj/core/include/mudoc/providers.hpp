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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mudoc/chat.hpp"
#include "mudoc/embedding.hpp"
#include "mudoc/geometry.hpp"
#include "mudoc/raster.hpp"

namespace mudoc {

struct LayoutRegion {
    int page_index = 0;
    BBox bbox;
    RegionClass region_class = RegionClass::kText;
    double confidence = 0.0;
};

// Provider interfaces. Implementations must be safe to call from several threads.

class LayoutDetector {
 public:
    virtual ~LayoutDetector() = default;
    /// Regions in reading order, bboxes in points relative to a page rendered at page_image.dpi().
    virtual std::vector<LayoutRegion> detect_layout(const Raster& page_image, int page_index) = 0;
    virtual std::string id() const = 0;
};

class OcrEngine {
 public:
    virtual ~OcrEngine() = default;
    virtual std::string ocr_text(const Raster& snippet_image) = 0;
    virtual std::string id() const = 0;
};

class ChatProvider {
 public:
    virtual ~ChatProvider() = default;
    /// messages[0] must be the system message. Content deltas go to sink when provided.
    virtual ChatOutcome chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                                      const TokenSink& sink = {}) = 0;
    virtual std::string id() const = 0;
};

class Embedder {
 public:
    virtual ~Embedder() = default;
    /// Unit-normalized. Raises ModalityMismatch for the joint_image family.
    virtual EmbeddingVector embed_text(std::string_view text, EmbeddingFamily family) = 0;
    /// Unit-normalized. Raises ModalityMismatch for any family but joint_image.
    virtual EmbeddingVector embed_image(const Raster& image, EmbeddingFamily family) = 0;
    virtual int dim(EmbeddingFamily family) const = 0;
    virtual std::string id() const = 0;
};

/// Validates the chat_complete preconditions shared by every implementation.
void check_chat_request(const std::vector<ChatMessage>& messages);

/// Raises ModalityMismatch unless the family takes the given modality.
void check_modality(EmbeddingFamily family, bool is_image);

// Call policy shared by all adapters: bounded in-flight requests and retries with
// exponential backoff for transient failures.

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class Semaphore {
 public:
    explicit Semaphore(int permits);
    void acquire();
    void release();
    int in_use() const;
    int peak() const;

 private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    int permits_;
    int in_use_ = 0;
    int peak_ = 0;
};

struct CallCounters {
    std::atomic<std::uint64_t> layout{0};
    std::atomic<std::uint64_t> ocr{0};
    std::atomic<std::uint64_t> chat{0};
    std::atomic<std::uint64_t> embed{0};

    std::uint64_t total() const noexcept { return layout + ocr + chat + embed; }
};

class CallGuard {
 public:
    CallGuard(int max_in_flight, RetryPolicy retry, Sleeper sleeper = {});

    /// Runs fn under the in-flight cap; retries while fn throws a transient Error and
    /// retry_allowed() still holds. The final failure is rethrown as ProviderUnavailable.
    void run(const std::function<void()>& fn, const std::function<bool()>& retry_allowed = {});

    const RetryPolicy& retry() const noexcept { return retry_; }
    Semaphore& semaphore() noexcept { return semaphore_; }
    std::uint64_t retries() const noexcept { return retries_; }

 private:
    Semaphore semaphore_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::atomic<std::uint64_t> retries_{0};
};

/// The four providers an index build or a chat session needs, behind guards that count
/// every call.
struct ProviderSet {
    std::shared_ptr<LayoutDetector> layout;
    std::shared_ptr<OcrEngine> ocr;
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<CallCounters> counters = std::make_shared<CallCounters>();
};

/// Wraps each provider of raw in a guard sharing one counter block.
ProviderSet guard_providers(const ProviderSet& raw, int max_in_flight, RetryPolicy retry, Sleeper sleeper = {});

}  // namespace mudoc
