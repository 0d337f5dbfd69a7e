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

#include "mudoc/providers.hpp"

#include <thread>

#include "mudoc/error.hpp"

namespace mudoc {

void check_chat_request(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) raise(ErrorCode::kInvalidArgument, "chat request has no messages");
    if (messages.front().role != ChatRole::kSystem) {
        raise(ErrorCode::kInvalidArgument, "chat request must start with the system message");
    }
}

void check_modality(EmbeddingFamily family, bool is_image) {
    if ((family == EmbeddingFamily::kJointImage) != is_image) {
        raise(ErrorCode::kModalityMismatch, std::string("family ") + std::string(to_string(family)) + " does not take " +
                                                (is_image ? "images" : "text"));
    }
}

Semaphore::Semaphore(int permits) : permits_(permits < 1 ? 1 : permits) {}

void Semaphore::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_use_ < permits_; });
    ++in_use_;
    peak_ = std::max(peak_, in_use_);
}

void Semaphore::release() {
    {
        std::lock_guard lock(mutex_);
        --in_use_;
    }
    cv_.notify_one();
}

int Semaphore::in_use() const {
    std::lock_guard lock(mutex_);
    return in_use_;
}

int Semaphore::peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

CallGuard::CallGuard(int max_in_flight, RetryPolicy retry, Sleeper sleeper)
    : semaphore_(max_in_flight), retry_(retry), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (retry_.attempts < 1) retry_.attempts = 1;
}

void CallGuard::run(const std::function<void()>& fn, const std::function<bool()>& retry_allowed) {
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            semaphore_.acquire();
            struct Release {
                Semaphore& s;
                ~Release() { s.release(); }
            } release{semaphore_};
            fn();
            return;
        } catch (const Error& e) {
            const bool again = e.transient() && attempt < retry_.attempts && (!retry_allowed || retry_allowed());
            if (!again) throw;
        }
        ++retries_;
        sleeper_(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(backoff.count() * retry_.multiplier));
    }
}

namespace {

class GuardedLayout final : public LayoutDetector {
 public:
    GuardedLayout(std::shared_ptr<LayoutDetector> inner, std::shared_ptr<CallGuard> guard,
                  std::shared_ptr<CallCounters> counters)
        : inner_(std::move(inner)), guard_(std::move(guard)), counters_(std::move(counters)) {}

    std::vector<LayoutRegion> detect_layout(const Raster& page, int page_index) override {
        std::vector<LayoutRegion> out;
        guard_->run([&] {
            ++counters_->layout;
            out = inner_->detect_layout(page, page_index);
        });
        return out;
    }
    std::string id() const override { return inner_->id(); }

 private:
    std::shared_ptr<LayoutDetector> inner_;
    std::shared_ptr<CallGuard> guard_;
    std::shared_ptr<CallCounters> counters_;
};

class GuardedOcr final : public OcrEngine {
 public:
    GuardedOcr(std::shared_ptr<OcrEngine> inner, std::shared_ptr<CallGuard> guard,
               std::shared_ptr<CallCounters> counters)
        : inner_(std::move(inner)), guard_(std::move(guard)), counters_(std::move(counters)) {}

    std::string ocr_text(const Raster& image) override {
        std::string out;
        guard_->run([&] {
            ++counters_->ocr;
            out = inner_->ocr_text(image);
        });
        return out;
    }
    std::string id() const override { return inner_->id(); }

 private:
    std::shared_ptr<OcrEngine> inner_;
    std::shared_ptr<CallGuard> guard_;
    std::shared_ptr<CallCounters> counters_;
};

class GuardedChat final : public ChatProvider {
 public:
    GuardedChat(std::shared_ptr<ChatProvider> inner, std::shared_ptr<CallGuard> guard,
                std::shared_ptr<CallCounters> counters)
        : inner_(std::move(inner)), guard_(std::move(guard)), counters_(std::move(counters)) {}

    ChatOutcome chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options,
                              const TokenSink& sink) override {
        check_chat_request(messages);
        ChatOutcome out;
        // Once a delta reached the caller a retry would duplicate text, so stop retrying.
        bool streamed = false;
        TokenSink tracking;
        if (sink) {
            tracking = [&](std::string_view delta) {
                streamed = true;
                sink(delta);
            };
        }
        guard_->run(
            [&] {
                ++counters_->chat;
                out = inner_->chat_complete(messages, options, tracking);
            },
            [&] { return !streamed; });
        return out;
    }
    std::string id() const override { return inner_->id(); }

 private:
    std::shared_ptr<ChatProvider> inner_;
    std::shared_ptr<CallGuard> guard_;
    std::shared_ptr<CallCounters> counters_;
};

class GuardedEmbedder final : public Embedder {
 public:
    GuardedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<CallGuard> guard,
                    std::shared_ptr<CallCounters> counters)
        : inner_(std::move(inner)), guard_(std::move(guard)), counters_(std::move(counters)) {}

    EmbeddingVector embed_text(std::string_view text, EmbeddingFamily family) override {
        check_modality(family, false);
        EmbeddingVector out;
        guard_->run([&] {
            ++counters_->embed;
            out = inner_->embed_text(text, family);
        });
        return out;
    }
    EmbeddingVector embed_image(const Raster& image, EmbeddingFamily family) override {
        check_modality(family, true);
        EmbeddingVector out;
        guard_->run([&] {
            ++counters_->embed;
            out = inner_->embed_image(image, family);
        });
        return out;
    }
    int dim(EmbeddingFamily family) const override { return inner_->dim(family); }
    std::string id() const override { return inner_->id(); }

 private:
    std::shared_ptr<Embedder> inner_;
    std::shared_ptr<CallGuard> guard_;
    std::shared_ptr<CallCounters> counters_;
};

}  // namespace

ProviderSet guard_providers(const ProviderSet& raw, int max_in_flight, RetryPolicy retry, Sleeper sleeper) {
    ProviderSet out;
    out.counters = std::make_shared<CallCounters>();
    auto make_guard = [&] { return std::make_shared<CallGuard>(max_in_flight, retry, sleeper); };
    if (raw.layout) out.layout = std::make_shared<GuardedLayout>(raw.layout, make_guard(), out.counters);
    if (raw.ocr) out.ocr = std::make_shared<GuardedOcr>(raw.ocr, make_guard(), out.counters);
    if (raw.chat) out.chat = std::make_shared<GuardedChat>(raw.chat, make_guard(), out.counters);
    if (raw.embedder) out.embedder = std::make_shared<GuardedEmbedder>(raw.embedder, make_guard(), out.counters);
    return out;
}

}  // namespace mudoc
