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
#include <memory>
#include <string>

#include "mudoc/config.hpp"
#include "mudoc/orchestrator.hpp"

namespace mudoc {

/// Version of the JSON payloads carried by SSE records and API responses.
inline constexpr int kApiVersion = 1;

/// Single-line JSON payload for one turn event.
std::string event_payload(const TurnEvent& event);

/// Full SSE record: "event: <type>\nid: <seq>\ndata: <payload>\n\n".
std::string sse_record(const TurnEvent& event);

std::string anchor_payload(const SourceAnchor& anchor);

/// HTTP front end for an orchestrator.
///
/// Routes:
///   GET  /api/health
///   GET  /api/docs                      mounted documents
///   GET  /api/prompts                   Summarize and ELI10 templates
///   POST /api/sessions                  {"doc_id"} or {"doc_ids"} -> 201 {"session_id"}
///   GET  /api/sessions/{id}             session transcript
///   POST /api/sessions/{id}/messages    {"text"} -> text/event-stream
///   GET  /api/docs/{doc_id}/pdf
///   GET  /api/docs/{doc_id}/pages/{n}   page raster
///   GET  /api/figures/{figure_id}
///   GET  /api/anchors/{record_id}
///
/// Turns run on their own thread, so a client that disconnects mid-stream does not cancel
/// the turn; its history is committed all the same.
class Server {
 public:
    Server(std::shared_ptr<Orchestrator> orchestrator, ServerConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the configured host and port (port 0 picks a free one) and returns the bound port.
    /// Raises IoError when the socket cannot be bound.
    int bind();

    /// Serves until stop(). bind() is called first if needed.
    void run();

    /// bind() plus run() on a background thread.
    void start();

    /// Stops accepting requests and waits for running turns to finish.
    void stop();

    int port() const noexcept;
    std::size_t session_count() const;

 private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mudoc
