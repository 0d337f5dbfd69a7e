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

#include "mudoc/server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mudoc/prompts.hpp"
#include "mudoc/util.hpp"

namespace mudoc {

using nlohmann::json;

namespace {

json anchor_json(const SourceAnchor& a) {
    return {{"doc_id", a.doc_id},
            {"page_index", a.page_index},
            {"bbox", {a.bbox.x0, a.bbox.y0, a.bbox.x1, a.bbox.y1}},
            {"kind", std::string(to_string(a.kind))},
            {"snippet_id", a.snippet_id}};
}

json block_json(const RenderedBlock& b) {
    json j;
    if (b.kind == RenderedBlock::Kind::kFigure) {
        j = {{"kind", "figure"}, {"figure_id", b.figure_id}, {"caption", b.caption}};
    } else {
        j = {{"kind", "paragraph"}, {"text", b.text}};
    }
    j["anchor"] = b.anchor ? anchor_json(*b.anchor) : json(nullptr);
    j["map_score"] = b.map_score ? json(*b.map_score) : json(nullptr);
    if (!b.flag.empty()) j["flag"] = b.flag;
    return j;
}

json error_body(std::string_view code, std::string_view message) {
    return {{"v", kApiVersion}, {"error", {{"code", code}, {"message", message}}}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    send_json(res, status, error_body(code, message));
}

// Events of one turn, handed from the turn thread to whichever connection streams them.
struct Channel {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> records;
    bool finished = false;
};

}  // namespace

std::string event_payload(const TurnEvent& e) {
    json j = {{"v", kApiVersion}, {"seq", e.seq}, {"turn_id", e.turn_id}};
    switch (e.type) {
        case TurnEvent::Type::kStatus:
        case TurnEvent::Type::kToken: j["text"] = e.text; break;
        case TurnEvent::Type::kBlock:
            j["index"] = e.block_index;
            j["block"] = block_json(e.block);
            break;
        case TurnEvent::Type::kAnchors: {
            json list = json::array();
            for (const auto& [index, anchor] : e.anchors) list.push_back({{"block_index", index}, {"anchor", anchor_json(anchor)}});
            j["anchors"] = std::move(list);
            break;
        }
        case TurnEvent::Type::kDone: j["flagged"] = e.flagged; break;
        case TurnEvent::Type::kError:
            j["code"] = std::string(to_string(e.error_code));
            j["message"] = e.text;
            break;
    }
    // dump() escapes control characters, so the payload never spans lines.
    return j.dump();
}

std::string sse_record(const TurnEvent& e) {
    return "event: " + std::string(to_string(e.type)) + "\nid: " + std::to_string(e.seq) + "\ndata: " + event_payload(e) +
           "\n\n";
}

std::string anchor_payload(const SourceAnchor& anchor) {
    json j = anchor_json(anchor);
    j["v"] = kApiVersion;
    return j.dump();
}

struct Server::Impl {
    std::shared_ptr<Orchestrator> orchestrator;
    ServerConfig config;
    httplib::Server http;
    int port = -1;
    std::thread listener;

    mutable std::mutex sessions_mutex;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::set<std::string> busy;

    std::mutex etag_mutex;
    std::map<std::string, std::string> etags;

    std::mutex log_mutex;
    std::ofstream log;

    std::mutex turns_mutex;
    std::condition_variable turns_cv;
    int running_turns = 0;

    Impl(std::shared_ptr<Orchestrator> o, ServerConfig c) : orchestrator(std::move(o)), config(std::move(c)) {
        if (!config.session_log.empty()) {
            log.open(config.session_log, std::ios::app);
            if (!log) raise(ErrorCode::kIoError, "cannot open session log " + config.session_log);
        }
        routes();
    }

    void write_log(json entry) {
        if (!log.is_open()) return;
        entry["v"] = kApiVersion;
        entry["ts"] = utc_timestamp();
        std::lock_guard lock(log_mutex);
        log << entry.dump() << '\n';
        log.flush();
    }

    std::shared_ptr<Session> find_session(const std::string& id) const {
        std::lock_guard lock(sessions_mutex);
        const auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    void serve_asset(const httplib::Request& req, httplib::Response& res, const DocumentIndex& index,
                     const std::string& key, const char* content_type) {
        const auto it = index.assets.find(key);
        if (it == index.assets.end()) return send_error(res, 404, "UnknownId", "no asset " + key);
        Bytes bytes;
        try {
            bytes = it->second.read();
        } catch (const Error& e) {
            return send_error(res, 500, to_string(e.code()), e.what());
        }
        const std::string cache_key = index.manifest.doc_id + "/" + key;
        std::string etag;
        {
            std::lock_guard lock(etag_mutex);
            auto& slot = etags[cache_key];
            if (slot.empty()) slot = "\"" + sha256_hex(bytes) + "\"";
            etag = slot;
        }
        res.set_header("ETag", etag);
        res.set_header("Cache-Control", "public, max-age=3600");
        if (req.get_header_value("If-None-Match") == etag) {
            res.status = 304;
            return;
        }
        res.status = 200;
        res.set_content(std::string(bytes.begin(), bytes.end()), content_type);
    }

    void routes() {
        http.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", config.cors_origin);
        });
        // SO_REUSEADDR only: httplib's default SO_REUSEPORT would let a second server share the port.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
            res.status = 204;
        });
        http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, "Internal", e.what());
            } catch (...) {
                send_error(res, 500, "Internal", "unknown failure");
            }
        });

        http.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"v", kApiVersion}, {"status", "ok"}, {"docs", orchestrator->indices().size()}});
        });

        http.Get("/api/docs", [this](const httplib::Request&, httplib::Response& res) {
            json docs = json::array();
            for (const auto& [id, index] : orchestrator->indices()) {
                json pages = json::array();
                for (const auto& p : index->manifest.page_sizes) pages.push_back({p.width, p.height});
                docs.push_back({{"doc_id", id},
                                {"title", index->manifest.title},
                                {"pages", pages},
                                {"figures", index->figures.size()},
                                {"chunks", index->chunks.size()}});
            }
            send_json(res, 200, {{"v", kApiVersion}, {"docs", docs}});
        });

        http.Get("/api/prompts", [](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            for (const auto& [label, name] : {std::pair{"Summarize", "summarize_selection"}, std::pair{"ELI10", "eli10_selection"}}) {
                const auto& p = prompts::get(name);
                list.push_back({{"label", label},
                                {"name", std::string(p.name)},
                                {"version", p.version},
                                {"template", trim(p.text)},
                                {"placeholder", "{selection}"}});
            }
            send_json(res, 200, {{"v", kApiVersion}, {"prompts", list}});
        });

        http.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            std::vector<std::string> doc_ids;
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_object() && body.contains("doc_id") && body["doc_id"].is_string()) {
                doc_ids.push_back(body["doc_id"].get<std::string>());
            } else if (body.is_object() && body.contains("doc_ids") && body["doc_ids"].is_array()) {
                for (const auto& d : body["doc_ids"]) {
                    if (d.is_string()) doc_ids.push_back(d.get<std::string>());
                }
            }
            if (doc_ids.empty()) return send_error(res, 400, "InvalidArgument", "body needs doc_id");
            std::shared_ptr<Session> session;
            try {
                session = orchestrator->create_session(doc_ids);
            } catch (const Error& e) {
                return send_error(res, e.code() == ErrorCode::kUnknownId ? 404 : 400, to_string(e.code()), e.what());
            }
            {
                std::lock_guard lock(sessions_mutex);
                sessions[session->session_id] = session;
            }
            write_log({{"event", "session"}, {"session_id", session->session_id}, {"doc_ids", doc_ids}});
            res.set_header("Location", "/api/sessions/" + session->session_id);
            send_json(res, 201, {{"v", kApiVersion}, {"session_id", session->session_id}, {"doc_ids", doc_ids}});
        });

        http.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto session = find_session(req.matches[1]);
            if (!session) return send_error(res, 404, "UnknownId", "unknown session");
            if (session->active) return send_error(res, 409, "Busy", "a turn is in progress");
            std::lock_guard lock(session->mutex);
            json messages = json::array();
            for (const auto& m : session->history) {
                json j = {{"role", std::string(to_string(m.role))}, {"content", m.content}};
                if (m.tool_name) {
                    j["tool"] = std::string(to_string(*m.tool_name));
                    j["query"] = m.tool_query;
                }
                messages.push_back(std::move(j));
            }
            send_json(res, 200,
                      {{"v", kApiVersion},
                       {"session_id", session->session_id},
                       {"doc_ids", session->doc_ids},
                       {"turns", session->turns},
                       {"messages", messages}});
        });

        http.Post(R"(/api/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto session = find_session(id);
            if (!session) return send_error(res, 404, "UnknownId", "unknown session");
            const json body = json::parse(req.body, nullptr, false);
            if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
                trim(body["text"].get_ref<const std::string&>()).empty()) {
                return send_error(res, 400, "InvalidArgument", "body needs non-empty text");
            }
            {
                std::lock_guard lock(sessions_mutex);
                if (!busy.insert(id).second) return send_error(res, 409, "Busy", "a turn is in progress");
            }
            auto channel = std::make_shared<Channel>();
            start_turn(session, body["text"].get<std::string>(), channel);

            res.set_header("Cache-Control", "no-cache");
            res.set_header("X-Accel-Buffering", "no");
            res.set_chunked_content_provider("text/event-stream", [channel](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(channel->mutex);
                channel->cv.wait_for(lock, std::chrono::milliseconds(250),
                                     [&] { return !channel->records.empty() || channel->finished; });
                while (!channel->records.empty()) {
                    const std::string record = std::move(channel->records.front());
                    channel->records.pop_front();
                    lock.unlock();
                    if (!sink.write(record.data(), record.size())) return false;
                    lock.lock();
                }
                if (channel->finished) sink.done();
                return true;
            });
        });

        http.Get(R"(/api/docs/([^/]+)/pdf)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto* index = orchestrator->find_index(req.matches[1].str());
            if (index == nullptr) return send_error(res, 404, "UnknownId", "unknown document");
            serve_asset(req, res, *index, "source.pdf", "application/pdf");
        });

        http.Get(R"(/api/docs/([^/]+)/pages/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto* index = orchestrator->find_index(req.matches[1].str());
            if (index == nullptr) return send_error(res, 404, "UnknownId", "unknown document");
            serve_asset(req, res, *index, "pages/" + req.matches[2].str() + ".png", "image/png");
        });

        http.Get(R"(/api/figures/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            for (const auto& [doc, index] : orchestrator->indices()) {
                if (index->find_figure(id) != nullptr) return serve_asset(req, res, *index, "figures/" + id, "image/png");
            }
            send_error(res, 404, "UnknownId", "unknown figure " + id);
        });

        http.Get(R"(/api/anchors/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            for (const auto& [doc, index] : orchestrator->indices()) {
                try {
                    const auto anchor = index->anchor_for(id);
                    res.set_header("ETag", "\"" + sha256_hex(anchor_payload(anchor)) + "\"");
                    res.status = 200;
                    res.set_content(anchor_payload(anchor), "application/json");
                    return;
                } catch (const Error&) {
                    // not in this document
                }
            }
            send_error(res, 404, "UnknownId", "unknown record " + id);
        });

        if (!config.static_dir.empty() && !http.set_mount_point("/", config.static_dir)) {
            raise(ErrorCode::kIoError, "static directory not found: " + config.static_dir);
        }
    }

    void start_turn(std::shared_ptr<Session> session, std::string text, std::shared_ptr<Channel> channel) {
        {
            std::lock_guard lock(turns_mutex);
            ++running_turns;
        }
        std::thread([this, session = std::move(session), text = std::move(text), channel = std::move(channel)] {
            auto push = [&](std::string record) {
                {
                    std::lock_guard lock(channel->mutex);
                    channel->records.push_back(std::move(record));
                }
                channel->cv.notify_all();
            };
            TurnResult result;
            try {
                result = orchestrator->run_turn(*session, text, [&](const TurnEvent& e) { push(sse_record(e)); });
            } catch (const Error& e) {
                TurnEvent ev;
                ev.type = TurnEvent::Type::kError;
                ev.seq = 1;
                ev.text = e.what();
                ev.error_code = e.code();
                push(sse_record(ev));
                result.error = e;
            }
            json entry = {{"event", "turn"},
                          {"session_id", session->session_id},
                          {"turn_id", result.turn_id},
                          {"user", text},
                          {"final_text", result.final_text},
                          {"tool_calls", result.tool_calls}};
            if (result.error) entry["error"] = result.error->what();
            write_log(std::move(entry));
            {
                std::lock_guard lock(channel->mutex);
                channel->finished = true;
            }
            channel->cv.notify_all();
            {
                std::lock_guard lock(sessions_mutex);
                busy.erase(session->session_id);
            }
            std::lock_guard lock(turns_mutex);
            --running_turns;
            turns_cv.notify_all();
        }).detach();
    }
};

Server::Server(std::shared_ptr<Orchestrator> orchestrator, ServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(orchestrator), std::move(config))) {}

Server::~Server() { stop(); }

int Server::bind() {
    if (impl_->port > 0) return impl_->port;
    const auto& c = impl_->config;
    if (c.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(c.host);
    } else if (impl_->http.bind_to_port(c.host, c.port)) {
        impl_->port = c.port;
    }
    if (impl_->port <= 0) {
        impl_->port = -1;
        raise(ErrorCode::kIoError, "cannot bind " + c.host + ":" + std::to_string(c.port));
    }
    spdlog::info("listening on http://{}:{}", c.host, impl_->port);
    return impl_->port;
}

void Server::run() {
    bind();
    impl_->http.listen_after_bind();
}

void Server::start() {
    bind();
    impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void Server::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
    std::unique_lock lock(impl_->turns_mutex);
    impl_->turns_cv.wait(lock, [&] { return impl_->running_turns == 0; });
}

int Server::port() const noexcept { return impl_->port; }

std::size_t Server::session_count() const {
    std::lock_guard lock(impl_->sessions_mutex);
    return impl_->sessions.size();
}

}  // namespace mudoc
