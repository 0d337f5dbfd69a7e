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

#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mudoc/config.hpp"
#include "mudoc/ingestion.hpp"
#include "mudoc/retrieval.hpp"
#include "mudoc/server.hpp"
#include "mudoc/synthetic.hpp"

namespace mudoc::cli {
namespace {

using nlohmann::json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::kProviderUnavailable:
        case ErrorCode::kProviderRefusal:
        case ErrorCode::kBudgetExceeded:
        case ErrorCode::kDimMismatch:
        case ErrorCode::kModalityMismatch: return kProviderError;
        case ErrorCode::kCorruptIndex:
        case ErrorCode::kVersionMismatch: return kCorruptIndex;
        default: return kInputError;
    }
}

void use_stderr_logger(const std::string& level) {
    auto logger = spdlog::get("mudoc");
    if (!logger) logger = spdlog::stderr_color_mt("mudoc");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(level));
}

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string log_level = "info";
    bool quiet_config = false;
};

// File values first, then the environment, then --set flags; flags win.
Config effective_config(const Globals& g, std::ostream& err) {
    Config config;
    if (!g.config_file.empty()) config.merge_json(read_text_file(g.config_file));
    config.apply_environment();
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) raise(ErrorCode::kInvalidArgument, "--set expects key=value, got " + kv);
        config.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    config.validate();
    if (!g.quiet_config) err << "effective config: " << json::parse(config.to_json()).dump() << "\n";
    return config;
}

std::string one_line(std::string_view text, std::size_t max_chars) {
    std::string flat;
    for (char c : text) flat.push_back(c == '\n' || c == '\t' || c == '\r' ? ' ' : c);
    return utf8_truncate(flat, max_chars);
}

// ---------------------------------------------------------------------------------------------

struct IngestArgs {
    std::string pdf;
    std::string out;
    std::string doc_id;
    bool force = false;
    bool json_output = false;
};

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out, std::ostream& err) {
    const Config config = effective_config(g, err);
    const Bytes pdf = read_file(a.pdf);
    const ProviderSet providers = make_providers(config.providers);
    ingest::IngestOptions options;
    options.doc_id = a.doc_id;
    options.force = a.force;
    const auto report = ingest::ingest_document(pdf, a.out, config.ingestion, providers, options);

    if (a.json_output) {
        out << json{{"doc_id", report.doc_id},
                    {"manifest_hash", report.manifest_hash},
                    {"pages", report.pages},
                    {"snippets_by_class", report.snippets_by_class},
                    {"chunks", report.chunks},
                    {"figures", report.figures},
                    {"warnings", report.warnings},
                    {"stages_executed", report.stages_executed},
                    {"stages_resumed", report.stages_resumed},
                    {"provider_calls", report.provider_calls},
                    {"chunk_coverage", report.chunk_coverage},
                    {"reused", report.reused}}
                   .dump(2)
            << "\n";
        return kOk;
    }
    std::string by_class;
    for (const auto& [cls, n] : report.snippets_by_class) by_class += (by_class.empty() ? "" : " ") + cls + "=" + std::to_string(n);
    auto row = [&](const char* key, const std::string& value) { out << std::left << std::setw(16) << key << value << "\n"; };
    row("document", report.doc_id);
    row("pages", std::to_string(report.pages));
    row("snippets", by_class.empty() ? "none" : by_class);
    row("chunks", std::to_string(report.chunks));
    row("figures", std::to_string(report.figures));
    row("warnings", std::to_string(report.warnings.size()));
    char coverage[32];
    std::snprintf(coverage, sizeof coverage, "%.4f", report.chunk_coverage);
    row("coverage", coverage);
    row("provider calls", std::to_string(report.provider_calls));
    row("manifest", report.manifest_hash);
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    out << report.stages_executed << " stages executed";
    if (report.stages_resumed > 0) out << ", " << report.stages_resumed << " resumed from checkpoint";
    out << "\n";
    return kOk;
}

int cmd_verify(const std::string& dir, bool json_output, std::ostream& out) {
    const auto report = verify_index(dir);
    if (json_output) {
        json violations = json::array();
        for (const auto& v : report.violations) violations.push_back({{"location", v.location}, {"rule", v.rule}, {"detail", v.detail}});
        out << json{{"ok", report.ok()}, {"checks", report.checks}, {"violations", violations}}.dump(2) << "\n";
    } else if (report.ok()) {
        out << "ok: " << report.checks << " checks passed\n";
    } else {
        for (const auto& v : report.violations) out << v.location << "\t" << v.rule << "\t" << v.detail << "\n";
        out << report.violations.size() << " violation(s) in " << report.checks << " checks\n";
    }
    return report.ok() ? kOk : kCorruptIndex;
}

struct QueryArgs {
    std::string dir;
    std::string query;
    bool images = false;
    int k = 0;
    bool json_output = false;
};

int cmd_query(const Globals& g, const QueryArgs& a, std::ostream& out, std::ostream& err) {
    const Config config = effective_config(g, err);
    auto index = std::make_shared<const DocumentIndex>(load_index(a.dir, {config.index.mmap, false}));
    const ProviderSet providers = make_providers(config.providers);
    const Retriever retriever(index, providers.embedder);
    const auto k = static_cast<std::size_t>(a.k > 0 ? a.k : config.retrieval.k);
    json rows = json::array();
    if (!a.images) {
        int rank = 1;
        for (const auto& hit : retriever.retrieve_text(a.query, k)) {
            const auto* chunk = index->find_chunk(hit.chunk_id);
            if (a.json_output) {
                rows.push_back({{"rank", rank}, {"chunk_id", hit.chunk_id}, {"score", hit.score},
                                {"variant", std::string(to_string(hit.best_variant))}, {"page", chunk->first_page}});
            } else {
                char score[32];
                std::snprintf(score, sizeof score, "%.6f", hit.score);
                out << rank << "\t" << hit.chunk_id << "\t" << score << "\t" << chunk->first_page << "\t"
                    << to_string(hit.best_variant) << "\t" << one_line(chunk->cleaned_text, 80) << "\n";
            }
            ++rank;
        }
    } else {
        int rank = 1;
        for (const auto& hit : retriever.retrieve_images(a.query, k)) {
            const auto* fig = index->find_figure(hit.figure_id);
            if (a.json_output) {
                rows.push_back({{"rank", rank}, {"figure_id", hit.figure_id}, {"score", hit.score},
                                {"dpr_max", hit.dpr_max}, {"clip_max", hit.clip_max}});
            } else {
                char scores[96];
                std::snprintf(scores, sizeof scores, "%.6f\t%.6f\t%.6f", hit.score, hit.dpr_max, hit.clip_max);
                out << rank << "\t" << hit.figure_id << "\t" << scores << "\t" << one_line(fig->caption, 80) << "\n";
            }
            ++rank;
        }
    }
    if (a.json_output) out << rows.dump(2) << "\n";
    return kOk;
}

struct ServeArgs {
    std::vector<std::string> indices;
    std::string host;
    int port = -1;
    std::string static_dir;
};

int cmd_serve(const Globals& g, const ServeArgs& a, std::ostream& out, std::ostream& err) {
    Config config = effective_config(g, err);
    if (!a.host.empty()) config.server.host = a.host;
    if (a.port >= 0) config.server.port = a.port;
    if (!a.static_dir.empty()) config.server.static_dir = a.static_dir;

    Orchestrator::IndexMap indices;
    for (const auto& dir : a.indices) {
        if (!std::filesystem::is_directory(dir)) raise(ErrorCode::kIoError, "index directory not found: " + dir);
        auto index = std::make_shared<const DocumentIndex>(load_index(dir, {config.index.mmap, false}));
        const std::string id = index->manifest.doc_id;
        if (!indices.emplace(id, std::move(index)).second) raise(ErrorCode::kInvalidArgument, "document mounted twice: " + id);
    }
    auto orchestrator = std::make_shared<Orchestrator>(std::move(indices), make_providers(config.providers),
                                                       config.orchestrator, config.retrieval);
    Server server(orchestrator, config.server);
    const int port = server.bind();
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    out << "serving " << orchestrator->indices().size() << " document(s) on http://" << config.server.host << ":" << port
        << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    spdlog::info("shutting down");
    server.stop();
    return kOk;
}

struct SynthArgs {
    std::string out;
    std::string truth;
    synthetic::Options options;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const auto doc = synthetic::generate(a.options);
    write_file_atomic(a.out, doc.pdf);
    if (!a.truth.empty()) {
        json blocks = json::array();
        for (const auto& b : doc.blocks) {
            blocks.push_back({{"page", b.page},
                              {"class", std::string(to_string(b.cls))},
                              {"bbox", b.bbox.to_array()},
                              {"text", b.text}});
        }
        write_file_atomic(a.truth, json{{"pages", doc.pages}, {"blocks", blocks}}.dump(2));
    }
    out << "wrote " << a.out << " (" << doc.pages << " pages, " << doc.count(RegionClass::kText) << " text, "
        << doc.count(RegionClass::kTitle) << " title, " << doc.count(RegionClass::kFigure) << " figure blocks)\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mudoc: multimodal textbook indexing, retrieval and chat"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "Override a config key, e.g. --set retrieval.k=8")->take_all();
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");
    app.add_flag("--no-config-echo", g.quiet_config, "Do not print the effective config");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Build an index directory from a PDF");
    ingest->add_option("pdf", ingest_args.pdf, "Input PDF")->required();
    ingest->add_option("--out,-o", ingest_args.out, "Index directory")->required();
    ingest->add_option("--doc-id", ingest_args.doc_id, "Document id (default: output directory name)");
    ingest->add_flag("--force", ingest_args.force, "Rebuild even if the index is up to date");
    ingest->add_flag("--json", ingest_args.json_output, "Machine-readable summary");

    std::string verify_dir;
    bool verify_json = false;
    auto* verify = app.add_subcommand("verify", "Check every index invariant");
    verify->add_option("dir", verify_dir, "Index directory")->required();
    verify->add_flag("--json", verify_json, "Machine-readable report");

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "Rank chunks or figures for a query");
    query->add_option("dir", query_args.dir, "Index directory")->required();
    query->add_option("query", query_args.query, "Query text")->required();
    query->add_flag("--images", query_args.images, "Rank figures instead of text chunks");
    query->add_option("-k", query_args.k, "Results to return (default: retrieval.k)");
    query->add_flag("--json", query_args.json_output, "Machine-readable results");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Serve the chat API over mounted indices");
    serve->add_option("--index", serve_args.indices, "Index directory (repeatable)")->required();
    serve->add_option("--host", serve_args.host, "Bind address (default: server.host)");
    serve->add_option("--port", serve_args.port, "Port, 0 for any free port (default: server.port)");
    serve->add_option("--static", serve_args.static_dir, "Web UI bundle to serve at /");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Write a synthetic textbook PDF with known layout");
    synth->add_option("--out,-o", synth_args.out, "Output PDF")->required();
    synth->add_option("--truth", synth_args.truth, "Write ground-truth blocks as JSON");
    synth->add_option("--pages", synth_args.options.pages, "Pages");
    synth->add_option("--figures", synth_args.options.figures, "Figures");
    synth->add_option("--seed", synth_args.options.seed, "Seed");
    synth->add_option("--paragraphs", synth_args.options.paragraphs_per_page, "Paragraphs per page");
    synth->add_option("--words", synth_args.options.words_per_paragraph, "Words per paragraph");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        use_stderr_logger(g.log_level);
        if (ingest->parsed()) return cmd_ingest(g, ingest_args, out, err);
        if (verify->parsed()) return cmd_verify(verify_dir, verify_json, out);
        if (query->parsed()) return cmd_query(g, query_args, out, err);
        if (serve->parsed()) return cmd_serve(g, serve_args, out, err);
        if (synth->parsed()) return cmd_synth(synth_args, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const spdlog::spdlog_ex& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

}  // namespace mudoc::cli
