/*
 *   Copyright 2026 The relquery Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#include "server.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "app.hpp"
#include "relquery/bql/parser.hpp"
#include "relquery/errors.hpp"

namespace relquery::app {

namespace {

using nlohmann::ordered_json;

ordered_json value_json(const bql::Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return std::isfinite(*d) ? ordered_json(*d) : ordered_json(nullptr);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return nullptr;
}

ordered_json result_json(const bql::ResultTable& r, double elapsed_ms) {
    ordered_json j;
    j["columns"] = r.columns;
    j["probability"] = r.probability;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json jr = ordered_json::array();
        for (const auto& v : row) jr.push_back(value_json(v));
        rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    j["warnings"] = r.warnings;
    j["message"] = r.message;
    j["elapsed_ms"] = elapsed_ms;
    return j;
}

void reply(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    ordered_json e;
    e["kind"] = kind;
    e["message"] = message;
    reply(res, status, ordered_json{{"error", e}});
}

// Maps an exception to a structured error; parse errors carry positions.
void reply_exception(httplib::Response& res, const std::exception& ex) {
    ordered_json e;
    int status = 400;
    if (const auto* pe = dynamic_cast<const ParseError*>(&ex)) {
        e["kind"] = "parse";
        e["message"] = pe->detail();
        e["line"] = pe->pos().line;
        e["column"] = pe->pos().column;
        e["offset"] = pe->pos().offset;
        e["expected"] = pe->expected();
    } else {
        e["kind"] = exit_code_for(ex) == kQueryError ? "query" : "system";
        e["message"] = ex.what();
        if (exit_code_for(ex) != kQueryError && !dynamic_cast<const StoreError*>(&ex)) status = 500;
    }
    reply(res, status, ordered_json{{"error", e}});
}

std::string population_for(bql::Session& s, const httplib::Request& req) {
    if (req.has_param("population")) return req.get_param_value("population");
    const auto names = s.population_names();
    if (names.size() != 1) throw QueryError("name the population with ?population= (session has " +
                                            std::to_string(names.size()) + ")");
    return names.front();
}

}  // namespace

Server::Server(ServerOptions options) : options_(std::move(options)), http_(std::make_unique<httplib::Server>()) {
    routes();
}

Server::~Server() {
    stop();
    std::lock_guard lock(sessions_mutex_);
    for (auto& [id, entry] : sessions_) {
        entry->analysis->cancel = true;
        if (entry->analysis->thread.joinable()) entry->analysis->thread.join();
    }
}

bool Server::listen(const std::string& host, int port) { return http_->listen(host, port); }

int Server::start_background(const std::string& host) {
    const int port = http_->bind_to_any_port(host);
    if (port <= 0) return port;
    background_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
    return port;
}

void Server::stop() {
    if (http_) http_->stop();
    if (background_.joinable()) background_.join();
}

std::shared_ptr<Server::Entry> Server::find(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void Server::routes() {
    auto& http = *http_;

    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, ordered_json{{"status", "ok"}});
    });

    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        ordered_json body = ordered_json::object();
        if (!req.body.empty()) {
            try {
                body = ordered_json::parse(req.body);
            } catch (const std::exception& e) {
                return reply_error(res, 400, "request", std::string("malformed JSON body: ") + e.what());
            }
        }
        bql::SessionOptions so;
        so.seed = body.value("seed", options_.seed);
        so.search_paths = options_.data_dirs;
        so.workers = options_.workers;
        auto entry = std::make_shared<Entry>();
        entry->session = std::make_unique<bql::Session>(so);
        ordered_json out;
        try {
            const std::string key = body.value("key", std::string());
            const std::size_t models = body.value("models", options_.default_models);
            const std::uint64_t iterations = body.value("iterations", std::uint64_t{0});
            std::optional<std::string> name;
            if (body.contains("name")) name = body["name"].get<std::string>();
            if (body.contains("csv")) {
                // Inline upload.
                std::istringstream in(body["csv"].get<std::string>());
                const std::string stem = name.value_or("data");
                entry->session->add_table(stem + "_raw", read_csv(in), key);
                entry->session->create_population(stem, stem + "_raw");
                if (models > 0) {
                    entry->session->initialize_models(stem, models);
                    if (iterations > 0) {
                        AnalyzeOptions ao;
                        ao.iterations = iterations;
                        entry->session->analyze(stem, ao);
                    }
                }
                out["population"] = stem;
            } else if (body.contains("data")) {
                std::string path = body["data"].get<std::string>();
                if (!std::filesystem::path(path).is_absolute()) {
                    for (const auto& dir : options_.data_dirs) {
                        for (const auto& candidate : {std::filesystem::path(dir) / path,
                                                      std::filesystem::path(dir) / (path + ".csv")}) {
                            if (std::filesystem::exists(candidate)) {
                                path = candidate.string();
                                break;
                            }
                        }
                    }
                }
                out["population"] = load_dataset(*entry->session, path, key, models, iterations, name);
            }
        } catch (const std::exception& e) {
            return reply_exception(res, e);
        }
        std::string id;
        {
            std::lock_guard lock(sessions_mutex_);
            id = "s" + std::to_string(next_id_++);
            sessions_[id] = entry;
        }
        out["id"] = id;
        out["seed"] = so.seed;
        reply(res, 201, out);
    });

    http.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::shared_ptr<Entry> entry;
        {
            std::lock_guard lock(sessions_mutex_);
            auto it = sessions_.find(req.matches[1]);
            if (it == sessions_.end()) return reply_error(res, 404, "not_found", "unknown session");
            entry = it->second;
            sessions_.erase(it);
        }
        entry->analysis->cancel = true;
        if (entry->analysis->thread.joinable()) entry->analysis->thread.join();
        reply(res, 200, ordered_json{{"deleted", std::string(req.matches[1])}});
    });

    http.Post(R"(/sessions/([^/]+)/query)", [this](const httplib::Request& req, httplib::Response& res) {
        auto entry = find(req.matches[1]);
        if (!entry) return reply_error(res, 404, "not_found", "unknown session");
        std::string text = req.body;
        if (req.get_header_value("Content-Type").starts_with("application/json")) {
            try {
                text = ordered_json::parse(req.body).at("query").get<std::string>();
            } catch (const std::exception& e) {
                return reply_error(res, 400, "request", std::string("expected {\"query\": ...}: ") + e.what());
            }
        }
        try {
            const auto start = std::chrono::steady_clock::now();
            const bql::ResultTable result = entry->session->execute(text);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            reply(res, 200, result_json(result, ms));
        } catch (const std::exception& e) {
            reply_exception(res, e);
        }
    });

    http.Get(R"(/sessions/([^/]+)/schema)", [this](const httplib::Request& req, httplib::Response& res) {
        auto entry = find(req.matches[1]);
        if (!entry) return reply_error(res, 404, "not_found", "unknown session");
        ordered_json out;
        out["seed"] = entry->session->seed();
        auto lock = entry->session->read_lock();
        out["tables"] = entry->session->table_names();
        ordered_json pops = ordered_json::array();
        for (const auto& name : entry->session->population_names()) {
            const auto& pop = entry->session->population(name);
            ordered_json p;
            p["name"] = pop.name;
            p["table"] = pop.table;
            p["key"] = pop.data.key_name();
            p["rows"] = pop.data.num_rows();
            p["models"] = pop.ensemble ? pop.ensemble->size() : 0;
            p["iterations"] = pop.ensemble ? pop.ensemble->analyze_iterations : 0;
            ordered_json cols = ordered_json::array();
            for (const auto& c : pop.data.columns()) {
                ordered_json jc;
                jc["name"] = c.name;
                jc["type"] = to_string(c.type);
                if (c.type.is_discrete()) jc["categories"] = c.codebook.symbols();
                cols.push_back(std::move(jc));
            }
            p["columns"] = std::move(cols);
            pops.push_back(std::move(p));
        }
        out["populations"] = std::move(pops);
        reply(res, 200, out);
    });

    http.Get(R"(/sessions/([^/]+)/heatmap)", [this](const httplib::Request& req, httplib::Response& res) {
        auto entry = find(req.matches[1]);
        if (!entry) return reply_error(res, 404, "not_found", "unknown session");
        try {
            auto lock = entry->session->read_lock();
            const std::string measure = req.has_param("measure") ? req.get_param_value("measure") : "relevance";
            const std::string context = req.get_param_value("context");
            std::size_t k = 10;
            if (req.has_param("k")) k = std::stoul(req.get_param_value("k"));
            const auto& pop = entry->session->population(population_for(*entry->session, req));
            const Heatmap h = build_heatmap(pop, measure, context, k);
            ordered_json out;
            out["population"] = pop.name;
            out["measure"] = measure;
            out["context"] = context;
            out["labels"] = h.labels;
            out["order"] = h.order;
            out["matrix"] = h.matrix;
            reply(res, 200, out);
        } catch (const std::invalid_argument&) {
            reply_error(res, 400, "request", "k must be a non-negative integer");
        } catch (const std::exception& e) {
            reply_exception(res, e);
        }
    });

    http.Post(R"(/sessions/([^/]+)/analyze)", [this](const httplib::Request& req, httplib::Response& res) {
        auto entry = find(req.matches[1]);
        if (!entry) return reply_error(res, 404, "not_found", "unknown session");
        ordered_json body = ordered_json::object();
        try {
            if (!req.body.empty()) body = ordered_json::parse(req.body);
        } catch (const std::exception& e) {
            return reply_error(res, 400, "request", std::string("malformed JSON body: ") + e.what());
        }
        Analysis& an = *entry->analysis;
        std::string population;
        AnalyzeOptions opts;
        try {
            auto probe = entry->session->try_write_lock();
            if (!probe.owns_lock())
                return reply_error(res, 409, "busy", "the session is busy; retry when the running statement ends");
            population = body.contains("population") ? body["population"].get<std::string>()
                                                     : population_for(*entry->session, req);
            if (!entry->session->population(population).ensemble)
                throw QueryError("run INITIALIZE n MODELS FOR " + population + " before ANALYZE");
            opts.iterations = body.value("iterations", std::uint64_t{0});
            if (body.contains("seconds")) opts.seconds = body["seconds"].get<double>();
            if (opts.iterations == 0 && !opts.seconds) opts.iterations = 1;
        } catch (const std::exception& e) {
            return reply_exception(res, e);
        }
        // Claimed atomically so two concurrent requests cannot both start.
        if (an.running.exchange(true))
            return reply_error(res, 409, "busy", "an analysis is already running for this session");
        if (an.thread.joinable()) an.thread.join();
        an.done = 0;
        an.requested = opts.iterations;
        an.cancel = false;
        {
            std::lock_guard lock(an.mutex);
            an.error.clear();
            an.population = population;
        }
        opts.workers = options_.workers;
        opts.cancel = &an.cancel;
        opts.progress = [&an](std::uint64_t done, std::uint64_t) { an.done = done; };
        an.thread = std::thread([entry, population, opts, &an] {
            try {
                entry->session->analyze(population, opts);
            } catch (const std::exception& e) {
                std::lock_guard lock(an.mutex);
                an.error = e.what();
            }
            an.running = false;
        });
        reply(res, 202, ordered_json{{"status", "started"}, {"population", population}, {"requested", opts.iterations}});
    });

    http.Get(R"(/sessions/([^/]+)/analyze)", [this](const httplib::Request& req, httplib::Response& res) {
        auto entry = find(req.matches[1]);
        if (!entry) return reply_error(res, 404, "not_found", "unknown session");
        Analysis& an = *entry->analysis;
        ordered_json out;
        out["running"] = an.running.load();
        out["done"] = an.done.load();
        out["requested"] = an.requested.load();
        std::lock_guard lock(an.mutex);
        out["population"] = an.population;
        if (!an.error.empty()) out["error"] = an.error;
        reply(res, 200, out);
    });
}

}  // namespace relquery::app
