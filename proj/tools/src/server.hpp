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
#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "relquery/bql/session.hpp"

namespace httplib {
class Server;
}

namespace relquery::app {

struct ServerOptions {
    std::uint64_t seed = 0;
    std::size_t default_models = 16;
    /// Directories searched for relative dataset paths.
    std::vector<std::string> data_dirs;
    std::size_t workers = 1;
};

/// HTTP front end over many in-memory sessions.
///
/// Endpoints: POST /sessions, DELETE /sessions/{id}, POST /sessions/{id}/query,
/// GET /sessions/{id}/schema, GET /sessions/{id}/heatmap,
/// POST and GET /sessions/{id}/analyze, GET /health. Bodies are JSON.
class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and serves until `stop`; returns false when binding fails.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and serves on a background thread; returns the port.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

private:
    struct Analysis {
        std::atomic<bool> running{false};
        std::atomic<std::uint64_t> done{0};
        std::atomic<std::uint64_t> requested{0};
        std::atomic<bool> cancel{false};
        std::mutex mutex;
        std::string error;
        std::string population;
        std::thread thread;
    };
    struct Entry {
        std::unique_ptr<bql::Session> session;
        std::unique_ptr<Analysis> analysis = std::make_unique<Analysis>();
    };

    void routes();
    std::shared_ptr<Entry> find(const std::string& id);

    ServerOptions options_;
    std::unique_ptr<httplib::Server> http_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t next_id_ = 1;
    std::thread background_;
};

}  // namespace relquery::app
