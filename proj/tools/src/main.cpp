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
// relquery command line: repl, run, serve, heatmap.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "app.hpp"
#include "relquery/errors.hpp"
#include "server.hpp"

using namespace relquery;

namespace {

std::uint64_t env_seed() {
    if (const char* s = std::getenv("RELQUERY_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring malformed RELQUERY_SEED\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"relquery: probabilistic search over tables with BQL"};
    cli.require_subcommand(1);

    std::uint64_t seed = env_seed();
    std::size_t models = 16;
    std::uint64_t iterations = 0;
    std::string data, key, output = "table", session_dir;
    std::size_t workers = 1;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "session seed (default $RELQUERY_SEED or 0)");
        sub->add_option("--data", data, "CSV file loaded as table <stem>_raw and population <stem>");
        sub->add_option("--key", key, "key column of --data");
        sub->add_option("--models", models, "models initialized for --data")->capture_default_str();
        sub->add_option("--iterations", iterations, "analysis iterations for --data")->capture_default_str();
        sub->add_option("--open", session_dir, "session directory written by \\save");
        sub->add_option("--workers", workers, "threads used by ANALYZE")->capture_default_str();
    };

    auto* repl_cmd = cli.add_subcommand("repl", "interactive BQL shell");
    common(repl_cmd);
    repl_cmd->add_option("--output", output, "table, csv or json")->capture_default_str();

    auto* run_cmd = cli.add_subcommand("run", "execute a BQL script");
    common(run_cmd);
    std::string script;
    bool keep_going = false;
    run_cmd->add_option("script", script, "script path, or - for stdin")->required();
    run_cmd->add_option("--output", output, "table, csv or json")->capture_default_str();
    run_cmd->add_flag("--keep-going", keep_going, "continue after a failing statement");

    auto* serve_cmd = cli.add_subcommand("serve", "HTTP service for the web console");
    std::string host = "127.0.0.1";
    int port = 7777;
    std::vector<std::string> data_dirs;
    serve_cmd->add_option("--seed", seed, "default session seed");
    serve_cmd->add_option("--models", models, "default models per new session")->capture_default_str();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--data-dir", data_dirs, "directories searched for dataset names");
    serve_cmd->add_option("--workers", workers, "threads used by ANALYZE")->capture_default_str();

    auto* heat_cmd = cli.add_subcommand("heatmap", "write a similarity heatmap as CSV and PPM");
    common(heat_cmd);
    std::string measure = "relevance", context, population, prefix = "heatmap";
    std::size_t k = 10;
    heat_cmd->add_option("--measure", measure, "relevance, cosine, euclidean, braycurtis or dependence")
        ->capture_default_str();
    heat_cmd->add_option("--context", context, "context column");
    heat_cmd->add_option("--k", k, "columns used by vector measures")->capture_default_str();
    heat_cmd->add_option("--population", population, "population (default: the only one)");
    std::string imputed_path;
    heat_cmd->add_option("--imputed", imputed_path, "externally imputed CSV with the same rows and key");
    heat_cmd->add_option("--output", prefix, "output prefix for .csv and .ppm")->capture_default_str();

    CLI11_PARSE(cli, argc, argv);

    try {
        if (serve_cmd->parsed()) {
            app::ServerOptions so;
            so.seed = seed;
            so.default_models = models;
            so.data_dirs = data_dirs;
            so.workers = workers;
            app::Server server(so);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot bind " << host << ":" << port << "\n";
                return app::kSystemError;
            }
            return app::kOk;
        }

        bql::SessionOptions options;
        options.seed = seed;
        options.workers = workers;
        if (!script.empty() && script != "-")
            options.search_paths.push_back(std::filesystem::path(script).parent_path().string());
        options.search_paths.push_back(".");
        bql::Session session(options);
        if (!session_dir.empty()) session.open(session_dir);
        if (!data.empty()) app::load_dataset(session, data, key, models, iterations);

        if (run_cmd->parsed()) {
            std::string text;
            if (script == "-") {
                std::ostringstream ss;
                ss << std::cin.rdbuf();
                text = ss.str();
            } else {
                text = read_text_file(script);
            }
            app::ScriptOptions so;
            so.format = bql::parse_output_format(output);
            so.keep_going = keep_going;
            return app::run_script(session, text, so, std::cout, std::cerr);
        }
        if (repl_cmd->parsed()) {
            app::ReplOptions ro;
            ro.format = bql::parse_output_format(output);
            app::repl(session, std::cin, std::cout, std::cerr, ro);
            return app::kOk;
        }
        if (heat_cmd->parsed()) {
            auto lock = session.read_lock();
            const auto names = session.population_names();
            if (population.empty()) {
                if (names.size() != 1) throw QueryError("name the population with --population");
                population = names.front();
            }
            const auto& pop = session.population(population);
            std::optional<DataTable> imputed;
            if (!imputed_path.empty()) {
                CsvOptions co;
                co.key_column = pop.data.key_name();
                imputed = load_csv(imputed_path, co);
            }
            const Heatmap h = app::build_heatmap(pop, measure, context, k, imputed ? &*imputed : nullptr);
            std::ofstream csv(prefix + ".csv");
            write_heatmap_csv(h, csv);
            std::ofstream ppm(prefix + ".ppm", std::ios::binary);
            write_heatmap_ppm(h, ppm);
            if (!csv || !ppm) throw StoreError("cannot write " + prefix + ".csv/.ppm");
            std::cout << "wrote " << prefix << ".csv and " << prefix << ".ppm (" << h.order.size() << " x "
                      << h.order.size() << ")\n";
            return app::kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return app::exit_code_for(e);
    }
    return app::kOk;
}
