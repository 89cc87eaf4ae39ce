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
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "app.hpp"
#include "fixtures.hpp"
#include "relquery/bql/parser.hpp"
#include "relquery/errors.hpp"
#include "relquery/store.hpp"

namespace relquery::app {
namespace {

struct Captured {
    int code = -1;
    std::string out;
};

Captured run_cli(const std::string& args, const std::string& cwd) {
    const std::string cmd = "cd '" + cwd + "' && '" RELQUERY_CLI_PATH "' " + args + " 2>/dev/null";
    Captured c;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return c;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) c.out.append(buf.data(), n);
    const int status = pclose(pipe);
    c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return c;
}

bql::Session data_session() {
    bql::SessionOptions opts;
    opts.seed = 3;
    opts.search_paths = {testing::source_dir() + "/data"};
    return bql::Session(opts);
}

TEST(RunScript, EmptyScriptSucceedsSilently) {
    auto s = data_session();
    std::ostringstream out, err;
    EXPECT_EQ(run_script(s, "  -- nothing here\n", {}, out, err), kOk);
    EXPECT_TRUE(out.str().empty());
    EXPECT_TRUE(err.str().empty());
}

TEST(RunScript, KeepGoingRunsLaterStatements) {
    const char* script =
        "CREATE TABLE cars FROM 'cars_1987.csv';\n"
        "SELEKT * FROM cars;\n"
        "SELECT \"make\" FROM cars WHERE \"price\" > 45000;\n";
    {
        auto s = data_session();
        std::ostringstream out, err;
        EXPECT_EQ(run_script(s, script, {.keep_going = true}, out, err), kQueryError);
        EXPECT_NE(out.str().find("created table cars"), std::string::npos);
        EXPECT_NE(out.str().find("mercedes"), std::string::npos);
        EXPECT_NE(err.str().find("statement 2"), std::string::npos);
        EXPECT_NE(err.str().find("line 2"), std::string::npos);
    }
    {
        auto s = data_session();
        std::ostringstream out, err;
        EXPECT_EQ(run_script(s, script, {}, out, err), kQueryError);
        EXPECT_EQ(out.str().find("mercedes"), std::string::npos);
    }
}

TEST(RunScript, MissingFileIsASystemError) {
    auto s = data_session();
    std::ostringstream out, err;
    EXPECT_EQ(run_script(s, "CREATE TABLE t FROM 'no_such_file.csv';", {}, out, err), kSystemError);
}

TEST(RenderError, CaretUnderOffendingToken) {
    try {
        bql::parse_statement("SELECT * FRM t");
        FAIL();
    } catch (const ParseError& e) {
        const auto text = render_error(e, "SELECT * FRM t");
        EXPECT_NE(text.find("  SELECT * FRM t\n           ^"), std::string::npos) << text;
    }
}

TEST(Repl, ErrorsDoNotEndTheLoop) {
    auto s = data_session();
    std::istringstream in("FROB the table;\nCREATE TABLE cars FROM 'cars_1987.csv';\n\\seed 42\n\\quit\n");
    std::ostringstream out, err;
    repl(s, in, out, err, {.prompt = false});
    EXPECT_NE(err.str().find("error"), std::string::npos);
    EXPECT_NE(out.str().find("created table cars"), std::string::npos);
    EXPECT_EQ(s.seed(), 42u);
}

TEST(Repl, MultiLineStatementsAndFormats) {
    auto s = data_session();
    std::istringstream in(
        "CREATE TABLE cars FROM 'cars_1987.csv';\n\\format json\nSELECT \"make\"\nFROM cars\nLIMIT 1;\n");
    std::ostringstream out, err;
    repl(s, in, out, err, {.prompt = false});
    EXPECT_NE(out.str().find("[\n{\"make\":\"jaguar\"}\n]"), std::string::npos) << out.str();
}

TEST(LoadDataset, BuildsTableAndPopulation) {
    auto s = data_session();
    const auto name =
        load_dataset(s, testing::source_dir() + "/data/gapminder.csv", "country", 4, 5);
    EXPECT_EQ(name, "gapminder");
    EXPECT_EQ(s.population("gapminder").ensemble->size(), 4u);
    EXPECT_EQ(s.population("gapminder").ensemble->analyze_iterations, 5u);
}

TEST(BuildHeatmap, MeasuresAndDependence) {
    auto s = data_session();
    load_dataset(s, testing::source_dir() + "/data/gapminder.csv", "country", 4, 5);
    const auto& pop = s.population("gapminder");
    for (const char* m : {"relevance", "cosine", "euclidean", "braycurtis"}) {
        const auto h = build_heatmap(pop, m, "hdi", 3);
        EXPECT_EQ(h.matrix.size(), pop.data.num_rows()) << m;
        for (std::size_t i = 0; i < h.matrix.size(); ++i) EXPECT_NEAR(h.matrix[i][i], 1.0, 1e-12) << m;
    }
    const auto dep = build_heatmap(pop, "dependence", "hdi", 3);
    EXPECT_EQ(dep.matrix.size(), pop.data.num_cols());
    EXPECT_THROW(build_heatmap(pop, "manhattan", "hdi", 3), QueryError);
}

TEST(Cli, EmptyScriptExitsZero) {
    const auto dir = std::filesystem::temp_directory_path();
    write_text_file((dir / "relquery_empty.bql").string(), "");
    const auto r = run_cli("run relquery_empty.bql", dir.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ExitCodes) {
    const auto dir = std::filesystem::temp_directory_path();
    write_text_file((dir / "relquery_bad.bql").string(), "SELECT FROM;");
    EXPECT_EQ(run_cli("run relquery_bad.bql", dir.string()).code, 1);
    EXPECT_EQ(run_cli("run relquery_missing_script.bql", dir.string()).code, 2);
}

// Session scripts under a fixed seed reproduce their pinned output byte for byte.
TEST(Cli, SessionScriptsMatchGoldenOutput) {
    const auto sessions = testing::source_dir() + "/data/sessions";
    for (const char* name : {"cars_1987", "college_scorecard", "gapminder"}) {
        SCOPED_TRACE(name);
        const auto r = run_cli(std::string("run ") + name + ".bql --seed 1987", sessions);
        ASSERT_EQ(r.code, 0);
        const auto golden =
            read_text_file(testing::source_dir() + "/tests/golden/outputs/" + name + ".seed1987.out");
        EXPECT_EQ(r.out, golden);
    }
}

TEST(Cli, CsvAndJsonOutput) {
    const auto sessions = testing::source_dir() + "/data/sessions";
    const auto dir = std::filesystem::temp_directory_path();
    write_text_file((dir / "relquery_fmt.bql").string(),
                    "CREATE TABLE c FROM '" + testing::source_dir() +
                        "/data/cars_1987.csv';\nSELECT \"make\", \"price\" FROM c LIMIT 2;");
    const auto csv = run_cli("run relquery_fmt.bql --output csv", dir.string());
    EXPECT_EQ(csv.out, "make,price\njaguar,35550\njaguar,32250\n");
    const auto json = run_cli("run relquery_fmt.bql --output json", dir.string());
    EXPECT_EQ(json.out, "[\n{\"make\":\"jaguar\",\"price\":35550},\n{\"make\":\"jaguar\",\"price\":32250}\n]\n");
}

}  // namespace
}  // namespace relquery::app
