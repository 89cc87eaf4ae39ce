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

#include <filesystem>

#include "fixtures.hpp"
#include "relquery/bql/lexer.hpp"
#include "relquery/bql/parser.hpp"
#include "relquery/errors.hpp"
#include "relquery/store.hpp"

namespace relquery::bql {
namespace {

std::vector<TokenKind> kinds(std::string_view text) {
    std::vector<TokenKind> out;
    for (const auto& t : tokenize(text)) out.push_back(t.kind);
    return out;
}

TEST(Lexer, KeywordsAreWords) {
    const auto toks = tokenize("ORDER BY relevance Probability");
    ASSERT_EQ(toks.size(), 5u);
    EXPECT_EQ(toks[2].text, "RELEVANCE");
    EXPECT_EQ(toks[2].raw, "relevance");
    EXPECT_EQ(toks[4].kind, TokenKind::end);
}

TEST(Lexer, ComparisonTokens) {
    EXPECT_EQ(kinds("\"median_student_debt\" < 10000"),
              (std::vector<TokenKind>{TokenKind::quoted_ident, TokenKind::symbol, TokenKind::number, TokenKind::end}));
}

TEST(Lexer, EscapedQuotes) {
    const auto toks = tokenize("'it''s' \"a\"\"b\"");
    EXPECT_EQ(toks[0].kind, TokenKind::string);
    EXPECT_EQ(toks[0].text, "it's");
    EXPECT_EQ(toks[1].text, "a\"b");
}

TEST(Lexer, CommentsAndPrompts) {
    EXPECT_EQ(kinds("... SELECT -- trailing\n  1"),
              (std::vector<TokenKind>{TokenKind::word, TokenKind::number, TokenKind::end}));
}

TEST(Lexer, ErrorsCarryPositions) {
    try {
        tokenize("SELECT\n  'open");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.pos().line, 2u);
        EXPECT_EQ(e.pos().column, 3u);
    }
    EXPECT_THROW(tokenize("SELECT #"), ParseError);
}

TEST(Lexer, SplitStatements) {
    const auto parts = split_statements("SELECT 'a;b' FROM t; -- c;\n\nSELECT (1;2);  ;");
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[1].pos.line, 3u);
}

TEST(Parser, ExistingRowsQuery) {
    const auto st = parse_statement(
        "SELECT \"institute\" FROM college_scorecard WHERE \"admit_rate\" > 0.10 ORDER BY RELEVANCE PROBABILITY "
        "TO EXISTING ROWS IN ('Duke University', 'Harvard University', 'Mass Inst Technology', 'Yale University',) "
        "IN THE CONTEXT OF \"instructional_invest\" DESC LIMIT 10");
    const auto& sel = std::get<SelectStmt>(st);
    ASSERT_EQ(sel.order_by.size(), 1u);
    EXPECT_TRUE(sel.order_by[0].descending);
    EXPECT_EQ(sel.limit, 10u);
    const auto& rel = std::get<RelevanceExpr>(sel.order_by[0].expr.node);
    ASSERT_TRUE(rel.existing);
    EXPECT_EQ(rel.existing->keys.size(), 4u);
    EXPECT_EQ(rel.context, "instructional_invest");
}

TEST(Parser, HypotheticalRowForms) {
    const auto a = parse_statement(
        "SELECT * FROM t ORDER BY RELEVANCE PROBABILITY TO HYPOTHETICAL ROW ((\"a\" = 1 \"b\" = 'x')) "
        "IN THE CONTEXT OF \"a\"");
    const auto b = parse_statement(
        "SELECT * FROM t ORDER BY RELEVANCE PROBABILITY TO HYPOTHETICAL ROWS WITH VALUES ((\"a\"=1, \"b\"='x')) "
        "IN THE CONTEXT OF \"a\"");
    EXPECT_EQ(a, b);
    const auto& rel = std::get<RelevanceExpr>(std::get<SelectStmt>(a).order_by[0].expr.node);
    ASSERT_EQ(rel.hypothetical.size(), 1u);
    EXPECT_EQ(rel.hypothetical[0].size(), 2u);
    EXPECT_FALSE(std::get<SelectStmt>(a).order_by[0].descending);
}

TEST(Parser, AverageWithRowidSubquery) {
    const auto st = parse_statement(
        "ESTIMATE AVG (RELEVANCE PROBABILITY TO EXISTING ROWS IN (SELECT \"k\" FROM t) IN THE CONTEXT OF \"c\") "
        "FROM t WHERE \"rowid\" IN (SELECT \"rowid\" FROM t WHERE \"c\" > 1)");
    const auto& sel = std::get<SelectStmt>(st);
    EXPECT_TRUE(sel.estimate);
    EXPECT_TRUE(std::holds_alternative<Aggregate>(sel.items[0].expr->node));
    EXPECT_TRUE(std::get<InList>(sel.where->node).subquery);
}

TEST(Parser, DualContextComparison) {
    const auto st = parse_statement(
        "ESTIMATE \"rowid\" FROM t WHERE (RELEVANCE PROBABILITY TO EXISTING ROWS IN (1) IN THE CONTEXT OF \"a\") > "
        "(RELEVANCE PROBABILITY TO EXISTING ROWS IN (1) IN THE CONTEXT OF \"b\")");
    const auto& cmp = std::get<Binary>(std::get<SelectStmt>(st).where->node);
    EXPECT_EQ(cmp.op, BinaryOp::gt);
    EXPECT_EQ(std::get<RelevanceExpr>(cmp.rhs->node).context, "b");
}

TEST(Parser, SchemaAndModelStatements) {
    const auto pop = std::get<CreatePopulation>(parse_statement(
        "CREATE POPULATION p FOR t WITH SCHEMA (GUESS STATTYPES OF (*); SET STATTYPE OF \"a\", \"b\" TO "
        "CATEGORICAL(4)) WITH BASELINE crosscat"));
    ASSERT_EQ(pop.schema.size(), 2u);
    EXPECT_TRUE(pop.schema[0].columns.empty());
    EXPECT_EQ(pop.schema[1].type, "categorical(4)");
    EXPECT_EQ(pop.baseline, "crosscat");
    const auto init = std::get<InitializeModels>(parse_statement("INITIALIZE 8 MODELS IF NOT EXISTS FOR m"));
    EXPECT_EQ(init.count, 8u);
    const auto an = std::get<Analyze>(parse_statement("ANALYZE m FOR 2 MINUTES WAIT"));
    EXPECT_EQ(an.unit, AnalyzeUnit::minutes);
    EXPECT_TRUE(an.wait);
    EXPECT_THROW(parse_statement("ANALYZE m FOR 2.5 ITERATIONS"), ParseError);
    const auto ct = std::get<CreateTable>(parse_statement("CREATE TABLE t FROM 'x.csv' WITH KEY \"id\""));
    EXPECT_EQ(ct.key, "id");
}

TEST(Parser, ErrorsReportPositionAndExpectation) {
    try {
        parse_statement("SELECT \"a\" FROM t WHERE \"a\" < 1 \"b\" < 2");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.pos().column, 33u);
        EXPECT_FALSE(e.expected().empty());
    }
    EXPECT_THROW(parse_statement("SELEC 1"), ParseError);
    EXPECT_THROW(parse_statement("SELECT FROM t"), ParseError);
    EXPECT_THROW(parse_statement("SELECT * FROM t ORDER BY RELEVANCE PROBABILITY TO EXISTING ROWS IN (1)"),
                 ParseError);
    EXPECT_THROW(parse_statement("SELECT 1; SELECT 2"), ParseError);
}

TEST(Printer, NegativeNumbersSurviveReparse) {
    const auto st = parse_statement("SELECT -(-3), 1 - -2, -\"a\" FROM t");
    EXPECT_EQ(parse_statement(to_string(st)), st);
}

TEST(Printer, NumberFormatting) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(50000), "50000");
    EXPECT_EQ(format_number(-1.5e-3), "-0.0015");
}

// Every statement of the golden corpus parses, and printing then reparsing
// reaches a fixed point after one round.
std::vector<std::filesystem::path> corpus(const char* dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(testing::source_dir() + "/tests/golden/" + dir))
        if (entry.path().extension() == ".bql") out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

TEST(GoldenCorpus, ParsesAndReachesFixedPoint) {
    std::size_t statements = 0;
    for (const auto& path : corpus("corpus")) {
        SCOPED_TRACE(path.filename().string());
        const auto text = read_text_file(path.string());
        std::vector<Statement> parsed;
        ASSERT_NO_THROW(parsed = parse_script(text));
        for (const auto& st : parsed) {
            const auto printed = to_string(st);
            const auto again = parse_statement(printed);
            EXPECT_EQ(again, st) << printed;
            EXPECT_EQ(to_string(again), printed);
            ++statements;
        }
    }
    EXPECT_GE(statements, 20u);
}

TEST(GoldenCorpus, UnnormalizedFiltersAreRejected) {
    for (const auto& path : corpus("invalid")) {
        SCOPED_TRACE(path.filename().string());
        EXPECT_THROW(parse_script(read_text_file(path.string())), ParseError);
    }
}

}  // namespace
}  // namespace relquery::bql
