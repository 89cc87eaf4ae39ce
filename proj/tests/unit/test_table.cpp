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

#include "fixtures.hpp"
#include "relquery/errors.hpp"
#include "relquery/store.hpp"
#include "relquery/table.hpp"

namespace relquery {
namespace {

using testing::make_table;

TEST(StatType, ParseAndPrint) {
    EXPECT_EQ(parse_stat_type("binary"), StatType::binary());
    EXPECT_EQ(parse_stat_type("numerical"), StatType::numerical());
    EXPECT_EQ(parse_stat_type("count"), StatType::count());
    EXPECT_EQ(parse_stat_type("categorical(3)"), StatType::categorical(3));
    EXPECT_EQ(parse_stat_type(to_string(StatType::categorical(5))), StatType::categorical(5));
    EXPECT_THROW(parse_stat_type("fuzzy"), SchemaError);
    EXPECT_THROW(StatType::categorical(1), SchemaError);
}

TEST(Codebook, Bijection) {
    Codebook cb({"rear", "front", "4wd"});
    EXPECT_EQ(cb.code_of("front"), 1u);
    EXPECT_EQ(cb.symbol(2), "4wd");
    EXPECT_FALSE(cb.code_of("left"));
    EXPECT_EQ(cb.add("left"), 3u);
    EXPECT_EQ(cb.add("rear"), 0u);
    EXPECT_EQ(cb.size(), 4u);
}

TEST(DataTable, SingleCellIdentity) {
    const auto t = make_table({{"x", StatType::numerical(), {}}}, {{3.0}});
    ASSERT_EQ(t.num_rows(), 1u);
    EXPECT_EQ(t.get_cell(0, 0), 3.0);
}

TEST(DataTable, ObservedRows) {
    const auto t = make_table({{"x", StatType::numerical(), {}}, {"y", StatType::numerical(), {}}},
                              {{1.0, 1.0}, {2.0, std::nullopt}, {3.0, 3.0}});
    EXPECT_EQ(t.column_observed_rows(0), (std::vector<RowId>{0, 1, 2}));
    EXPECT_EQ(t.column_observed_rows(1), (std::vector<RowId>{0, 2}));
    EXPECT_EQ(t.missing_count(1), 1u);
    EXPECT_EQ(t.present_cell_count(), 5u);
}

TEST(DataTable, OutOfRangeAccessThrows) {
    const auto t = make_table({{"x", StatType::numerical(), {}}}, {{1.0}});
    EXPECT_THROW(t.get_cell(1, 0), std::out_of_range);
    EXPECT_THROW(t.get_cell(0, 1), std::out_of_range);
}

TEST(TableBuilder, RejectsValuesOutsideType) {
    TableBuilder b({{"b", StatType::binary(), Codebook({"0", "1"})}});
    EXPECT_THROW(b.add_row({2.0}), SchemaError);
    TableBuilder c({{"n", StatType::count(), {}}});
    EXPECT_THROW(c.add_row({1.5}), SchemaError);
    EXPECT_THROW(c.add_row({-1.0}), SchemaError);
    TableBuilder r({{"x", StatType::numerical(), {}}});
    EXPECT_THROW(r.add_row({std::numeric_limits<double>::infinity()}), SchemaError);
    EXPECT_THROW(r.add_row({1.0, 2.0}), SchemaError);
}

TEST(TableBuilder, KeysAreUnique) {
    TableBuilder b({{"x", StatType::numerical(), {}}});
    b.with_key("name");
    b.add_row({1.0}, "a");
    EXPECT_THROW(b.add_row({2.0}, "a"), SchemaError);
}

TEST(DataTable, RowKeysAndRowids) {
    const auto plain = make_table({{"x", StatType::numerical(), {}}}, {{1.0}, {2.0}});
    EXPECT_EQ(plain.row_key(1), "1");
    EXPECT_EQ(plain.find_row("0"), 0u);
    EXPECT_FALSE(plain.find_row("5"));

    TableBuilder b({{"x", StatType::numerical(), {}}});
    b.with_key("name").add_row({1.0}, "alpha").add_row({2.0}, "beta");
    const auto keyed = std::move(b).build();
    EXPECT_EQ(keyed.find_row("beta"), 1u);
    EXPECT_EQ(keyed.row_key(0), "alpha");
}

TEST(DataTable, FingerprintTracksCells) {
    const auto a = make_table({{"x", StatType::numerical(), {}}}, {{1.0}, {2.0}});
    const auto b = make_table({{"x", StatType::numerical(), {}}}, {{1.0}, {2.0}});
    const auto c = make_table({{"x", StatType::numerical(), {}}}, {{1.0}, {2.5}});
    const auto d = make_table({{"x", StatType::numerical(), {}}}, {{1.0}, {std::nullopt}});
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    EXPECT_NE(a.fingerprint(), c.fingerprint());
    EXPECT_NE(a.fingerprint(), d.fingerprint());
}

TEST(DataTable, GapminderExtractIsSparse) {
    const auto t = load_csv(testing::source_dir() + "/data/gapminder.csv", {.key_column = "country"});
    const auto total = static_cast<double>(t.num_rows() * t.num_cols());
    EXPECT_NEAR(t.present_cell_count() / total, 0.65, 0.01);
    const auto row = t.find_row("Australia");
    ASSERT_TRUE(row);
    EXPECT_FALSE(t.get_cell(*row, t.column_index("hdi")));
}

}  // namespace
}  // namespace relquery
