#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "audfc/csv.hpp"
#include "audfc/dataset.hpp"
#include "test_util.hpp"

using namespace audfc;
using audfc::testing::make_log;
using audfc::testing::numbered_schema;

namespace {

TransactionLog from_text(const std::string& text, const AttributeSchema* declared = nullptr) {
  std::istringstream in(text);
  return read_csv(in, declared);
}

// Enumerates every target over the schema (each attribute wildcard or a value).
std::vector<TargetDefinition> all_targets(const AttributeSchema& schema) {
  std::vector<TargetDefinition> out{TargetDefinition::all_wildcard(schema.k())};
  for (std::size_t a = 0; a < schema.k(); ++a) {
    std::vector<TargetDefinition> next;
    for (const auto& t : out) {
      next.push_back(t);
      for (std::uint32_t v = 0; v < schema.value_count(a); ++v) {
        auto c = t.constraints();
        c[a] = v;
        next.emplace_back(c);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

TEST(LoadCsv, ThreeRowsTwoAttributes) {
  auto log = from_text(
      "timestamp,country,browser\n"
      "1000,US,Chrome\n"
      "1060,IN,Firefox\n"
      "1120,US,Firefox\n");
  EXPECT_EQ(log.k(), 2u);
  EXPECT_EQ(log.size(), 3u);
  EXPECT_EQ(log.schema().attribute(0).name, "country");
  // First-seen value order.
  EXPECT_EQ(log.schema().attribute(0).values, (std::vector<std::string>{"US", "IN"}));
  EXPECT_EQ(log.schema().attribute(1).values, (std::vector<std::string>{"Chrome", "Firefox"}));
  EXPECT_EQ(log.value(2, 0), 0u);
  EXPECT_EQ(log.value(2, 1), 1u);
}

TEST(LoadCsv, HeaderOnlyGivesEmptyLog) {
  auto log = from_text("timestamp,country,browser\n");
  EXPECT_EQ(log.size(), 0u);
  EXPECT_EQ(log.k(), 2u);
}

TEST(LoadCsv, DuplicateRowsAreKept) {
  const std::string text =
      "timestamp,country,browser\n"
      "10,US,Chrome\n"
      "10,US,Chrome\n"
      "20,IN,Chrome\n"
      "10,US,Chrome\n";
  auto log = from_text(text);
  ASSERT_EQ(log.size(), 4u);
  // Oracle: count the literal duplicate lines in the file text.
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = text.find("10,US,Chrome\n", pos)) != std::string::npos; ++pos) ++lines;
  auto t = TargetDefinition::parse("country=US,browser=Chrome", log.schema());
  EXPECT_EQ(count_in_window(log, t, TimeWindow(0, 100)), lines);
}

TEST(LoadCsv, SortsRowsByTimestamp) {
  auto log = from_text("ts,a\n300,x\n100,y\n200,z\n");
  EXPECT_EQ(log.timestamps(), (std::vector<Timestamp>{100, 200, 300}));
  EXPECT_EQ(log.schema().attribute(0).values[log.value(0, 0)], "y");
}

TEST(LoadCsv, MalformedTimestampReportsRow) {
  try {
    from_text("timestamp,a\n100,x\nnot-a-time,y\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadCsv, DeclaredSchemaRejectsUnknownValue) {
  AttributeSchema schema({{"country", {"US", "IN"}}});
  EXPECT_NO_THROW(from_text("timestamp,country\n1,US\n", &schema));
  EXPECT_THROW(from_text("timestamp,country\n1,DE\n", &schema), SchemaError);
  EXPECT_THROW(from_text("timestamp,browser\n1,US\n", &schema), SchemaError);
}

TEST(LoadCsv, RejectsMissingValuesAndEmbeddedCommas) {
  EXPECT_THROW(from_text("timestamp,a,b\n1,x,\n"), ParseError);
  EXPECT_THROW(from_text("timestamp,a,b\n1,x\n"), ParseError);
  EXPECT_THROW(from_text("timestamp,a,b\n1,x,y,z\n"), ParseError);
  EXPECT_THROW(from_text(""), ParseError);
}

TEST(LoadCsv, RoundTripsThroughWriter) {
  auto log = from_text("timestamp,a,b\n5,x,p\n7,y,q\n9,x,q\n");
  std::ostringstream out;
  write_csv(out, log);
  auto again = from_text(out.str());
  EXPECT_EQ(again.schema(), log.schema());
  EXPECT_EQ(again.timestamps(), log.timestamps());
}

TEST(ParseTimestamp, EpochAndIso) {
  EXPECT_EQ(parse_timestamp("0"), 0);
  EXPECT_EQ(parse_timestamp("1490486400"), 1490486400);
  EXPECT_EQ(parse_timestamp("-5"), -5);
  EXPECT_EQ(parse_timestamp("1970-01-01"), 0);
  EXPECT_EQ(parse_timestamp("2017-03-26T00:00:00Z"), 1490486400);
  EXPECT_EQ(parse_timestamp("2017-03-26 01:30:15"), 1490486400 + 5415);
  EXPECT_EQ(parse_timestamp("2017-03-26T02:00:00+02:00"), 1490486400);
  EXPECT_EQ(parse_timestamp("2017-03-25T19:00:00.999-05:00"), 1490486400);
  EXPECT_EQ(parse_timestamp("2000-02-29T00:00:00Z"), 951782400);
  EXPECT_FALSE(parse_timestamp("2001-02-29"));
  EXPECT_FALSE(parse_timestamp("2017-13-01"));
  EXPECT_FALSE(parse_timestamp("2017-03-26T25:00"));
  EXPECT_FALSE(parse_timestamp("12abc"));
  EXPECT_FALSE(parse_timestamp(""));
}

TEST(Satisfies, Examples) {
  AttributeSchema schema({{"country", {"US", "IN"}}, {"browser", {"Chrome", "Firefox"}}});
  Transaction d{0, {{0, 1}, {1, 0}}};  // country=IN, browser=Chrome
  EXPECT_TRUE(satisfies(d, TargetDefinition::all_wildcard(2)));
  EXPECT_TRUE(satisfies(d, TargetDefinition::from_transaction(d)));
  EXPECT_FALSE(satisfies(d, TargetDefinition::parse("country=US", schema)));
}

TEST(TargetDefinition, ParseAndRender) {
  AttributeSchema schema({{"country", {"US", "IN"}}, {"browser", {"Chrome", "Firefox"}}});
  auto t = TargetDefinition::parse("browser=Firefox,country=US", schema);
  EXPECT_EQ(t[0], 0u);
  EXPECT_EQ(t[1], 1u);
  EXPECT_EQ(t.render(schema), "country=US,browser=Firefox");
  EXPECT_TRUE(TargetDefinition::parse("", schema).is_all_wildcard());
  EXPECT_TRUE(TargetDefinition::parse("*", schema).is_all_wildcard());
  EXPECT_THROW(TargetDefinition::parse("os=linux", schema), SchemaError);
  EXPECT_THROW(TargetDefinition::parse("country=FR", schema), SchemaError);
  EXPECT_THROW(TargetDefinition::parse("country", schema), ParseError);
  EXPECT_THROW(TargetDefinition::parse("country=US,country=IN", schema), ParseError);
}

TEST(CountInWindow, Examples) {
  auto schema = numbered_schema({3, 2});
  // Hand-built 10 rows, one per minute from t=0.
  auto log = make_log(schema, {{0, 0}, {0, 1}, {1, 0}, {0, 0}, {2, 1},
                               {0, 0}, {1, 1}, {0, 1}, {0, 0}, {2, 0}});
  const TimeWindow all(0, 3600);
  EXPECT_EQ(count_in_window(log, TargetDefinition::all_wildcard(2), all), 10u);
  EXPECT_EQ(count_in_window(log, TargetDefinition::all_wildcard(2), TimeWindow(5000, 6000)), 0u);
  // a0=v0,a1=v0 holds on rows 0, 3, 5, 8.
  auto t = TargetDefinition::from_items(2, std::vector<ItemCode>{{0, 0}, {1, 0}});
  EXPECT_EQ(count_in_window(log, t, all), 4u);
  // Rows 3..5 are timestamps 180..300; only rows 3 and 5 match.
  EXPECT_EQ(count_in_window(log, t, TimeWindow(180, 301)), 2u);
}

TEST(HourlySeries, Examples) {
  auto schema = numbered_schema({2});
  std::vector<std::vector<std::uint32_t>> rows(240, {0});
  for (std::size_t i = 0; i < rows.size(); i += 3) rows[i] = {1};
  auto log = make_log(schema, rows, 0, 360);  // 10 rows per hour for 24 h
  const TimeWindow day(0, 24 * 3600);
  auto g = TargetDefinition::all_wildcard(1);
  auto s = hourly_series(log, g, day);
  ASSERT_EQ(s.size(), 24u);
  EXPECT_DOUBLE_EQ(s.total(), static_cast<double>(count_in_window(log, g, day)));
  for (double v : s.values) EXPECT_EQ(v, 10.0);

  auto one = hourly_series(log, g, TimeWindow(3600, 7200));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.values[0], static_cast<double>(count_in_window(log, g, TimeWindow(3600, 7200))));

  TransactionLog empty(schema);
  auto z = hourly_series(empty, g, day);
  EXPECT_EQ(z.size(), 24u);
  EXPECT_EQ(z.total(), 0.0);

  EXPECT_THROW(hourly_series(log, g, TimeWindow(10, 3600)), AlignmentError);
}

TEST(DatasetProperties, ExhaustiveOnSmallRandomLogs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto log = audfc::testing::random_log(rng, 60, {3, 2, 3});
    const TimeWindow w(0, 3 * 3600);
    for (std::size_t r = 0; r < log.size(); ++r) {
      auto d = log.transaction(r);
      ASSERT_TRUE(satisfies(d, TargetDefinition::from_transaction(d)));
    }
    for (const auto& t : all_targets(log.schema())) {
      const auto c = count_in_window(log, t, w);
      for (std::size_t a = 0; a < t.k(); ++a) {
        if (t[a]) {
          ASSERT_GE(count_in_window(log, t.relaxed(a), w), c);
        }
      }
      ASSERT_EQ(hourly_series(log, t, w).total(), static_cast<double>(c));
    }
  }
}
