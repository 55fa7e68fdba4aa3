#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "builders.hpp"
#include "tracediag/error.hpp"
#include "tracediag/trace.hpp"

using namespace tracediag;

namespace {

const char* kHeader =
    R"({"kind":"header","run_id":"r1","dataset":"blob","interval_policy":"per-epoch","layer_names":["d0"]})";

std::string record(int step, const std::string& loss = "0.5", const std::string& extra = "") {
  return R"({"kind":"record","step":)" + std::to_string(step) +
         R"(,"epoch":0,"batch":null,"loss":)" + loss + R"(,"acc":0.5,"val_loss":0.6,"val_acc":0.4)" +
         extra +
         R"(,"layers":[{"name":"d0","w_min":-1,"w_max":1,"w_mean":0,"w_std":0.5,"w_nan":false,"w_inf":false,)"
         R"("g_min_abs":0,"g_max_abs":1,"g_mean_abs":0.1,"g_nan":false,"g_inf":false,"g_zero_frac":0.2}]})";
}

ErrorKind kind_of(const std::string& text, std::optional<std::size_t>* line = nullptr) {
  try {
    parse_trace(text);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

}  // namespace

TEST(TraceParse, SmallestValidTrace) {
  const auto t = parse_trace(std::string(kHeader) + "\n" + record(0) + "\n" + record(1) + "\n");
  EXPECT_EQ(t.run_id, "r1");
  EXPECT_EQ(t.dataset_name, "blob");
  EXPECT_EQ(t.interval_policy, "per-epoch");
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_EQ(t.records[1].step_index, 1u);
  EXPECT_FALSE(t.records[0].batch.has_value());
  ASSERT_EQ(t.records[0].layers.size(), 1u);
  EXPECT_DOUBLE_EQ(t.records[0].layers[0].grad_zero_fraction, 0.2);
}

TEST(TraceParse, NanAndInfMarkers) {
  const auto t = parse_trace(std::string(kHeader) + "\n" + record(0, "\"NaN\"") + "\n" +
                             record(1, "\"Inf\"") + "\n" + record(2, "\"-Inf\"") + "\n");
  EXPECT_TRUE(std::isnan(t.records[0].loss));
  EXPECT_TRUE(std::isinf(t.records[1].loss) && t.records[1].loss > 0);
  EXPECT_TRUE(std::isinf(t.records[2].loss) && t.records[2].loss < 0);
}

TEST(TraceParse, StepOrderViolationReportsLine) {
  std::optional<std::size_t> line;
  const auto kind = kind_of(std::string(kHeader) + "\n" + record(0) + "\n" + record(2) + "\n" +
                                record(1) + "\n",
                            &line);
  EXPECT_EQ(kind, ErrorKind::MalformedRecord);
  ASSERT_TRUE(line.has_value());
  EXPECT_EQ(*line, 4u);
}

TEST(TraceParse, UnparseableLine) {
  std::optional<std::size_t> line;
  EXPECT_EQ(kind_of(std::string(kHeader) + "\n" + record(0) + "\n{not json\n", &line),
            ErrorKind::MalformedRecord);
  EXPECT_EQ(line.value_or(0), 3u);
  EXPECT_EQ(kind_of(std::string(kHeader) + "\n" + record(0, "\"abc\"") + "\n"),
            ErrorKind::MalformedRecord);
}

TEST(TraceParse, LayerSchemaMismatch) {
  std::string bad = record(1);
  bad.replace(bad.find("\"d0\""), 4, "\"d9\"");
  EXPECT_EQ(kind_of(std::string(kHeader) + "\n" + record(0) + "\n" + bad + "\n"),
            ErrorKind::SchemaMismatch);
}

TEST(TraceParse, EmptyTrace) {
  EXPECT_EQ(kind_of(std::string(kHeader) + "\n"), ErrorKind::EmptyTrace);
  EXPECT_EQ(kind_of(""), ErrorKind::EmptyTrace);
}

TEST(TraceParse, BlankLinesAndOptionalFields) {
  std::string r1 = record(0);
  r1.replace(r1.find(R"("val_loss":0.6)"), 14, R"("val_loss":null)");
  std::string r2 = record(5);
  r2.replace(r2.find(R"("batch":null)"), 12, R"("batch":7)");
  const auto t = parse_trace("\n" + std::string(kHeader) + "\n\n" + r1 + "\n  \n" + r2);
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_FALSE(t.records[0].val_loss.has_value());
  EXPECT_EQ(t.records[1].batch.value_or(0), 7u);
}

TEST(TraceParse, StreamOverload) {
  std::istringstream in(std::string(kHeader) + "\n" + record(0) + "\n" + record(1) + "\n");
  EXPECT_EQ(parse_trace(in).records.size(), 2u);
}

TEST(TraceParse, MissingFileIsIoError) {
  try {
    load_trace_file("/nonexistent/trace.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(TraceRoundTrip, RandomTracesSurviveSerialization) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto t = testing_support::random_trace(seed);
    const auto back = parse_trace(serialize_trace(t));
    ASSERT_TRUE(same_trace(t, back)) << "seed " << seed;
  }
}

TEST(TraceRoundTrip, SameTraceDetectsDifference) {
  auto a = testing_support::random_trace(3, false);
  auto b = a;
  EXPECT_TRUE(same_trace(a, b));
  b.records[0].layers[0].grad_zero_fraction += 0.5;
  EXPECT_FALSE(same_trace(a, b));
}

TEST(TraceValidate, AccuracyOutOfRange) {
  auto t = testing_support::curve_trace({1.0, 0.9, 0.8}, {0.5, 1.2, 0.7});
  t.records[1].val_accuracy = 0.6;
  const auto report = validate_trace(t);
  ASSERT_EQ(report.error_count(), 1u);
  EXPECT_EQ(report.issues[0].message, "accuracy out of [0,1]");
  EXPECT_EQ(report.issues[0].record.value_or(99), 1u);
}

TEST(TraceValidate, MissingValidationMetricsWarn) {
  auto t = testing_support::curve_trace({1.0, 0.9, 0.8}, {0.5, 0.6, 0.7});
  for (auto& r : t.records) {
    r.val_loss.reset();
    r.val_accuracy.reset();
  }
  const auto report = validate_trace(t);
  EXPECT_EQ(report.error_count(), 0u);
  ASSERT_EQ(report.warning_count(), 1u);
  EXPECT_NE(report.issues[0].message.find("validation indicators degenerate"), std::string::npos);
}

TEST(TraceValidate, ValidTraceIsClean) {
  EXPECT_TRUE(validate_trace(testing_support::curve_trace({1.0, 0.9, 0.8}, {0.5, 0.6, 0.7})).empty());
}

TEST(TraceValidate, LayerInvariants) {
  auto t = testing_support::curve_trace({1.0, 0.9}, {0.5, 0.6});
  t.records[0].layers[0].grad_zero_fraction = 1.5;
  t.records[1].layers[1].weight_mean = 10.0;  // above weight_max
  EXPECT_EQ(validate_trace(t).error_count(), 2u);
  t.records[1].layers[1].weight_has_nan = true;  // ordering no longer checked
  EXPECT_EQ(validate_trace(t).error_count(), 1u);
}
