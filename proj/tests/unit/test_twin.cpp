#include <cmath>

#include <gtest/gtest.h>

#include <json.hpp>

#include "herdtwin/io_util.hpp"
#include "herdtwin/twin.hpp"
#include "test_util.hpp"

namespace herdtwin {
namespace {

const CohortKey kCohort{Breed::Brahman, Sex::Female, parse_treatment("P")};
const TwinKey kKey{kCohort, StateLabel::Resting};

double level(int hour) { return 30.0 + 20.0 * std::sin(2.0 * 3.141592653589793 * hour / 24.0); }

HourlySeries days(int first_day, int count) {
  HourlySeries s{kCohort, StateLabel::Resting, {}, {}};
  for (int d = first_day; d < first_day + count; ++d) {
    for (int h = 0; h < 24; ++h) s.points.push_back({(d - 1) * 24 + h + 1, h, level(h), 60});
  }
  return s;
}

LstmModel small_model(const HourlySeries& history) {
  LstmConfig c;
  c.hidden_units = 4;
  c.num_layers = 1;
  c.batch_size = 2;
  c.epochs = 40;
  c.learning_rate = 1e-2;
  c.seed = 3;
  auto m = LstmModel::initialized(c);
  const auto windows = make_windows(history, c);
  train(m, windows);
  return m;
}

TEST(CompareCycle, ExactMatchAndMissingHours) {
  auto day = days(3, 1);
  std::array<double, 24> predicted{};
  for (int h = 0; h < 24; ++h) predicted[static_cast<std::size_t>(h)] = level(h);
  const auto exact = compare_cycle(kKey, 49, predicted, day);
  EXPECT_EQ(exact.cycle_mse, 0.0);
  EXPECT_EQ(exact.hours_compared, 24);

  day.points.erase(day.points.begin() + 4);
  predicted[0] += 2.0;
  const auto partial = compare_cycle(kKey, 49, predicted, day);
  EXPECT_EQ(partial.hours_compared, 23);
  EXPECT_FALSE(partial.has_actual[4]);
  EXPECT_TRUE(std::isnan(partial.actual[4]));
  EXPECT_DOUBLE_EQ(partial.cycle_mse, 4.0 / 23.0);

  const auto none = compare_cycle(kKey, 49, predicted, HourlySeries{kCohort, StateLabel::Resting, {}, {}});
  EXPECT_EQ(none.hours_compared, 0);
  EXPECT_TRUE(std::isnan(none.cycle_mse));
}

TEST(Registry, RoundTripGivesIdenticalPredictions) {
  test::TempDir dir;
  const auto history = days(1, 6);
  const auto model = small_model(history);
  {
    auto reg = TwinRegistry::open(dir.path());
    reg.register_model(model, history, {});
    reg.save();
  }
  const auto reg = TwinRegistry::open(dir.path());
  ASSERT_TRUE(reg.contains(kKey));
  EXPECT_EQ(reg.entry(kKey).last_trained_serial, 144);
  EXPECT_EQ(predict_cycle(reg.load_model(kKey)), predict_cycle(model));
  EXPECT_EQ(reg.load_series(kKey).points.size(), 144u);
  EXPECT_EQ(format_twin_key(kKey), "Brahman-F-P/REST");
  try {
    reg.entry(TwinKey{kCohort, StateLabel::Walking});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownKey);
  }
  EXPECT_TRUE(nlohmann::json::parse(io::read_text_file(dir / "index.json")).contains("entries"));
  io::write_text_file(dir / "index.json", "{\"registry_version\": 99}");
  EXPECT_THROW(TwinRegistry::open(dir.path()), Error);
}

TEST(Update, PredictCompareUpdateLoop) {
  test::TempDir dir;
  const auto history = days(1, 6);
  auto reg = TwinRegistry::open(dir.path());
  reg.register_model(small_model(history), history, {});
  const UpdateOptions opts{20, false};

  const auto first = update_twin(reg, kKey, days(7, 1), opts);
  EXPECT_EQ(first.status, UpdateStatus::NoPriorPrediction);
  EXPECT_FALSE(first.report.has_value());
  EXPECT_EQ(reg.entry(kKey).next_prediction_serial, 7 * 24 + 1);

  std::vector<double> drift;
  for (int d = 8; d <= 12; ++d) {
    const auto r = update_twin(reg, kKey, days(d, 1), opts);
    ASSERT_EQ(r.status, UpdateStatus::Compared);
    ASSERT_TRUE(r.report.has_value());
    EXPECT_EQ(r.report->day_start_serial, (d - 1) * 24 + 1);
    drift.push_back(r.report->cycle_mse);
    EXPECT_EQ(reg.entry(kKey).drift_history.size(), drift.size());
  }
  int non_increasing = 0;
  for (std::size_t i = 1; i < drift.size(); ++i) non_increasing += drift[i] <= drift[i - 1];
  EXPECT_GE(non_increasing, 3);

  // Earlier drift entries survive a reopen untouched.
  const auto reopened = TwinRegistry::open(dir.path());
  const auto& history_after = reopened.entry(kKey).drift_history;
  ASSERT_EQ(history_after.size(), drift.size());
  for (std::size_t i = 0; i < drift.size(); ++i) EXPECT_DOUBLE_EQ(history_after[i].cycle_mse, drift[i]);

  try {
    update_twin(reg, kKey, days(10, 1), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidValue);
  }
  EXPECT_THROW(update_twin(reg, kKey, days(13, 2), opts), Error);
  EXPECT_THROW(update_twin(reg, TwinKey{kCohort, StateLabel::Eating}, days(13, 1), opts), Error);
}

DailyProfile flat(const char* treatment, StateLabel state, double per_hour) {
  DailyProfile p{{Breed::Brahman, Sex::Female, parse_treatment(treatment)}, state, {}, {}};
  p.values.fill(per_hour);
  p.support.fill(1);
  return p;
}

std::vector<DailyProfile> profiles(const std::vector<std::pair<const char*, std::array<double, 5>>>& spec) {
  std::vector<DailyProfile> out;
  for (const auto& [t, v] : spec) {
    for (std::size_t i = 0; i < 5; ++i) out.push_back(flat(t, kPainIndicators[i], v[i]));
  }
  return out;
}

TEST(Pain, RankingAgainstControl) {
  const auto p = profiles({{"P", {5, 10, 10, 1, 30}},
                           {"D,N", {2, 6, 7, 3, 33}},
                           {"D,T", {4, 9, 9, 2, 31}},
                           {"D,T+M", {5, 10, 10, 1, 30}}});
  const auto a = assess_pain(p);
  EXPECT_TRUE(a.has_positive_control);
  ASSERT_EQ(a.ranking.size(), 3u);
  EXPECT_EQ(format_treatment(a.ranking[0].treatment), "D,T+M");
  EXPECT_EQ(format_treatment(a.ranking[2].treatment), "D,N");
  EXPECT_EQ(a.ranking[0].score, 0.0);
  // D,N: deficits (5-2 + 10-6 + 10-7) * 24 hours.
  EXPECT_DOUBLE_EQ(a.ranking[2].score, 10.0 * 24.0);
  EXPECT_EQ(a.ranking[2].tags[0], "walking:below_control");
  EXPECT_EQ(a.ranking[1].rank, 2);
}

TEST(Pain, ScaleInvariantOrdering) {
  const auto p = profiles({{"P", {5, 10, 10, 1, 30}},
                           {"D,N", {2, 6, 7, 3, 33}},
                           {"D,M", {3, 8, 9, 2, 31}},
                           {"D,T", {4, 9, 9, 2, 31}}});
  const auto base = assess_pain(p);
  for (const double k : {0.5, 3.0, 100.0}) {
    const auto scaled = assess_pain(p, PainWeights{k, k, k, 0.0, 0.0});
    for (std::size_t i = 0; i < base.ranking.size(); ++i) {
      EXPECT_EQ(scaled.ranking[i].treatment, base.ranking[i].treatment);
      EXPECT_NEAR(scaled.ranking[i].score, k * base.ranking[i].score, 1e-9);
    }
  }
}

TEST(Pain, IdenticalToControlTiesInTableOrder) {
  const auto p = profiles({{"D,N", {5, 10, 10, 1, 30}},
                           {"P", {5, 10, 10, 1, 30}},
                           {"D,M", {5, 10, 10, 1, 30}},
                           {"D,T", {5, 10, 10, 1, 30}}});
  const auto a = assess_pain(p);
  ASSERT_EQ(a.ranking.size(), 3u);
  for (const auto& e : a.ranking) EXPECT_EQ(e.score, 0.0);
  EXPECT_EQ(format_treatment(a.ranking[0].treatment), "D,T");
  EXPECT_EQ(format_treatment(a.ranking[1].treatment), "D,M");
  EXPECT_EQ(format_treatment(a.ranking[2].treatment), "D,N");
}

TEST(Pain, WithoutControlFlagsRawTotals) {
  const auto a = assess_pain(profiles({{"D,N", {2, 6, 7, 3, 33}}, {"D,T", {4, 9, 9, 2, 31}}}));
  EXPECT_FALSE(a.has_positive_control);
  EXPECT_EQ(format_treatment(a.ranking[0].treatment), "D,T");
  EXPECT_EQ(a.ranking[0].tags.back(), "no_positive_control");
}

TEST(Pain, Errors) {
  try {
    assess_pain(profiles({{"P", {5, 10, 10, 1, 30}}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientTreatments);
  }
  auto p = profiles({{"P", {5, 10, 10, 1, 30}}, {"D,N", {2, 6, 7, 3, 33}}});
  p.back().cohort.sex = Sex::Male;
  EXPECT_THROW(assess_pain(p), Error);
  p.pop_back();
  try {
    assess_pain(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidValue);
  }
}

TEST(Report, DeterministicAndConsistentWithComparison) {
  const auto p = profiles({{"P", {5, 10, 10, 1, 30}}, {"D,N", {2, 6, 7, 3, 33}}, {"D,T", {4, 9, 9, 2, 31}}});
  const auto a = assess_pain(p);
  const auto r1 = export_report(a, {});
  const auto r2 = export_report(assess_pain(p), {});
  EXPECT_EQ(r1.json, r2.json);
  EXPECT_EQ(r1.text, r2.text);
  const auto doc = nlohmann::json::parse(r1.json);
  EXPECT_EQ(doc["report_version"], 1);
  EXPECT_TRUE(doc["drift"].empty());
  EXPECT_EQ(doc["ranking"].size(), 2u);

  std::vector<DailyProfile> walking;
  for (const auto& prof : p) {
    if (prof.state == StateLabel::Walking) walking.push_back(prof);
  }
  const auto cmp = treatment_comparison(walking);
  nlohmann::json section;
  for (const auto& j : doc["profiles"]) {
    if (j["state"] == "WALK") section = j;
  }
  ASSERT_EQ(section["totals"].size(), cmp.totals.size());
  for (std::size_t i = 0; i < cmp.totals.size(); ++i) {
    EXPECT_DOUBLE_EQ(section["totals"][i].get<double>(), cmp.totals[i]);
    EXPECT_EQ(section["treatments"][i].get<std::string>(), format_treatment(cmp.treatments[i]));
  }
}

}  // namespace
}  // namespace herdtwin
