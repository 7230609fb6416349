#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "herdtwin/aggregate.hpp"
#include "herdtwin/io_util.hpp"
#include "herdtwin/random.hpp"

namespace herdtwin {
namespace {

const CohortKey kCohort{Breed::Brahman, Sex::Female, CombinedTreatment(Procedure::None, Relief::PositiveControl)};
const Timestamp kEpoch = make_timestamp(2019, 8, 10, 0, 0);

// Random sorted minute records for one animal over `hours` clock hours.
std::vector<SensorRecord> random_records(Rng& rng, const std::string& id, int hours, double keep, double corrupt) {
  std::vector<SensorRecord> out;
  for (int m = 0; m < hours * 60; ++m) {
    if (rng.uniform() >= keep) continue;
    const auto state = kAllStates[rng.below(kStateCount)];
    const auto q = rng.uniform() < corrupt ? Quality::Corrupted : Quality::Valid;
    out.push_back({id, kEpoch + std::chrono::minutes(m), state, q});
  }
  return out;
}

// Recount per hour straight from the records.
std::map<std::int64_t, double> brute_force(const std::vector<SensorRecord>& recs, StateLabel state) {
  std::map<std::int64_t, double> counts;
  std::map<std::int64_t, bool> destroyed;
  for (const auto& r : recs) {
    const auto minutes = (r.timestamp - kEpoch).count();
    const std::int64_t serial = 1 + minutes / 60;
    counts.try_emplace(serial, 0.0);
    if (r.quality == Quality::Corrupted) destroyed[serial] = true;
    else if (r.state == state) counts[serial] += 1.0;
  }
  for (const auto& [serial, bad] : destroyed) counts.erase(serial);
  return counts;
}

TEST(HourlyBudget, MatchesBruteForceRecount) {
  Rng rng(11);
  for (int fixture = 0; fixture < 200; ++fixture) {
    const auto recs = random_records(rng, "a", 1 + static_cast<int>(rng.below(6)), rng.uniform(0.3, 1.0),
                                     rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 0.02));
    for (const auto state : kAllStates) {
      const auto series = hourly_budget(recs, state, {kCohort, kEpoch});
      const auto oracle = brute_force(recs, state);
      ASSERT_EQ(series.points.size(), oracle.size());
      std::size_t i = 0;
      for (const auto& [serial, minutes] : oracle) {
        EXPECT_EQ(series.points[i].hour_serial, serial);
        EXPECT_EQ(series.points[i].hour_of_day, static_cast<int>((serial - 1) % 24));
        EXPECT_EQ(series.points[i].minutes, minutes);
        ++i;
      }
    }
  }
}

TEST(HourlyBudget, OneCorruptMinuteDestroysTheHour) {
  std::vector<SensorRecord> recs;
  for (int m = 0; m < 120; ++m) recs.push_back({"a", kEpoch + std::chrono::minutes(m), StateLabel::Resting, Quality::Valid});
  recs[75].quality = Quality::Corrupted;
  const auto s = hourly_budget(recs, StateLabel::Resting, {kCohort, kEpoch});
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_EQ(s.points[0].hour_serial, 1);
  EXPECT_EQ(s.points[0].minutes, 60.0);
}

TEST(HourlyBudget, AllStatesSumToRecordedMinutes) {
  Rng rng(5);
  const auto recs = random_records(rng, "a", 5, 0.8, 0.0);
  const auto all = hourly_budgets(recs, {kCohort, kEpoch});
  ASSERT_EQ(all.size(), kStateCount);
  for (std::size_t i = 0; i < all[0].points.size(); ++i) {
    double total = 0.0;
    for (const auto& s : all) total += s.points[i].minutes;
    EXPECT_EQ(total, all[0].points[i].support);
    EXPECT_LE(total, 60.0);
  }
  for (const auto state : kAllStates) {
    const auto single = hourly_budget(recs, state, {kCohort, kEpoch});
    EXPECT_EQ(single.points.size(), all[state_index(state)].points.size());
  }
}

HourlySeries series_of(const std::string& id, std::vector<std::pair<std::int64_t, double>> pts) {
  HourlySeries s{kCohort, StateLabel::Walking, {SeriesOrigin::Kind::SingleAnimal, id, 1}, {}};
  for (auto [serial, m] : pts) s.points.push_back({serial, static_cast<int>((serial - 1) % 24), m, 60});
  return s;
}

TEST(CohortAverage, SubsetMeanWithSupport) {
  const std::vector<HourlySeries> in = {series_of("a", {{1, 10}, {2, 20}}), series_of("b", {{1, 30}, {3, 6}})};
  const auto avg = cohort_average(in);
  ASSERT_EQ(avg.points.size(), 3u);
  EXPECT_DOUBLE_EQ(avg.points[0].minutes, 20.0);
  EXPECT_EQ(avg.points[0].support, 2);
  EXPECT_DOUBLE_EQ(avg.points[1].minutes, 20.0);
  EXPECT_EQ(avg.points[1].support, 1);
  EXPECT_DOUBLE_EQ(avg.points[2].minutes, 6.0);
  EXPECT_EQ(avg.origin.kind, SeriesOrigin::Kind::CohortAverage);
}

TEST(CohortAverage, IndependentOfArgumentOrder) {
  Rng rng(3);
  std::vector<HourlySeries> in;
  for (int a = 0; a < 7; ++a) {
    std::vector<std::pair<std::int64_t, double>> pts;
    for (std::int64_t s = 1; s <= 48; ++s) {
      if (rng.uniform() < 0.9) pts.push_back({s, std::floor(rng.uniform(0, 60))});
    }
    in.push_back(series_of("animal" + std::to_string(a), pts));
  }
  const auto base = cohort_average(in);
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(in.begin(), in.end());
    const auto again = cohort_average(in);
    ASSERT_EQ(again.points.size(), base.points.size());
    for (std::size_t i = 0; i < base.points.size(); ++i) EXPECT_EQ(again.points[i].minutes, base.points[i].minutes);
  }
}

TEST(CohortAverage, Errors) {
  EXPECT_THROW(cohort_average(std::span<const HourlySeries>{}), Error);
  auto a = series_of("a", {{1, 1}});
  auto b = series_of("b", {{1, 1}});
  b.state = StateLabel::Eating;
  try {
    cohort_average(std::vector<HourlySeries>{a, b});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedState);
  }
  b.state = a.state;
  b.cohort.sex = Sex::Male;
  try {
    cohort_average(std::vector<HourlySeries>{a, b});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedCohort);
  }
}

TEST(DailyProfile, MeansByHourAndMissingHours) {
  auto s = series_of("a", {{1, 10}, {25, 20}, {2, 5}});
  std::sort(s.points.begin(), s.points.end(), [](auto& x, auto& y) { return x.hour_serial < y.hour_serial; });
  const auto p = daily_profile(s);
  EXPECT_DOUBLE_EQ(p.values[0], 15.0);
  EXPECT_EQ(p.support[0], 2);
  EXPECT_DOUBLE_EQ(p.values[1], 5.0);
  EXPECT_FALSE(p.has_value(2));
  EXPECT_TRUE(std::isnan(p.values[2]));
  EXPECT_DOUBLE_EQ(p.daily_total(), 20.0);
  EXPECT_THROW(daily_profile(series_of("a", {})), Error);
}

TEST(TreatmentComparison, SortedByTotalWithTableTieBreak) {
  auto make = [](const char* code, double v) {
    DailyProfile p{{Breed::Brahman, Sex::Female, parse_treatment(code)}, StateLabel::Walking, {}, {}};
    p.values.fill(v);
    p.support.fill(1);
    return p;
  };
  const std::vector<DailyProfile> profiles = {make("D,N", 1.0), make("P", 3.0), make("D,T", 2.0), make("D,M", 2.0)};
  const auto cmp = treatment_comparison(profiles);
  ASSERT_EQ(cmp.treatments.size(), 4u);
  EXPECT_EQ(format_treatment(cmp.treatments[0]), "P");
  EXPECT_EQ(format_treatment(cmp.treatments[1]), "D,T");
  EXPECT_EQ(format_treatment(cmp.treatments[2]), "D,M");
  EXPECT_EQ(format_treatment(cmp.treatments[3]), "D,N");
  EXPECT_DOUBLE_EQ(cmp.totals[0], 72.0);
  EXPECT_DOUBLE_EQ(cmp.matrix[5][3], 1.0);
  const auto csv = comparison_csv(cmp);
  EXPECT_NE(csv.find("hour_of_day,P,D;T,D;M,D;N"), std::string::npos);
}

TEST(SeriesCsv, RoundTrip) {
  Rng rng(9);
  std::vector<std::pair<std::int64_t, double>> pts;
  for (std::int64_t s = 1; s <= 30; ++s) pts.push_back({s, rng.uniform(0, 60)});
  auto s = series_of("a", pts);
  s.origin.kind = SeriesOrigin::Kind::CohortAverage;
  const auto back = parse_series_csv(series_csv(s), s.cohort, s.state);
  ASSERT_EQ(back.points.size(), s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    EXPECT_EQ(back.points[i].hour_serial, s.points[i].hour_serial);
    EXPECT_EQ(back.points[i].minutes, s.points[i].minutes);
    EXPECT_EQ(back.points[i].support, s.points[i].support);
  }
}

}  // namespace
}  // namespace herdtwin
