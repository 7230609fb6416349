#include <set>

#include <gtest/gtest.h>

#include "herdtwin/core.hpp"

namespace herdtwin {
namespace {

TEST(Treatment, ThirteenLegalPairingsInTableOrder) {
  const auto& all = all_treatments();
  std::set<std::string> codes;
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].table_index(), static_cast<int>(i));
    codes.insert(format_treatment(all[i]));
  }
  EXPECT_EQ(codes.size(), 13u);

  int legal = 0;
  for (auto p : {Procedure::Castrating, Procedure::Dehorning, Procedure::DehorningAndCastrating, Procedure::None}) {
    for (auto r : {Relief::NegativeControl, Relief::TopicalAnaesthetic, Relief::Meloxicam,
                   Relief::TopicalPlusMeloxicam, Relief::PositiveControl}) {
      legal += CombinedTreatment::is_legal(p, r);
    }
  }
  EXPECT_EQ(legal, 13);
}

TEST(Treatment, IllegalPairingThrows) {
  try {
    CombinedTreatment(Procedure::None, Relief::Meloxicam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidValue);
  }
  EXPECT_THROW(CombinedTreatment(Procedure::Dehorning, Relief::PositiveControl), Error);
}

TEST(Treatment, CodesRoundTrip) {
  for (const auto& t : all_treatments()) EXPECT_EQ(parse_treatment(format_treatment(t)), t);
  EXPECT_EQ(parse_treatment("d, t+m"), CombinedTreatment(Procedure::Dehorning, Relief::TopicalPlusMeloxicam));
  EXPECT_EQ(parse_treatment("(P)"), CombinedTreatment(Procedure::None, Relief::PositiveControl));
  try {
    parse_treatment("X,Y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTreatmentCode);
  }
}

TEST(Treatment, PositiveControlFlag) {
  int controls = 0;
  for (const auto& t : all_treatments()) controls += t.is_positive_control();
  EXPECT_EQ(controls, 1);
}

TEST(Cohort, FormatAndSlugRoundTrip) {
  for (const auto b : kAllBreeds) {
    for (const auto s : kAllSexes) {
      for (const auto& t : all_treatments()) {
        const CohortKey key{b, s, t};
        EXPECT_EQ(parse_cohort(format_cohort(key)), key);
        const auto slug = cohort_slug(key);
        EXPECT_EQ(slug.find_first_of(",+"), std::string::npos);
        EXPECT_EQ(parse_cohort(slug), key);
      }
    }
  }
  EXPECT_EQ(format_cohort({Breed::Brahman, Sex::Female, parse_treatment("P")}), "Brahman-F-P");
  EXPECT_THROW(parse_cohort("Brahman"), Error);
}

TEST(State, CodesAndNamesRoundTrip) {
  std::set<std::size_t> indices;
  for (const auto s : kAllStates) {
    EXPECT_EQ(parse_state(state_code(s)), s);
    EXPECT_EQ(parse_state(state_name(s)), s);
    indices.insert(state_index(s));
  }
  EXPECT_EQ(indices.size(), kStateCount);
  EXPECT_FALSE(parse_state("???").has_value());
}

TEST(Time, HourSerialStartsAtOne) {
  const auto epoch = make_timestamp(2019, 8, 10, 0, 0);
  EXPECT_EQ(hour_serial(make_timestamp(2019, 8, 10, 0, 0), epoch), 1);
  EXPECT_EQ(hour_serial(make_timestamp(2019, 8, 10, 0, 59), epoch), 1);
  EXPECT_EQ(hour_serial(make_timestamp(2019, 8, 10, 1, 0), epoch), 2);
  EXPECT_EQ(hour_serial(make_timestamp(2019, 8, 11, 0, 30), epoch), 25);
  try {
    hour_serial(make_timestamp(2019, 8, 9, 23, 59), epoch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TimestampBeforeEpoch);
  }
}

TEST(Time, ParseAndFormat) {
  const auto ts = parse_timestamp("2019-08-10", "13:45:59");
  ASSERT_TRUE(ts.has_value());
  EXPECT_EQ(format_date(*ts), "2019-08-10");
  EXPECT_EQ(format_time(*ts), "13:45");
  EXPECT_EQ(hour_of_day(*ts), 13);
  EXPECT_FALSE(parse_timestamp("2019-13-10", "00:00").has_value());
  EXPECT_FALSE(parse_timestamp("2019-08-10", "25:00").has_value());
  EXPECT_EQ(truncate_to_hour(*ts), make_timestamp(2019, 8, 10, 13, 0));
  EXPECT_EQ(truncate_to_day(*ts), make_timestamp(2019, 8, 10, 0, 0));
}

TEST(Series, ValidateRejectsBadPoints) {
  HourlySeries s{{Breed::Angus, Sex::Male, parse_treatment("C,N")}, StateLabel::Walking, {}, {}};
  s.points = {{1, 0, 10.0}, {2, 1, 20.0}};
  EXPECT_NO_THROW(validate_series(s));
  EXPECT_TRUE(is_gap_free(s));
  s.points.push_back({4, 3, 61.0});
  EXPECT_THROW(validate_series(s), Error);
  s.points.back().minutes = 5.0;
  EXPECT_NO_THROW(validate_series(s));
  EXPECT_FALSE(is_gap_free(s));
  s.points.back().hour_of_day = 5;
  EXPECT_THROW(validate_series(s), Error);
}

}  // namespace
}  // namespace herdtwin
