#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "herdtwin/core.hpp"

namespace herdtwin {

struct SeriesContext {
  CohortKey cohort;
  // Hour serial 1 begins at this instant's hour.
  Timestamp epoch;
};

// Minutes per clock hour spent in `state` for one animal. Any Corrupted
// record destroys its whole hour; surviving hours keep their serials.
// point.support holds the number of records seen in the hour.
HourlySeries hourly_budget(std::span<const SensorRecord> records, StateLabel state, const SeriesContext& context);

// All eight states in one pass; index with state_index().
std::vector<HourlySeries> hourly_budgets(std::span<const SensorRecord> records, const SeriesContext& context);

// Subset mean per hour serial across animals; point.support is the number of
// animals contributing at that serial. Inputs are accumulated in animal-id
// order so the result does not depend on argument order.
// Errors: EmptyInput, MixedState, MixedCohort.
HourlySeries cohort_average(std::span<const HourlySeries> series);

struct DailyProfile {
  CohortKey cohort;
  StateLabel state;
  std::array<double, 24> values{};  // NaN where support is 0
  std::array<int, 24> support{};

  bool has_value(int hour) const { return support[static_cast<std::size_t>(hour)] > 0; }
  // Sum over hours that have data.
  double daily_total() const;
};

// Mean minutes by hour of day. Errors: EmptySeries.
DailyProfile daily_profile(const HourlySeries& series);

struct TreatmentComparison {
  Breed breed;
  Sex sex;
  StateLabel state;
  // Sorted by daily total, descending; ties keep treatment-table order.
  std::vector<CombinedTreatment> treatments;
  std::vector<double> totals;
  // matrix[hour][column], column order as `treatments`.
  std::array<std::vector<double>, 24> matrix;
};

// Errors: EmptyInput, MixedState, MixedCohort (breed or sex differ).
TreatmentComparison treatment_comparison(std::span<const DailyProfile> profiles);

std::string series_csv(const HourlySeries& series);
std::string profile_csv(const DailyProfile& profile);
std::string comparison_csv(const TreatmentComparison& comparison);

// Reads back series_csv output. Cohort and state come from the caller.
HourlySeries parse_series_csv(std::string_view text, const CohortKey& cohort, StateLabel state);

}  // namespace herdtwin
