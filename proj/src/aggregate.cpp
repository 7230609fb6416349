#include "herdtwin/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "herdtwin/io_util.hpp"

namespace herdtwin {

namespace {

struct HourTally {
  std::int64_t serial;
  int hour_of_day;
  int records = 0;
  bool corrupted = false;
  std::array<int, kStateCount> counts{};
};

std::vector<HourTally> tally_hours(std::span<const SensorRecord> records, const SeriesContext& context) {
  std::vector<HourTally> hours;
  for (const auto& rec : records) {
    const auto serial = hour_serial(rec.timestamp, context.epoch);
    if (hours.empty() || hours.back().serial != serial) {
      if (!hours.empty() && serial < hours.back().serial) {
        throw Error(ErrorCode::InvalidValue, "records must be sorted by timestamp");
      }
      hours.push_back(HourTally{serial, hour_of_day(rec.timestamp)});
    }
    auto& hour = hours.back();
    ++hour.records;
    if (rec.quality == Quality::Corrupted) {
      hour.corrupted = true;
    } else {
      ++hour.counts[state_index(rec.state)];
    }
  }
  return hours;
}

HourlySeries make_single_series(const SeriesContext& context, StateLabel state, std::span<const SensorRecord> records) {
  HourlySeries series{context.cohort, state, SeriesOrigin{}, {}};
  series.origin.kind = SeriesOrigin::Kind::SingleAnimal;
  series.origin.animal_id = records.empty() ? std::string() : records.front().animal_id;
  series.origin.n_animals = 1;
  return series;
}

}  // namespace

HourlySeries hourly_budget(std::span<const SensorRecord> records, StateLabel state, const SeriesContext& context) {
  auto series = make_single_series(context, state, records);
  for (const auto& hour : tally_hours(records, context)) {
    if (hour.corrupted) continue;
    series.points.push_back(
        HourPoint{hour.serial, hour.hour_of_day, static_cast<double>(hour.counts[state_index(state)]), hour.records});
  }
  return series;
}

std::vector<HourlySeries> hourly_budgets(std::span<const SensorRecord> records, const SeriesContext& context) {
  std::vector<HourlySeries> out;
  out.reserve(kStateCount);
  for (std::size_t s = 0; s < kStateCount; ++s) out.push_back(make_single_series(context, kAllStates[s], records));
  for (const auto& hour : tally_hours(records, context)) {
    if (hour.corrupted) continue;
    for (std::size_t s = 0; s < kStateCount; ++s) {
      out[s].points.push_back(HourPoint{hour.serial, hour.hour_of_day, static_cast<double>(hour.counts[s]), hour.records});
    }
  }
  return out;
}

HourlySeries cohort_average(std::span<const HourlySeries> series) {
  if (series.empty()) throw Error(ErrorCode::EmptyInput, "cohort_average needs at least one series");
  for (const auto& s : series) {
    if (s.state != series.front().state) throw Error(ErrorCode::MixedState, "series disagree on state");
    if (!(s.cohort == series.front().cohort)) throw Error(ErrorCode::MixedCohort, "series disagree on cohort");
  }

  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return series[a].origin.animal_id < series[b].origin.animal_id;
  });

  struct Acc {
    int hour_of_day;
    double sum = 0.0;
    int count = 0;
  };
  std::map<std::int64_t, Acc> by_serial;
  for (const auto idx : order) {
    for (const auto& p : series[idx].points) {
      auto& acc = by_serial.try_emplace(p.hour_serial, Acc{p.hour_of_day}).first->second;
      acc.sum += p.minutes;
      ++acc.count;
    }
  }

  HourlySeries out{series.front().cohort, series.front().state, SeriesOrigin{}, {}};
  out.origin.kind = SeriesOrigin::Kind::CohortAverage;
  out.origin.n_animals = static_cast<int>(series.size());
  out.points.reserve(by_serial.size());
  for (const auto& [serial, acc] : by_serial) {
    out.points.push_back(HourPoint{serial, acc.hour_of_day, acc.sum / acc.count, acc.count});
  }
  return out;
}

double DailyProfile::daily_total() const {
  double total = 0.0;
  for (int h = 0; h < 24; ++h) {
    if (has_value(h)) total += values[static_cast<std::size_t>(h)];
  }
  return total;
}

DailyProfile daily_profile(const HourlySeries& series) {
  if (series.points.empty()) throw Error(ErrorCode::EmptySeries, "daily_profile of an empty series");
  DailyProfile profile{series.cohort, series.state, {}, {}};
  std::array<double, 24> sums{};
  for (const auto& p : series.points) {
    const auto h = static_cast<std::size_t>(p.hour_of_day);
    sums[h] += p.minutes;
    ++profile.support[h];
  }
  for (std::size_t h = 0; h < 24; ++h) {
    profile.values[h] = profile.support[h] > 0 ? sums[h] / profile.support[h] : std::numeric_limits<double>::quiet_NaN();
  }
  return profile;
}

TreatmentComparison treatment_comparison(std::span<const DailyProfile> profiles) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyInput, "treatment_comparison needs profiles");
  const auto& first = profiles.front();
  for (const auto& p : profiles) {
    if (p.state != first.state) throw Error(ErrorCode::MixedState, "profiles disagree on state");
    if (p.cohort.breed != first.cohort.breed || p.cohort.sex != first.cohort.sex) {
      throw Error(ErrorCode::MixedCohort, "profiles disagree on breed or sex");
    }
  }

  std::vector<std::size_t> order(profiles.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> totals(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) totals[i] = profiles[i].daily_total();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (totals[a] != totals[b]) return totals[a] > totals[b];
    return profiles[a].cohort.treatment < profiles[b].cohort.treatment;
  });

  TreatmentComparison table{first.cohort.breed, first.cohort.sex, first.state, {}, {}, {}};
  for (const auto idx : order) {
    table.treatments.push_back(profiles[idx].cohort.treatment);
    table.totals.push_back(totals[idx]);
    for (std::size_t h = 0; h < 24; ++h) table.matrix[h].push_back(profiles[idx].values[h]);
  }
  return table;
}

std::string series_csv(const HourlySeries& series) {
  std::string out = "hour_serial,hour_of_day,minutes,n_animals\n";
  const bool average = series.origin.kind == SeriesOrigin::Kind::CohortAverage;
  for (const auto& p : series.points) {
    out += std::to_string(p.hour_serial) + ',' + std::to_string(p.hour_of_day) + ',' + io::format_double(p.minutes) +
           ',' + std::to_string(average ? p.support : 1) + '\n';
  }
  return out;
}

std::string profile_csv(const DailyProfile& profile) {
  std::string out = "hour_of_day,minutes,support\n";
  for (int h = 0; h < 24; ++h) {
    const auto i = static_cast<std::size_t>(h);
    out += std::to_string(h) + ',' + (profile.has_value(h) ? io::format_double(profile.values[i]) : std::string()) + ',' +
           std::to_string(profile.support[i]) + '\n';
  }
  return out;
}

std::string comparison_csv(const TreatmentComparison& comparison) {
  auto column_name = [](const CombinedTreatment& t) {
    std::string code = format_treatment(t);
    std::replace(code.begin(), code.end(), ',', ';');
    return code;
  };
  std::string out = "hour_of_day";
  for (const auto& t : comparison.treatments) out += ',' + column_name(t);
  out += '\n';
  for (std::size_t h = 0; h < 24; ++h) {
    out += std::to_string(h);
    for (const double v : comparison.matrix[h]) out += ',' + (std::isnan(v) ? std::string() : io::format_double(v));
    out += '\n';
  }
  out += "total";
  for (const double t : comparison.totals) out += ',' + io::format_double(t);
  out += '\n';
  return out;
}

HourlySeries parse_series_csv(std::string_view text, const CohortKey& cohort, StateLabel state) {
  HourlySeries series{cohort, state, SeriesOrigin{SeriesOrigin::Kind::CohortAverage, {}, 0}, {}};
  std::istringstream in{std::string(text)};
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto cells = io::split_csv(line);
    long long serial = 0, hod = 0, n = 0;
    double minutes = 0.0;
    if (cells.size() < 4 || !io::parse_int(cells[0], serial) || !io::parse_int(cells[1], hod) ||
        !io::parse_double(cells[2], minutes) || !io::parse_int(cells[3], n)) {
      throw Error(ErrorCode::InvalidValue, "malformed series row '" + line + "'");
    }
    series.points.push_back(HourPoint{serial, static_cast<int>(hod), minutes, static_cast<int>(n)});
    series.origin.n_animals = std::max(series.origin.n_animals, static_cast<int>(n));
  }
  validate_series(series);
  return series;
}

}  // namespace herdtwin
