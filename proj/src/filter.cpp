#include "herdtwin/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "herdtwin/io_util.hpp"
#include "herdtwin/simd/kernels.hpp"

namespace herdtwin {

Window parse_window(std::string_view name) {
  if (io::iequals(io::trim(name), "hamming")) return Window::Hamming;
  if (io::iequals(io::trim(name), "rectangular") || io::iequals(io::trim(name), "boxcar")) return Window::Rectangular;
  throw Error(ErrorCode::InvalidValue, "unknown window '" + std::string(name) + "'");
}

std::string_view window_name(Window window) { return window == Window::Hamming ? "hamming" : "rectangular"; }

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double window_weight(Window window, int n, int length) {
  if (window == Window::Rectangular || length == 1) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
}

}  // namespace

FirFilter design_lowpass(int length, double normalized_cutoff, Window window) {
  if (length < 1) throw Error(ErrorCode::InvalidLength, "filter length must be >= 1");
  if (!(normalized_cutoff > 0.0 && normalized_cutoff < 1.0)) {
    throw Error(ErrorCode::InvalidCutoff, "cutoff must lie in (0, 1) of Nyquist");
  }
  FirFilter filter{std::vector<double>(static_cast<std::size_t>(length)), normalized_cutoff, window};
  const double centre = 0.5 * (length - 1);
  for (int n = 0; n < length; ++n) {
    filter.taps[static_cast<std::size_t>(n)] =
        normalized_cutoff * sinc(normalized_cutoff * (n - centre)) * window_weight(window, n, length);
  }
  // Sum symmetric pairs so the normaliser does not depend on summation
  // direction, then force exact mirror symmetry.
  double sum = 0.0;
  for (int n = 0; n < length / 2; ++n) {
    sum += filter.taps[static_cast<std::size_t>(n)] + filter.taps[static_cast<std::size_t>(length - 1 - n)];
  }
  if (length % 2 == 1) sum += filter.taps[static_cast<std::size_t>(length / 2)];
  for (auto& t : filter.taps) t /= sum;
  for (int n = 0; n < length / 2; ++n) {
    filter.taps[static_cast<std::size_t>(length - 1 - n)] = filter.taps[static_cast<std::size_t>(n)];
  }
  return filter;
}

std::complex<double> frequency_response(const FirFilter& filter, double omega) {
  std::complex<double> h{0.0, 0.0};
  for (std::size_t n = 0; n < filter.taps.size(); ++n) {
    h += filter.taps[n] * std::polar(1.0, -omega * static_cast<double>(n));
  }
  return h;
}

double magnitude_response(const FirFilter& filter, double omega) { return std::abs(frequency_response(filter, omega)); }

HourlySeries fill_gaps(const HourlySeries& series) {
  HourlySeries out{series.cohort, series.state, series.origin, {}};
  if (series.points.empty()) return out;
  out.points.reserve(static_cast<std::size_t>(series.points.back().hour_serial - series.points.front().hour_serial + 1));
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (i > 0) {
      const auto& prev = series.points[i - 1];
      const auto span = p.hour_serial - prev.hour_serial;
      for (std::int64_t step = 1; step < span; ++step) {
        const double w = static_cast<double>(step) / static_cast<double>(span);
        out.points.push_back(HourPoint{prev.hour_serial + step, static_cast<int>((prev.hour_of_day + step) % 24),
                                       (1.0 - w) * prev.minutes + w * p.minutes, 0, true});
      }
    }
    out.points.push_back(p);
  }
  return out;
}

std::vector<double> filter_samples(const FirFilter& filter, std::span<const double> samples) {
  const std::size_t length = filter.length();
  if (samples.size() < length) {
    throw Error(ErrorCode::SeriesTooShort,
                "series of " + std::to_string(samples.size()) + " samples is shorter than the filter");
  }
  const std::size_t before = (length - 1) / 2;
  const std::size_t after = length - 1 - before;
  std::vector<double> padded;
  padded.reserve(samples.size() + length - 1);
  padded.insert(padded.end(), before, samples.front());
  padded.insert(padded.end(), samples.begin(), samples.end());
  padded.insert(padded.end(), after, samples.back());
  std::vector<double> out(samples.size());
  simd::kernels().correlate(filter.taps.data(), length, padded.data(), out.data(), out.size());
  return out;
}

HourlySeries apply_filter(const FirFilter& filter, const HourlySeries& series) {
  if (!is_gap_free(series)) throw Error(ErrorCode::GapInSeries, "filter input must be on a gap-free grid (fill_gaps)");
  std::vector<double> samples(series.points.size());
  std::transform(series.points.begin(), series.points.end(), samples.begin(), [](const HourPoint& p) { return p.minutes; });
  const auto filtered = filter_samples(filter, samples);
  HourlySeries out = series;
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i].minutes = std::clamp(filtered[i], 0.0, 60.0);
  return out;
}

std::array<double, 24> single_cycle(const HourlySeries& series, int day_index) {
  if (series.points.empty() || day_index < 1) throw Error(ErrorCode::IncompleteDay, "day " + std::to_string(day_index));
  const auto& first = series.points.front();
  // Serial of midnight on the series' first calendar day.
  const std::int64_t day_one_midnight = first.hour_serial - first.hour_of_day;
  const std::int64_t begin = day_one_midnight + 24LL * (day_index - 1);
  std::array<double, 24> out{};
  std::array<bool, 24> seen{};
  const auto lo = std::lower_bound(series.points.begin(), series.points.end(), begin,
                                   [](const HourPoint& p, std::int64_t s) { return p.hour_serial < s; });
  for (auto it = lo; it != series.points.end() && it->hour_serial < begin + 24; ++it) {
    const auto h = static_cast<std::size_t>(it->hour_serial - begin);
    out[h] = it->minutes;
    seen[h] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::IncompleteDay, "day " + std::to_string(day_index) + " is not fully present");
  }
  return out;
}

}  // namespace herdtwin
