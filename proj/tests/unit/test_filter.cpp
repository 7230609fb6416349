#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "herdtwin/filter.hpp"
#include "herdtwin/random.hpp"

namespace herdtwin {
namespace {

constexpr double kPi = std::numbers::pi;

double rms(std::span<const double> v, std::size_t skip) {
  double s = 0.0;
  for (std::size_t i = skip; i + skip < v.size(); ++i) s += v[i] * v[i];
  return std::sqrt(s / static_cast<double>(v.size() - 2 * skip));
}

TEST(Fir, DefaultTapsSymmetricUnityGain) {
  const auto f = design_lowpass(5, 0.4, Window::Hamming);
  ASSERT_EQ(f.length(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(f.taps[i], f.taps[4 - i]);
  EXPECT_NEAR(std::accumulate(f.taps.begin(), f.taps.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(magnitude_response(f, 0.0), 1.0, 1e-12);
  // Independent windowed-sinc: h[n] = w[n] * 0.4 sinc(0.4 (n - 2)), renormalised.
  std::vector<double> h(5);
  double sum = 0.0;
  for (int n = 0; n < 5; ++n) {
    const double m = n - 2.0;
    const double s = m == 0.0 ? 0.4 : std::sin(0.4 * kPi * m) / (kPi * m);
    h[static_cast<std::size_t>(n)] = (0.54 - 0.46 * std::cos(2.0 * kPi * n / 4.0)) * s;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(f.taps[i], h[i] / sum, 1e-15);
}

TEST(Fir, FrequencyResponseMatchesDft) {
  for (const int length : {1, 2, 5, 8, 31}) {
    for (const auto window : {Window::Hamming, Window::Rectangular}) {
      const auto f = design_lowpass(length, 0.3, window);
      constexpr int n = 512;
      for (int k = 0; k < n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < f.taps.size(); ++t) {
          acc += f.taps[t] * std::polar(1.0, -2.0 * kPi * k * static_cast<double>(t) / n);
        }
        EXPECT_NEAR(magnitude_response(f, 2.0 * kPi * k / n), std::abs(acc), 1e-12);
      }
    }
  }
}

TEST(Fir, ImpulseResponseEqualsTaps) {
  const auto f = design_lowpass(7, 0.25, Window::Hamming);
  std::vector<double> x(41, 0.0);
  x[20] = 1.0;
  const auto y = filter_samples(f, x);
  for (std::size_t j = 0; j < f.length(); ++j) EXPECT_NEAR(y[20 - 3 + j], f.taps[j], 1e-15);
  EXPECT_EQ(y[10], 0.0);
}

TEST(Fir, ConstantSeriesUnchanged) {
  const auto f = design_lowpass(9, 0.2, Window::Rectangular);
  const std::vector<double> x(30, 17.5);
  for (const double v : filter_samples(f, x)) EXPECT_NEAR(v, 17.5, 1e-12);
}

TEST(Fir, HighFrequencyAttenuatedMore) {
  const auto f = design_lowpass(5, 0.4, Window::Hamming);
  std::vector<double> slow(480), fast(480);
  for (std::size_t t = 0; t < slow.size(); ++t) {
    slow[t] = std::sin(0.05 * kPi * static_cast<double>(t));
    fast[t] = std::sin(0.8 * kPi * static_cast<double>(t));
  }
  const double slow_gain = rms(filter_samples(f, slow), 10) / rms(slow, 10);
  const double fast_gain = rms(filter_samples(f, fast), 10) / rms(fast, 10);
  EXPECT_GE(slow_gain, 3.0 * fast_gain);
}

TEST(Fir, LengthOneIsIdentity) {
  const auto f = design_lowpass(1, 0.4, Window::Hamming);
  ASSERT_EQ(f.taps.size(), 1u);
  EXPECT_EQ(f.taps[0], 1.0);
}

TEST(Fir, InvalidArguments) {
  try {
    design_lowpass(0, 0.4, Window::Hamming);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLength);
  }
  for (const double c : {0.0, 1.0, -0.1, 1.5}) {
    try {
      design_lowpass(5, c, Window::Hamming);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidCutoff);
    }
  }
  EXPECT_EQ(parse_window("HAMMING"), Window::Hamming);
  EXPECT_THROW(parse_window("kaiser"), Error);
}

TEST(Fir, ShortSeriesRejected) {
  const auto f = design_lowpass(5, 0.4, Window::Hamming);
  try {
    filter_samples(f, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeriesTooShort);
  }
}

HourlySeries gappy() {
  HourlySeries s{{Breed::Angus, Sex::Female, parse_treatment("P")}, StateLabel::Resting, {}, {}};
  s.points = {{1, 0, 10.0, 60}, {2, 1, 20.0, 60}, {5, 4, 50.0, 60}, {6, 5, 0.0, 60}};
  return s;
}

TEST(FillGaps, LinearInterpolationFlagged) {
  const auto filled = fill_gaps(gappy());
  ASSERT_EQ(filled.points.size(), 6u);
  EXPECT_TRUE(is_gap_free(filled));
  EXPECT_DOUBLE_EQ(filled.points[2].minutes, 30.0);
  EXPECT_DOUBLE_EQ(filled.points[3].minutes, 40.0);
  EXPECT_TRUE(filled.points[2].interpolated);
  EXPECT_EQ(filled.points[3].hour_of_day, 3);
  EXPECT_FALSE(filled.points[4].interpolated);
  EXPECT_NO_THROW(validate_series(filled));
}

TEST(ApplyFilter, RequiresGapFreeAndClamps) {
  const auto f = design_lowpass(5, 0.4, Window::Hamming);
  try {
    apply_filter(f, gappy());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GapInSeries);
  }
  Rng rng(1);
  HourlySeries s{{Breed::Angus, Sex::Female, parse_treatment("P")}, StateLabel::Resting, {}, {}};
  for (int i = 0; i < 100; ++i) s.points.push_back({i + 1, i % 24, rng.uniform() < 0.5 ? 0.0 : 60.0, 60});
  for (const auto& p : apply_filter(f, s).points) {
    EXPECT_GE(p.minutes, 0.0);
    EXPECT_LE(p.minutes, 60.0);
  }
}

TEST(SingleCycle, ExtractsCalendarDay) {
  HourlySeries s{{Breed::Angus, Sex::Female, parse_treatment("P")}, StateLabel::Resting, {}, {}};
  for (int i = 0; i < 72; ++i) s.points.push_back({i + 1, i % 24, static_cast<double>(i % 60), 60});
  const auto day2 = single_cycle(s, 2);
  EXPECT_EQ(day2[0], 24.0);
  EXPECT_EQ(day2[23], 47.0);
  EXPECT_THROW(single_cycle(s, 4), Error);
  s.points.erase(s.points.begin() + 30);
  EXPECT_THROW(single_cycle(s, 2), Error);
}

}  // namespace
}  // namespace herdtwin
