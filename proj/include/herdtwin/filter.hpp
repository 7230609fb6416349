#pragma once

#include <array>
#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include "herdtwin/core.hpp"

namespace herdtwin {

enum class Window { Rectangular, Hamming };

Window parse_window(std::string_view name);
std::string_view window_name(Window window);

// Linear-phase FIR low-pass. Taps are symmetric and sum to one.
struct FirFilter {
  std::vector<double> taps;
  double normalized_cutoff = 0.4;  // fraction of Nyquist
  Window window = Window::Hamming;

  std::size_t length() const { return taps.size(); }
};

// Windowed-sinc design renormalised to unity DC gain.
// Errors: InvalidCutoff (outside (0, 1)), InvalidLength (< 1).
FirFilter design_lowpass(int length, double normalized_cutoff, Window window);

// H(e^{jw}) of the causal tap sequence, w in radians/sample.
std::complex<double> frequency_response(const FirFilter& filter, double omega);
double magnitude_response(const FirFilter& filter, double omega);

// Linear interpolation across destroyed hours so the series sits on a
// gap-free hourly grid. Interpolated points are flagged.
HourlySeries fill_gaps(const HourlySeries& series);

// Centre-compensated convolution with replicated edges, unclamped:
// out[t] = sum_k taps[k] * x[t + k - (L-1)/2]  (floor for even L).
// Errors: SeriesTooShort.
std::vector<double> filter_samples(const FirFilter& filter, std::span<const double> samples);

// filter_samples over a gap-free series, clamped to [0, 60].
// Errors: GapInSeries, SeriesTooShort.
HourlySeries apply_filter(const FirFilter& filter, const HourlySeries& series);

// The 24 values of calendar day `day_index` (1-based from the series' first
// day) in clock order. Errors: IncompleteDay.
std::array<double, 24> single_cycle(const HourlySeries& series, int day_index);

}  // namespace herdtwin
