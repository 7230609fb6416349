#include "herdtwin/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "herdtwin/io_util.hpp"
#include "herdtwin/linalg.hpp"
#include "herdtwin/random.hpp"

#include <json.hpp>

namespace herdtwin {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourierWMin = kTwoPi / 48.0;
constexpr double kFourierWMax = kTwoPi / 12.0;
constexpr double kDaySpan = 24.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::GaussianSum: return "gaussian";
    case FamilyKind::SineSum: return "sine";
    case FamilyKind::Polynomial: return "polynomial";
    case FamilyKind::Fourier: return "fourier";
  }
  return "?";
}

FamilyKind parse_family(std::string_view name) {
  const auto n = io::trim(name);
  if (io::iequals(n, "gaussian") || io::iequals(n, "gauss")) return FamilyKind::GaussianSum;
  if (io::iequals(n, "sine") || io::iequals(n, "sin")) return FamilyKind::SineSum;
  if (io::iequals(n, "polynomial") || io::iequals(n, "poly")) return FamilyKind::Polynomial;
  if (io::iequals(n, "fourier")) return FamilyKind::Fourier;
  throw Error(ErrorCode::InvalidValue, "unknown curve family '" + std::string(name) + "'");
}

CurveFamily::CurveFamily(FamilyKind kind_in, int arity_in) : kind(kind_in), arity(arity_in) {
  const int minimum = kind == FamilyKind::Polynomial ? 0 : 1;
  if (arity < minimum) throw Error(ErrorCode::InvalidValue, "arity too small for " + std::string(family_name(kind)));
}

std::size_t CurveFamily::parameter_count() const {
  const auto n = static_cast<std::size_t>(arity);
  switch (kind) {
    case FamilyKind::GaussianSum:
    case FamilyKind::SineSum:
      return 3 * n;
    case FamilyKind::Polynomial:
      return n + 1;
    case FamilyKind::Fourier:
      return 2 * n + 2;
  }
  return 0;
}

std::string CurveFamily::label() const { return std::string(family_name(kind)) + "(" + std::to_string(arity) + ")"; }

// ---------------------------------------------------------------------------
// Evaluation and derivatives

namespace {

void check_params(const CurveFamily& family, std::span<const double> params) {
  if (params.size() != family.parameter_count()) {
    throw Error(ErrorCode::MalformedParams, family.label() + " expects " + std::to_string(family.parameter_count()) +
                                                " parameters, got " + std::to_string(params.size()));
  }
  if (family.kind == FamilyKind::GaussianSum) {
    for (std::size_t t = 0; t < params.size(); t += 3) {
      if (params[t + 2] == 0.0) throw Error(ErrorCode::MalformedParams, "Gaussian width must be non-zero");
    }
  }
  if (family.kind == FamilyKind::Fourier && !(params.back() > 0.0)) {
    throw Error(ErrorCode::MalformedParams, "Fourier fundamental must be positive");
  }
}

double evaluate_unchecked(const CurveFamily& family, std::span<const double> p, double x) {
  double sum = 0.0;
  switch (family.kind) {
    case FamilyKind::GaussianSum:
      for (std::size_t t = 0; t < p.size(); t += 3) {
        const double u = (x - p[t + 1]) / p[t + 2];
        sum += p[t] * std::exp(-u * u);
      }
      break;
    case FamilyKind::SineSum:
      for (std::size_t t = 0; t < p.size(); t += 3) sum += p[t] * std::sin(p[t + 1] * x + p[t + 2]);
      break;
    case FamilyKind::Polynomial:
      for (std::size_t k = p.size(); k-- > 0;) sum = sum * x + p[k];
      break;
    case FamilyKind::Fourier: {
      const double w = p.back();
      sum = p[0];
      for (int k = 1; k <= family.arity; ++k) {
        const double arg = k * w * x;
        sum += p[static_cast<std::size_t>(2 * k - 1)] * std::cos(arg) + p[static_cast<std::size_t>(2 * k)] * std::sin(arg);
      }
      break;
    }
  }
  return sum;
}

// Row of d f(x) / d params.
void gradient_row(const CurveFamily& family, std::span<const double> p, double x, std::span<double> row) {
  switch (family.kind) {
    case FamilyKind::GaussianSum:
      for (std::size_t t = 0; t < p.size(); t += 3) {
        const double a = p[t], c = p[t + 2];
        const double u = (x - p[t + 1]) / c;
        const double e = std::exp(-u * u);
        row[t] = e;
        row[t + 1] = a * e * 2.0 * u / c;
        row[t + 2] = a * e * 2.0 * u * u / c;
      }
      break;
    case FamilyKind::SineSum:
      for (std::size_t t = 0; t < p.size(); t += 3) {
        const double arg = p[t + 1] * x + p[t + 2];
        const double s = std::sin(arg), co = std::cos(arg);
        row[t] = s;
        row[t + 1] = p[t] * x * co;
        row[t + 2] = p[t] * co;
      }
      break;
    case FamilyKind::Polynomial: {
      double power = 1.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        row[k] = power;
        power *= x;
      }
      break;
    }
    case FamilyKind::Fourier: {
      const double w = p.back();
      row[0] = 1.0;
      double dw = 0.0;
      for (int k = 1; k <= family.arity; ++k) {
        const double arg = k * w * x;
        const double co = std::cos(arg), s = std::sin(arg);
        const auto ia = static_cast<std::size_t>(2 * k - 1), ib = static_cast<std::size_t>(2 * k);
        row[ia] = co;
        row[ib] = s;
        dw += k * x * (-p[ia] * s + p[ib] * co);
      }
      row[p.size() - 1] = dw;
      break;
    }
  }
}

bool params_usable(const CurveFamily& family, std::span<const double> p) {
  for (const double v : p) {
    if (!std::isfinite(v)) return false;
  }
  if (family.kind == FamilyKind::GaussianSum) {
    for (std::size_t t = 0; t < p.size(); t += 3) {
      if (std::abs(p[t + 2]) < 1e-9) return false;
    }
  }
  if (family.kind == FamilyKind::Fourier && !(p.back() > 0.0)) return false;
  return true;
}

double sum_squared_error(const CurveFamily& family, std::span<const double> p, std::span<const double> x,
                         std::span<const double> y) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = evaluate_unchecked(family, p, x[i]) - y[i];
    sse += r * r;
  }
  return std::isfinite(sse) ? sse : kInf;
}

struct LmResult {
  std::vector<double> params;
  double sse = kInf;
  int iterations = 0;
  bool converged = false;
};

LmResult levenberg_marquardt(const CurveFamily& family, std::vector<double> params, std::span<const double> x,
                             std::span<const double> y, const FitOptions& options) {
  const std::size_t m = x.size();
  const std::size_t n = params.size();
  LmResult result;
  result.params = params;
  result.sse = params_usable(family, params) ? sum_squared_error(family, params, x, y) : kInf;
  if (!std::isfinite(result.sse)) return result;

  double lambda = options.initial_lambda;
  std::vector<double> row(n);
  linalg::Matrix jac(m, n);
  std::vector<double> residual(m);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    for (std::size_t i = 0; i < m; ++i) {
      gradient_row(family, result.params, x[i], row);
      for (std::size_t j = 0; j < n; ++j) jac(i, j) = row[j];
      residual[i] = evaluate_unchecked(family, result.params, x[i]) - y[i];
    }
    // Gradient of the SSE is 2 J^T r.
    double grad_norm = 0.0;
    std::vector<double> col_norm2(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        g += jac(i, j) * residual[i];
        col_norm2[j] += jac(i, j) * jac(i, j);
      }
      grad_norm = std::hypot(grad_norm, 2.0 * g);
    }
    if (grad_norm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted && lambda < 1e20) {
      // [J; sqrt(lambda) D] delta = [-r; 0] with Marquardt scaling D.
      linalg::Matrix aug(m + n, n);
      std::vector<double> rhs(m + n, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = jac(i, j);
        rhs[i] = -residual[i];
      }
      const double root_lambda = std::sqrt(lambda);
      for (std::size_t j = 0; j < n; ++j) aug(m + j, j) = root_lambda * std::sqrt(std::max(col_norm2[j], 1e-12));

      std::vector<double> candidate = result.params;
      bool solved = true;
      try {
        const auto delta = linalg::least_squares(std::move(aug), std::move(rhs), 0.0);
        for (std::size_t j = 0; j < n; ++j) candidate[j] += delta[j];
      } catch (const Error&) {
        solved = false;
      }
      const double candidate_sse =
          solved && params_usable(family, candidate) ? sum_squared_error(family, candidate, x, y) : kInf;
      if (candidate_sse < result.sse) {
        const double relative_change = (result.sse - candidate_sse) / std::max(result.sse, 1e-300);
        result.params = std::move(candidate);
        result.sse = candidate_sse;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (relative_change < options.relative_sse_tolerance || candidate_sse == 0.0) result.converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || result.converged) break;
  }
  return result;
}

// Linear fit for the polynomial and fixed-w Fourier cases.
std::vector<double> linear_fit(const CurveFamily& family, std::span<const double> x, std::span<const double> y,
                               double w = 0.0) {
  const std::size_t n = family.kind == FamilyKind::Fourier ? family.parameter_count() - 1 : family.parameter_count();
  linalg::Matrix design(x.size(), n);
  std::vector<double> full(family.parameter_count(), 0.0);
  if (family.kind == FamilyKind::Fourier) full.back() = w;
  std::vector<double> row(family.parameter_count());
  for (std::size_t i = 0; i < x.size(); ++i) {
    gradient_row(family, full, x[i], row);
    for (std::size_t j = 0; j < n; ++j) design(i, j) = row[j];
  }
  auto coeffs = linalg::least_squares(std::move(design), std::vector<double>(y.begin(), y.end()));
  if (family.kind == FamilyKind::Fourier) coeffs.push_back(w);
  return coeffs;
}

double fourier_sse_at(const CurveFamily& family, std::span<const double> x, std::span<const double> y, double w) {
  try {
    return sum_squared_error(family, linear_fit(family, x, y, w), x, y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularSystem) return kInf;
    throw;
  }
}

double golden_section_w(const CurveFamily& family, std::span<const double> x, std::span<const double> y) {
  // Coarse scan to bracket the global minimum, then golden-section inside
  // the bracket.
  constexpr int kScan = 96;
  const double step = (kFourierWMax - kFourierWMin) / kScan;
  int best = 0;
  double best_sse = kInf;
  for (int i = 0; i <= kScan; ++i) {
    const double sse = fourier_sse_at(family, x, y, kFourierWMin + i * step);
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  if (!std::isfinite(best_sse)) throw Error(ErrorCode::SingularSystem, "no usable Fourier fundamental");
  double lo = kFourierWMin + std::max(best - 1, 0) * step;
  double hi = kFourierWMin + std::min(best + 1, kScan) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = fourier_sse_at(family, x, y, c);
  double fd = fourier_sse_at(family, x, y, d);
  for (int iter = 0; iter < 100 && hi - lo > 1e-12; ++iter) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = fourier_sse_at(family, x, y, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = fourier_sse_at(family, x, y, d);
    }
  }
  const double w = 0.5 * (lo + hi);
  const double fw = fourier_sse_at(family, x, y, w);
  return fw <= best_sse ? w : kFourierWMin + best * step;
}

// Peak-picking start for a sum of n Gaussians.
std::vector<double> gaussian_start(int terms, std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  std::vector<std::size_t> maxima;
  for (std::size_t k = 0; k < m; ++k) {
    const double v = y[order[k]];
    const bool left_ok = k == 0 || v > y[order[k - 1]];
    const bool right_ok = k + 1 == m || v >= y[order[k + 1]];
    if (left_ok && right_ok) maxima.push_back(order[k]);
  }
  auto by_height = [&](std::size_t a, std::size_t b) {
    if (y[a] != y[b]) return y[a] > y[b];
    return x[a] < x[b];
  };
  std::stable_sort(maxima.begin(), maxima.end(), by_height);
  std::vector<std::size_t> chosen(maxima.begin(), maxima.begin() + std::min<std::size_t>(maxima.size(), terms));
  if (chosen.size() < static_cast<std::size_t>(terms)) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
    }
    std::stable_sort(rest.begin(), rest.end(), by_height);
    for (std::size_t i = 0; chosen.size() < static_cast<std::size_t>(terms) && i < rest.size(); ++i) chosen.push_back(rest[i]);
  }

  std::vector<double> params;
  const double width = kDaySpan / (2.0 * terms);
  for (const auto idx : chosen) {
    params.push_back(y[idx]);
    params.push_back(x[idx]);
    params.push_back(width);
  }
  return params;
}

// Evenly spaced centres, width a multiple of the spacing, amplitudes from a linear solve.
std::vector<double> gaussian_grid_start(int terms, std::span<const double> x, std::span<const double> y,
                                        double width_scale) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  const double spacing = (hi - lo) / terms;
  const double width = spacing > 0.0 ? spacing * width_scale : 1.0;
  std::vector<double> centres;
  for (int k = 0; k < terms; ++k) centres.push_back(lo + (k + 0.5) * spacing);

  linalg::Matrix design(x.size(), centres.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < centres.size(); ++k) {
      const double u = (x[i] - centres[k]) / width;
      design(i, k) = std::exp(-u * u);
    }
  }
  std::vector<double> amplitudes;
  try {
    amplitudes = linalg::least_squares(std::move(design), std::vector<double>(y.begin(), y.end()));
  } catch (const Error&) {
    amplitudes.assign(centres.size(), 1.0);
  }
  std::vector<double> params;
  for (std::size_t k = 0; k < centres.size(); ++k) {
    params.push_back(amplitudes[k]);
    params.push_back(centres[k]);
    params.push_back(width);
  }
  return params;
}

// Sine-sum start: one slow term for the level plus daily harmonics, with
// amplitudes and phases from a linear solve at those fixed frequencies.
std::vector<double> sine_start(int terms, std::span<const double> x, std::span<const double> y) {
  std::vector<double> freqs;
  freqs.push_back(kTwoPi / (10.0 * kDaySpan));
  for (int k = 1; k < terms; ++k) freqs.push_back(k * kTwoPi / kDaySpan);

  linalg::Matrix design(x.size(), 2 * freqs.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      design(i, 2 * k) = std::sin(freqs[k] * x[i]);
      design(i, 2 * k + 1) = std::cos(freqs[k] * x[i]);
    }
  }
  std::vector<double> coeffs;
  try {
    coeffs = linalg::least_squares(std::move(design), std::vector<double>(y.begin(), y.end()));
  } catch (const Error&) {
    coeffs.assign(2 * freqs.size(), 1.0);
  }
  std::vector<double> params;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    // alpha sin + beta cos = a sin(bx + c) with a cos c = alpha, a sin c = beta.
    const double alpha = coeffs[2 * k], beta = coeffs[2 * k + 1];
    params.push_back(std::hypot(alpha, beta));
    params.push_back(freqs[k]);
    params.push_back(std::atan2(beta, alpha));
  }
  return params;
}

std::vector<double> jitter_start(const CurveFamily& family, const std::vector<double>& base, double jitter, Rng& rng) {
  std::vector<double> p = base;
  for (std::size_t t = 0; t < p.size(); t += 3) {
    p[t] *= 1.0 + rng.uniform(-jitter, jitter);
    if (family.kind == FamilyKind::GaussianSum) {
      p[t + 1] += rng.uniform(-jitter, jitter) * kDaySpan;
      p[t + 2] *= 1.0 + rng.uniform(-jitter, jitter);
    } else {
      p[t + 1] *= 1.0 + rng.uniform(-jitter, jitter);
      p[t + 2] += rng.uniform(-jitter, jitter) * std::numbers::pi;
    }
  }
  return p;
}

FittedCurve finish(const CurveFamily& family, std::vector<double> params, double sse, std::size_t n_points,
                   bool converged, int iterations, double initial_sse) {
  FittedCurve curve{family, std::move(params)};
  curve.sse = sse;
  curve.n_points = n_points;
  curve.residual_variance = sse / static_cast<double>(n_points);
  curve.converged = converged;
  curve.iterations = iterations;
  curve.initial_sse = initial_sse;
  return curve;
}

}  // namespace

double evaluate(const CurveFamily& family, std::span<const double> params, double x) {
  check_params(family, params);
  return evaluate_unchecked(family, params, x);
}

double evaluate(const FittedCurve& curve, double x) { return evaluate(curve.family, curve.params, x); }

namespace {

// Arity n+1 start from an arity n solution: one extra term placed on the
// largest residual.
std::vector<double> grown_start(const CurveFamily& family, const std::vector<double>& previous,
                                std::span<const double> x, std::span<const double> y) {
  const CurveFamily smaller(family.kind, family.arity - 1);
  std::size_t worst = 0;
  double worst_r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - evaluate_unchecked(smaller, previous, x[i]);
    if (std::abs(r) > std::abs(worst_r)) {
      worst_r = r;
      worst = i;
    }
  }
  auto params = previous;
  if (family.kind == FamilyKind::GaussianSum) {
    params.insert(params.end(), {worst_r, x[worst], 1.0});
  } else {
    const double b = family.arity * kTwoPi / kDaySpan;
    params.insert(params.end(), {worst_r, b, std::numbers::pi / 2.0 - b * x[worst]});
  }
  return params;
}

FittedCurve fit_curve_impl(const CurveFamily& family, std::span<const double> x, std::span<const double> y,
                           std::uint64_t seed, const FitOptions& options,
                           const std::vector<std::vector<double>>& extra_starts);

}  // namespace

FittedCurve fit_curve(const CurveFamily& family, std::span<const double> x, std::span<const double> y,
                      std::uint64_t seed, const FitOptions& options) {
  return fit_curve_impl(family, x, y, seed, options, {});
}

namespace {

FittedCurve fit_curve_impl(const CurveFamily& family, std::span<const double> x, std::span<const double> y,
                           std::uint64_t seed, const FitOptions& options,
                           const std::vector<std::vector<double>>& extra_starts) {
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "x and y lengths differ");
  if (x.size() < family.parameter_count()) {
    throw Error(ErrorCode::InsufficientPoints, family.label() + " needs " + std::to_string(family.parameter_count()) +
                                                   " points, got " + std::to_string(x.size()));
  }
  const std::size_t m = x.size();

  if (family.kind == FamilyKind::Polynomial) {
    auto params = linear_fit(family, x, y);
    const double sse = sum_squared_error(family, params, x, y);
    return finish(family, std::move(params), sse, m, true, 1, sse);
  }

  if (family.kind == FamilyKind::Fourier) {
    const double w = golden_section_w(family, x, y);
    auto start = linear_fit(family, x, y, w);
    const double start_sse = sum_squared_error(family, start, x, y);
    auto polished = levenberg_marquardt(family, start, x, y, options);
    if (polished.sse <= start_sse) {
      return finish(family, std::move(polished.params), polished.sse, m, polished.converged, polished.iterations,
                    start_sse);
    }
    return finish(family, std::move(start), start_sse, m, true, 0, start_sse);
  }

  std::vector<std::vector<double>> bases;
  if (family.kind == FamilyKind::GaussianSum) {
    bases = {gaussian_start(family.arity, x, y), gaussian_grid_start(family.arity, x, y, 1.0),
             gaussian_grid_start(family.arity, x, y, 0.6), gaussian_grid_start(family.arity, x, y, 1.6)};
  } else {
    bases = {sine_start(family.arity, x, y)};
  }
  std::vector<std::vector<double>> starts = bases;
  Rng rng(seed);
  for (int r = 0; r < options.restarts; ++r) {
    starts.push_back(jitter_start(family, bases[static_cast<std::size_t>(r) % bases.size()], options.jitter, rng));
  }
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());

  LmResult best;
  double best_initial = kInf;
  for (const auto& start : starts) {
    const double initial =
        params_usable(family, start) ? sum_squared_error(family, start, x, y) : kInf;
    best_initial = std::min(best_initial, initial);
    auto result = levenberg_marquardt(family, start, x, y, options);
    if (result.sse < best.sse) best = std::move(result);
  }
  if (!std::isfinite(best.sse)) throw Error(ErrorCode::SingularSystem, family.label() + ": no finite starting point");
  return finish(family, std::move(best.params), best.sse, m, best.converged, best.iterations, best_initial);
}

}  // namespace

FittedCurve fit_profile(const CurveFamily& family, const DailyProfile& profile, std::uint64_t seed,
                        const FitOptions& options) {
  std::vector<double> x, y;
  for (int h = 0; h < 24; ++h) {
    if (!profile.has_value(h)) continue;
    x.push_back(h);
    y.push_back(profile.values[static_cast<std::size_t>(h)]);
  }
  return fit_curve(family, x, y, seed, options);
}

ArityGrid default_arity_grid() {
  auto range = [](int lo, int hi) {
    std::vector<int> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i);
    return v;
  };
  return {{FamilyKind::GaussianSum, range(1, 8)},
          {FamilyKind::SineSum, range(1, 8)},
          {FamilyKind::Polynomial, range(1, 9)},
          {FamilyKind::Fourier, range(1, 8)}};
}

ModelSelection model_selection(std::span<const double> x, std::span<const double> y, const ArityGrid& grid,
                               std::uint64_t seed, const FitOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidValue, "empty arity grid");
  ModelSelection selection;
  for (const auto& [kind, arities] : grid) {
    FamilySelection fam{kind, {}, std::nullopt};
    for (const int arity : arities) {
      SelectionCell cell{CurveFamily(kind, arity), std::nullopt, {}};
      std::vector<std::vector<double>> extra;
      if ((kind == FamilyKind::GaussianSum || kind == FamilyKind::SineSum) && !fam.cells.empty()) {
        const auto& prev = fam.cells.back();
        if (prev.curve && prev.family.arity == arity - 1) extra.push_back(grown_start(cell.family, prev.curve->params, x, y));
      }
      try {
        cell.curve = fit_curve_impl(cell.family, x, y, seed, options, extra);
      } catch (const Error& e) {
        cell.error = e.what();
      }
      fam.cells.push_back(std::move(cell));
      const auto& added = fam.cells.back();
      if (added.curve && (!fam.best || added.curve->residual_variance < fam.cells[*fam.best].curve->residual_variance)) {
        fam.best = fam.cells.size() - 1;
      }
    }
    selection.ranked.push_back(std::move(fam));
  }
  std::stable_sort(selection.ranked.begin(), selection.ranked.end(), [](const FamilySelection& a, const FamilySelection& b) {
    const double va = a.best_curve() ? a.best_curve()->residual_variance : kInf;
    const double vb = b.best_curve() ? b.best_curve()->residual_variance : kInf;
    return va < vb;
  });
  return selection;
}

std::string fit_json(const FittedCurve& curve) {
  nlohmann::ordered_json doc;
  doc["family"] = family_name(curve.family.kind);
  doc["arity"] = curve.family.arity;
  doc["params"] = curve.params;
  doc["sse"] = curve.sse;
  doc["residual_variance"] = curve.residual_variance;
  doc["n_points"] = curve.n_points;
  doc["converged"] = curve.converged;
  doc["iterations"] = curve.iterations;
  return doc.dump(2) + "\n";
}

std::string selection_csv(const ModelSelection& selection) {
  std::string out = "rank,family,best_arity,residual_variance,sse,converged,failed_cells\n";
  int rank = 1;
  for (const auto& fam : selection.ranked) {
    int failed = 0;
    for (const auto& c : fam.cells) failed += c.curve ? 0 : 1;
    out += std::to_string(rank++) + ',' + std::string(family_name(fam.kind)) + ',';
    if (const auto* best = fam.best_curve()) {
      out += std::to_string(best->family.arity) + ',' + io::format_double(best->residual_variance) + ',' +
             io::format_double(best->sse) + ',' + (best->converged ? "true" : "false");
    } else {
      out += ",,,";
    }
    out += ',' + std::to_string(failed) + '\n';
  }
  return out;
}

}  // namespace herdtwin
