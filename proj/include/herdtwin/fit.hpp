#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herdtwin/aggregate.hpp"

namespace herdtwin {

enum class FamilyKind { GaussianSum, SineSum, Polynomial, Fourier };

std::string_view family_name(FamilyKind kind);  // gaussian, sine, polynomial, fourier
FamilyKind parse_family(std::string_view name);

// Model family with its arity: number of terms (Gaussian, sine), degree
// (polynomial) or number of harmonics (Fourier).
struct CurveFamily {
  FamilyKind kind;
  int arity;

  // Throws Error(InvalidValue) for arity < 1 (or < 0 for polynomials).
  CurveFamily(FamilyKind kind, int arity);

  std::size_t parameter_count() const;
  bool is_linear() const { return kind == FamilyKind::Polynomial; }
  std::string label() const;  // e.g. "gaussian(8)"

  friend bool operator==(const CurveFamily&, const CurveFamily&) = default;
};

// Parameter layouts:
//   GaussianSum  (a1, b1, c1, a2, ...)   sum a exp(-((x - b) / c)^2)
//   SineSum      (a1, b1, c1, a2, ...)   sum a sin(b x + c)
//   Polynomial   (p0, p1, ..., pd)        sum p_k x^k
//   Fourier      (a0, a1, b1, ..., an, bn, w)
//                a0 + sum a_k cos(k w x) + b_k sin(k w x)
struct FittedCurve {
  CurveFamily family;
  std::vector<double> params;
  double sse = 0.0;
  double residual_variance = 0.0;  // sse / n_points
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  // SSE of the best starting point handed to the optimiser.
  double initial_sse = 0.0;
};

// Errors: MalformedParams (wrong length, zero Gaussian width, w <= 0).
double evaluate(const CurveFamily& family, std::span<const double> params, double x);
double evaluate(const FittedCurve& curve, double x);

struct FitOptions {
  int restarts = 8;       // jittered restarts on top of the heuristic start
  double jitter = 0.10;   // relative perturbation of each restart
  int max_iterations = 2000;
  double initial_lambda = 1e-3;
  double gradient_tolerance = 1e-8;
  double relative_sse_tolerance = 1e-12;
};

// Least-squares fit. Polynomials use a QR solve; Fourier uses a QR solve
// inside a golden-section search over w in [2pi/48, 2pi/12], polished with
// Levenberg-Marquardt; Gaussian and sine sums use multi-start LM.
// Errors: InsufficientPoints, SingularSystem, MalformedParams.
FittedCurve fit_curve(const CurveFamily& family, std::span<const double> x, std::span<const double> y,
                      std::uint64_t seed, const FitOptions& options = {});

// Fits the hours of a profile that have support.
FittedCurve fit_profile(const CurveFamily& family, const DailyProfile& profile, std::uint64_t seed,
                        const FitOptions& options = {});

struct SelectionCell {
  CurveFamily family;
  std::optional<FittedCurve> curve;
  std::string error;  // set when the fit failed
};

struct FamilySelection {
  FamilyKind kind;
  std::vector<SelectionCell> cells;
  std::optional<std::size_t> best;  // index into cells

  const FittedCurve* best_curve() const { return best ? &*cells[*best].curve : nullptr; }
};

struct ModelSelection {
  // Families ascending by best residual variance; families without any
  // successful fit go last.
  std::vector<FamilySelection> ranked;
};

using ArityGrid = std::map<FamilyKind, std::vector<int>>;

// Default grid: Gaussian 1..8, sine 1..8, polynomial 1..9, Fourier 1..8.
ArityGrid default_arity_grid();

ModelSelection model_selection(std::span<const double> x, std::span<const double> y, const ArityGrid& grid,
                               std::uint64_t seed, const FitOptions& options = {});

std::string fit_json(const FittedCurve& curve);
std::string selection_csv(const ModelSelection& selection);

}  // namespace herdtwin
