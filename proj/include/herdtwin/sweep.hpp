#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "herdtwin/lstm.hpp"

namespace herdtwin {

enum class SweepAxis { Hidden, Layers, Batch, Epochs };

std::string_view axis_name(SweepAxis axis);  // hidden, layers, batch, epochs
SweepAxis parse_axis(std::string_view name);

struct SweepGrid {
  SweepAxis axis = SweepAxis::Hidden;
  std::vector<int> values;
  // Fixed companions; the swept field is overwritten per cell.
  LstmConfig base;
  int repetitions = 5;
};

// Grid for one axis with its fixed companions. The epochs axis stops at 2000
// unless `full` is set.
SweepGrid default_grid(SweepAxis axis, bool full = false);

// Five-number summary; quartiles interpolate linearly between order
// statistics. Errors: EmptyInput.
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};
BoxStats box_stats(std::vector<double> samples);

struct SweepCell {
  int value = 0;
  LstmConfig config;
  // One entry per successful repetition.
  std::vector<double> test_mse;   // minutes^2
  std::vector<double> train_mse;  // scaled, forward-only after training
  std::vector<std::vector<double>> traces;
  std::vector<std::string> errors;
  std::optional<BoxStats> test_box;
  std::optional<BoxStats> train_box;
  // Per-epoch train MSE (minutes^2) pooled over repetitions.
  std::optional<BoxStats> epoch_box;
  int rank = 0;  // 1 = lowest median test MSE; 0 when every repetition failed
};

struct SweepResult {
  SweepAxis axis;
  std::vector<SweepCell> cells;  // grid order
};

// Trains every (value, repetition) pair on `jobs` worker threads. Results do
// not depend on `jobs`. A failing cell records its errors and the table
// still completes. Errors: InvalidConfig (empty grid, repetitions < 1).
SweepResult run_sweep(const Dataset& data, const SweepGrid& grid, int jobs = 1);

std::string sweep_csv(const SweepResult& result);
std::string trace_csv(const SweepCell& cell);

}  // namespace herdtwin
