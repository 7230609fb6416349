#include "herdtwin/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "herdtwin/io_util.hpp"
#include "herdtwin/random.hpp"

namespace herdtwin {

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Hidden: return "hidden";
    case SweepAxis::Layers: return "layers";
    case SweepAxis::Batch: return "batch";
    case SweepAxis::Epochs: return "epochs";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view name) {
  for (const auto axis : {SweepAxis::Hidden, SweepAxis::Layers, SweepAxis::Batch, SweepAxis::Epochs}) {
    if (io::iequals(io::trim(name), axis_name(axis))) return axis;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown sweep axis '" + std::string(name) + "'");
}

SweepGrid default_grid(SweepAxis axis, bool full) {
  SweepGrid grid;
  grid.axis = axis;
  grid.base.num_layers = 2;
  grid.base.hidden_units = 128;
  grid.base.batch_size = 24;
  grid.base.epochs = 2000;
  switch (axis) {
    case SweepAxis::Hidden:
      grid.values = {4, 8, 16, 32, 64, 128, 256};
      break;
    case SweepAxis::Layers:
      grid.values = {1, 2, 3, 4, 5, 6, 7};
      grid.base.hidden_units = 16;
      break;
    case SweepAxis::Batch:
      grid.values = {3, 6, 12, 24, 48, 96};
      break;
    case SweepAxis::Epochs:
      grid.values = {100, 500, 1000, 2000};
      if (full) grid.values.insert(grid.values.end(), {5000, 10000, 20000});
      break;
  }
  return grid;
}

BoxStats box_stats(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "box_stats needs at least one sample");
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return samples[lo] + frac * (samples[hi] - samples[lo]);
  };
  return {samples.front(), quantile(0.25), quantile(0.5), quantile(0.75), samples.back()};
}

namespace {

void set_axis(LstmConfig& config, SweepAxis axis, int value) {
  switch (axis) {
    case SweepAxis::Hidden: config.hidden_units = value; break;
    case SweepAxis::Layers: config.num_layers = value; break;
    case SweepAxis::Batch: config.batch_size = value; break;
    case SweepAxis::Epochs: config.epochs = value; break;
  }
}

struct RunSlot {
  bool ok = false;
  double test_mse = 0.0;
  double train_mse = 0.0;
  std::vector<double> trace;
  std::string error;
};

}  // namespace

SweepResult run_sweep(const Dataset& data, const SweepGrid& grid, int jobs) {
  if (grid.values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep grid has no values");
  if (grid.repetitions < 1) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one repetition");

  SweepResult result{grid.axis, {}};
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    SweepCell cell;
    cell.value = grid.values[i];
    cell.config = grid.base;
    set_axis(cell.config, grid.axis, cell.value);
    result.cells.push_back(std::move(cell));
  }

  const auto reps = static_cast<std::size_t>(grid.repetitions);
  const std::size_t total = result.cells.size() * reps;
  std::vector<RunSlot> slots(total);
  // Biggest runs first so a long tail does not serialise at the end.
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  auto cost = [&](std::size_t slot) {
    const auto& c = result.cells[slot / reps].config;
    const double h = c.hidden_units;
    return static_cast<double>(c.epochs) * c.num_layers * h * (h + 1.0);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cost(a) > cost(b); });

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t slot = order[k];
      const std::size_t cell = slot / reps, rep = slot % reps;
      auto cfg = result.cells[cell].config;
      cfg.seed = derive_seed(grid.base.seed, rep);
      auto& out = slots[slot];
      try {
        auto model = LstmModel::initialized(cfg);
        const auto trace = train(model, data.train, data.test);
        out.ok = true;
        out.test_mse = trace.test_mse;
        out.train_mse = trace.final_train_mse;
        out.trace = trace.train_mse;
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    auto& cell = result.cells[c];
    std::vector<double> epoch_samples;
    for (std::size_t r = 0; r < reps; ++r) {
      auto& s = slots[c * reps + r];
      if (!s.ok) {
        cell.errors.push_back(std::move(s.error));
        continue;
      }
      cell.test_mse.push_back(s.test_mse);
      cell.train_mse.push_back(s.train_mse);
      for (std::size_t e = 1; e < s.trace.size(); ++e) epoch_samples.push_back(s.trace[e] * 3600.0);
      cell.traces.push_back(std::move(s.trace));
    }
    if (!cell.test_mse.empty()) {
      cell.test_box = box_stats(cell.test_mse);
      cell.train_box = box_stats(cell.train_mse);
      cell.epoch_box = box_stats(std::move(epoch_samples));
    }
  }

  std::vector<std::size_t> ranked;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    if (result.cells[c].test_box) ranked.push_back(c);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return result.cells[a].test_box->median < result.cells[b].test_box->median;
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) result.cells[ranked[i]].rank = static_cast<int>(i + 1);
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = std::string(axis_name(result.axis)) +
                    ",rank,runs,failed,test_min,test_q1,test_median,test_q3,test_max,train_scaled_median,"
                    "epoch_min,epoch_q1,epoch_median,epoch_q3,epoch_max,first_error\n";
  auto box = [](const std::optional<BoxStats>& b) {
    if (!b) return std::string(",,,,");
    return io::format_double(b->min) + ',' + io::format_double(b->q1) + ',' + io::format_double(b->median) + ',' +
           io::format_double(b->q3) + ',' + io::format_double(b->max);
  };
  for (const auto& cell : result.cells) {
    out += std::to_string(cell.value) + ',' + std::to_string(cell.rank) + ',' + std::to_string(cell.test_mse.size()) +
           ',' + std::to_string(cell.errors.size()) + ',' + box(cell.test_box) + ',' +
           (cell.train_box ? io::format_double(cell.train_box->median) : std::string()) + ',' + box(cell.epoch_box) +
           ',';
    if (!cell.errors.empty()) {
      std::string msg = cell.errors.front();
      std::replace(msg.begin(), msg.end(), ',', ';');
      out += msg;
    }
    out += '\n';
  }
  return out;
}

std::string trace_csv(const SweepCell& cell) {
  std::string out = "epoch";
  for (std::size_t r = 0; r < cell.traces.size(); ++r) out += ",rep" + std::to_string(r + 1);
  out += '\n';
  const std::size_t n = cell.traces.empty() ? 0 : cell.traces.front().size();
  for (std::size_t e = 0; e < n; ++e) {
    out += std::to_string(e);
    for (const auto& t : cell.traces) out += ',' + io::format_double(t[e]);
    out += '\n';
  }
  return out;
}

}  // namespace herdtwin
