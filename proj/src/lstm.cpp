#include "herdtwin/lstm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "herdtwin/io_util.hpp"
#include "herdtwin/json_io.hpp"
#include "herdtwin/random.hpp"
#include "herdtwin/simd/kernels.hpp"

namespace herdtwin {

namespace {

using simd::ConstMatrixView;
using simd::MatrixView;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void LstmConfig::validate() const {
  auto positive = [](long long v, const char* name) {
    if (v <= 0) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be positive");
  };
  positive(hidden_units, "hidden_units");
  positive(num_layers, "num_layers");
  positive(batch_size, "batch_size");
  positive(epochs, "epochs");
  positive(sequence_length, "sequence_length");
  positive(stride, "stride");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  }
}

std::vector<double> encode_hour(int hour_of_day, bool cyclic) {
  if (cyclic) {
    const double angle = 2.0 * std::numbers::pi * hour_of_day / 24.0;
    return {std::sin(angle), std::cos(angle)};
  }
  return {hour_of_day / 23.0};
}

std::vector<Sequence> make_windows(const HourlySeries& series, const LstmConfig& config) {
  config.validate();
  if (!is_gap_free(series)) throw Error(ErrorCode::GapInSeries, "dataset input must be on a gap-free grid");

  const auto& pts = series.points;
  const auto length = static_cast<std::size_t>(config.sequence_length);
  const auto stride = static_cast<std::size_t>(config.stride);
  std::size_t first = 0;
  if (config.day_aligned) {
    while (first < pts.size() && pts[first].hour_of_day != 0) ++first;
  }

  std::vector<Sequence> windows;
  for (std::size_t start = first; start + length <= pts.size(); start += stride) {
    Sequence seq;
    seq.first_serial = pts[start].hour_serial;
    for (std::size_t k = 0; k < length; ++k) {
      const auto& p = pts[start + k];
      seq.hours.push_back(p.hour_of_day);
      for (const double f : encode_hour(p.hour_of_day, config.cyclic_encoding)) seq.features.push_back(f);
      seq.targets.push_back(scale_minutes(p.minutes));
      seq.mask.push_back(config.mask_interpolated && p.interpolated ? 0.0 : 1.0);
    }
    windows.push_back(std::move(seq));
  }
  return windows;
}

Dataset make_dataset(const HourlySeries& series, double split, const LstmConfig& config) {
  if (!(split > 0.0 && split < 1.0)) throw Error(ErrorCode::InvalidValue, "split must lie in (0, 1)");
  auto windows = make_windows(series, config);
  if (windows.size() < 2) {
    throw Error(ErrorCode::SeriesTooShort, "series yields " + std::to_string(windows.size()) +
                                               " windows; at least 2 are needed for a train/test split");
  }
  auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(windows.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, windows.size() - 1);

  Dataset out;
  out.train.assign(std::make_move_iterator(windows.begin()), std::make_move_iterator(windows.begin() + n_train));
  out.test.assign(std::make_move_iterator(windows.begin() + n_train), std::make_move_iterator(windows.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Model

LstmModel::LstmModel(const LstmConfig& config) : config_(config) {
  config_.validate();
  const std::size_t h = hidden();
  std::size_t offset = 0;
  std::size_t in = static_cast<std::size_t>(config_.input_width());
  for (int l = 0; l < config_.num_layers; ++l) {
    LayerLayout lay{in, offset, 0, 0};
    offset += in * 4 * h;
    lay.w_hidden = offset;
    offset += h * 4 * h;
    lay.bias = offset;
    offset += 4 * h;
    layout_.push_back(lay);
    in = h;
  }
  head_w_ = offset;
  offset += h + 1;
  params_.assign(offset, 0.0);
}

LstmModel LstmModel::initialized(const LstmConfig& config) {
  LstmModel model(config);
  Rng rng(derive_seed(config.seed, 0));
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_units));
  for (auto& p : model.params_) p = rng.uniform(-bound, bound);
  return model;
}

namespace {

// Activations of every layer and step for a batch, laid out [t][row][...].
// Sequences with identical features produce identical activations, so the
// network runs once per distinct feature sequence (a "row") and each batch
// member points at its row. Loss and gradient still sum over members.
struct BatchCache {
  std::size_t rows = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> row_of;            // batch member -> row
  std::vector<double> input;                  // steps x rows x input_width (layer 0)
  std::vector<std::vector<double>> gates;     // per layer: steps x rows x 4H, activated
  std::vector<std::vector<double>> cell;      // per layer: steps x rows x H
  std::vector<std::vector<double>> cell_tanh;
  std::vector<std::vector<double>> hidden;
  std::vector<double> prediction;             // steps x rows

  double predicted(std::size_t t, std::size_t member) const { return prediction[t * rows + row_of[member]]; }
};

void run_forward(const LstmModel& model, std::span<const Sequence* const> batch, BatchCache& cache) {
  const auto& k = simd::kernels();
  const std::size_t T = batch.front()->steps();
  const std::size_t H = model.hidden();
  const std::size_t in0 = static_cast<std::size_t>(model.config().input_width());
  for (const auto* seq : batch) {
    if (seq->steps() != T || seq->features.size() != T * in0 || seq->mask.size() != T) {
      throw Error(ErrorCode::ShapeMismatch, "batch sequences must share length and feature width");
    }
  }
  const auto& p = model.params();
  const std::size_t L = model.layers();

  std::vector<const Sequence*> distinct;
  cache.row_of.resize(batch.size());
  for (std::size_t m = 0; m < batch.size(); ++m) {
    std::size_t r = 0;
    while (r < distinct.size() && distinct[r]->features != batch[m]->features) ++r;
    if (r == distinct.size()) distinct.push_back(batch[m]);
    cache.row_of[m] = r;
  }
  const std::size_t B = distinct.size();
  cache.rows = B;
  cache.steps = T;
  cache.input.resize(T * B * in0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < in0; ++j) cache.input[(t * B + b) * in0 + j] = distinct[b]->features[t * in0 + j];
    }
  }
  cache.gates.resize(L);
  cache.cell.resize(L);
  cache.cell_tanh.resize(L);
  cache.hidden.resize(L);

  for (std::size_t l = 0; l < L; ++l) {
    const auto& lay = model.layout(l);
    const std::size_t in = lay.input_width;
    const double* x_all = l == 0 ? cache.input.data() : cache.hidden[l - 1].data();
    auto& z_all = cache.gates[l];
    auto& c_all = cache.cell[l];
    auto& tc_all = cache.cell_tanh[l];
    auto& h_all = cache.hidden[l];
    z_all.resize(T * B * 4 * H);
    c_all.resize(T * B * H);
    tc_all.resize(T * B * H);
    h_all.resize(T * B * H);
    const ConstMatrixView w_in{p.data() + lay.w_input, in, 4 * H, 4 * H};
    const ConstMatrixView w_hid{p.data() + lay.w_hidden, H, 4 * H, 4 * H};
    const double* bias = p.data() + lay.bias;

    // Input projection for every step at once; only the recurrence is serial.
    for (std::size_t r = 0; r < T * B; ++r) std::copy(bias, bias + 4 * H, z_all.data() + r * 4 * H);
    k.gemm_nn(ConstMatrixView{x_all, T * B, in, in}, w_in, MatrixView{z_all.data(), T * B, 4 * H, 4 * H});
    for (std::size_t t = 0; t < T; ++t) {
      double* z = z_all.data() + t * B * 4 * H;
      if (t > 0) k.gemm_nn(ConstMatrixView{h_all.data() + (t - 1) * B * H, B, H, H}, w_hid, MatrixView{z, B, 4 * H, 4 * H});
      for (std::size_t b = 0; b < B; ++b) {
        double* zr = z + b * 4 * H;
        k.gate_activations(zr, H);
        const double* c_prev = t > 0 ? c_all.data() + ((t - 1) * B + b) * H : nullptr;
        double* c = c_all.data() + (t * B + b) * H;
        double* tc = tc_all.data() + (t * B + b) * H;
        double* h = h_all.data() + (t * B + b) * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double ig = zr[j], fg = zr[H + j], gg = zr[2 * H + j], og = zr[3 * H + j];
          c[j] = (c_prev ? fg * c_prev[j] : 0.0) + ig * gg;
          tc[j] = std::tanh(c[j]);
          h[j] = og * tc[j];
        }
      }
    }
  }

  cache.prediction.resize(T * B);
  const double* head = p.data() + model.head_weights();
  const double head_b = p[model.head_bias()];
  const auto& top = cache.hidden[L - 1];
  for (std::size_t r = 0; r < T * B; ++r) cache.prediction[r] = k.dot(top.data() + r * H, head, H) + head_b;
}

// Masked squared error sum and mask count.
std::pair<double, double> batch_error(const BatchCache& cache, std::span<const Sequence* const> batch) {
  double sse = 0.0, count = 0.0;
  for (std::size_t t = 0; t < cache.steps; ++t) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double m = batch[b]->mask[t];
      const double r = cache.predicted(t, b) - batch[b]->targets[t];
      sse += m * r * r;
      count += m;
    }
  }
  return {sse, count};
}

void run_backward(const LstmModel& model, std::span<const Sequence* const> batch, const BatchCache& cache,
                  double count, std::vector<double>& grad) {
  const auto& k = simd::kernels();
  const std::size_t B = cache.rows;
  const std::size_t T = cache.steps;
  const std::size_t H = model.hidden();
  const std::size_t L = model.layers();
  const auto& p = model.params();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (count == 0.0) return;

  // Output head.
  std::vector<double> dpred(T * B, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t m = 0; m < batch.size(); ++m) {
      const double r = cache.predicted(t, m) - batch[m]->targets[t];
      dpred[t * B + cache.row_of[m]] += 2.0 * batch[m]->mask[t] * r / count;
    }
  }
  const double* head = p.data() + model.head_weights();
  double* g_head = grad.data() + model.head_weights();
  const auto& top = cache.hidden[L - 1];
  std::vector<double> dh_in(T * B * H, 0.0);
  for (std::size_t r = 0; r < T * B; ++r) {
    k.axpy(dpred[r], top.data() + r * H, g_head, H);
    grad[model.head_bias()] += dpred[r];
    k.axpy(dpred[r], head, dh_in.data() + r * H, H);
  }

  std::vector<double> dz(T * B * 4 * H);
  std::vector<double> dh_next(B * H), dc_next(B * H);
  std::vector<double> dx;
  for (std::size_t l = L; l-- > 0;) {
    const auto& lay = model.layout(l);
    const std::size_t in = lay.input_width;
    const double* x_all = l == 0 ? cache.input.data() : cache.hidden[l - 1].data();
    const auto& a_all = cache.gates[l];
    const auto& c_all = cache.cell[l];
    const auto& tc_all = cache.cell_tanh[l];
    const auto& h_all = cache.hidden[l];
    const ConstMatrixView w_in{p.data() + lay.w_input, in, 4 * H, 4 * H};
    const ConstMatrixView w_hid{p.data() + lay.w_hidden, H, 4 * H, 4 * H};
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);

    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t row = t * B + b;
        const double* a = a_all.data() + row * 4 * H;
        const double* tc = tc_all.data() + row * H;
        const double* c_prev = t > 0 ? c_all.data() + ((t - 1) * B + b) * H : nullptr;
        const double* dh_up = dh_in.data() + row * H;
        double* dzr = dz.data() + row * 4 * H;
        double* dhn = dh_next.data() + b * H;
        double* dcn = dc_next.data() + b * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double ig = a[j], fg = a[H + j], gg = a[2 * H + j], og = a[3 * H + j];
          const double dh = dh_up[j] + dhn[j];
          const double d_o = dh * tc[j];
          const double dc = dh * og * (1.0 - tc[j] * tc[j]) + dcn[j];
          const double cp = c_prev ? c_prev[j] : 0.0;
          dzr[j] = dc * gg * ig * (1.0 - ig);
          dzr[H + j] = dc * cp * fg * (1.0 - fg);
          dzr[2 * H + j] = dc * ig * (1.0 - gg * gg);
          dzr[3 * H + j] = d_o * og * (1.0 - og);
          dcn[j] = dc * fg;
        }
      }
      if (t > 0) {
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        k.gemm_nt(ConstMatrixView{dz.data() + t * B * 4 * H, B, 4 * H, 4 * H}, w_hid, MatrixView{dh_next.data(), B, H, H});
      }
    }

    // Weight gradients over all steps in one product each.
    const ConstMatrixView dz_all{dz.data(), T * B, 4 * H, 4 * H};
    k.gemm_tn(ConstMatrixView{x_all, T * B, in, in}, dz_all, MatrixView{grad.data() + lay.w_input, in, 4 * H, 4 * H});
    if (T > 1) {
      k.gemm_tn(ConstMatrixView{h_all.data(), (T - 1) * B, H, H},
                ConstMatrixView{dz.data() + B * 4 * H, (T - 1) * B, 4 * H, 4 * H},
                MatrixView{grad.data() + lay.w_hidden, H, 4 * H, 4 * H});
    }
    double* g_bias = grad.data() + lay.bias;
    for (std::size_t r = 0; r < T * B; ++r) k.axpy(1.0, dz.data() + r * 4 * H, g_bias, 4 * H);
    if (l > 0) {
      dx.assign(T * B * in, 0.0);
      k.gemm_nt(dz_all, w_in, MatrixView{dx.data(), T * B, in, in});
      dh_in.swap(dx);
    }
  }
}

std::vector<const Sequence*> pointers(std::span<const Sequence> sequences) {
  std::vector<const Sequence*> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(&s);
  return out;
}

double dataset_mse(const LstmModel& model, std::span<const Sequence> sequences) {
  if (sequences.empty()) return kNaN;
  const auto ptrs = pointers(sequences);
  BatchCache cache;
  run_forward(model, ptrs, cache);
  const auto [sse, count] = batch_error(cache, ptrs);
  return count > 0.0 ? sse / count : 0.0;
}

struct Adam {
  std::vector<double> m, v;
  long long step = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void apply(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

TrainingTrace run_training(LstmModel& model, std::span<const Sequence> train_set, std::span<const Sequence> test_set,
                           int epochs, std::size_t batch_size, std::uint64_t shuffle_stream) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = model.config();
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "no training sequences");
  if (batch_size > train_set.size()) {
    throw Error(ErrorCode::InvalidConfig, "batch_size " + std::to_string(batch_size) + " exceeds the " +
                                              std::to_string(train_set.size()) + " training sequences");
  }

  TrainingTrace trace;
  trace.train_mse.reserve(static_cast<std::size_t>(epochs) + 1);
  trace.train_mse.push_back(dataset_mse(model, train_set));

  const auto all = pointers(train_set);
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, shuffle_stream));
  Adam adam(model.params().size());
  std::vector<double> grad(model.params().size());
  std::vector<const Sequence*> batch;
  BatchCache cache;

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_sse = 0.0, epoch_count = 0.0;
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
      batch.clear();
      for (std::size_t i = first; i < std::min(first + batch_size, order.size()); ++i) batch.push_back(all[order[i]]);
      run_forward(model, batch, cache);
      const auto [sse, count] = batch_error(cache, batch);
      if (!std::isfinite(sse)) {
        throw Error(ErrorCode::NonFiniteLoss, "training loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_sse += sse;
      epoch_count += count;
      run_backward(model, batch, cache, count, grad);
      adam.apply(model.params(), grad, cfg.learning_rate);
    }
    trace.train_mse.push_back(epoch_count > 0.0 ? epoch_sse / epoch_count : 0.0);
  }
  model.mark_trained();
  trace.final_train_mse = dataset_mse(model, train_set);
  if (!std::isfinite(trace.final_train_mse)) throw Error(ErrorCode::NonFiniteLoss, "weights are no longer finite");
  trace.test_mse = test_set.empty() ? kNaN : evaluate_mse(model, test_set);
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace

std::vector<double> forward(const LstmModel& model, std::span<const double> features, std::size_t steps) {
  const auto in = static_cast<std::size_t>(model.config().input_width());
  if (steps == 0 || features.size() != steps * in) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(steps) + " x " + std::to_string(in) +
                                              " features, got " + std::to_string(features.size()));
  }
  Sequence seq;
  seq.features.assign(features.begin(), features.end());
  seq.targets.assign(steps, 0.0);
  seq.mask.assign(steps, 1.0);
  const Sequence* ptr = &seq;
  BatchCache cache;
  run_forward(model, std::span<const Sequence* const>(&ptr, 1), cache);
  return cache.prediction;
}

double loss_and_gradient(const LstmModel& model, std::span<const Sequence* const> batch,
                         std::vector<double>* gradient) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
  BatchCache cache;
  run_forward(model, batch, cache);
  const auto [sse, count] = batch_error(cache, batch);
  if (gradient) {
    gradient->assign(model.params().size(), 0.0);
    run_backward(model, batch, cache, count, *gradient);
  }
  return count > 0.0 ? sse / count : 0.0;
}

TrainingTrace train(LstmModel& model, std::span<const Sequence> train_set, std::span<const Sequence> test_set) {
  return run_training(model, train_set, test_set, model.config().epochs,
                      static_cast<std::size_t>(model.config().batch_size), 1);
}

TrainingTrace fine_tune(LstmModel& model, std::span<const Sequence> train_set, int epochs) {
  if (epochs <= 0) throw Error(ErrorCode::InvalidConfig, "fine-tune epochs must be positive");
  // A twin update may bring fewer windows than one configured batch.
  const auto batch = std::min(static_cast<std::size_t>(model.config().batch_size), train_set.size());
  return run_training(model, train_set, {}, epochs, std::max<std::size_t>(batch, 1), 2);
}

double evaluate_mse(const LstmModel& model, std::span<const Sequence> sequences) {
  if (sequences.empty()) return kNaN;
  const auto ptrs = pointers(sequences);
  BatchCache cache;
  run_forward(model, ptrs, cache);
  double sse = 0.0, count = 0.0;
  for (std::size_t t = 0; t < cache.steps; ++t) {
    for (std::size_t b = 0; b < ptrs.size(); ++b) {
      const double m = ptrs[b]->mask[t];
      const double predicted = std::clamp(unscale_minutes(cache.predicted(t, b)), 0.0, 60.0);
      const double r = predicted - unscale_minutes(ptrs[b]->targets[t]);
      sse += m * r * r;
      count += m;
    }
  }
  return count > 0.0 ? sse / count : 0.0;
}

std::array<double, 24> predict_cycle(const LstmModel& model, int start_hour) {
  if (!model.trained()) throw Error(ErrorCode::UntrainedModel, "predict_cycle needs a trained model");
  std::vector<double> features;
  for (int k = 0; k < 24; ++k) {
    for (const double f : encode_hour((start_hour + k) % 24, model.config().cyclic_encoding)) features.push_back(f);
  }
  const auto scaled = forward(model, features, 24);
  std::array<double, 24> out{};
  for (std::size_t k = 0; k < 24; ++k) out[k] = std::clamp(unscale_minutes(scaled[k]), 0.0, 60.0);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void require_known_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
  if (!object.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(context) + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + std::string(context));
    }
  }
}

nlohmann::ordered_json lstm_config_to_json(const LstmConfig& c) {
  nlohmann::ordered_json j;
  j["hidden_units"] = c.hidden_units;
  j["num_layers"] = c.num_layers;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["sequence_length"] = c.sequence_length;
  j["stride"] = c.stride;
  j["day_aligned"] = c.day_aligned;
  j["cyclic_encoding"] = c.cyclic_encoding;
  j["mask_interpolated"] = c.mask_interpolated;
  return j;
}

void lstm_config_from_json(const nlohmann::json& j, LstmConfig& c) {
  require_known_keys(j,
                     {"hidden_units", "num_layers", "batch_size", "epochs", "learning_rate", "seed", "sequence_length",
                      "stride", "day_aligned", "cyclic_encoding", "mask_interpolated"},
                     "lstm config");
  try {
    c.hidden_units = j.value("hidden_units", c.hidden_units);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.sequence_length = j.value("sequence_length", c.sequence_length);
    c.stride = j.value("stride", c.stride);
    c.day_aligned = j.value("day_aligned", c.day_aligned);
    c.cyclic_encoding = j.value("cyclic_encoding", c.cyclic_encoding);
    c.mask_interpolated = j.value("mask_interpolated", c.mask_interpolated);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("lstm config: ") + e.what());
  }
  c.validate();
}

std::string checkpoint_json(const LstmModel& model) {
  const auto& p = model.params();
  const std::size_t H = model.hidden();
  auto block = [&](std::size_t offset, std::size_t n) { return std::vector<double>(p.begin() + offset, p.begin() + offset + n); };

  nlohmann::ordered_json doc;
  doc["format"] = "herdtwin-lstm";
  doc["version"] = 1;
  doc["config"] = lstm_config_to_json(model.config());
  doc["trained"] = model.trained();
  doc["scaling"] = {{"feature", model.config().cyclic_encoding ? "sin_cos_hour" : "hour_over_23"},
                    {"target_divisor", 60.0}};
  doc["gate_order"] = {"input", "forget", "candidate", "output"};
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < model.layers(); ++l) {
    const auto& lay = model.layout(l);
    nlohmann::ordered_json entry;
    entry["w_input"] = {{"rows", lay.input_width}, {"cols", 4 * H}, {"data", block(lay.w_input, lay.input_width * 4 * H)}};
    entry["w_hidden"] = {{"rows", H}, {"cols", 4 * H}, {"data", block(lay.w_hidden, H * 4 * H)}};
    entry["bias"] = block(lay.bias, 4 * H);
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  doc["head"] = {{"w", block(model.head_weights(), H)}, {"b", p[model.head_bias()]}};
  return doc.dump(1) + "\n";
}

LstmModel parse_checkpoint(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "herdtwin-lstm" || doc.at("version") != 1) {
      throw Error(ErrorCode::SchemaMismatch, "not a version 1 LSTM checkpoint");
    }
    LstmConfig cfg;
    lstm_config_from_json(doc.at("config"), cfg);
    LstmModel model(cfg);
    const std::size_t H = model.hidden();
    auto& p = model.params();
    auto fill = [&](const nlohmann::json& values, std::size_t offset, std::size_t n, const char* what) {
      const auto v = values.get<std::vector<double>>();
      if (v.size() != n) throw Error(ErrorCode::SchemaMismatch, std::string("checkpoint block ") + what + " has wrong size");
      std::copy(v.begin(), v.end(), p.begin() + static_cast<std::ptrdiff_t>(offset));
    };
    const auto& layers = doc.at("layers");
    if (layers.size() != model.layers()) throw Error(ErrorCode::SchemaMismatch, "checkpoint layer count mismatch");
    for (std::size_t l = 0; l < model.layers(); ++l) {
      const auto& lay = model.layout(l);
      fill(layers[l].at("w_input").at("data"), lay.w_input, lay.input_width * 4 * H, "w_input");
      fill(layers[l].at("w_hidden").at("data"), lay.w_hidden, H * 4 * H, "w_hidden");
      fill(layers[l].at("bias"), lay.bias, 4 * H, "bias");
    }
    fill(doc.at("head").at("w"), model.head_weights(), H, "head.w");
    p[model.head_bias()] = doc.at("head").at("b").get<double>();
    model.mark_trained(doc.at("trained").get<bool>());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw Error(ErrorCode::SchemaMismatch, e.what());
    throw;
  }
}

void save_checkpoint(const LstmModel& model, const std::filesystem::path& path) {
  io::write_text_file(path, checkpoint_json(model));
}

LstmModel load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(io::read_text_file(path)); }

}  // namespace herdtwin
