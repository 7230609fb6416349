#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "herdtwin/core.hpp"

namespace herdtwin {

struct LstmConfig {
  int hidden_units = 128;
  int num_layers = 2;
  int batch_size = 24;
  int epochs = 2000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  int sequence_length = 24;
  int stride = 24;
  // Windows start at the first midnight of the series.
  bool day_aligned = true;
  // sin/cos of the hour instead of hour / 23.
  bool cyclic_encoding = false;
  // Interpolated hours carry no loss.
  bool mask_interpolated = false;

  int input_width() const { return cyclic_encoding ? 2 : 1; }
  // Throws Error(InvalidConfig).
  void validate() const;
};

// Feature encoding and target scaling shared by training and inference.
std::vector<double> encode_hour(int hour_of_day, bool cyclic);
inline double scale_minutes(double minutes) { return minutes / 60.0; }
inline double unscale_minutes(double scaled) { return scaled * 60.0; }

struct Sequence {
  std::int64_t first_serial = 0;
  std::vector<int> hours;        // hour of day per step
  std::vector<double> features;  // steps x input_width, row-major
  std::vector<double> targets;   // scaled minutes
  std::vector<double> mask;      // 1 where the step counts toward the loss

  std::size_t steps() const { return targets.size(); }
};

struct Dataset {
  std::vector<Sequence> train;
  std::vector<Sequence> test;  // strictly after every training window
};

// All windows of the series in time order. Errors: GapInSeries.
std::vector<Sequence> make_windows(const HourlySeries& series, const LstmConfig& config);

// Chronological split: the first floor(split * N) windows train.
// Errors: InvalidValue (split outside (0, 1)), GapInSeries, SeriesTooShort.
Dataset make_dataset(const HourlySeries& series, double split, const LstmConfig& config);

// Stacked LSTM with a scalar affine head. All parameters live in one flat
// vector; per layer the blocks are
//   w_input  [input x 4H]   w_hidden [H x 4H]   bias [4H]
// with gate columns ordered input, forget, candidate, output. The head
// follows the last layer as w_head [H] and b_head.
class LstmModel {
 public:
  struct LayerLayout {
    std::size_t input_width;
    std::size_t w_input;
    std::size_t w_hidden;
    std::size_t bias;
  };

  LstmModel() = default;
  // Zero weights. Throws Error(InvalidConfig).
  explicit LstmModel(const LstmConfig& config);
  // Uniform in [-1/sqrt(H), 1/sqrt(H)] from config.seed.
  static LstmModel initialized(const LstmConfig& config);

  const LstmConfig& config() const { return config_; }
  LstmConfig& config() { return config_; }
  std::size_t hidden() const { return static_cast<std::size_t>(config_.hidden_units); }
  std::size_t layers() const { return layout_.size(); }
  const LayerLayout& layout(std::size_t layer) const { return layout_[layer]; }
  std::size_t head_weights() const { return head_w_; }
  std::size_t head_bias() const { return head_w_ + hidden(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  bool trained() const { return trained_; }
  void mark_trained(bool value = true) { trained_ = value; }

 private:
  LstmConfig config_;
  std::vector<LayerLayout> layout_;
  std::size_t head_w_ = 0;
  std::vector<double> params_;
  bool trained_ = false;
};

// Scaled predictions for one sequence from zero initial state.
// features: steps x input_width. Errors: ShapeMismatch.
std::vector<double> forward(const LstmModel& model, std::span<const double> features, std::size_t steps);

// Masked MSE (scaled units) over a batch of equal-length sequences, with the
// BPTT gradient added into `gradient` when it is non-null (sized like
// params, overwritten).
double loss_and_gradient(const LstmModel& model, std::span<const Sequence* const> batch,
                         std::vector<double>* gradient);

struct TrainingTrace {
  // train_mse[0] is the forward-only MSE of the initial weights; entry e is
  // the mean batch MSE of epoch e. Scaled units.
  std::vector<double> train_mse;
  // Unscaled (minutes^2) MSE on the test windows; NaN without a test set.
  double test_mse = 0.0;
  double final_train_mse = 0.0;  // forward-only, scaled, after training
  double wall_seconds = 0.0;
};

// Mini-batch BPTT with Adam (0.9, 0.999, 1e-8) and a seeded shuffle per
// epoch. Errors: EmptyDataset, InvalidConfig, NonFiniteLoss.
TrainingTrace train(LstmModel& model, std::span<const Sequence> train_set, std::span<const Sequence> test_set = {});

// Continues training for `epochs` more epochs with a fresh optimiser state.
TrainingTrace fine_tune(LstmModel& model, std::span<const Sequence> train_set, int epochs);

// Unscaled MSE (minutes^2) of clamped predictions.
double evaluate_mse(const LstmModel& model, std::span<const Sequence> sequences);

// The 24 hours starting at `start_hour`, unscaled and clamped to [0, 60].
// Errors: UntrainedModel.
std::array<double, 24> predict_cycle(const LstmModel& model, int start_hour = 0);

std::string checkpoint_json(const LstmModel& model);
LstmModel parse_checkpoint(std::string_view text);  // Errors: SchemaMismatch
void save_checkpoint(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_checkpoint(const std::filesystem::path& path);

}  // namespace herdtwin
