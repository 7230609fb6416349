#pragma once

// Predict-compare-update loop over per-(cohort, state) models, and the
// treatment pain assessment built from daily profiles.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herdtwin/aggregate.hpp"
#include "herdtwin/filter.hpp"
#include "herdtwin/lstm.hpp"

namespace herdtwin {

struct TwinKey {
  CohortKey cohort;
  StateLabel state;

  friend bool operator==(const TwinKey&, const TwinKey&) = default;
  friend std::strong_ordering operator<=>(const TwinKey& a, const TwinKey& b) noexcept {
    if (auto c = a.cohort <=> b.cohort; c != 0) return c;
    return a.state <=> b.state;
  }
};

std::string format_twin_key(const TwinKey& key);  // e.g. "Brahman-F-P/REST"

struct DriftReport {
  TwinKey key;
  std::int64_t day_start_serial = 0;  // hour serial of the day's midnight
  std::array<double, 24> predicted{};
  std::array<double, 24> actual{};     // NaN where the hour was destroyed
  std::array<bool, 24> has_actual{};
  int hours_compared = 0;
  double cycle_mse = 0.0;  // over hours with actuals; NaN when there are none
};

struct FirSettings {
  int length = 5;
  double cutoff = 0.4;
  Window window = Window::Hamming;
};

struct TwinEntry {
  TwinKey key;
  std::string checkpoint_file;  // relative to the registry directory
  std::string series_file;
  FirSettings fir;
  std::int64_t last_trained_serial = 0;
  std::optional<std::array<double, 24>> next_prediction;
  std::int64_t next_prediction_serial = 0;
  std::vector<DriftReport> drift_history;
};

// Directory-backed registry: index.json plus a checkpoint and a raw series
// CSV per key.
class TwinRegistry {
 public:
  // Opens an existing registry or starts an empty one. Errors: SchemaMismatch.
  static TwinRegistry open(const std::filesystem::path& directory);

  const std::filesystem::path& directory() const { return directory_; }
  const std::map<TwinKey, TwinEntry>& entries() const { return entries_; }
  const TwinEntry& entry(const TwinKey& key) const;  // Errors: UnknownKey
  TwinEntry& entry(const TwinKey& key);
  bool contains(const TwinKey& key) const { return entries_.count(key) > 0; }

  // Adds or replaces the model for `history`'s key. `history` is the raw
  // (unfiltered) cohort series the model was trained on.
  void register_model(const LstmModel& model, const HourlySeries& history, const FirSettings& fir);

  LstmModel load_model(const TwinKey& key) const;
  HourlySeries load_series(const TwinKey& key) const;

  void save() const;

 private:
  std::filesystem::path directory_;
  std::map<TwinKey, TwinEntry> entries_;
};

struct UpdateOptions {
  int fine_tune_epochs = 50;
  bool full_retrain = false;
};

enum class UpdateStatus { Compared, NoPriorPrediction };

struct UpdateResult {
  UpdateStatus status;
  std::optional<DriftReport> report;
  std::array<double, 24> next_prediction{};
};

// Compares the day against the stored prediction, appends it, refits and
// stores the prediction for the following day. `day` holds one calendar
// day of raw hourly points; destroyed hours may be missing. Errors:
// UnknownKey, InvalidValue (day overlaps history or spans two days).
UpdateResult update_twin(TwinRegistry& registry, const TwinKey& key, const HourlySeries& day,
                         const UpdateOptions& options = {});

DriftReport compare_cycle(const TwinKey& key, std::int64_t day_start_serial, const std::array<double, 24>& predicted,
                          const HourlySeries& day);

// ---------------------------------------------------------------------------
// Pain assessment

struct PainWeights {
  double walking = 1.0;
  double eating = 1.0;
  double grazing = 1.0;
  double panting = 0.0;
  double resting = 0.0;
};

inline constexpr std::array<StateLabel, 5> kPainIndicators = {StateLabel::Walking, StateLabel::Eating,
                                                             StateLabel::Grazing, StateLabel::Panting,
                                                             StateLabel::Resting};

struct PainEntry {
  CombinedTreatment treatment;
  // Daily totals in kPainIndicators order.
  std::array<double, 5> totals{};
  // Signed difference from the control: deficits for walking, eating and
  // grazing, excess for panting and resting. Raw totals without a control.
  std::array<double, 5> delta{};
  double score = 0.0;  // higher means more pain
  int rank = 0;        // 1 = least pain
  std::vector<std::string> tags;
};

struct PainAssessment {
  Breed breed;
  Sex sex;
  PainWeights weights;
  bool has_positive_control = false;
  std::optional<std::array<double, 5>> control_totals;
  std::vector<PainEntry> ranking;  // least pain first
  std::vector<DailyProfile> profiles;
};

// Errors: InsufficientTreatments (< 2 treatments), MixedCohort (breed or
// sex differ), InvalidValue (an indicator profile is missing). Without a
// positive control the ranking falls back to raw totals and is flagged.
PainAssessment assess_pain(std::span<const DailyProfile> profiles, const PainWeights& weights = {});

struct Report {
  std::string json;
  std::string text;
};

Report export_report(const PainAssessment& assessment, std::span<const DriftReport> drift_history);

}  // namespace herdtwin
