#pragma once

// Synthetic herds with known ground truth, standing in for farm data.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "herdtwin/core.hpp"

namespace herdtwin {

using DayTemplate = std::array<double, 24>;
using StateTemplates = std::array<DayTemplate, kStateCount>;  // index with state_index()

// Parameters (a, b, c) of the 8-term Gaussian resting curve.
const std::array<double, 24>& reference_resting_params();
double reference_resting_curve(double hour);

// Resting is the reference curve clamped to [0, 60]. The remaining minutes
// of each hour are shared among the other states in proportion to fixed
// hourly weights: panting concentrated in 06-18, eating and grazing in
// daylight, rumination heavier at night.
DayTemplate default_profile(StateLabel state);
StateTemplates default_templates();

struct RosterEntry {
  CohortKey cohort;
  int count = 0;
};

// Animal counts per (breed, sex, treatment) as in the treatment census.
std::vector<RosterEntry> census_roster();

// Minute offsets per state, added to every hour of the template before the
// hour is renormalised; Resting absorbs the balance.
using StateOffsets = std::map<StateLabel, double>;

// Relief-dependent offsets applied to every non-control treatment. Walking
// and eating deficits grow from T+M to T to M to N; panting rises under
// every procedure.
std::map<CombinedTreatment, StateOffsets> default_treatment_effects();

struct HerdSpec {
  std::vector<RosterEntry> roster;
  int days = 52;
  std::string start_date = "2019-08-10";
  double noise_sigma = 0.0;      // minutes, per state and animal-hour
  double corruption_rate = 0.0;  // per minute
  std::uint64_t seed = 1;
  StateTemplates templates = default_templates();
  std::map<CombinedTreatment, StateOffsets> effects;

  // Throws Error(InvalidSpec).
  void validate() const;
};

// Reads the JSON spec format documented in the README. Errors: InvalidSpec.
HerdSpec parse_herd_spec(std::string_view json_text);
std::string herd_spec_json(const HerdSpec& spec);

// Per-hour state minutes for one animal-hour before noise: template plus
// treatment offsets, clamped at zero and renormalised to 60.
std::array<double, kStateCount> expected_minutes(const HerdSpec& spec, const CombinedTreatment& treatment, int hour);

// Integer allocation summing to `total` by largest remainder; ties go to the
// lower index.
std::array<int, kStateCount> largest_remainder(const std::array<double, kStateCount>& shares, int total);

struct SynthOutput {
  std::filesystem::path csv_path;
  std::filesystem::path truth_path;
  std::size_t rows = 0;
  std::size_t corrupted_minutes = 0;
  std::size_t animals = 0;
};

// Writes <stem>.csv (sensor records) and <stem>_truth.csv (animal_id,
// hour_serial, state, true_minutes) into `out_dir`. Byte-identical output
// for an identical spec. Errors: InvalidSpec, Io.
SynthOutput generate(const HerdSpec& spec, const std::filesystem::path& out_dir, std::string_view stem = "herd");

std::string animal_id_for(const CohortKey& cohort, int index);

}  // namespace herdtwin
