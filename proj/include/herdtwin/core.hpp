#pragma once

// Domain vocabulary shared by every stage: behavioural states, breeds,
// combined treatments, cohort identity, minute records and hourly series.

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "herdtwin/error.hpp"

namespace herdtwin {

enum class StateLabel : std::uint8_t {
  Resting,
  Rumination,
  HighActivity,
  MediumActivity,
  Panting,
  Grazing,
  Walking,
  Eating,
};
inline constexpr std::size_t kStateCount = 8;
inline constexpr std::array<StateLabel, kStateCount> kAllStates = {
    StateLabel::Resting, StateLabel::Rumination, StateLabel::HighActivity, StateLabel::MediumActivity,
    StateLabel::Panting, StateLabel::Grazing,    StateLabel::Walking,      StateLabel::Eating};

enum class Breed : std::uint8_t { Angus, Brahman, Brangus, Charolais, Crossbred };
inline constexpr std::array<Breed, 5> kAllBreeds = {Breed::Angus, Breed::Brahman, Breed::Brangus,
                                                    Breed::Charolais, Breed::Crossbred};

enum class Sex : std::uint8_t { Female, Male };
inline constexpr std::array<Sex, 2> kAllSexes = {Sex::Female, Sex::Male};

enum class Procedure : std::uint8_t { Castrating, Dehorning, DehorningAndCastrating, None };
enum class Relief : std::uint8_t { NegativeControl, TopicalAnaesthetic, Meloxicam, TopicalPlusMeloxicam, PositiveControl };

enum class Quality : std::uint8_t { Valid, Corrupted };

// A legal (procedure, pain relief) pairing. Only the 13 combinations of the
// treatment table can be constructed.
class CombinedTreatment {
 public:
  // Throws Error(InvalidValue) for an illegal pairing.
  CombinedTreatment(Procedure procedure, Relief relief);

  Procedure procedure() const noexcept { return procedure_; }
  Relief relief() const noexcept { return relief_; }

  // Row index in the canonical treatment table (0..12).
  int table_index() const noexcept;
  bool is_positive_control() const noexcept { return relief_ == Relief::PositiveControl; }

  static bool is_legal(Procedure procedure, Relief relief) noexcept;

  friend bool operator==(const CombinedTreatment&, const CombinedTreatment&) = default;
  friend std::strong_ordering operator<=>(const CombinedTreatment& a, const CombinedTreatment& b) noexcept {
    return a.table_index() <=> b.table_index();
  }

 private:
  Procedure procedure_;
  Relief relief_;
};

// All 13 legal treatments in table row order.
const std::array<CombinedTreatment, 13>& all_treatments();

struct CohortKey {
  Breed breed;
  Sex sex;
  CombinedTreatment treatment;

  friend bool operator==(const CohortKey&, const CohortKey&) = default;
  friend std::strong_ordering operator<=>(const CohortKey& a, const CohortKey& b) noexcept {
    if (auto c = a.breed <=> b.breed; c != 0) return c;
    if (auto c = a.sex <=> b.sex; c != 0) return c;
    return a.treatment <=> b.treatment;
  }
};

// Naive local farm time at minute resolution; no timezone arithmetic.
using Timestamp = std::chrono::local_time<std::chrono::minutes>;

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute);
// Accepts YYYY-MM-DD and HH:MM (an optional :SS suffix is truncated away).
std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time);
std::string format_date(Timestamp ts);
std::string format_time(Timestamp ts);
Timestamp truncate_to_hour(Timestamp ts);
Timestamp truncate_to_day(Timestamp ts);
int hour_of_day(Timestamp ts);

// 1 + whole hours between the epoch's hour and the timestamp's hour.
// Throws Error(TimestampBeforeEpoch).
std::int64_t hour_serial(Timestamp ts, Timestamp epoch_start);

struct SensorRecord {
  std::string animal_id;
  Timestamp timestamp;
  StateLabel state;
  Quality quality;
};

struct HourPoint {
  std::int64_t hour_serial;
  int hour_of_day;
  double minutes;
  // Records seen in the hour (single animal) or contributing animals (average).
  int support = 0;
  // Set on positions synthesised by gap interpolation.
  bool interpolated = false;
};

struct SeriesOrigin {
  enum class Kind { SingleAnimal, CohortAverage };
  Kind kind = Kind::SingleAnimal;
  std::string animal_id;
  int n_animals = 1;
};

struct HourlySeries {
  CohortKey cohort;
  StateLabel state;
  SeriesOrigin origin;
  std::vector<HourPoint> points;
};

// Checks serial ordering, minute bounds and the hour-of-day congruence.
// Throws Error(InvalidValue) describing the first violation.
void validate_series(const HourlySeries& series);

bool is_gap_free(const HourlySeries& series);

std::string_view state_code(StateLabel state);  // REST, RUMINATE, ...
std::string_view state_name(StateLabel state);  // Resting, Rumination, ...
std::optional<StateLabel> parse_state(std::string_view text);
std::size_t state_index(StateLabel state);

std::string_view breed_name(Breed breed);
std::optional<Breed> parse_breed(std::string_view text);
std::string_view sex_code(Sex sex);
std::optional<Sex> parse_sex(std::string_view text);

std::string_view procedure_code(Procedure procedure);  // C, D, D+C, NONE
std::optional<Procedure> parse_procedure(std::string_view text);
std::string_view relief_code(Relief relief);  // N, T, M, T+M, P
std::optional<Relief> parse_relief(std::string_view text);

// Treatment table abbreviations such as "C,T+M", "(D+C,N)" or "P".
// Case-insensitive and whitespace-tolerant; throws Error(UnknownTreatmentCode).
CombinedTreatment parse_treatment(std::string_view code);
std::string format_treatment(const CombinedTreatment& treatment);

// e.g. "Brahman-F-P", safe for file names after slug().
std::string format_cohort(const CohortKey& key);
std::string cohort_slug(const CohortKey& key);
CohortKey parse_cohort(std::string_view text);

}  // namespace herdtwin
