#include "herdtwin/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "herdtwin/io_util.hpp"

namespace herdtwin {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTreatmentCode: return "UnknownTreatmentCode";
    case ErrorCode::TimestampBeforeEpoch: return "TimestampBeforeEpoch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::MixedState: return "MixedState";
    case ErrorCode::MixedCohort: return "MixedCohort";
    case ErrorCode::InvalidCutoff: return "InvalidCutoff";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::GapInSeries: return "GapInSeries";
    case ErrorCode::IncompleteDay: return "IncompleteDay";
    case ErrorCode::MalformedParams: return "MalformedParams";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::NoPriorPrediction: return "NoPriorPrediction";
    case ErrorCode::MissingPositiveControl: return "MissingPositiveControl";
    case ErrorCode::InsufficientTreatments: return "InsufficientTreatments";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
    case ErrorCode::InvalidConfig:
      return ErrorCategory::Usage;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::SingularSystem:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

// ---------------------------------------------------------------------------
// Treatments

namespace {

struct TreatmentRow {
  Procedure procedure;
  Relief relief;
  std::string_view code;
};

// Row order of the treatment table; this order is also the tie-break order
// everywhere treatments are ranked.
constexpr std::array<TreatmentRow, 13> kTreatmentTable = {{
    {Procedure::Castrating, Relief::NegativeControl, "C,N"},
    {Procedure::Castrating, Relief::TopicalAnaesthetic, "C,T"},
    {Procedure::Castrating, Relief::Meloxicam, "C,M"},
    {Procedure::Castrating, Relief::TopicalPlusMeloxicam, "C,T+M"},
    {Procedure::Dehorning, Relief::TopicalAnaesthetic, "D,T"},
    {Procedure::Dehorning, Relief::Meloxicam, "D,M"},
    {Procedure::Dehorning, Relief::TopicalPlusMeloxicam, "D,T+M"},
    {Procedure::Dehorning, Relief::NegativeControl, "D,N"},
    {Procedure::DehorningAndCastrating, Relief::TopicalAnaesthetic, "D+C,T"},
    {Procedure::DehorningAndCastrating, Relief::Meloxicam, "D+C,M"},
    {Procedure::DehorningAndCastrating, Relief::TopicalPlusMeloxicam, "D+C,T+M"},
    {Procedure::DehorningAndCastrating, Relief::NegativeControl, "D+C,N"},
    {Procedure::None, Relief::PositiveControl, "P"},
}};

}  // namespace

bool CombinedTreatment::is_legal(Procedure procedure, Relief relief) noexcept {
  if (relief == Relief::PositiveControl) return procedure == Procedure::None;
  return procedure != Procedure::None;
}

CombinedTreatment::CombinedTreatment(Procedure procedure, Relief relief) : procedure_(procedure), relief_(relief) {
  if (!is_legal(procedure, relief)) {
    throw Error(ErrorCode::InvalidValue, "illegal treatment combination (" + std::string(procedure_code(procedure)) +
                                             ", " + std::string(relief_code(relief)) + ")");
  }
}

int CombinedTreatment::table_index() const noexcept {
  for (std::size_t i = 0; i < kTreatmentTable.size(); ++i) {
    if (kTreatmentTable[i].procedure == procedure_ && kTreatmentTable[i].relief == relief_) return static_cast<int>(i);
  }
  return -1;
}

const std::array<CombinedTreatment, 13>& all_treatments() {
  static const std::array<CombinedTreatment, 13> table = [] {
    auto make = [](std::size_t i) { return CombinedTreatment(kTreatmentTable[i].procedure, kTreatmentTable[i].relief); };
    return std::array<CombinedTreatment, 13>{make(0), make(1), make(2),  make(3),  make(4),  make(5), make(6),
                                             make(7), make(8), make(9), make(10), make(11), make(12)};
  }();
  return table;
}

CombinedTreatment parse_treatment(std::string_view code) {
  std::string normalized;
  for (char c : code) {
    if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) continue;
    normalized.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (const auto& row : kTreatmentTable) {
    if (row.code == normalized) return CombinedTreatment(row.procedure, row.relief);
  }
  throw Error(ErrorCode::UnknownTreatmentCode, "'" + std::string(code) + "'");
}

std::string format_treatment(const CombinedTreatment& treatment) {
  return std::string(kTreatmentTable[static_cast<std::size_t>(treatment.table_index())].code);
}

// ---------------------------------------------------------------------------
// Enumerations

namespace {

constexpr std::array<std::string_view, kStateCount> kStateCodes = {"REST", "RUMINATE", "HIGH", "MEDIUM",
                                                                   "PANT", "GRAZE",    "WALK", "EAT"};
constexpr std::array<std::string_view, kStateCount> kStateNames = {
    "Resting", "Rumination", "HighActivity", "MediumActivity", "Panting", "Grazing", "Walking", "Eating"};
constexpr std::array<std::string_view, 5> kBreedNames = {"Angus", "Brahman", "Brangus", "Charolais", "Crossbred"};
constexpr std::array<std::string_view, 4> kProcedureCodes = {"C", "D", "D+C", "NONE"};
constexpr std::array<std::string_view, 5> kReliefCodes = {"N", "T", "M", "T+M", "P"};

}  // namespace

std::size_t state_index(StateLabel state) { return static_cast<std::size_t>(state); }
std::string_view state_code(StateLabel state) { return kStateCodes[state_index(state)]; }
std::string_view state_name(StateLabel state) { return kStateNames[state_index(state)]; }

std::optional<StateLabel> parse_state(std::string_view text) {
  text = io::trim(text);
  for (std::size_t i = 0; i < kStateCount; ++i) {
    if (io::iequals(text, kStateCodes[i]) || io::iequals(text, kStateNames[i])) return kAllStates[i];
  }
  return std::nullopt;
}

std::string_view breed_name(Breed breed) { return kBreedNames[static_cast<std::size_t>(breed)]; }

std::optional<Breed> parse_breed(std::string_view text) {
  text = io::trim(text);
  for (std::size_t i = 0; i < kBreedNames.size(); ++i) {
    if (io::iequals(text, kBreedNames[i])) return kAllBreeds[i];
  }
  return std::nullopt;
}

std::string_view sex_code(Sex sex) { return sex == Sex::Female ? "F" : "M"; }

std::optional<Sex> parse_sex(std::string_view text) {
  text = io::trim(text);
  if (io::iequals(text, "F") || io::iequals(text, "Female")) return Sex::Female;
  if (io::iequals(text, "M") || io::iequals(text, "Male")) return Sex::Male;
  return std::nullopt;
}

std::string_view procedure_code(Procedure procedure) { return kProcedureCodes[static_cast<std::size_t>(procedure)]; }

std::optional<Procedure> parse_procedure(std::string_view text) {
  const std::string upper = io::to_upper(io::trim(text));
  for (std::size_t i = 0; i < kProcedureCodes.size(); ++i) {
    if (upper == kProcedureCodes[i]) return static_cast<Procedure>(i);
  }
  if (upper.empty() || upper == "-") return Procedure::None;
  return std::nullopt;
}

std::string_view relief_code(Relief relief) { return kReliefCodes[static_cast<std::size_t>(relief)]; }

std::optional<Relief> parse_relief(std::string_view text) {
  const std::string upper = io::to_upper(io::trim(text));
  for (std::size_t i = 0; i < kReliefCodes.size(); ++i) {
    if (upper == kReliefCodes[i]) return static_cast<Relief>(i);
  }
  return std::nullopt;
}

std::string format_cohort(const CohortKey& key) {
  return std::string(breed_name(key.breed)) + "-" + std::string(sex_code(key.sex)) + "-" +
         format_treatment(key.treatment);
}

std::string cohort_slug(const CohortKey& key) {
  std::string slug = format_cohort(key);
  for (char& c : slug) {
    if (c == ',') c = '_';
    if (c == '+') c = 'p';
  }
  return slug;
}

CohortKey parse_cohort(std::string_view text) {
  // Breed-Sex-Treatment; the treatment may itself contain '+' or ','.
  const auto first = text.find('-');
  const auto second = first == std::string_view::npos ? first : text.find('-', first + 1);
  if (second == std::string_view::npos) throw Error(ErrorCode::InvalidValue, "cohort '" + std::string(text) + "'");
  const auto breed = parse_breed(text.substr(0, first));
  const auto sex = parse_sex(text.substr(first + 1, second - first - 1));
  if (!breed || !sex) throw Error(ErrorCode::InvalidValue, "cohort '" + std::string(text) + "'");
  std::string treatment(text.substr(second + 1));
  std::replace(treatment.begin(), treatment.end(), '_', ',');
  std::replace(treatment.begin(), treatment.end(), 'p', '+');
  return CohortKey{*breed, *sex, parse_treatment(treatment)};
}

// ---------------------------------------------------------------------------
// Time

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59) {
    throw Error(ErrorCode::InvalidValue, "invalid calendar date-time");
  }
  return local_days{ymd} + hours{hour} + minutes{minute};
}

std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time) {
  date = io::trim(date);
  time = io::trim(time);
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return std::nullopt;
  if ((time.size() != 5 && time.size() != 8) || time[2] != ':' || (time.size() == 8 && time[5] != ':')) {
    return std::nullopt;
  }
  long long y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!io::parse_int(date.substr(0, 4), y) || !io::parse_int(date.substr(5, 2), mo) ||
      !io::parse_int(date.substr(8, 2), d) || !io::parse_int(time.substr(0, 2), h) ||
      !io::parse_int(time.substr(3, 2), mi)) {
    return std::nullopt;
  }
  if (time.size() == 8 && (!io::parse_int(time.substr(6, 2), s) || s < 0 || s > 59)) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{static_cast<unsigned>(mo)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  return local_days{ymd} + hours{h} + minutes{mi};
}

std::string format_date(Timestamp ts) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(ts)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_time(Timestamp ts) {
  using namespace std::chrono;
  const auto since_midnight = ts - floor<days>(ts);
  const auto total = since_midnight.count();
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(total / 60), static_cast<int>(total % 60));
  return buf;
}

Timestamp truncate_to_hour(Timestamp ts) { return std::chrono::floor<std::chrono::hours>(ts); }
Timestamp truncate_to_day(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

int hour_of_day(Timestamp ts) {
  return static_cast<int>((ts - truncate_to_day(ts)).count() / 60);
}

std::int64_t hour_serial(Timestamp ts, Timestamp epoch_start) {
  const auto epoch_hour = truncate_to_hour(epoch_start);
  if (ts < epoch_hour) throw Error(ErrorCode::TimestampBeforeEpoch, format_date(ts) + " " + format_time(ts));
  return 1 + std::chrono::floor<std::chrono::hours>(ts - epoch_hour).count();
}

// ---------------------------------------------------------------------------
// Series

void validate_series(const HourlySeries& series) {
  if (series.points.empty()) return;
  const auto& first = series.points.front();
  const std::int64_t offset = ((first.hour_of_day - (first.hour_serial - 1)) % 24 + 24) % 24;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    if (p.hour_serial < 1) throw Error(ErrorCode::InvalidValue, "hour serial must be positive");
    if (i > 0 && p.hour_serial <= series.points[i - 1].hour_serial) {
      throw Error(ErrorCode::InvalidValue, "hour serials must be strictly increasing");
    }
    if (!(p.minutes >= 0.0 && p.minutes <= 60.0)) throw Error(ErrorCode::InvalidValue, "minutes outside [0, 60]");
    if (p.hour_of_day != (p.hour_serial - 1 + offset) % 24) {
      throw Error(ErrorCode::InvalidValue, "hour_of_day inconsistent with hour serial");
    }
  }
}

bool is_gap_free(const HourlySeries& series) {
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    if (series.points[i].hour_serial != series.points[i - 1].hour_serial + 1) return false;
  }
  return true;
}

}  // namespace herdtwin
