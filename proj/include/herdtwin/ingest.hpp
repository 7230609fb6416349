#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "herdtwin/core.hpp"

namespace herdtwin {

// Canonical 11-column sensor CSV header.
inline constexpr std::array<std::string_view, 11> kCanonicalColumns = {
    "record_id", "animal_id", "breed",      "sex",          "procedure", "pain_relief",
    "date",      "time",      "state",      "quality_flag", "device_id"};

std::vector<std::string> canonical_schema();

struct AnimalInfo {
  Breed breed;
  Sex sex;
  CombinedTreatment treatment;

  friend bool operator==(const AnimalInfo&, const AnimalInfo&) = default;
};

struct RawDataset {
  std::filesystem::path source_path;
  std::filesystem::path rejects_path;
  // Accepted records in file order. A Corrupted record's state is not
  // meaningful.
  std::vector<SensorRecord> records;
  std::map<std::string, AnimalInfo> animal_registry;
  std::size_t row_count = 0;
  std::size_t quarantined_count = 0;
  std::size_t physical_lines = 0;
  // Midnight of the earliest accepted record; hour serial 1 starts here.
  Timestamp epoch{};
};

struct LoadOptions {
  // Defaults to "<input>.rejects.csv" next to the input.
  std::filesystem::path rejects_path;
};

// Parses the sensor CSV. Malformed rows go to the rejects sidecar with a
// reject_reason column; an unparseable state cell or a BAD quality flag
// yields a Corrupted record that still occupies its minute. Duplicate
// (animal, minute) rows keep the first occurrence.
// Errors: MissingFile, SchemaMismatch, EmptyDataset.
RawDataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& schema = canonical_schema(),
                    const LoadOptions& options = {});

struct Cohort {
  CohortKey key;
  // Per-animal records sorted by timestamp.
  std::map<std::string, std::vector<SensorRecord>> animals;
};

using CohortMap = std::map<CohortKey, Cohort>;

CohortMap segment(const RawDataset& dataset);

struct CensusRow {
  CohortKey key;
  std::size_t animals = 0;
  std::size_t records = 0;
};

std::vector<CensusRow> cohort_census(const CohortMap& cohorts);
std::string census_csv(const std::vector<CensusRow>& census);

// Serialises records in the canonical schema; used by the generator and by
// tests that need fixtures on disk.
struct CsvRow {
  std::string record_id;
  std::string animal_id;
  AnimalInfo animal;
  Timestamp timestamp;
  std::string state;  // raw cell text
  std::string quality_flag;
  std::string device_id;
};
std::string format_csv_row(const CsvRow& row);
std::string canonical_header_line();

}  // namespace herdtwin
