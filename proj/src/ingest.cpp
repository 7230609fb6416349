#include "herdtwin/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "herdtwin/io_util.hpp"

namespace herdtwin {

std::vector<std::string> canonical_schema() { return {kCanonicalColumns.begin(), kCanonicalColumns.end()}; }

std::string canonical_header_line() {
  std::string line;
  for (std::size_t i = 0; i < kCanonicalColumns.size(); ++i) {
    if (i) line += ',';
    line += kCanonicalColumns[i];
  }
  return line;
}

std::string format_csv_row(const CsvRow& row) {
  std::string line;
  line.reserve(96);
  line += row.record_id;
  line += ',';
  line += row.animal_id;
  line += ',';
  line += breed_name(row.animal.breed);
  line += ',';
  line += sex_code(row.animal.sex);
  line += ',';
  line += procedure_code(row.animal.treatment.procedure());
  line += ',';
  line += relief_code(row.animal.treatment.relief());
  line += ',';
  line += format_date(row.timestamp);
  line += ',';
  line += format_time(row.timestamp);
  line += ',';
  line += row.state;
  line += ',';
  line += row.quality_flag;
  line += ',';
  line += row.device_id;
  return line;
}

namespace {

enum Column : std::size_t {
  kRecordId,
  kAnimalId,
  kBreed,
  kSex,
  kProcedure,
  kPainRelief,
  kDate,
  kTime,
  kState,
  kQualityFlag,
  kDeviceId,
};

struct ParsedRow {
  SensorRecord record;
  AnimalInfo info;
};

// Returns the reject reason, or an empty view when the row is accepted.
std::string_view parse_row(const std::vector<std::string_view>& cells, const std::array<std::size_t, 11>& index,
                           std::optional<ParsedRow>& out) {
  auto cell = [&](Column c) { return io::trim(cells[index[c]]); };
  if (cell(kAnimalId).empty()) return "empty_animal_id";
  const auto breed = parse_breed(cell(kBreed));
  if (!breed) return "bad_breed";
  const auto sex = parse_sex(cell(kSex));
  if (!sex) return "bad_sex";
  const auto procedure = parse_procedure(cell(kProcedure));
  const auto relief = parse_relief(cell(kPainRelief));
  if (!procedure || !relief || !CombinedTreatment::is_legal(*procedure, *relief)) return "bad_treatment";
  const auto ts = parse_timestamp(cell(kDate), cell(kTime));
  if (!ts) return "bad_timestamp";
  Quality quality;
  const auto flag = cell(kQualityFlag);
  if (io::iequals(flag, "OK")) {
    quality = Quality::Valid;
  } else if (io::iequals(flag, "BAD")) {
    quality = Quality::Corrupted;
  } else {
    return "bad_quality_flag";
  }
  const auto state = parse_state(cell(kState));
  if (!state) quality = Quality::Corrupted;
  out = ParsedRow{SensorRecord{std::string(cell(kAnimalId)), *ts, state.value_or(StateLabel::Resting), quality},
                  AnimalInfo{*breed, *sex, CombinedTreatment(*procedure, *relief)}};
  return {};
}

}  // namespace

RawDataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& schema,
                    const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());

  RawDataset dataset;
  dataset.source_path = path;
  dataset.rejects_path = options.rejects_path.empty() ? std::filesystem::path(path.string() + ".rejects.csv")
                                                      : options.rejects_path;

  // The expected schema must name every canonical column exactly once; the
  // file header must match it.
  std::array<std::size_t, 11> index{};
  if (schema.size() != kCanonicalColumns.size()) {
    throw Error(ErrorCode::SchemaMismatch, "schema must list the 11 canonical columns");
  }
  for (std::size_t c = 0; c < kCanonicalColumns.size(); ++c) {
    const auto it = std::find_if(schema.begin(), schema.end(),
                                 [&](const std::string& name) { return io::iequals(io::trim(name), kCanonicalColumns[c]); });
    if (it == schema.end()) throw Error(ErrorCode::SchemaMismatch, "schema lacks column " + std::string(kCanonicalColumns[c]));
    index[c] = static_cast<std::size_t>(it - schema.begin());
  }

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, "missing header row");
  dataset.physical_lines = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = io::split_csv(line);
    bool matches = header.size() == schema.size();
    for (std::size_t i = 0; matches && i < header.size(); ++i) matches = io::iequals(io::trim(header[i]), io::trim(schema[i]));
    if (!matches) throw Error(ErrorCode::SchemaMismatch, "header '" + line + "' does not match the expected schema");
  }

  std::string rejects = line + ",reject_reason\n";
  std::unordered_map<std::string, std::uint32_t> animal_index;
  std::unordered_set<std::uint64_t> seen;
  std::optional<Timestamp> earliest;

  while (std::getline(in, line)) {
    ++dataset.physical_lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto reject = [&](std::string_view reason) {
      ++dataset.quarantined_count;
      rejects += line;
      rejects += ',';
      rejects += reason;
      rejects += '\n';
    };
    if (io::trim(line).empty()) {
      reject("blank_line");
      continue;
    }
    const auto cells = io::split_csv(line);
    if (cells.size() != schema.size()) {
      reject("column_count");
      continue;
    }
    std::optional<ParsedRow> parsed;
    if (const auto reason = parse_row(cells, index, parsed); !reason.empty()) {
      reject(reason);
      continue;
    }
    auto& rec = parsed->record;
    auto [reg_it, inserted] = dataset.animal_registry.try_emplace(rec.animal_id, parsed->info);
    if (!inserted && !(reg_it->second == parsed->info)) {
      reject("registry_conflict");
      continue;
    }
    const auto idx_it = animal_index.try_emplace(rec.animal_id, static_cast<std::uint32_t>(animal_index.size())).first;
    const auto minute = static_cast<std::uint64_t>(rec.timestamp.time_since_epoch().count() +
                                                   (std::int64_t{1} << 31)) & 0xFFFFFFFFull;
    if (!seen.insert((std::uint64_t{idx_it->second} << 32) | minute).second) {
      reject("duplicate");
      continue;
    }
    if (!earliest || rec.timestamp < *earliest) earliest = rec.timestamp;
    dataset.records.push_back(std::move(rec));
  }

  dataset.row_count = dataset.records.size();
  io::write_text_file(dataset.rejects_path, rejects);
  if (dataset.row_count == 0) throw Error(ErrorCode::EmptyDataset, path.string() + " has no accepted rows");
  dataset.epoch = truncate_to_day(*earliest);
  return dataset;
}

CohortMap segment(const RawDataset& dataset) {
  CohortMap cohorts;
  for (const auto& rec : dataset.records) {
    const auto& info = dataset.animal_registry.at(rec.animal_id);
    const CohortKey key{info.breed, info.sex, info.treatment};
    auto [it, inserted] = cohorts.try_emplace(key, Cohort{key, {}});
    it->second.animals[rec.animal_id].push_back(rec);
  }
  for (auto& [key, cohort] : cohorts) {
    for (auto& [id, records] : cohort.animals) {
      std::stable_sort(records.begin(), records.end(),
                       [](const SensorRecord& a, const SensorRecord& b) { return a.timestamp < b.timestamp; });
    }
  }
  return cohorts;
}

std::vector<CensusRow> cohort_census(const CohortMap& cohorts) {
  std::vector<CensusRow> rows;
  for (const auto& [key, cohort] : cohorts) {
    if (cohort.animals.empty()) continue;
    CensusRow row{key, cohort.animals.size(), 0};
    for (const auto& [id, records] : cohort.animals) row.records += records.size();
    rows.push_back(row);
  }
  return rows;
}

std::string census_csv(const std::vector<CensusRow>& census) {
  std::string out = "breed,sex,treatment,animals,records\n";
  for (const auto& row : census) {
    out += breed_name(row.key.breed);
    out += ',';
    out += sex_code(row.key.sex);
    out += ',';
    // Treatment codes contain commas; quote-free files swap them for ';'.
    std::string code = format_treatment(row.key.treatment);
    std::replace(code.begin(), code.end(), ',', ';');
    out += code;
    out += ',' + std::to_string(row.animals) + ',' + std::to_string(row.records) + '\n';
  }
  return out;
}

}  // namespace herdtwin
