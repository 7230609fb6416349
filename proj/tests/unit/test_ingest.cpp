#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "herdtwin/ingest.hpp"
#include "herdtwin/io_util.hpp"
#include "herdtwin/synth.hpp"
#include "test_util.hpp"

namespace herdtwin {
namespace {

CsvRow row(const std::string& animal, const CombinedTreatment& t, int hour, int minute, const std::string& state,
           const std::string& flag = "OK") {
  static int id = 0;
  return CsvRow{std::to_string(++id), animal, {Breed::Brahman, Sex::Female, t},
                make_timestamp(2019, 8, 10, hour, minute), state, flag, "dev1"};
}

std::filesystem::path write_csv(const test::TempDir& dir, const std::vector<std::string>& lines) {
  std::string text = canonical_header_line() + "\n";
  for (const auto& l : lines) text += l + "\n";
  const auto path = dir / "in.csv";
  io::write_text_file(path, text);
  return path;
}

TEST(Ingest, AcceptsRowsAndFlagsCorruption) {
  test::TempDir dir;
  const auto p = parse_treatment("P");
  const auto path = write_csv(dir, {format_csv_row(row("a1", p, 0, 0, "REST")),
                                    format_csv_row(row("a1", p, 0, 1, "WALK", "BAD")),
                                    format_csv_row(row("a1", p, 0, 2, "???")),
                                    format_csv_row(row("a2", p, 1, 0, "Eating"))});
  const auto ds = load_csv(path);
  ASSERT_EQ(ds.records.size(), 4u);
  EXPECT_EQ(ds.records[0].quality, Quality::Valid);
  EXPECT_EQ(ds.records[1].quality, Quality::Corrupted);
  EXPECT_EQ(ds.records[2].quality, Quality::Corrupted);
  EXPECT_EQ(ds.records[3].state, StateLabel::Eating);
  EXPECT_EQ(ds.animal_registry.size(), 2u);
  EXPECT_EQ(ds.quarantined_count, 0u);
  EXPECT_EQ(ds.epoch, make_timestamp(2019, 8, 10, 0, 0));
}

TEST(Ingest, MalformedRowsGoToRejects) {
  test::TempDir dir;
  const auto p = parse_treatment("P");
  auto bad_breed = format_csv_row(row("a1", p, 0, 5, "REST"));
  bad_breed.replace(bad_breed.find("Brahman"), 7, "Zebu");
  const auto path = write_csv(dir, {format_csv_row(row("a1", p, 0, 0, "REST")), "1,2,3", bad_breed,
                                    format_csv_row(row("a1", p, 0, 0, "WALK")),
                                    format_csv_row(row("a1", parse_treatment("D,N"), 0, 9, "REST"))});
  const auto ds = load_csv(path);
  EXPECT_EQ(ds.records.size(), 1u);
  EXPECT_EQ(ds.quarantined_count, 4u);
  const auto rejects = io::read_text_file(ds.rejects_path);
  EXPECT_NE(rejects.find("reject_reason"), std::string::npos);
  EXPECT_NE(rejects.find("column_count"), std::string::npos);
  EXPECT_NE(rejects.find("bad_breed"), std::string::npos);
  EXPECT_NE(rejects.find("duplicate"), std::string::npos);
  EXPECT_NE(rejects.find("registry_conflict"), std::string::npos);
}

TEST(Ingest, Errors) {
  test::TempDir dir;
  try {
    load_csv(dir / "nope.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
  }
  io::write_text_file(dir / "bad.csv", "a,b,c\n");
  try {
    load_csv(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
  io::write_text_file(dir / "empty.csv", canonical_header_line() + "\n");
  try {
    load_csv(dir / "empty.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(Ingest, ReorderedSchema) {
  test::TempDir dir;
  auto schema = canonical_schema();
  std::swap(schema[0], schema[10]);
  std::string header;
  for (const auto& c : schema) header += (header.empty() ? "" : ",") + c;
  auto line = format_csv_row(row("a9", parse_treatment("P"), 3, 0, "PANT"));
  auto cells = io::split_csv(line);
  std::vector<std::string> swapped(cells.begin(), cells.end());
  std::swap(swapped[0], swapped[10]);
  std::string joined;
  for (const auto& c : swapped) joined += (joined.empty() ? "" : ",") + c;
  io::write_text_file(dir / "r.csv", header + "\n" + joined + "\n");
  const auto ds = load_csv(dir / "r.csv", schema);
  ASSERT_EQ(ds.records.size(), 1u);
  EXPECT_EQ(ds.records[0].animal_id, "a9");
  EXPECT_EQ(ds.records[0].state, StateLabel::Panting);
}

TEST(Census, MatchesBruteForceGroupByOverCensusRoster) {
  test::TempDir dir;
  HerdSpec spec;
  spec.roster = census_roster();
  spec.days = 1;
  spec.effects = default_treatment_effects();
  const auto out = generate(spec, dir.path());
  const auto ds = load_csv(out.csv_path);
  const auto census = cohort_census(segment(ds));

  // Independent group-by straight off the CSV text.
  std::map<std::string, std::set<std::string>> animals;
  std::map<std::string, std::size_t> records;
  std::ifstream in(out.csv_path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c = io::split_csv(line);
    const std::string relief(c[5]);
    const std::string treatment = relief == "P" ? "P" : std::string(c[4]) + "," + relief;
    const std::string key = std::string(c[2]) + "-" + std::string(c[3]) + "-" + treatment;
    animals[key].insert(std::string(c[1]));
    ++records[key];
  }
  ASSERT_EQ(census.size(), animals.size());
  std::size_t total = 0;
  for (const auto& row : census) {
    const auto key = format_cohort(row.key);
    EXPECT_EQ(row.animals, animals[key].size()) << key;
    EXPECT_EQ(row.records, records[key]) << key;
    total += row.animals;
  }
  EXPECT_EQ(total, 759u);

  const CohortKey brahman_p{Breed::Brahman, Sex::Female, parse_treatment("P")};
  const auto it = std::find_if(census.begin(), census.end(), [&](const CensusRow& r) { return r.key == brahman_p; });
  ASSERT_NE(it, census.end());
  EXPECT_EQ(it->animals, 14u);
}

}  // namespace
}  // namespace herdtwin
