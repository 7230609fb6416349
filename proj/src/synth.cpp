#include "herdtwin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "herdtwin/ingest.hpp"
#include "herdtwin/io_util.hpp"
#include "herdtwin/json_io.hpp"
#include "herdtwin/random.hpp"

namespace herdtwin {

const std::array<double, 24>& reference_resting_params() {
  static const std::array<double, 24> params = {
      51.29, 2.823,  2.957, 44.42, 24.19, 3.936,  1.378e14, -40.24, 7.546, 19.29, 13.55, 3.22,
      16.18, 19.06, 0.9367, 19.25, 4.588, 0.5802, 29.29,    20.39,  1.802, 20.45, 9.812, 2.834};
  return params;
}

double reference_resting_curve(double hour) {
  const auto& p = reference_resting_params();
  double sum = 0.0;
  for (std::size_t t = 0; t < p.size(); t += 3) {
    const double u = (hour - p[t + 1]) / p[t + 2];
    sum += p[t] * std::exp(-u * u);
  }
  return sum;
}

namespace {

double other_state_weight(StateLabel state, int h) {
  const bool day = h >= 6 && h < 18;
  switch (state) {
    case StateLabel::Rumination: return day ? 4.0 : 6.0;
    case StateLabel::HighActivity: return (h >= 6 && h < 9) || (h >= 16 && h < 19) ? 2.0 : 1.0;
    case StateLabel::MediumActivity: return 2.0;
    case StateLabel::Panting: return 0.2 + 4.0 * std::exp(-std::pow((h - 13.0) / 3.0, 2));
    case StateLabel::Grazing: return day ? 3.0 : 0.5;
    case StateLabel::Walking: return day ? 3.0 : 2.0;
    case StateLabel::Eating: return h >= 6 && h < 17 ? 4.0 : 0.5;
    case StateLabel::Resting: return 0.0;
  }
  return 0.0;
}

}  // namespace

StateTemplates default_templates() {
  StateTemplates out{};
  for (int h = 0; h < 24; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const double rest = std::clamp(reference_resting_curve(h), 0.0, 60.0);
    out[state_index(StateLabel::Resting)][hi] = rest;
    double weight_sum = 0.0;
    for (const auto s : kAllStates) weight_sum += other_state_weight(s, h);
    for (const auto s : kAllStates) {
      if (s == StateLabel::Resting) continue;
      out[state_index(s)][hi] = (60.0 - rest) * other_state_weight(s, h) / weight_sum;
    }
  }
  return out;
}

DayTemplate default_profile(StateLabel state) { return default_templates()[state_index(state)]; }

std::vector<RosterEntry> census_roster() {
  // Columns: Angus F/M, Brahman F/M, Brangus F/M, Charolais F/M, Crossbred F/M.
  struct Row {
    const char* code;
    std::array<int, 10> counts;
  };
  static const Row rows[] = {
      {"C,M", {0, 1, 0, 1, 0, 1, 0, 0, 0, 1}},       {"C,N", {0, 1, 0, 1, 0, 0, 0, 0, 0, 1}},
      {"C,T", {0, 1, 0, 3, 0, 2, 0, 0, 0, 6}},       {"C,T+M", {0, 1, 0, 1, 0, 0, 0, 0, 0, 1}},
      {"D,M", {0, 0, 70, 0, 1, 0, 2, 2, 13, 0}},     {"D,N", {0, 0, 39, 0, 1, 0, 2, 2, 9, 0}},
      {"D,T", {0, 0, 101, 3, 3, 0, 4, 7, 20, 1}},    {"D,T+M", {0, 0, 66, 2, 4, 0, 3, 0, 12, 0}},
      {"D+C,M", {0, 0, 0, 50, 0, 2, 0, 0, 0, 10}},   {"D+C,N", {0, 0, 0, 30, 0, 2, 0, 0, 0, 7}},
      {"D+C,T", {0, 1, 0, 81, 0, 3, 0, 0, 0, 22}},   {"D+C,T+M", {0, 0, 0, 50, 0, 1, 0, 0, 0, 13}},
      {"P", {13, 14, 14, 5, 10, 0, 3, 1, 38, 0}},
  };
  std::vector<RosterEntry> out;
  for (const auto& row : rows) {
    const auto treatment = parse_treatment(row.code);
    for (std::size_t c = 0; c < row.counts.size(); ++c) {
      if (row.counts[c] == 0) continue;
      out.push_back({CohortKey{kAllBreeds[c / 2], kAllSexes[c % 2], treatment}, row.counts[c]});
    }
  }
  std::sort(out.begin(), out.end(), [](const RosterEntry& a, const RosterEntry& b) { return a.cohort < b.cohort; });
  return out;
}

std::map<CombinedTreatment, StateOffsets> default_treatment_effects() {
  std::map<Relief, StateOffsets> by_relief = {
      {Relief::NegativeControl,
       {{StateLabel::Walking, -1.6}, {StateLabel::Eating, -1.2}, {StateLabel::Grazing, -0.2}, {StateLabel::Panting, 0.5}}},
      {Relief::Meloxicam,
       {{StateLabel::Walking, -1.1}, {StateLabel::Eating, -0.9}, {StateLabel::Grazing, -0.45}, {StateLabel::Panting, 1.2}}},
      {Relief::TopicalAnaesthetic,
       {{StateLabel::Walking, -0.8}, {StateLabel::Eating, -0.7}, {StateLabel::Grazing, -0.3}, {StateLabel::Panting, 0.8}}},
      {Relief::TopicalPlusMeloxicam,
       {{StateLabel::Walking, -0.4}, {StateLabel::Eating, -0.3}, {StateLabel::Grazing, -0.5}, {StateLabel::Panting, 1.2}}},
  };
  std::map<CombinedTreatment, StateOffsets> out;
  for (const auto& t : all_treatments()) {
    if (!t.is_positive_control()) out.emplace(t, by_relief.at(t.relief()));
  }
  return out;
}

void HerdSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
  if (roster.empty()) fail("roster is empty");
  for (const auto& r : roster) {
    if (r.count < 1) fail("roster entry " + format_cohort(r.cohort) + " needs a positive count");
  }
  if (days < 1) fail("days must be positive");
  if (!parse_timestamp(start_date, "00:00")) fail("start_date must be YYYY-MM-DD");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be non-negative");
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) fail("corruption_rate must lie in [0, 1)");
  for (int h = 0; h < 24; ++h) {
    double sum = 0.0;
    for (const auto& t : templates) {
      const double v = t[static_cast<std::size_t>(h)];
      if (!(v >= 0.0) || !std::isfinite(v)) fail("template minutes must be finite and non-negative");
      sum += v;
    }
    if (std::abs(sum - 60.0) > 1e-6) fail("templates at hour " + std::to_string(h) + " sum to " + std::to_string(sum));
  }
  for (const auto& entry : effects) {
    for (const auto& offset : entry.second) {
      if (!std::isfinite(offset.second)) fail("effect offsets must be finite");
    }
  }
}

std::array<double, kStateCount> expected_minutes(const HerdSpec& spec, const CombinedTreatment& treatment, int hour) {
  std::array<double, kStateCount> v{};
  for (std::size_t s = 0; s < kStateCount; ++s) v[s] = spec.templates[s][static_cast<std::size_t>(hour)];
  if (const auto it = spec.effects.find(treatment); it != spec.effects.end()) {
    const auto rest = state_index(StateLabel::Resting);
    for (const auto& [state, offset] : it->second) {
      const auto s = state_index(state);
      if (s == rest) continue;
      const double before = v[s];
      v[s] = std::max(0.0, v[s] + offset);
      v[rest] -= v[s] - before;
    }
    v[rest] = std::max(0.0, v[rest]);
  }
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum > 0.0) {
    for (auto& x : v) x *= 60.0 / sum;
  }
  return v;
}

std::array<int, kStateCount> largest_remainder(const std::array<double, kStateCount>& shares, int total) {
  const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::array<int, kStateCount> out{};
  if (!(sum > 0.0)) {
    out[0] = total;
    return out;
  }
  std::array<double, kStateCount> remainder{};
  int assigned = 0;
  for (std::size_t s = 0; s < kStateCount; ++s) {
    const double exact = shares[s] * total / sum;
    out[s] = static_cast<int>(std::floor(exact));
    remainder[s] = exact - out[s];
    assigned += out[s];
  }
  std::array<std::size_t, kStateCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % kStateCount]];
  return out;
}

std::string animal_id_for(const CohortKey& cohort, int index) {
  std::string n = std::to_string(index);
  if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
  return cohort_slug(cohort) + "-" + n;
}

SynthOutput generate(const HerdSpec& spec, const std::filesystem::path& out_dir, std::string_view stem) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  SynthOutput result;
  result.csv_path = out_dir / (std::string(stem) + ".csv");
  result.truth_path = out_dir / (std::string(stem) + "_truth.csv");
  std::ofstream csv(result.csv_path, std::ios::binary);
  std::ofstream truth(result.truth_path, std::ios::binary);
  if (!csv || !truth) throw Error(ErrorCode::Io, "cannot write into " + out_dir.string());
  csv << canonical_header_line() << '\n';
  truth << "animal_id,hour_serial,state,true_minutes\n";

  const Timestamp start = *parse_timestamp(spec.start_date, "00:00");
  const int hours = spec.days * 24;
  std::size_t record_id = 0;
  std::uint64_t animal_stream = 0;
  std::string block;
  for (const auto& entry : spec.roster) {
    for (int a = 1; a <= entry.count; ++a, ++animal_stream) {
      const AnimalInfo info{entry.cohort.breed, entry.cohort.sex, entry.cohort.treatment};
      const std::string id = animal_id_for(entry.cohort, a);
      const std::string device = "dev-" + std::to_string(animal_stream + 1);
      Rng rng(derive_seed(spec.seed, animal_stream));
      std::array<StateLabel, 60> minutes{};
      block.clear();
      for (int h = 0; h < hours; ++h) {
        auto shares = expected_minutes(spec, entry.cohort.treatment, h % 24);
        if (spec.noise_sigma > 0.0) {
          for (auto& v : shares) v = std::max(0.0, v + spec.noise_sigma * rng.normal());
        }
        const auto counts = largest_remainder(shares, 60);
        std::size_t k = 0;
        for (std::size_t s = 0; s < kStateCount; ++s) {
          truth << id << ',' << (h + 1) << ',' << state_code(kAllStates[s]) << ',' << counts[s] << '\n';
          for (int c = 0; c < counts[s]; ++c) minutes[k++] = kAllStates[s];
        }
        rng.shuffle(minutes.begin(), minutes.end());
        for (int m = 0; m < 60; ++m) {
          CsvRow row{std::to_string(++record_id), id, info, start + std::chrono::minutes(h * 60 + m),
                     std::string(state_code(minutes[static_cast<std::size_t>(m)])), "OK", device};
          if (spec.corruption_rate > 0.0 && rng.uniform() < spec.corruption_rate) {
            ++result.corrupted_minutes;
            if (rng.uniform() < 0.5) {
              row.quality_flag = "BAD";
            } else {
              row.state = "???";
            }
          }
          block += format_csv_row(row);
          block += '\n';
        }
        if (block.size() > (1u << 20)) {
          csv << block;
          block.clear();
        }
      }
      csv << block;
      result.rows += static_cast<std::size_t>(hours) * 60;
      ++result.animals;
    }
  }
  csv.close();
  truth.close();
  if (!csv || !truth) throw Error(ErrorCode::Io, "failed writing synthetic herd");
  return result;
}

// ---------------------------------------------------------------------------
// Spec JSON

namespace {

StateLabel state_from_json_key(const std::string& key) {
  const auto s = parse_state(key);
  if (!s) throw Error(ErrorCode::InvalidSpec, "unknown state '" + key + "'");
  return *s;
}

}  // namespace

HerdSpec parse_herd_spec(std::string_view json_text) {
  HerdSpec spec;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    require_known_keys(doc,
                       {"roster", "roster_preset", "days", "start_date", "noise_sigma", "corruption_rate", "seed",
                        "templates", "effects"},
                       "herd spec");
    spec.days = doc.value("days", spec.days);
    spec.start_date = doc.value("start_date", spec.start_date);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    spec.corruption_rate = doc.value("corruption_rate", spec.corruption_rate);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("roster_preset")) {
      if (doc.at("roster_preset") != "census") throw Error(ErrorCode::InvalidSpec, "roster_preset must be \"census\"");
      spec.roster = census_roster();
    }
    if (doc.contains("roster")) {
      for (const auto& r : doc.at("roster")) {
        require_known_keys(r, {"breed", "sex", "treatment", "count"}, "roster entry");
        const auto breed = parse_breed(r.at("breed").get<std::string>());
        const auto sex = parse_sex(r.at("sex").get<std::string>());
        if (!breed || !sex) throw Error(ErrorCode::InvalidSpec, "roster entry has an unknown breed or sex");
        spec.roster.push_back(
            {CohortKey{*breed, *sex, parse_treatment(r.at("treatment").get<std::string>())}, r.at("count").get<int>()});
      }
    }
    if (doc.contains("templates")) {
      for (const auto& [key, values] : doc.at("templates").items()) {
        const auto v = values.get<std::vector<double>>();
        if (v.size() != 24) throw Error(ErrorCode::InvalidSpec, "template " + key + " needs 24 values");
        std::copy(v.begin(), v.end(), spec.templates[state_index(state_from_json_key(key))].begin());
      }
    }
    if (doc.contains("effects")) {
      for (const auto& [code, offsets] : doc.at("effects").items()) {
        auto& dst = spec.effects[parse_treatment(code)];
        for (const auto& [key, value] : offsets.items()) dst[state_from_json_key(key)] = value.get<double>();
      }
    } else {
      spec.effects = default_treatment_effects();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("herd spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidSpec) throw;
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  spec.validate();
  return spec;
}

std::string herd_spec_json(const HerdSpec& spec) {
  nlohmann::ordered_json doc;
  auto roster = nlohmann::ordered_json::array();
  for (const auto& r : spec.roster) {
    roster.push_back({{"breed", breed_name(r.cohort.breed)},
                      {"sex", sex_code(r.cohort.sex)},
                      {"treatment", format_treatment(r.cohort.treatment)},
                      {"count", r.count}});
  }
  doc["roster"] = std::move(roster);
  doc["days"] = spec.days;
  doc["start_date"] = spec.start_date;
  doc["noise_sigma"] = spec.noise_sigma;
  doc["corruption_rate"] = spec.corruption_rate;
  doc["seed"] = spec.seed;
  nlohmann::ordered_json templates;
  for (const auto s : kAllStates) templates[std::string(state_code(s))] = spec.templates[state_index(s)];
  doc["templates"] = std::move(templates);
  nlohmann::ordered_json effects = nlohmann::ordered_json::object();
  for (const auto& [t, offsets] : spec.effects) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [s, v] : offsets) o[std::string(state_code(s))] = v;
    effects[format_treatment(t)] = std::move(o);
  }
  doc["effects"] = std::move(effects);
  return doc.dump(2) + "\n";
}

}  // namespace herdtwin
