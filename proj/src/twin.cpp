#include "herdtwin/twin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "herdtwin/io_util.hpp"

namespace herdtwin {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kRegistryVersion = 1;
constexpr int kReportVersion = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string key_slug(const TwinKey& key) {
  std::string state(state_code(key.state));
  std::transform(state.begin(), state.end(), state.begin(), [](unsigned char c) { return std::tolower(c); });
  return cohort_slug(key.cohort) + "_" + state;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_or_nan(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

ordered_json array24(const std::array<double, 24>& values) {
  ordered_json out = ordered_json::array();
  for (const double v : values) out.push_back(number_or_null(v));
  return out;
}

std::array<double, 24> read_array24(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 24) throw Error(ErrorCode::SchemaMismatch, "expected 24 values");
  std::array<double, 24> out{};
  for (std::size_t i = 0; i < 24; ++i) out[i] = number_or_nan(j[i]);
  return out;
}

ordered_json drift_json(const DriftReport& r) {
  ordered_json j;
  j["key"] = format_twin_key(r.key);
  j["day_start_serial"] = r.day_start_serial;
  j["predicted"] = array24(r.predicted);
  j["actual"] = array24(r.actual);
  j["hours_compared"] = r.hours_compared;
  j["cycle_mse"] = number_or_null(r.cycle_mse);
  return j;
}

DriftReport parse_drift(const nlohmann::json& j, const TwinKey& key) {
  DriftReport r{key};
  r.day_start_serial = j.at("day_start_serial").get<std::int64_t>();
  r.predicted = read_array24(j.at("predicted"));
  r.actual = read_array24(j.at("actual"));
  for (std::size_t h = 0; h < 24; ++h) r.has_actual[h] = !std::isnan(r.actual[h]);
  r.hours_compared = j.at("hours_compared").get<int>();
  r.cycle_mse = number_or_nan(j.at("cycle_mse"));
  return r;
}

TwinKey parse_twin_key(std::string_view text) {
  const auto slash = text.rfind('/');
  if (slash == std::string_view::npos) throw Error(ErrorCode::SchemaMismatch, "twin key '" + std::string(text) + "'");
  const auto state = parse_state(text.substr(slash + 1));
  if (!state) throw Error(ErrorCode::SchemaMismatch, "twin key '" + std::string(text) + "'");
  return TwinKey{parse_cohort(text.substr(0, slash)), *state};
}

}  // namespace

std::string format_twin_key(const TwinKey& key) {
  return format_cohort(key.cohort) + "/" + std::string(state_code(key.state));
}

// ---------------------------------------------------------------------------
// Registry

TwinRegistry TwinRegistry::open(const std::filesystem::path& directory) {
  TwinRegistry registry;
  registry.directory_ = directory;
  const auto index = directory / "index.json";
  if (!std::filesystem::exists(index)) return registry;
  try {
    const auto doc = nlohmann::json::parse(io::read_text_file(index));
    if (doc.at("registry_version").get<int>() != kRegistryVersion) {
      throw Error(ErrorCode::SchemaMismatch, "unsupported registry version");
    }
    for (const auto& e : doc.at("entries")) {
      TwinEntry entry{parse_twin_key(e.at("key").get<std::string>())};
      entry.checkpoint_file = e.at("checkpoint").get<std::string>();
      entry.series_file = e.at("series").get<std::string>();
      const auto& fir = e.at("fir");
      entry.fir.length = fir.at("length").get<int>();
      entry.fir.cutoff = fir.at("cutoff").get<double>();
      entry.fir.window = parse_window(fir.at("window").get<std::string>());
      entry.last_trained_serial = e.at("last_trained_serial").get<std::int64_t>();
      if (!e.at("next_prediction").is_null()) entry.next_prediction = read_array24(e.at("next_prediction"));
      entry.next_prediction_serial = e.at("next_prediction_serial").get<std::int64_t>();
      for (const auto& d : e.at("drift_history")) entry.drift_history.push_back(parse_drift(d, entry.key));
      registry.entries_.insert_or_assign(entry.key, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("registry index: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch || e.code() == ErrorCode::Io) throw;
    throw Error(ErrorCode::SchemaMismatch, std::string("registry index: ") + e.what());
  }
  return registry;
}

const TwinEntry& TwinRegistry::entry(const TwinKey& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::UnknownKey, format_twin_key(key));
  return it->second;
}

TwinEntry& TwinRegistry::entry(const TwinKey& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::UnknownKey, format_twin_key(key));
  return it->second;
}

void TwinRegistry::register_model(const LstmModel& model, const HourlySeries& history, const FirSettings& fir) {
  if (history.points.empty()) throw Error(ErrorCode::EmptySeries, "twin history is empty");
  TwinEntry entry{TwinKey{history.cohort, history.state}};
  const auto slug = key_slug(entry.key);
  entry.checkpoint_file = "models/" + slug + ".json";
  entry.series_file = "series/" + slug + ".csv";
  entry.fir = fir;
  entry.last_trained_serial = history.points.back().hour_serial;
  save_checkpoint(model, directory_ / entry.checkpoint_file);
  io::write_text_file(directory_ / entry.series_file, series_csv(history));
  entries_.insert_or_assign(entry.key, std::move(entry));
}

LstmModel TwinRegistry::load_model(const TwinKey& key) const {
  return load_checkpoint(directory_ / entry(key).checkpoint_file);
}

HourlySeries TwinRegistry::load_series(const TwinKey& key) const {
  return parse_series_csv(io::read_text_file(directory_ / entry(key).series_file), key.cohort, key.state);
}

void TwinRegistry::save() const {
  ordered_json doc;
  doc["registry_version"] = kRegistryVersion;
  doc["entries"] = ordered_json::array();
  for (const auto& [key, entry] : entries_) {
    ordered_json e;
    e["key"] = format_twin_key(key);
    e["checkpoint"] = entry.checkpoint_file;
    e["series"] = entry.series_file;
    e["fir"] = {{"length", entry.fir.length},
                {"cutoff", entry.fir.cutoff},
                {"window", std::string(window_name(entry.fir.window))}};
    e["last_trained_serial"] = entry.last_trained_serial;
    e["next_prediction"] = entry.next_prediction ? array24(*entry.next_prediction) : ordered_json(nullptr);
    e["next_prediction_serial"] = entry.next_prediction_serial;
    e["drift_history"] = ordered_json::array();
    for (const auto& d : entry.drift_history) e["drift_history"].push_back(drift_json(d));
    doc["entries"].push_back(std::move(e));
  }
  io::write_text_file(directory_ / "index.json", doc.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Update loop

DriftReport compare_cycle(const TwinKey& key, std::int64_t day_start_serial, const std::array<double, 24>& predicted,
                          const HourlySeries& day) {
  DriftReport report{key};
  report.day_start_serial = day_start_serial;
  report.predicted = predicted;
  report.actual.fill(kNaN);
  for (const auto& p : day.points) {
    const auto offset = p.hour_serial - day_start_serial;
    if (offset < 0 || offset >= 24 || p.support <= 0 || p.interpolated) continue;
    const auto h = static_cast<std::size_t>(offset);
    report.actual[h] = p.minutes;
    report.has_actual[h] = true;
  }
  double sse = 0.0;
  for (std::size_t h = 0; h < 24; ++h) {
    if (!report.has_actual[h]) continue;
    const double d = report.predicted[h] - report.actual[h];
    sse += d * d;
    ++report.hours_compared;
  }
  report.cycle_mse = report.hours_compared > 0 ? sse / report.hours_compared : kNaN;
  return report;
}

UpdateResult update_twin(TwinRegistry& registry, const TwinKey& key, const HourlySeries& day,
                         const UpdateOptions& options) {
  auto& entry = registry.entry(key);
  if (day.state != key.state) throw Error(ErrorCode::MixedState, "day does not belong to " + format_twin_key(key));
  if (day.cohort != key.cohort) throw Error(ErrorCode::MixedCohort, "day does not belong to " + format_twin_key(key));
  if (day.points.empty()) throw Error(ErrorCode::EmptySeries, "update day has no surviving hours");
  validate_series(day);

  const auto& first = day.points.front();
  const std::int64_t day_start = first.hour_serial - first.hour_of_day;
  for (const auto& p : day.points) {
    if (p.hour_serial < day_start || p.hour_serial >= day_start + 24) {
      throw Error(ErrorCode::InvalidValue, "update data spans more than one calendar day");
    }
  }

  auto series = registry.load_series(key);
  if (!series.points.empty() && day_start <= series.points.back().hour_serial) {
    throw Error(ErrorCode::InvalidValue, "update day overlaps the stored history");
  }

  UpdateResult result{UpdateStatus::NoPriorPrediction, std::nullopt, {}};
  if (entry.next_prediction && entry.next_prediction_serial == day_start) {
    auto report = compare_cycle(key, day_start, *entry.next_prediction, day);
    entry.drift_history.push_back(report);
    result.status = UpdateStatus::Compared;
    result.report = std::move(report);
  }

  series.points.insert(series.points.end(), day.points.begin(), day.points.end());
  io::write_text_file(registry.directory() / entry.series_file, series_csv(series));

  auto model = registry.load_model(key);
  auto prepared = fill_gaps(series);
  if (entry.fir.length > 1) {
    prepared = apply_filter(design_lowpass(entry.fir.length, entry.fir.cutoff, entry.fir.window), prepared);
  }
  const auto windows = make_windows(prepared, model.config());
  if (options.full_retrain) {
    auto fresh = LstmModel::initialized(model.config());
    train(fresh, windows);
    model = std::move(fresh);
  } else {
    fine_tune(model, windows, options.fine_tune_epochs);
  }

  result.next_prediction = predict_cycle(model, 0);
  entry.next_prediction = result.next_prediction;
  entry.next_prediction_serial = day_start + 24;
  entry.last_trained_serial = series.points.back().hour_serial;
  save_checkpoint(model, registry.directory() / entry.checkpoint_file);
  registry.save();
  return result;
}

// ---------------------------------------------------------------------------
// Pain assessment

PainAssessment assess_pain(std::span<const DailyProfile> profiles, const PainWeights& weights) {
  if (profiles.empty()) throw Error(ErrorCode::InsufficientTreatments, "no profiles");
  const Breed breed = profiles.front().cohort.breed;
  const Sex sex = profiles.front().cohort.sex;
  std::map<CombinedTreatment, std::array<const DailyProfile*, 5>> by_treatment;
  for (const auto& p : profiles) {
    if (p.cohort.breed != breed || p.cohort.sex != sex) {
      throw Error(ErrorCode::MixedCohort, "pain assessment needs one breed and sex");
    }
    const auto it = std::find(kPainIndicators.begin(), kPainIndicators.end(), p.state);
    auto& slots = by_treatment.try_emplace(p.cohort.treatment, std::array<const DailyProfile*, 5>{}).first->second;
    if (it != kPainIndicators.end()) slots[static_cast<std::size_t>(it - kPainIndicators.begin())] = &p;
  }
  if (by_treatment.size() < 2) {
    throw Error(ErrorCode::InsufficientTreatments, "pain assessment needs at least two treatments");
  }

  PainAssessment out{breed, sex, weights, false, std::nullopt, {}, {profiles.begin(), profiles.end()}};
  std::map<CombinedTreatment, std::array<double, 5>> totals;
  for (const auto& [treatment, slots] : by_treatment) {
    std::array<double, 5> t{};
    for (std::size_t i = 0; i < 5; ++i) {
      if (!slots[i]) {
        throw Error(ErrorCode::InvalidValue, "missing " + std::string(state_name(kPainIndicators[i])) +
                                                 " profile for " + format_treatment(treatment));
      }
      t[i] = slots[i]->daily_total();
    }
    totals.emplace(treatment, t);
    if (treatment.is_positive_control()) {
      out.has_positive_control = true;
      out.control_totals = t;
    }
  }

  const std::array<double, 5> w = {weights.walking, weights.eating, weights.grazing, weights.panting,
                                   weights.resting};
  // Activity indicators count as pain when they fall; panting and resting
  // when they rise.
  constexpr std::array<double, 5> sign = {-1.0, -1.0, -1.0, 1.0, 1.0};
  for (const auto& [treatment, t] : totals) {
    if (out.has_positive_control && treatment.is_positive_control()) continue;
    PainEntry e{treatment};
    e.totals = t;
    for (std::size_t i = 0; i < 5; ++i) {
      std::string name(state_name(kPainIndicators[i]));
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      if (out.control_totals) {
        const double diff = t[i] - (*out.control_totals)[i];
        e.delta[i] = sign[i] * diff;
        e.tags.push_back(name + (diff < 0 ? ":below_control" : diff > 0 ? ":above_control" : ":at_control"));
      } else {
        e.delta[i] = sign[i] * t[i];
        e.tags.push_back(name + ":raw_total");
      }
      e.score += w[i] * e.delta[i];
    }
    if (!out.control_totals) e.tags.emplace_back("no_positive_control");
    out.ranking.push_back(std::move(e));
  }
  // Map order is treatment-table order, so the stable sort breaks ties by it.
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const PainEntry& a, const PainEntry& b) { return a.score < b.score; });
  for (std::size_t i = 0; i < out.ranking.size(); ++i) out.ranking[i].rank = static_cast<int>(i + 1);
  return out;
}

Report export_report(const PainAssessment& assessment, std::span<const DriftReport> drift_history) {
  auto indicator_json = [](const std::array<double, 5>& values) {
    ordered_json j;
    for (std::size_t i = 0; i < 5; ++i) j[std::string(state_code(kPainIndicators[i]))] = values[i];
    return j;
  };

  ordered_json doc;
  doc["report_version"] = kReportVersion;
  doc["breed"] = std::string(breed_name(assessment.breed));
  doc["sex"] = std::string(sex_code(assessment.sex));
  doc["has_positive_control"] = assessment.has_positive_control;
  doc["weights"] = {{"walking", assessment.weights.walking},
                    {"eating", assessment.weights.eating},
                    {"grazing", assessment.weights.grazing},
                    {"panting", assessment.weights.panting},
                    {"resting", assessment.weights.resting}};
  doc["control_totals"] = assessment.control_totals ? indicator_json(*assessment.control_totals) : ordered_json(nullptr);
  doc["ranking"] = ordered_json::array();
  for (const auto& e : assessment.ranking) {
    ordered_json j;
    j["rank"] = e.rank;
    j["treatment"] = format_treatment(e.treatment);
    j["score"] = e.score;
    j["totals"] = indicator_json(e.totals);
    j["delta"] = indicator_json(e.delta);
    j["tags"] = e.tags;
    doc["ranking"].push_back(std::move(j));
  }

  std::vector<TreatmentComparison> comparisons;
  doc["profiles"] = ordered_json::array();
  for (const auto state : kAllStates) {
    std::vector<DailyProfile> subset;
    for (const auto& p : assessment.profiles) {
      if (p.state == state) subset.push_back(p);
    }
    if (subset.empty()) continue;
    auto cmp = treatment_comparison(subset);
    ordered_json j;
    j["state"] = std::string(state_code(state));
    j["treatments"] = ordered_json::array();
    for (const auto& t : cmp.treatments) j["treatments"].push_back(format_treatment(t));
    j["totals"] = cmp.totals;
    j["matrix"] = ordered_json::array();
    for (const auto& row : cmp.matrix) {
      ordered_json r = ordered_json::array();
      for (const double v : row) r.push_back(number_or_null(v));
      j["matrix"].push_back(std::move(r));
    }
    doc["profiles"].push_back(std::move(j));
  }

  doc["drift"] = ordered_json::array();
  for (const auto& d : drift_history) doc["drift"].push_back(drift_json(d));

  std::string text = "Pain ranking for " + std::string(breed_name(assessment.breed)) + " " +
                     std::string(sex_code(assessment.sex)) +
                     (assessment.has_positive_control ? " (deficit vs positive control)\n"
                                                      : " (no positive control: raw totals)\n");
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
  };
  text += pad("rank", 4) + pad("treatment", 12) + pad("score", 10);
  for (const auto s : kPainIndicators) text += pad(std::string(state_code(s)), 10);
  text += '\n';
  for (const auto& e : assessment.ranking) {
    text += pad(std::to_string(e.rank), 4) + pad(format_treatment(e.treatment), 12) + pad(io::format_fixed(e.score, 2), 10);
    for (const double v : e.totals) text += pad(io::format_fixed(v, 1), 10);
    text += '\n';
  }
  if (!drift_history.empty()) {
    text += "\nDrift\n";
    for (const auto& d : drift_history) {
      text += format_twin_key(d.key) + " day@" + std::to_string(d.day_start_serial) + " hours=" +
              std::to_string(d.hours_compared) + " mse=" +
              (std::isnan(d.cycle_mse) ? std::string("n/a") : io::format_fixed(d.cycle_mse, 3)) + '\n';
    }
  }
  return {doc.dump(1) + "\n", text};
}

}  // namespace herdtwin
