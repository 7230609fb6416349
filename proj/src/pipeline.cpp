#include "herdtwin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include <json.hpp>

#include "herdtwin/aggregate.hpp"
#include "herdtwin/filter.hpp"
#include "herdtwin/ingest.hpp"
#include "herdtwin/io_util.hpp"
#include "herdtwin/json_io.hpp"

namespace herdtwin {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

HerdSpec desk_herd() {
  HerdSpec spec;
  const Procedure d = Procedure::Dehorning;
  spec.roster = {
      {{Breed::Brahman, Sex::Female, CombinedTreatment(d, Relief::TopicalAnaesthetic)}, 3},
      {{Breed::Brahman, Sex::Female, CombinedTreatment(d, Relief::Meloxicam)}, 3},
      {{Breed::Brahman, Sex::Female, CombinedTreatment(d, Relief::TopicalPlusMeloxicam)}, 3},
      {{Breed::Brahman, Sex::Female, CombinedTreatment(d, Relief::NegativeControl)}, 3},
      {{Breed::Brahman, Sex::Female, CombinedTreatment(Procedure::None, Relief::PositiveControl)}, 14},
  };
  spec.effects = default_treatment_effects();
  return spec;
}

PipelineConfig default_pipeline_config() {
  PipelineConfig config;
  config.herd = desk_herd();
  if (const char* env = std::getenv("HERDTWIN_SEED")) {
    long long v = 0;
    if (io::parse_int(env, v) && v >= 0) config.seed = static_cast<std::uint64_t>(v);
  }
  return config;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (jobs < 1) fail("jobs must be at least 1");
  if (!(split > 0.0 && split < 1.0)) fail("split must lie in (0, 1)");
  if (holdout_days < 1) fail("holdout_days must be at least 1");
  if (update.fine_tune_epochs < 0) fail("fine_tune_epochs must be non-negative");
  if (fir.length < 1) fail("fir length must be at least 1");
  if (!(fir.cutoff > 0.0 && fir.cutoff < 1.0)) fail("fir cutoff must lie in (0, 1)");
  if (fit_grid.empty()) fail("fit grid is empty");
  lstm.validate();
  try {
    herd.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

namespace {

ordered_json grid_json(const ArityGrid& grid) {
  ordered_json j = ordered_json::object();
  for (const auto& [kind, arities] : grid) j[std::string(family_name(kind))] = arities;
  return j;
}

ordered_json config_document(const PipelineConfig& c, bool with_out) {
  ordered_json j;
  if (with_out) j["out"] = c.out_dir.generic_string();
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  auto herd = ordered_json::parse(herd_spec_json(c.herd));
  if (!c.herd_seed_set) herd.erase("seed");
  j["herd"] = std::move(herd);
  j["fir"] = {{"length", c.fir.length}, {"cutoff", c.fir.cutoff}, {"window", std::string(window_name(c.fir.window))}};
  j["fit"] = {{"restarts", c.fit_options.restarts},
              {"jitter", c.fit_options.jitter},
              {"max_iterations", c.fit_options.max_iterations},
              {"grid", grid_json(c.fit_grid)}};
  auto lstm = lstm_config_to_json(c.lstm);
  if (!c.lstm_seed_set) lstm.erase("seed");
  j["lstm"] = std::move(lstm);
  j["split"] = c.split;
  j["focus"] = {{"cohort", format_cohort(c.focus_cohort)}, {"state", std::string(state_code(c.focus_state))}};
  j["twin"] = {{"holdout_days", c.holdout_days},
               {"fine_tune_epochs", c.update.fine_tune_epochs},
               {"full_retrain", c.update.full_retrain}};
  j["pain"] = {{"breed", std::string(breed_name(c.pain_breed))},
               {"sex", std::string(sex_code(c.pain_sex))},
               {"weights",
                {{"walking", c.pain_weights.walking},
                 {"eating", c.pain_weights.eating},
                 {"grazing", c.pain_weights.grazing},
                 {"panting", c.pain_weights.panting},
                 {"resting", c.pain_weights.resting}}}};
  return j;
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& config) { return config_document(config, true).dump(2) + "\n"; }

void apply_pipeline_json(std::string_view json_text, PipelineConfig& c) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("pipeline config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "pipeline config must be a JSON object");
  require_known_keys(doc, {"out", "seed", "jobs", "herd", "fir", "fit", "lstm", "split", "focus", "twin", "pain"},
                     "pipeline config");
  try {
    if (doc.contains("out")) c.out_dir = doc.at("out").get<std::string>();
    c.seed = doc.value("seed", c.seed);
    c.jobs = doc.value("jobs", c.jobs);
    c.split = doc.value("split", c.split);
    if (doc.contains("herd")) {
      const auto& h = doc.at("herd");
      auto merged = nlohmann::json::parse(herd_spec_json(c.herd));
      if (h.contains("roster_preset") || h.contains("roster")) merged.erase("roster");
      merged.update(h);
      try {
        c.herd = parse_herd_spec(merged.dump());
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
      }
      if (h.contains("seed")) c.herd_seed_set = true;
    }
    if (doc.contains("fir")) {
      const auto& f = doc.at("fir");
      require_known_keys(f, {"length", "cutoff", "window"}, "fir config");
      c.fir.length = f.value("length", c.fir.length);
      c.fir.cutoff = f.value("cutoff", c.fir.cutoff);
      if (f.contains("window")) c.fir.window = parse_window(f.at("window").get<std::string>());
    }
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      require_known_keys(f, {"restarts", "jitter", "max_iterations", "grid"}, "fit config");
      c.fit_options.restarts = f.value("restarts", c.fit_options.restarts);
      c.fit_options.jitter = f.value("jitter", c.fit_options.jitter);
      c.fit_options.max_iterations = f.value("max_iterations", c.fit_options.max_iterations);
      if (f.contains("grid")) {
        c.fit_grid.clear();
        for (const auto& [name, arities] : f.at("grid").items()) {
          c.fit_grid[parse_family(name)] = arities.get<std::vector<int>>();
        }
      }
    }
    if (doc.contains("lstm")) {
      lstm_config_from_json(doc.at("lstm"), c.lstm);
      if (doc.at("lstm").contains("seed")) c.lstm_seed_set = true;
    }
    if (doc.contains("focus")) {
      const auto& f = doc.at("focus");
      require_known_keys(f, {"cohort", "state"}, "focus config");
      if (f.contains("cohort")) c.focus_cohort = parse_cohort(f.at("cohort").get<std::string>());
      if (f.contains("state")) {
        const auto s = parse_state(f.at("state").get<std::string>());
        if (!s) throw Error(ErrorCode::InvalidConfig, "unknown focus state");
        c.focus_state = *s;
      }
    }
    if (doc.contains("twin")) {
      const auto& t = doc.at("twin");
      require_known_keys(t, {"holdout_days", "fine_tune_epochs", "full_retrain"}, "twin config");
      c.holdout_days = t.value("holdout_days", c.holdout_days);
      c.update.fine_tune_epochs = t.value("fine_tune_epochs", c.update.fine_tune_epochs);
      c.update.full_retrain = t.value("full_retrain", c.update.full_retrain);
    }
    if (doc.contains("pain")) {
      const auto& p = doc.at("pain");
      require_known_keys(p, {"breed", "sex", "weights"}, "pain config");
      if (p.contains("breed")) {
        const auto b = parse_breed(p.at("breed").get<std::string>());
        if (!b) throw Error(ErrorCode::InvalidConfig, "unknown pain breed");
        c.pain_breed = *b;
      }
      if (p.contains("sex")) {
        const auto s = parse_sex(p.at("sex").get<std::string>());
        if (!s) throw Error(ErrorCode::InvalidConfig, "unknown pain sex");
        c.pain_sex = *s;
      }
      if (p.contains("weights")) {
        const auto& w = p.at("weights");
        require_known_keys(w, {"walking", "eating", "grazing", "panting", "resting"}, "pain weights");
        c.pain_weights.walking = w.value("walking", c.pain_weights.walking);
        c.pain_weights.eating = w.value("eating", c.pain_weights.eating);
        c.pain_weights.grazing = w.value("grazing", c.pain_weights.grazing);
        c.pain_weights.panting = w.value("panting", c.pain_weights.panting);
        c.pain_weights.resting = w.value("resting", c.pain_weights.resting);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("pipeline config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

// ---------------------------------------------------------------------------
// Run

namespace {

class ArtifactLog {
 public:
  explicit ArtifactLog(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  void write(const std::string& rel, std::string_view contents) {
    io::write_text_file(root_ / rel, contents);
    paths_.insert(rel);
  }
  void add(const fs::path& absolute) { paths_.insert(fs::relative(absolute, root_).generic_string()); }
  void add_tree(const std::string& rel) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root_ / rel)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    for (const auto& f : files) add(f);
  }

  std::vector<Artifact> artifacts() const {
    std::vector<Artifact> out;
    for (const auto& rel : paths_) {
      const auto p = root_ / rel;
      out.push_back({rel, io::sha256_file(p), fs::file_size(p)});
    }
    return out;
  }

 private:
  fs::path root_;
  std::set<std::string> paths_;
};

std::string state_slug(StateLabel s) {
  std::string code(state_code(s));
  std::transform(code.begin(), code.end(), code.begin(), [](unsigned char c) { return std::tolower(c); });
  return code;
}

std::int64_t day_start(const HourPoint& p) { return p.hour_serial - p.hour_of_day; }

HourlySeries slice(const HourlySeries& s, std::int64_t from, std::int64_t to) {
  HourlySeries out{s.cohort, s.state, s.origin, {}};
  for (const auto& p : s.points) {
    if (p.hour_serial >= from && p.hour_serial < to) out.points.push_back(p);
  }
  return out;
}

std::string write_manifest(ArtifactLog& log, const PipelineConfig& config, const std::vector<std::string>& stages,
                           const std::string& failed_stage, const std::string& error, PipelineResult& result) {
  result.artifacts = log.artifacts();
  ordered_json doc;
  doc["manifest_version"] = 1;
  doc["config"] = config_document(config, false);
  doc["stages"] = stages;
  if (!failed_stage.empty()) {
    doc["failed_stage"] = failed_stage;
    doc["error"] = error;
  }
  doc["artifacts"] = ordered_json::array();
  for (const auto& a : result.artifacts) {
    doc["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  const std::string text = doc.dump(2) + "\n";
  io::write_text_file(log.root() / "manifest.json", text);
  return io::sha256_hex(text);
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& input) {
  PipelineConfig config = input;
  config.validate();
  if (!config.herd_seed_set) config.herd.seed = config.seed;
  if (!config.lstm_seed_set) config.lstm.seed = config.seed;

  fs::create_directories(config.out_dir);
  ArtifactLog log(config.out_dir);
  PipelineResult result;
  std::string stage;

  auto finish = [&](const std::string& failed, const std::string& error) {
    result.manifest_digest = write_manifest(log, config, result.stages_completed, failed, error, result);
  };

  try {
    stage = "synth";
    log.write("data/spec.json", herd_spec_json(config.herd));
    const auto synth = generate(config.herd, config.out_dir / "data", "herd");
    log.add(synth.csv_path);
    log.add(synth.truth_path);
    result.stages_completed.push_back(stage);

    stage = "ingest";
    LoadOptions load_options;
    load_options.rejects_path = config.out_dir / "data" / "herd.rejects.csv";
    const auto dataset = load_csv(synth.csv_path, canonical_schema(), load_options);
    if (fs::exists(load_options.rejects_path)) log.add(load_options.rejects_path);
    const auto cohorts = segment(dataset);
    log.write("ingest/census.csv", census_csv(cohort_census(cohorts)));
    result.records = dataset.records.size();
    result.cohorts = cohorts.size();
    result.stages_completed.push_back(stage);

    stage = "aggregate";
    std::map<TwinKey, HourlySeries> averages;
    std::vector<DailyProfile> pain_profiles;
    for (const auto& [key, cohort] : cohorts) {
      const SeriesContext context{key, dataset.epoch};
      std::array<std::vector<HourlySeries>, kStateCount> per_state;
      for (const auto& [animal, records] : cohort.animals) {
        auto budgets = hourly_budgets(records, context);
        for (std::size_t s = 0; s < kStateCount; ++s) per_state[s].push_back(std::move(budgets[s]));
      }
      for (const auto state : kAllStates) {
        auto avg = cohort_average(per_state[state_index(state)]);
        const auto name = cohort_slug(key) + "_" + state_slug(state);
        log.write("aggregate/series/" + name + ".csv", series_csv(avg));
        const auto profile = daily_profile(avg);
        log.write("aggregate/profiles/" + name + ".csv", profile_csv(profile));
        if (key.breed == config.pain_breed && key.sex == config.pain_sex) pain_profiles.push_back(profile);
        averages.emplace(TwinKey{key, state}, std::move(avg));
      }
    }
    for (const auto state : kAllStates) {
      std::vector<DailyProfile> subset;
      for (const auto& p : pain_profiles) {
        if (p.state == state) subset.push_back(p);
      }
      if (subset.empty()) continue;
      log.write("aggregate/comparison_" + state_slug(state) + ".csv", comparison_csv(treatment_comparison(subset)));
    }
    result.stages_completed.push_back(stage);

    stage = "filter";
    const TwinKey focus{config.focus_cohort, config.focus_state};
    const auto found = averages.find(focus);
    if (found == averages.end()) throw Error(ErrorCode::UnknownKey, "focus " + format_twin_key(focus) + " has no data");
    const auto& raw = found->second;
    std::vector<std::int64_t> days;
    for (const auto& p : raw.points) {
      if (days.empty() || days.back() != day_start(p)) days.push_back(day_start(p));
    }
    if (days.size() < static_cast<std::size_t>(config.holdout_days) + 3) {
      throw Error(ErrorCode::SeriesTooShort, "focus series has too few days for the holdout");
    }
    const auto cut = days[days.size() - static_cast<std::size_t>(config.holdout_days)];
    const auto history = slice(raw, raw.points.front().hour_serial, cut);
    auto prepared = fill_gaps(history);
    if (config.fir.length > 1) {
      prepared = apply_filter(design_lowpass(config.fir.length, config.fir.cutoff, config.fir.window), prepared);
    }
    const auto focus_name = cohort_slug(focus.cohort) + "_" + state_slug(focus.state);
    log.write("filter/" + focus_name + ".csv", series_csv(prepared));
    result.stages_completed.push_back(stage);

    stage = "fit";
    const auto profile = daily_profile(prepared);
    std::vector<double> x, y;
    for (int h = 0; h < 24; ++h) {
      if (!profile.has_value(h)) continue;
      x.push_back(h);
      y.push_back(profile.values[static_cast<std::size_t>(h)]);
    }
    const auto selection = model_selection(x, y, config.fit_grid, config.seed, config.fit_options);
    log.write("fit/selection.csv", selection_csv(selection));
    if (const auto* best = selection.ranked.front().best_curve()) {
      result.best_family = best->family.label();
      log.write("fit/best.json", fit_json(*best));
    }
    result.stages_completed.push_back(stage);

    stage = "train";
    const auto data = make_dataset(prepared, config.split, config.lstm);
    auto model = LstmModel::initialized(config.lstm);
    const auto trace = train(model, data.train, data.test);
    result.test_mse = trace.test_mse;
    save_checkpoint(model, config.out_dir / "train" / "model.json");
    log.add(config.out_dir / "train" / "model.json");
    std::string trace_text = "epoch,train_mse_scaled\n";
    for (std::size_t e = 0; e < trace.train_mse.size(); ++e) {
      trace_text += std::to_string(e) + ',' + io::format_double(trace.train_mse[e]) + '\n';
    }
    log.write("train/trace.csv", trace_text);
    ordered_json metrics;
    metrics["train_windows"] = data.train.size();
    metrics["test_windows"] = data.test.size();
    metrics["final_train_mse_scaled"] = trace.final_train_mse;
    metrics["test_mse_minutes2"] = std::isfinite(trace.test_mse) ? ordered_json(trace.test_mse) : ordered_json(nullptr);
    log.write("train/metrics.json", metrics.dump(2) + "\n");
    result.stages_completed.push_back(stage);

    stage = "twin";
    fs::remove_all(config.out_dir / "twin");
    auto registry = TwinRegistry::open(config.out_dir / "twin");
    registry.register_model(model, history, config.fir);
    auto& entry = registry.entry(focus);
    entry.next_prediction = predict_cycle(model, 0);
    entry.next_prediction_serial = cut;
    registry.save();
    const auto first_prediction = *entry.next_prediction;
    std::string prediction_text = "hour_of_day,predicted_minutes\n";
    for (std::size_t h = 0; h < 24; ++h) {
      prediction_text += std::to_string(h) + ',' + io::format_double(first_prediction[h]) + '\n';
    }
    log.write("twin_prediction.csv", prediction_text);
    if (config.herd.noise_sigma == 0.0 && config.herd.corruption_rate == 0.0) {
      double ss = 0.0;
      for (int h = 0; h < 24; ++h) {
        const double truth = expected_minutes(config.herd, focus.cohort.treatment, h)[state_index(focus.state)];
        const double d = first_prediction[static_cast<std::size_t>(h)] - truth;
        ss += d * d;
      }
      result.prediction_rms_vs_template = std::sqrt(ss / 24.0);
    }
    for (std::size_t i = days.size() - static_cast<std::size_t>(config.holdout_days); i < days.size(); ++i) {
      const auto update = update_twin(registry, focus, slice(raw, days[i], days[i] + 24), config.update);
      if (update.report) result.drift_mse.push_back(update.report->cycle_mse);
    }
    log.add_tree("twin");
    result.stages_completed.push_back(stage);

    stage = "report";
    const auto assessment = assess_pain(pain_profiles, config.pain_weights);
    const auto report = export_report(assessment, registry.entry(focus).drift_history);
    log.write("report/report.json", report.json);
    log.write("report/report.txt", report.text);
    if (!assessment.ranking.empty()) {
      result.least_pain = format_treatment(assessment.ranking.front().treatment);
      result.most_pain = format_treatment(assessment.ranking.back().treatment);
    }
    result.stages_completed.push_back(stage);
  } catch (const std::exception& e) {
    finish(stage, e.what());
    throw;
  }
  finish("", "");
  return result;
}

}  // namespace herdtwin
