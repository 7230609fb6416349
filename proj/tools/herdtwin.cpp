// Command line front end. Every subcommand prints one JSON summary line on
// stdout; errors go to stderr with exit 2 (usage), 3 (data) or 4 (numerical).

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "herdtwin/aggregate.hpp"
#include "herdtwin/filter.hpp"
#include "herdtwin/fit.hpp"
#include "herdtwin/ingest.hpp"
#include "herdtwin/io_util.hpp"
#include "herdtwin/json_io.hpp"
#include "herdtwin/lstm.hpp"
#include "herdtwin/pipeline.hpp"
#include "herdtwin/sweep.hpp"
#include "herdtwin/synth.hpp"
#include "herdtwin/twin.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace herdtwin;

namespace {

struct FirFlags {
  int length = 5;
  double cutoff = 0.4;
  std::string window = "hamming";

  void attach(CLI::App* app) {
    app->add_option("--fir-length", length, "FIR taps (1 disables filtering)");
    app->add_option("--fir-cutoff", cutoff, "Cutoff as a fraction of Nyquist");
    app->add_option("--fir-window", window, "hamming or rectangular");
  }
  FirSettings settings() const { return {length, cutoff, parse_window(window)}; }
};

struct KeyFlags {
  std::string cohort = "Brahman-F-P";
  std::string state = "REST";

  void attach(CLI::App* app) {
    app->add_option("--cohort", cohort, "Cohort as Breed-Sex-Treatment");
    app->add_option("--state", state, "Behavioural state code");
  }
  TwinKey key() const {
    const auto s = parse_state(state);
    if (!s) throw Error(ErrorCode::Usage, "unknown state '" + state + "'");
    return {parse_cohort(cohort), *s};
  }
};

struct LstmFlags {
  std::string config_path;
  std::optional<int> hidden, layers, batch, epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--lstm-config", config_path, "LSTM config JSON");
    app->add_option("--hidden", hidden);
    app->add_option("--layers", layers);
    app->add_option("--batch", batch);
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr);
    app->add_option("--seed", seed);
  }
  LstmConfig config() const {
    LstmConfig c;
    if (!config_path.empty()) lstm_config_from_json(nlohmann::json::parse(io::read_text_file(config_path)), c);
    if (hidden) c.hidden_units = *hidden;
    if (layers) c.num_layers = *layers;
    if (batch) c.batch_size = *batch;
    if (epochs) c.epochs = *epochs;
    if (lr) c.learning_rate = *lr;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

std::string state_slug(StateLabel s) {
  std::string code(state_code(s));
  for (char& c : code) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return code;
}

HourlySeries read_series(const std::string& path, const TwinKey& key) {
  return parse_series_csv(io::read_text_file(path), key.cohort, key.state);
}

HourlySeries prepare(const HourlySeries& series, const FirSettings& fir) {
  auto out = fill_gaps(series);
  if (fir.length > 1) out = apply_filter(design_lowpass(fir.length, fir.cutoff, fir.window), out);
  return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<HourlySeries> load_aggregate_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<HourlySeries> out;
  for (const auto& f : files) {
    const auto stem = f.stem().string();
    const auto cut = stem.rfind('_');
    if (cut == std::string::npos) continue;
    const auto state = parse_state(stem.substr(cut + 1));
    if (!state) continue;
    out.push_back(parse_series_csv(io::read_text_file(f), parse_cohort(stem.substr(0, cut)), *state));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no series CSVs in " + dir.string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"herdtwin: behavioural-state digital twin for cattle"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  json summary;
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic herd");
  std::string spec_path, out_dir = "out";
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", spec_path, "Herd spec JSON")->required();
  synth->add_option("--out", out_dir);
  synth->add_option("--seed", synth_seed);
  synth->callback([&] {
    action = [&] {
      auto spec = parse_herd_spec(io::read_text_file(spec_path));
      if (synth_seed) spec.seed = *synth_seed;
      const auto r = generate(spec, out_dir);
      summary = {{"command", "synth"}, {"csv", r.csv_path.generic_string()}, {"truth", r.truth_path.generic_string()},
                 {"rows", r.rows},     {"animals", r.animals},              {"corrupted_minutes", r.corrupted_minutes}};
    };
  });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a sensor CSV and report the cohort census");
  std::string in_path;
  ingest->add_option("--in", in_path)->required();
  ingest->add_option("--out", out_dir);
  ingest->callback([&] {
    action = [&] {
      LoadOptions options;
      options.rejects_path = fs::path(out_dir) / "rejects.csv";
      const auto ds = load_csv(in_path, canonical_schema(), options);
      const auto census = cohort_census(segment(ds));
      io::write_text_file(fs::path(out_dir) / "census.csv", census_csv(census));
      json rows = json::array();
      for (const auto& c : census) {
        rows.push_back({{"cohort", format_cohort(c.key)}, {"animals", c.animals}, {"records", c.records}});
      }
      summary = {{"command", "ingest"},
                 {"records", ds.records.size()},
                 {"quarantined", ds.quarantined_count},
                 {"animals", ds.animal_registry.size()},
                 {"census", rows}};
    };
  });

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Hourly budgets, cohort averages and daily profiles");
  aggregate->add_option("--in", in_path)->required();
  aggregate->add_option("--out", out_dir);
  aggregate->callback([&] {
    action = [&] {
      LoadOptions options;
      options.rejects_path = fs::path(out_dir) / "rejects.csv";
      const auto ds = load_csv(in_path, canonical_schema(), options);
      std::size_t written = 0;
      for (const auto& [key, cohort] : segment(ds)) {
        std::array<std::vector<HourlySeries>, kStateCount> per_state;
        for (const auto& [animal, records] : cohort.animals) {
          auto budgets = hourly_budgets(records, SeriesContext{key, ds.epoch});
          for (std::size_t s = 0; s < kStateCount; ++s) per_state[s].push_back(std::move(budgets[s]));
        }
        for (const auto state : kAllStates) {
          const auto avg = cohort_average(per_state[state_index(state)]);
          const auto name = cohort_slug(key) + "_" + state_slug(state) + ".csv";
          io::write_text_file(fs::path(out_dir) / "series" / name, series_csv(avg));
          io::write_text_file(fs::path(out_dir) / "profiles" / name, profile_csv(daily_profile(avg)));
          ++written;
        }
      }
      summary = {{"command", "aggregate"}, {"series", written}, {"out", out_dir}};
    };
  });

  // filter
  auto* filter = app.add_subcommand("filter", "Gap-fill and low-pass one series");
  FirFlags fir_flags;
  KeyFlags key_flags;
  filter->add_option("--in", in_path)->required();
  filter->add_option("--out", out_dir);
  fir_flags.attach(filter);
  key_flags.attach(filter);
  filter->callback([&] {
    action = [&] {
      const auto key = key_flags.key();
      const auto fir = fir_flags.settings();
      const auto series = read_series(in_path, key);
      const auto out = prepare(series, fir);
      const auto path = fs::path(out_dir) / (cohort_slug(key.cohort) + "_" + state_slug(key.state) + "_filtered.csv");
      io::write_text_file(path, series_csv(out));
      const auto taps = fir.length > 1 ? design_lowpass(fir.length, fir.cutoff, fir.window).taps : std::vector<double>{1.0};
      summary = {{"command", "filter"}, {"out", path.generic_string()}, {"points", out.points.size()}, {"taps", taps}};
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Curve fits of a 24-hour profile");
  std::string family_name_flag;
  int terms = 0;
  std::uint64_t fit_seed = 7;
  fit->add_option("--in", in_path, "Series CSV; omitted means the reference resting curve");
  fit->add_option("--family", family_name_flag, "gaussian, sine, polynomial or fourier");
  fit->add_option("--terms", terms, "Arity for --family");
  fit->add_option("--seed", fit_seed);
  fit->add_option("--out", out_dir);
  key_flags.attach(fit);
  fir_flags.attach(fit);
  fit->callback([&] {
    action = [&] {
      std::vector<double> x, y;
      if (in_path.empty()) {
        for (int h = 0; h < 24; ++h) {
          x.push_back(h);
          y.push_back(reference_resting_curve(h));
        }
      } else {
        const auto profile = daily_profile(prepare(read_series(in_path, key_flags.key()), fir_flags.settings()));
        for (int h = 0; h < 24; ++h) {
          if (!profile.has_value(h)) continue;
          x.push_back(h);
          y.push_back(profile.values[static_cast<std::size_t>(h)]);
        }
      }
      if (!family_name_flag.empty()) {
        if (terms < 1) throw Error(ErrorCode::Usage, "--terms is required with --family");
        const auto curve = fit_curve(CurveFamily(parse_family(family_name_flag), terms), x, y, fit_seed);
        io::write_text_file(fs::path(out_dir) / "fit.json", fit_json(curve));
        summary = {{"command", "fit"},
                   {"family", curve.family.label()},
                   {"residual_variance", curve.residual_variance},
                   {"sse", curve.sse},
                   {"converged", curve.converged}};
        return;
      }
      const auto selection = model_selection(x, y, default_arity_grid(), fit_seed);
      io::write_text_file(fs::path(out_dir) / "selection.csv", selection_csv(selection));
      json ranked = json::array();
      for (const auto& f : selection.ranked) {
        const auto* best = f.best_curve();
        ranked.push_back({{"family", best ? best->family.label() : std::string(family_name(f.kind))},
                          {"residual_variance", best ? number(best->residual_variance) : json(nullptr)}});
      }
      summary = {{"command", "fit"}, {"ranking", ranked}};
    };
  });

  // train
  auto* trainer = app.add_subcommand("train", "Train the LSTM forecaster on one series");
  LstmFlags lstm_flags;
  double split = 0.9;
  trainer->add_option("--in", in_path)->required();
  trainer->add_option("--out", out_dir);
  trainer->add_option("--split", split);
  lstm_flags.attach(trainer);
  key_flags.attach(trainer);
  fir_flags.attach(trainer);
  trainer->callback([&] {
    action = [&] {
      const auto config = lstm_flags.config();
      const auto data = make_dataset(prepare(read_series(in_path, key_flags.key()), fir_flags.settings()), split, config);
      auto model = LstmModel::initialized(config);
      const auto trace = train(model, data.train, data.test);
      save_checkpoint(model, fs::path(out_dir) / "model.json");
      std::string text = "epoch,train_mse_scaled\n";
      for (std::size_t e = 0; e < trace.train_mse.size(); ++e) {
        text += std::to_string(e) + ',' + io::format_double(trace.train_mse[e]) + '\n';
      }
      io::write_text_file(fs::path(out_dir) / "trace.csv", text);
      summary = {{"command", "train"},
                 {"model", (fs::path(out_dir) / "model.json").generic_string()},
                 {"train_windows", data.train.size()},
                 {"test_windows", data.test.size()},
                 {"loss_train_scaled", trace.final_train_mse},
                 {"loss_test_minutes2", number(trace.test_mse)},
                 {"seconds", trace.wall_seconds}};
    };
  });

  // predict
  auto* predict = app.add_subcommand("predict", "Next 24-hour cycle from a checkpoint");
  std::string model_path;
  int start_hour = 0;
  predict->add_option("--model", model_path)->required();
  predict->add_option("--start-hour", start_hour)->check(CLI::Range(0, 23));
  predict->callback([&] {
    action = [&] {
      const auto cycle = predict_cycle(load_checkpoint(model_path), start_hour);
      summary = {{"command", "predict"}, {"start_hour", start_hour}, {"minutes", cycle}};
    };
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Hyperparameter sweep along one axis");
  std::string axis = "hidden";
  int reps = 5;
  bool full_sweep = false;
  sweep->add_option("--in", in_path)->required();
  sweep->add_option("--out", out_dir);
  sweep->add_option("--axis", axis, "hidden, layers, batch or epochs");
  sweep->add_option("--reps", reps);
  sweep->add_flag("--full-sweep", full_sweep, "Extend the epochs axis to 20000");
  sweep->add_option("--split", split);
  key_flags.attach(sweep);
  fir_flags.attach(sweep);
  sweep->callback([&] {
    action = [&] {
      auto grid = default_grid(parse_axis(axis), full_sweep);
      grid.repetitions = reps;
      const auto data = make_dataset(prepare(read_series(in_path, key_flags.key()), fir_flags.settings()), split, grid.base);
      const auto result = run_sweep(data, grid, jobs);
      io::write_text_file(fs::path(out_dir) / "sweep.csv", sweep_csv(result));
      json cells = json::array();
      for (const auto& cell : result.cells) {
        io::write_text_file(fs::path(out_dir) / ("trace_" + axis + "_" + std::to_string(cell.value) + ".csv"),
                            trace_csv(cell));
        cells.push_back({{"value", cell.value},
                         {"rank", cell.rank},
                         {"median_test_mse", cell.test_box ? number(cell.test_box->median) : json(nullptr)},
                         {"failed", cell.errors.size()}});
      }
      summary = {{"command", "sweep"}, {"axis", axis}, {"cells", cells}};
    };
  });

  // twin
  auto* twin = app.add_subcommand("twin", "Digital twin registry operations");
  twin->require_subcommand(1);
  std::string registry_dir = "registry";
  twin->add_option("--registry", registry_dir);
  auto* twin_init = twin->add_subcommand("init", "Register a trained model with its history");
  std::string series_path;
  twin_init->add_option("--model", model_path)->required();
  twin_init->add_option("--series", series_path)->required();
  key_flags.attach(twin_init);
  fir_flags.attach(twin_init);
  twin_init->callback([&] {
    action = [&] {
      const auto key = key_flags.key();
      auto registry = TwinRegistry::open(registry_dir);
      const auto model = load_checkpoint(model_path);
      const auto history = read_series(series_path, key);
      registry.register_model(model, history, fir_flags.settings());
      registry.save();
      summary = {{"command", "twin init"}, {"key", format_twin_key(key)}, {"entries", registry.entries().size()}};
    };
  });
  auto* twin_update = twin->add_subcommand("update", "Compare one new day, refit, predict the next");
  std::string day_path;
  UpdateOptions update_options;
  twin_update->add_option("--day", day_path)->required();
  twin_update->add_option("--fine-tune-epochs", update_options.fine_tune_epochs);
  twin_update->add_flag("--full-retrain", update_options.full_retrain);
  key_flags.attach(twin_update);
  twin_update->callback([&] {
    action = [&] {
      const auto key = key_flags.key();
      auto registry = TwinRegistry::open(registry_dir);
      const auto r = update_twin(registry, key, read_series(day_path, key), update_options);
      summary = {{"command", "twin update"},
                 {"key", format_twin_key(key)},
                 {"status", r.status == UpdateStatus::Compared ? "compared" : "no_prior_prediction"},
                 {"cycle_mse", r.report ? number(r.report->cycle_mse) : json(nullptr)},
                 {"next_prediction", r.next_prediction}};
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Pain ranking and profile matrices");
  std::string breed = "Brahman", sex = "F";
  PainWeights weights;
  report->add_option("--in", in_path, "Directory of cohort series CSVs from aggregate")->required();
  report->add_option("--out", out_dir);
  report->add_option("--breed", breed);
  report->add_option("--sex", sex);
  report->add_option("--registry", registry_dir, "Include drift history from this registry");
  report->add_option("--w-walking", weights.walking);
  report->add_option("--w-eating", weights.eating);
  report->add_option("--w-grazing", weights.grazing);
  report->add_option("--w-panting", weights.panting);
  report->add_option("--w-resting", weights.resting);
  report->callback([&] {
    action = [&] {
      const auto b = parse_breed(breed);
      const auto s = parse_sex(sex);
      if (!b || !s) throw Error(ErrorCode::Usage, "unknown breed or sex");
      std::vector<DailyProfile> profiles;
      for (const auto& series : load_aggregate_dir(in_path)) {
        if (series.cohort.breed == *b && series.cohort.sex == *s) profiles.push_back(daily_profile(series));
      }
      std::vector<DriftReport> drift;
      if (report->count("--registry") > 0) {
        for (const auto& [key, entry] : TwinRegistry::open(registry_dir).entries()) {
          drift.insert(drift.end(), entry.drift_history.begin(), entry.drift_history.end());
        }
      }
      const auto assessment = assess_pain(profiles, weights);
      const auto doc = export_report(assessment, drift);
      io::write_text_file(fs::path(out_dir) / "report.json", doc.json);
      io::write_text_file(fs::path(out_dir) / "report.txt", doc.text);
      std::cerr << doc.text;
      json ranking = json::array();
      for (const auto& e : assessment.ranking) ranking.push_back(format_treatment(e.treatment));
      summary = {{"command", "report"}, {"ranking", ranking}, {"has_positive_control", assessment.has_positive_control}};
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  std::string config_path;
  std::optional<std::string> pipeline_out;
  std::optional<std::uint64_t> pipeline_seed;
  std::optional<int> pipeline_epochs, holdout;
  FirFlags pipeline_fir;
  pipeline->add_option("--config", config_path, "Pipeline config JSON");
  pipeline->add_option("--out", pipeline_out);
  pipeline->add_option("--seed", pipeline_seed);
  pipeline->add_option("--epochs", pipeline_epochs);
  pipeline->add_option("--holdout-days", holdout);
  pipeline_fir.attach(pipeline);
  pipeline->callback([&] {
    action = [&] {
      auto config = default_pipeline_config();
      if (!config_path.empty()) apply_pipeline_json(io::read_text_file(config_path), config);
      if (pipeline_out) config.out_dir = *pipeline_out;
      if (pipeline_seed) config.seed = *pipeline_seed;
      if (pipeline_epochs) config.lstm.epochs = *pipeline_epochs;
      if (holdout) config.holdout_days = *holdout;
      if (pipeline->count("--fir-length") > 0) config.fir.length = pipeline_fir.length;
      if (pipeline->count("--fir-cutoff") > 0) config.fir.cutoff = pipeline_fir.cutoff;
      if (pipeline->count("--fir-window") > 0) config.fir.window = parse_window(pipeline_fir.window);
      if (app.count("--jobs") > 0) config.jobs = jobs;
      const auto r = run_pipeline(config);
      json drift = json::array();
      for (const double m : r.drift_mse) drift.push_back(number(m));
      summary = {{"command", "pipeline"},
                 {"out", config.out_dir.generic_string()},
                 {"manifest_sha256", r.manifest_digest},
                 {"artifacts", r.artifacts.size()},
                 {"records", r.records},
                 {"cohorts", r.cohorts},
                 {"best_family", r.best_family},
                 {"test_mse_minutes2", number(r.test_mse)},
                 {"prediction_rms_vs_template",
                  r.prediction_rms_vs_template ? number(*r.prediction_rms_vs_template) : json(nullptr)},
                 {"drift_mse", drift},
                 {"least_pain", r.least_pain},
                 {"most_pain", r.most_pain}};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.category()) {
      case ErrorCategory::Usage: return 2;
      case ErrorCategory::Numerical: return 4;
      case ErrorCategory::Data: return 3;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  std::cout << summary.dump() << std::endl;
  return 0;
}
