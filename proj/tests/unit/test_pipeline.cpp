#include <cstdlib>

#include <gtest/gtest.h>

#include <json.hpp>

#include "herdtwin/io_util.hpp"
#include "herdtwin/pipeline.hpp"
#include "test_util.hpp"

namespace herdtwin {
namespace {

PipelineConfig fast_config(const std::filesystem::path& out) {
  auto c = default_pipeline_config();
  c.out_dir = out;
  c.herd.days = 10;
  c.fit_grid = {{FamilyKind::GaussianSum, {2}}, {FamilyKind::Polynomial, {3}}};
  c.fit_options.restarts = 1;
  c.lstm.hidden_units = 4;
  c.lstm.num_layers = 1;
  c.lstm.batch_size = 2;
  c.lstm.epochs = 3;
  c.holdout_days = 2;
  c.update.fine_tune_epochs = 2;
  return c;
}

TEST(PipelineConfig, JsonRoundTrip) {
  auto c = default_pipeline_config();
  apply_pipeline_json(R"({"seed": 11, "lstm": {"hidden_units": 8}, "twin": {"holdout_days": 4}})", c);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.lstm.hidden_units, 8);
  EXPECT_EQ(c.holdout_days, 4);
  auto again = default_pipeline_config();
  apply_pipeline_json(pipeline_config_json(c), again);
  EXPECT_EQ(pipeline_config_json(again), pipeline_config_json(c));
}

TEST(PipelineConfig, UnknownKeysAndBadValues) {
  auto c = default_pipeline_config();
  for (const char* doc : {R"({"sed": 1})", R"({"lstm": {"hiden": 2}})", R"({"split": 1.5})"}) {
    try {
      apply_pipeline_json(doc, c);
      c.validate();
      FAIL() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig) << doc;
    }
    c = default_pipeline_config();
  }
}

TEST(PipelineConfig, SeedFromEnvironment) {
  ::setenv("HERDTWIN_SEED", "123", 1);
  const auto c = default_pipeline_config();
  ::unsetenv("HERDTWIN_SEED");
  EXPECT_EQ(c.seed, 123u);
  EXPECT_EQ(default_pipeline_config().seed, 7u);
}

TEST(Pipeline, SmallRunIsReproducible) {
  test::TempDir a, b;
  const auto ra = run_pipeline(fast_config(a.path()));
  const auto rb = run_pipeline(fast_config(b.path()));
  EXPECT_GE(ra.artifacts.size(), 8u);
  EXPECT_EQ(ra.manifest_digest, rb.manifest_digest);
  EXPECT_EQ(ra.stages_completed.size(), 8u);
  EXPECT_EQ(ra.drift_mse.size(), 2u);
  EXPECT_FALSE(ra.least_pain.empty());
  EXPECT_TRUE(ra.prediction_rms_vs_template.has_value());
  ASSERT_EQ(ra.artifacts.size(), rb.artifacts.size());
  for (std::size_t i = 0; i < ra.artifacts.size(); ++i) {
    EXPECT_EQ(ra.artifacts[i].path, rb.artifacts[i].path);
    EXPECT_EQ(ra.artifacts[i].sha256, rb.artifacts[i].sha256) << ra.artifacts[i].path;
  }
  const auto manifest = nlohmann::json::parse(io::read_text_file(a / "manifest.json"));
  EXPECT_EQ(manifest["stages"].size(), 8u);
  EXPECT_TRUE(std::filesystem::exists(a / "report" / "report.json"));
}

TEST(Pipeline, FailedStageRecordedInManifest) {
  test::TempDir a;
  auto c = fast_config(a.path());
  c.lstm.batch_size = 500;
  try {
    run_pipeline(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  const auto manifest = nlohmann::json::parse(io::read_text_file(a / "manifest.json"));
  EXPECT_EQ(manifest["failed_stage"], "train");
}

}  // namespace
}  // namespace herdtwin
