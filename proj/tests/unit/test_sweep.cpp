#include <cmath>

#include <gtest/gtest.h>

#include "herdtwin/random.hpp"
#include "herdtwin/sweep.hpp"

namespace herdtwin {
namespace {

TEST(BoxStats, LinearQuartiles) {
  const auto b = box_stats({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(b.min, 1.0);
  EXPECT_DOUBLE_EQ(b.q1, 1.75);
  EXPECT_DOUBLE_EQ(b.median, 2.5);
  EXPECT_DOUBLE_EQ(b.q3, 3.25);
  EXPECT_DOUBLE_EQ(b.max, 4.0);
  const auto one = box_stats({7.0});
  EXPECT_DOUBLE_EQ(one.q1, 7.0);
  EXPECT_DOUBLE_EQ(one.median, 7.0);
  EXPECT_THROW(box_stats({}), Error);
}

TEST(BoxStats, OrderedProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.below(30));
    for (auto& x : v) x = rng.normal();
    const auto b = box_stats(v);
    EXPECT_LE(b.min, b.q1);
    EXPECT_LE(b.q1, b.median);
    EXPECT_LE(b.median, b.q3);
    EXPECT_LE(b.q3, b.max);
  }
}

TEST(Grid, Defaults) {
  const auto hidden = default_grid(SweepAxis::Hidden);
  EXPECT_EQ(hidden.values.front(), 4);
  EXPECT_EQ(hidden.values.back(), 256);
  EXPECT_EQ(hidden.base.epochs, 2000);
  EXPECT_EQ(default_grid(SweepAxis::Epochs).values.back(), 2000);
  EXPECT_EQ(default_grid(SweepAxis::Epochs, true).values.back(), 20000);
  EXPECT_EQ(parse_axis(axis_name(SweepAxis::Batch)), SweepAxis::Batch);
  EXPECT_THROW(parse_axis("width"), Error);
}

Dataset small_dataset() {
  HourlySeries s{{Breed::Brahman, Sex::Female, parse_treatment("P")}, StateLabel::Resting, {}, {}};
  for (int i = 0; i < 10 * 24; ++i) s.points.push_back({i + 1, i % 24, 30.0 + 20.0 * std::sin(i * 0.26), 60});
  LstmConfig c;
  return make_dataset(s, 0.8, c);
}

TEST(Sweep, TinyGridIndependentOfJobs) {
  const auto data = small_dataset();
  SweepGrid grid;
  grid.axis = SweepAxis::Hidden;
  grid.values = {2, 3};
  grid.base.num_layers = 1;
  grid.base.batch_size = 4;
  grid.base.epochs = 3;
  grid.repetitions = 2;
  const auto serial = run_sweep(data, grid, 1);
  const auto parallel = run_sweep(data, grid, 3);
  ASSERT_EQ(serial.cells.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(serial.cells[i].config.hidden_units, grid.values[i]);
    EXPECT_EQ(serial.cells[i].test_mse.size(), 2u);
    EXPECT_EQ(serial.cells[i].test_mse, parallel.cells[i].test_mse);
    EXPECT_TRUE(serial.cells[i].test_box.has_value());
    EXPECT_EQ(serial.cells[i].traces[0].size(), 4u);
  }
  EXPECT_EQ(serial.cells[0].rank + serial.cells[1].rank, 3);
  EXPECT_NE(sweep_csv(serial).find("hidden"), std::string::npos);
}

TEST(Sweep, FailingCellsRecorded) {
  const auto data = small_dataset();
  SweepGrid grid;
  grid.axis = SweepAxis::Batch;
  grid.values = {2, 500};
  grid.base.hidden_units = 2;
  grid.base.num_layers = 1;
  grid.base.epochs = 2;
  grid.repetitions = 1;
  const auto r = run_sweep(data, grid, 1);
  EXPECT_TRUE(r.cells[1].test_mse.empty());
  EXPECT_FALSE(r.cells[1].errors.empty());
  EXPECT_EQ(r.cells[1].rank, 0);
  EXPECT_EQ(r.cells[0].rank, 1);
  grid.values.clear();
  EXPECT_THROW(run_sweep(data, grid, 1), Error);
}

}  // namespace
}  // namespace herdtwin
