#include <gtest/gtest.h>

#include "tms/cost.hpp"
#include "tms/io.hpp"

using namespace tms;

namespace {

struct Expected {
  CircuitStyle style;
  Processing processing;
  const char* block;
  double area;   // <0 when not tabulated
  double power;  // <0 when not tabulated; crossbar/amplifier pair power on layer-1 rows
};

// Published values for the 125-symbol system.
const Expected kPublished[] = {
    {CircuitStyle::Analog, Processing::Parallel, "crossbar_layer1", 0.02, 0.000262},
    {CircuitStyle::Analog, Processing::Parallel, "crossbar_layer23", 3.95e-05, -1},
    {CircuitStyle::Analog, Processing::Parallel, "amplifiers_layer1", 3.38e-06, 0.2364},
    {CircuitStyle::Analog, Processing::Parallel, "amplifiers_layer23", 0.00043845, -1},
    {CircuitStyle::Analog, Processing::Serial, "amplifiers_layer1", 9.06e-07, 0.0034},
    {CircuitStyle::Analog, Processing::Serial, "amplifiers_layer23", 9e-05, -1},
    {CircuitStyle::Binary, Processing::Parallel, "crossbar_layer1", 0.02, 0.0036},
    {CircuitStyle::Binary, Processing::Parallel, "crossbar_layer23", 0.0005623, -1},
    {CircuitStyle::Binary, Processing::Parallel, "amplifiers_layer1", 6.77e-06, 1.9},
    {CircuitStyle::Binary, Processing::Parallel, "amplifiers_layer23", 0.002932, -1},
    {CircuitStyle::Binary, Processing::Serial, "amplifiers_layer1", 1.47e-06, 0.1},
    {CircuitStyle::Binary, Processing::Serial, "amplifiers_layer23", 0.000154, -1},
};

}  // namespace

TEST(CostArchTest, WeightCellCount) {
  // (6 + 1) x 14 hidden and (14 + 1) x 125 output weights, two devices each.
  EXPECT_EQ(CostArch{}.hidden_cells(), 3946u);
}

TEST(Cost, ReproducesPublishedValues) {
  const auto t = CostTable::calibrated();
  for (const auto& e : kPublished) {
    const auto r = estimate(CostArch{}, t, e.style, e.processing);
    const std::string ctx = to_string(e.style) + "/" + to_string(e.processing) + "/" + e.block;
    EXPECT_NEAR(r.block(e.block).area, e.area, 1e-9 * e.area) << ctx;
    if (e.power >= 0) {
      const double p = std::string(e.block) == "crossbar_layer1" ? r.crossbar_power() : r.amplifier_power();
      EXPECT_NEAR(p, e.power, 1e-9 * e.power) << ctx;
    }
  }
}

TEST(Cost, HandCountedParallelAnalog) {
  const auto t = CostTable::calibrated();
  const auto r = estimate(CostArch{}, t, CircuitStyle::Analog, Processing::Parallel);
  EXPECT_DOUBLE_EQ(r.block("crossbar_layer1").area, 8 * 0.0025);
  EXPECT_DOUBLE_EQ(r.block("crossbar_layer23").area, 3946 * t.get("analog.cell_area"));
  EXPECT_DOUBLE_EQ(r.block("amplifiers_layer1").area, 6 * t.get("analog.sense_amp_area"));
  // 14 + 125 TIAs, 125 exponential, 1 summation, 125 division stages.
  EXPECT_DOUBLE_EQ(r.block("amplifiers_layer23").area, 390 * t.get("analog.stage_area"));
  EXPECT_DOUBLE_EQ(r.amplifier_power(), 396 * t.get("analog.amp_power"));
}

TEST(Cost, ZeroTableGivesZeroReport) {
  for (const auto& [s, p] : cost_columns()) {
    const auto r = estimate(CostArch{}, CostTable::zero(), s, p);
    EXPECT_EQ(r.total_area, 0.0);
    EXPECT_EQ(r.total_power, 0.0);
  }
}

TEST(Cost, MissingEntryNamesTheBlock) {
  FlatConfig cfg;
  CostTable::calibrated().write_to(cfg);
  FlatConfig partial;
  for (const auto& [k, v] : cfg.values())
    if (k != "cost.analog.stage_area") partial.set(k, v);
  const auto t = CostTable::from_config(partial);
  try {
    estimate(CostArch{}, t, CircuitStyle::Analog, Processing::Parallel);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("amplifiers_layer23"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(estimate(CostArch{}, t, CircuitStyle::Binary, Processing::Parallel));
}

TEST(Cost, TotalsAreBlockSums) {
  for (const auto& [s, p] : cost_columns()) {
    const auto r = estimate(CostArch{}, CostTable::calibrated(), s, p);
    double a = 0.0, w = 0.0;
    for (const auto& b : r.blocks) {
      a += b.area;
      w += b.power;
    }
    EXPECT_DOUBLE_EQ(r.total_area, a);
    EXPECT_DOUBLE_EQ(r.total_power, w);
    EXPECT_NEAR(r.crossbar_power() + r.amplifier_power(), r.total_power, 1e-15);
  }
}

TEST(Cost, MonotoneInOutputsAndLinearInUnitCosts) {
  const auto t = CostTable::calibrated();
  CostArch small, big;
  small.outputs = 26;
  big.outputs = 125;
  for (const auto& [s, p] : cost_columns()) {
    const auto a = estimate(small, t, s, p), b = estimate(big, t, s, p);
    EXPECT_LT(a.total_area, b.total_area);
    EXPECT_LE(a.total_power, b.total_power);
  }
  FlatConfig cfg;
  t.write_to(cfg);
  FlatConfig doubled;
  for (const auto& [k, v] : cfg.values()) doubled.set(k, 2.0 * v);
  const auto t2 = CostTable::from_config(doubled);
  for (const auto& [s, p] : cost_columns()) {
    EXPECT_NEAR(estimate(big, t2, s, p).total_area, 2.0 * estimate(big, t, s, p).total_area, 1e-15);
    EXPECT_NEAR(estimate(big, t2, s, p).total_power, 2.0 * estimate(big, t, s, p).total_power, 1e-12);
  }
}

TEST(Cost, PublishedOrderingsHold) {
  const auto t = CostTable::calibrated();
  const CostArch arch;
  const auto ap = estimate(arch, t, CircuitStyle::Analog, Processing::Parallel);
  const auto as = estimate(arch, t, CircuitStyle::Analog, Processing::Serial);
  const auto bp = estimate(arch, t, CircuitStyle::Binary, Processing::Parallel);
  const auto bs = estimate(arch, t, CircuitStyle::Binary, Processing::Serial);
  EXPECT_TRUE(compare(ap, as).orderings_hold());
  EXPECT_TRUE(compare(bp, bs).orderings_hold());
  EXPECT_TRUE(compare(ap, bp).orderings_hold());
  EXPECT_TRUE(compare(as, bs).orderings_hold());
  EXPECT_LT(as.total_power, ap.total_power);
  EXPECT_LT(ap.amplifier_power(), bp.amplifier_power());
  const auto c = compare(ap, bp);
  EXPECT_NEAR(c.total_power_delta, bp.total_power - ap.total_power, 1e-15);
  EXPECT_EQ(c.deltas.size(), 4u);
}

TEST(Cost, ComparisonFlagsViolatedOrdering) {
  auto t = CostTable::calibrated();
  t.set("analog.mux_power", 1.0);
  const auto ap = estimate(CostArch{}, t, CircuitStyle::Analog, Processing::Parallel);
  const auto as = estimate(CostArch{}, t, CircuitStyle::Analog, Processing::Serial);
  EXPECT_FALSE(compare(ap, as).orderings_hold());
  CostArch other;
  other.outputs = 26;
  EXPECT_THROW(compare(ap, estimate(other, t, CircuitStyle::Analog, Processing::Serial)), DimensionError);
}

TEST(Cost, CsvMatchesGoldenFile) {
  const auto golden = read_text_file(std::string(TMS_DATA_DIR) + "/table3_golden.csv");
  EXPECT_EQ(cost_table_csv(CostArch{}, CostTable::calibrated()), golden);
}

TEST(Cost, ShippedTableFileMatchesCalibration) {
  const auto t = CostTable::from_config(FlatConfig::load(std::string(TMS_DATA_DIR) + "/cost_table.cfg"));
  EXPECT_EQ(t.values(), CostTable::calibrated().values());
}
