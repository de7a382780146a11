#include <gtest/gtest.h>

#include <random>

#include "tms/pipeline.hpp"

using namespace tms;

namespace {

double cell_g(double f, double w) {
  const double g_s = 1.5e-6 * f + 1e-6;
  const double g_m = 1e-5 + w * (1e-3 - 1e-5);
  return 1.0 / (1.0 / g_s + 1.0 / g_m + 1.0 / 1e-2);
}

TrainConfig quick(double sigma2, std::uint64_t seed, Mode mode = Mode::Analog) {
  TrainConfig t;
  t.sigma2 = sigma2;
  t.seed = seed;
  t.mode = mode;
  return t;
}

struct Trained {
  TrainedNetwork tn;
  std::vector<DatasetItem> test;
};

Trained train_groups(const GroupSet& gs, double sigma2, std::uint64_t seed, Mode mode = Mode::Analog) {
  const auto data = build_dataset(gs, 5, seed);
  auto [train_set, test_set] = split_holdout(data);
  return {train(train_set, gs, quick(sigma2, seed, mode)), test_set};
}

}  // namespace

TEST(SensorLayer, EqualSpacingStates) {
  DeviceConfig d;
  const auto s = equal_spacing_states(d);
  EXPECT_TRUE((s.col(0).array() == 1.0).all());
  EXPECT_NEAR(s(0, 1), 0.0192982306398887, 1e-12);
  EXPECT_NEAR(cell_g(20.0, s(2, 1)), 0.5 * cell_g(20.0, 1.0), 1e-18);
}

TEST(SensorLayer, IdealReadoutOfLetterA) {
  DeviceConfig d;
  const auto s = equal_spacing_states(d);
  const double w2 = s(0, 1);
  const auto r = sensor_layer_forward(symbol_to_forces(encode("A", Group::Group1), 20.0), s, d);
  EXPECT_NEAR(r(0), 0.5 * (cell_g(20, 1) + 3 * cell_g(0, 1)), 1e-18);
  EXPECT_NEAR(r(1), 0.5 * 4 * cell_g(0, w2), 1e-18);
  EXPECT_NEAR(r(2), 0.5 * (cell_g(20, 1) + cell_g(0, w2)), 1e-18);
  for (int k = 3; k < 6; ++k) EXPECT_NEAR(r(k), 0.5 * (cell_g(0, 1) + cell_g(0, w2)), 1e-18);
  const auto lbf = readout_to_lbf(r, d);
  EXPECT_NEAR(lbf(0), r(0) / (0.5 * 1.5e-6), 1e-12);
}

TEST(SensorLayer, NodalWithoutParasiticsMatchesIdeal) {
  DeviceConfig d;
  const auto s = equal_spacing_states(d);
  for (const auto& sym : symbol_table()) {
    const auto f = symbol_to_forces(sym, 20.0);
    const auto a = sensor_layer_forward(f, s, d, Fidelity::Ideal);
    const auto b = sensor_layer_forward(f, s, d, Fidelity::Nodal);
    EXPECT_LT(((a - b).array() / a.array()).abs().maxCoeff(), 1e-9) << sym.label;
  }
}

TEST(Noise, ZeroVarianceIsIdentityAndStatisticsMatch) {
  std::mt19937_64 rng(3);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
  EXPECT_EQ(add_noise(x, 0.0, rng), x);
  EXPECT_THROW(add_noise(x, -1.0, rng), DomainError);

  const double sigma2 = 0.5;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = add_noise(Eigen::VectorXd::Zero(1), sigma2, rng)(0);
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(sigma2 / n));
  // Sample variance has sd sigma2 * sqrt(2/n).
  EXPECT_LT(std::abs(var - sigma2), 4.0 * sigma2 * std::sqrt(2.0 / n));
}

TEST(Noise, SeededSpecIsReproducible) {
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(6);
  EXPECT_EQ(add_noise(x, NoiseSpec{0.1, 9}), add_noise(x, NoiseSpec{0.1, 9}));
  EXPECT_NE(add_noise(x, NoiseSpec{0.1, 9}), add_noise(x, NoiseSpec{0.1, 10}));
}

TEST(Training, MemorizesASingleSymbol) {
  const GroupSet gs{Group::Group2};
  std::vector<DatasetItem> one{{symbol_to_forces(encode("q", Group::Group2), 20.0), symbol_index("q", Group::Group2), 0}};
  auto cfg = quick(0.0, 4);
  cfg.epochs = 50;
  const auto tn = train(one, gs, cfg);
  const auto p = forward(map_network(tn), one[0].forces, NoiseSpec{0.0, 0}, Mode::Analog);
  EXPECT_EQ(p.info().label, "q");
}

TEST(Training, GroupOneReachesHighAccuracy) {
  const auto r = train_groups(GroupSet{Group::Group1}, 0.02, 1);
  const auto rep = evaluate(r.tn, r.test, {0.02, 20, 99, {}}, Mode::Analog);
  EXPECT_GE(rep.accuracy(), 95.0);
  EXPECT_EQ(rep.samples, 27u * 20u);
}

TEST(Training, SeedsGiveDifferentWeightsButSimilarAccuracy) {
  const auto a = train_groups(GroupSet{Group::Group1}, 0.02, 1);
  const auto b = train_groups(GroupSet{Group::Group1}, 0.02, 2);
  EXPECT_GT((a.tn.w_hidden - b.tn.w_hidden).cwiseAbs().maxCoeff(), 1e-3);
  const double acc_a = evaluate(a.tn, a.test, {0.02, 20, 5, {}}, Mode::Analog).accuracy();
  const double acc_b = evaluate(b.tn, b.test, {0.02, 20, 5, {}}, Mode::Analog).accuracy();
  EXPECT_LE(std::abs(acc_a - acc_b), 2.0);
}

TEST(Training, SameSeedIsBitIdentical) {
  const auto a = train_groups(GroupSet{Group::Group2}, 0.1, 7);
  const auto b = train_groups(GroupSet{Group::Group2}, 0.1, 7);
  EXPECT_EQ(a.tn.w_hidden, b.tn.w_hidden);
  EXPECT_EQ(a.tn.w_out, b.tn.w_out);
  EXPECT_EQ(a.tn.b_out, b.tn.b_out);
}

TEST(Training, DivergenceIsReported) {
  const GroupSet gs{Group::Group1};
  auto cfg = quick(0.0, 1);
  cfg.lr = 1e300;
  cfg.epochs = 5;
  EXPECT_THROW(train(build_dataset(gs, 1, 1), gs, cfg), TrainingError);
}

TEST(Training, LabelOutsideGroupsIsRejected) {
  const auto items = build_dataset(GroupSet{Group::Group2}, 1, 1);
  EXPECT_THROW(train(items, GroupSet{Group::Group1}, quick(0.0, 1)), LookupError);
  EXPECT_THROW(train({}, GroupSet{Group::Group1}, quick(0.0, 1)), ConfigError);
}

TEST(Training, BinaryThresholdsAreHalfTheFeatureMaximum) {
  const GroupSet gs{Group::Group1};
  const auto items = build_dataset(gs, 1, 1);
  auto cfg = quick(0.0, 1, Mode::Binary);
  cfg.epochs = 1;
  const auto tn = train(items, gs, cfg);
  DeviceConfig d;
  Eigen::VectorXd mx = Eigen::VectorXd::Zero(6);
  for (const auto& it : items) {
    const Eigen::VectorXd x = readout_to_lbf(sensor_layer_forward(it.forces, tn.sensor_states, d), d) / d.f_press;
    mx = mx.cwiseMax(x);
  }
  EXPECT_LT((tn.thresholds - 0.5 * mx).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd bin = network_input(readout_to_lbf(sensor_layer_forward(items[0].forces, tn.sensor_states, d), d), tn,
                                            Mode::Binary);
  for (Eigen::Index i = 0; i < bin.size(); ++i) EXPECT_TRUE(bin(i) == 0.0 || bin(i) == 1.0);
}

TEST(Training, SensorStateOptionMovesStatesWithinBounds) {
  const GroupSet gs{Group::Group1};
  auto cfg = quick(0.02, 3);
  cfg.epochs = 5;
  cfg.train_sensor_states = true;
  cfg.state_lr = 0.5;
  const auto tn = train(build_dataset(gs, 2, 3), gs, cfg);
  const auto start = equal_spacing_states(DeviceConfig{});
  EXPECT_GT((tn.sensor_states - start).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(tn.sensor_states.minCoeff(), 0.0);
  EXPECT_LE(tn.sensor_states.maxCoeff(), 1.0);
}

TEST(Mapping, ZeroNetworkSitsAtOffConductance) {
  TrainedNetwork tn;
  tn.groups = GroupSet{Group::Group1};
  tn.arch = NetworkArch::for_groups(tn.groups);
  tn.w_hidden = Eigen::MatrixXd::Zero(6, 14);
  tn.b_hidden = Eigen::VectorXd::Zero(14);
  tn.w_out = Eigen::MatrixXd::Zero(14, 27);
  tn.b_out = Eigen::VectorXd::Zero(27);
  const auto hw = map_network(tn);
  for (const auto* layer : {&hw.hidden, &hw.output}) {
    EXPECT_TRUE((layer->g.g_plus.array() == 1e-5).all());
    EXPECT_TRUE((layer->g.g_minus.array() == 1e-5).all());
  }
  const auto p = forward_input(hw, Eigen::VectorXd::Ones(6));
  EXPECT_NEAR(p.probabilities.sum(), 1.0, 1e-12);
  EXPECT_NEAR(p.probabilities.maxCoeff(), 1.0 / 27.0, 1e-12);
}

TEST(Mapping, LargestWeightSaturatesOneDevice) {
  const auto r = train_groups(GroupSet{Group::Group1}, 0.02, 1);
  const auto hw = map_network(r.tn);
  for (const auto* layer : {&hw.hidden, &hw.output}) {
    const double top = std::max(layer->g.g_plus.maxCoeff(), layer->g.g_minus.maxCoeff());
    EXPECT_NEAR(top, 1e-3, 1e-15);
  }
}

TEST(Mapping, HardwareMatchesSoftwareOnRandomInputs) {
  const auto r = train_groups(GroupSet{Group::Group4}, 0.1, 11);
  const auto hw = map_network(r.tn);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x(i) = u(rng);
    const auto p = forward_input(hw, x);
    const Eigen::VectorXd soft = detail::softmax(software_logits(r.tn, x));
    EXPECT_EQ(static_cast<Eigen::Index>(p.port), detail::argmax(soft));
    EXPECT_LT((p.probabilities - soft).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(p.probabilities.sum(), 1.0, 1e-9);
  }
}

TEST(Inference, NoiselessLetterT) {
  const auto r = train_groups(GroupSet{Group::Group2}, 0.02, 1);
  const auto p = forward(map_network(r.tn), symbol_to_forces(encode("t", Group::Group2), 20.0), NoiseSpec{0.0, 0},
                         Mode::Analog);
  EXPECT_EQ(p.info().label, "t");
  EXPECT_EQ(p.info().group, Group::Group2);
}

TEST(Evaluation, NoiseDegradesAccuracy) {
  const auto r = train_groups(GroupSet::fusion(), 0.02, 1);
  const double clean = evaluate(r.tn, r.test, {0.0, 1, 1, {}}, Mode::Analog).accuracy();
  const double mild = evaluate(r.tn, r.test, {0.5, 20, 1, {}}, Mode::Analog).accuracy();
  const double heavy = evaluate(r.tn, r.test, {25.0, 20, 1, {}}, Mode::Analog).accuracy();
  EXPECT_GE(clean, mild);
  EXPECT_LT(heavy, mild);
}

TEST(Evaluation, DeterministicForFixedSeed) {
  const auto r = train_groups(GroupSet{Group::Group3}, 0.1, 2);
  const auto a = evaluate(r.tn, r.test, {0.1, 20, 42, {}}, Mode::Analog);
  const auto b = evaluate(r.tn, r.test, {0.1, 20, 42, {}}, Mode::Analog);
  EXPECT_TRUE(a == b);
  EXPECT_NO_THROW(a.group_accuracy(3));
  EXPECT_THROW(a.group_accuracy(1), LookupError);
  std::size_t wrong = 0;
  for (const auto& c : a.confusions) wrong += c.count;
  EXPECT_EQ(wrong, a.samples - a.correct);
}

TEST(Evaluation, ItemsOutsideTheNetworkAreRejected) {
  const auto r = train_groups(GroupSet{Group::Group1}, 0.02, 1);
  EXPECT_THROW(evaluate(r.tn, build_dataset(GroupSet{Group::Group2}, 1, 1), {}, Mode::Analog), LookupError);
}

TEST(Evaluation, NodalFidelityRuns) {
  const auto r = train_groups(GroupSet{Group::Group1}, 0.02, 1);
  EvalConfig cfg{0.02, 2, 1, {Fidelity::Nodal, Parasitics::calibrated()}};
  const auto rep = evaluate(r.tn, r.test, cfg, Mode::Analog);
  EXPECT_EQ(rep.samples, 54u);
  EXPECT_GE(rep.accuracy(), 0.0);
  EXPECT_LE(rep.accuracy(), 100.0);
}

TEST(Sweep, SummaryStatistics) {
  SweepConfig cfg;
  cfg.group_sets = {GroupSet{Group::Group1}};
  cfg.sigma2 = {0.02};
  cfg.modes = {Mode::Analog};
  cfg.seeds = {1, 2, 3};
  cfg.train.epochs = 100;
  const auto rows = sweep(cfg);
  ASSERT_EQ(rows.size(), 3u);
  const auto cells = summarize(rows);
  ASSERT_EQ(cells.size(), 1u);
  const double mean = (rows[0].accuracy + rows[1].accuracy + rows[2].accuracy) / 3.0;
  EXPECT_NEAR(cells[0].mean, mean, 1e-12);
  double ss = 0.0;
  for (const auto& row : rows) ss += (row.accuracy - mean) * (row.accuracy - mean);
  EXPECT_NEAR(cells[0].stddev, std::sqrt(ss / 2.0), 1e-12);
  EXPECT_EQ(&find_cell(cells, "group1", 0.02, Mode::Analog), &cells[0]);
  EXPECT_THROW(find_cell(cells, "group2", 0.02, Mode::Analog), LookupError);
  cfg.copies = 1;
  EXPECT_THROW(sweep(cfg), ConfigError);
}
