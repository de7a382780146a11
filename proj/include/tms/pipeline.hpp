#pragma once

// Three-layer recognition network: TMS sensor crossbar (4x2, 6 readouts),
// a 6x14 1T1M hidden layer with ReLU, and an output layer sized to the
// selected Braille groups followed by the analog softmax.
//
// Sensor readouts are referred to the force input: a line current divided by
// (v_supply * k) is in lbf-equivalent units, and the readout noise variance
// sigma2 is expressed in lbf^2. The network input is that value divided by
// f_press.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tms/analog.hpp"
#include "tms/braille.hpp"
#include "tms/crossbar.hpp"
#include "tms/devices.hpp"
#include "tms/errors.hpp"

namespace tms {

enum class Mode { Analog, Binary };

inline std::string to_string(Mode m) { return m == Mode::Analog ? "analog" : "binary"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "analog") return Mode::Analog;
  if (s == "binary") return Mode::Binary;
  throw ConfigError("unknown mode: " + s + " (expected analog or binary)");
}

/// Sensor-layer evaluation: ideal dual readout, or the nodal model with
/// parasitics.
enum class Fidelity { Ideal, Nodal };

inline std::string to_string(Fidelity f) { return f == Fidelity::Ideal ? "ideal" : "nodal"; }

inline Fidelity parse_fidelity(const std::string& s) {
  if (s == "ideal") return Fidelity::Ideal;
  if (s == "nodal") return Fidelity::Nodal;
  throw ConfigError("unknown fidelity: " + s);
}

/// splitmix64 finalizer chained over the inputs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

using SensorStates = Eigen::Matrix<double, 4, 2>;
using SensorReadout = Eigen::Matrix<double, 6, 1>;  // VL1, VL2, HL1..HL4

inline constexpr std::size_t kSensorOutputs = 6;
inline constexpr std::size_t kHiddenUnits = 14;

/// Column 1 at w = 1; column 2 at the state whose pressed cell conducts half
/// as much as column 1's. Row sums of the four press patterns of a row then
/// sit on an evenly spaced ladder (0, 1/2, 1, 3/2).
inline SensorStates equal_spacing_states(const DeviceConfig& d) {
  const auto pressed = d.make_cell(CellConfig::TwoT1M1S, d.f_press, 1.0);
  const double g1 = cell_conductance(pressed, ReadPath::Vertical);
  double r_m = 2.0 / g1 - 1.0 / fsr_conductance(d.sensor, d.f_press);
  if (std::isfinite(d.transistor.g_on)) r_m -= 1.0 / d.transistor.g_on;
  if (!(r_m > 0.0)) throw RangeError("no memristor state halves the pressed-cell conductance");
  const double w2 = memristor_state_for(d.memristor, 1.0 / r_m);
  SensorStates s;
  s.col(0).setConstant(1.0);
  s.col(1).setConstant(w2);
  return s;
}

/// The 4x2 2T1M1S sensor crossbar for one press.
inline CrossbarSpec sensor_crossbar(const ForceGrid& forces, const SensorStates& states, const DeviceConfig& d,
                                    const Parasitics& parasitics = {}) {
  CrossbarSpec spec(4, 2, d.make_cell(CellConfig::TwoT1M1S, 0.0, 1.0), Readout::VlAndHl);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t l = 0; l < 2; ++l) {
      spec.at(k, l) = d.make_cell(CellConfig::TwoT1M1S, forces(k, l), states(k, l));
    }
  }
  spec.apply(parasitics);
  return spec;
}

inline SensorReadout to_sensor_readout(const ReadoutVector& r) {
  SensorReadout out;
  out << r.vl_currents[0], r.vl_currents[1], r.hl_currents[0], r.hl_currents[1], r.hl_currents[2],
      r.hl_currents[3];
  return out;
}

/// Line currents (A) of the sensor layer: two column readouts then four row
/// readouts.
inline SensorReadout sensor_layer_forward(const ForceGrid& forces, const SensorStates& states,
                                          const DeviceConfig& d, Fidelity fidelity = Fidelity::Ideal,
                                          const Parasitics& parasitics = {}) {
  const auto spec = sensor_crossbar(forces, states, d, parasitics);
  if (fidelity == Fidelity::Ideal) return to_sensor_readout(ideal_dual_readout(d.sensor.v_supply, spec));
  return to_sensor_readout(solve_nodal(spec, d.sensor.v_supply, Readout::VlAndHl));
}

/// Readout currents in lbf-equivalent units.
inline SensorReadout readout_to_lbf(const SensorReadout& currents, const DeviceConfig& d) {
  return currents / (d.sensor.v_supply * d.sensor.sensitivity_k);
}

struct NoiseSpec {
  double sigma2 = 0.0;  // lbf^2
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("noise variance must be finite and >= 0");
  }
};

inline Eigen::VectorXd add_noise(const Eigen::VectorXd& x, double sigma2, std::mt19937_64& rng) {
  NoiseSpec{sigma2, 0}.validate();
  if (sigma2 == 0.0) return x;
  std::normal_distribution<double> n(0.0, std::sqrt(sigma2));
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += n(rng);
  return out;
}

inline Eigen::VectorXd add_noise(const Eigen::VectorXd& x, const NoiseSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return add_noise(x, spec.sigma2, rng);
}

struct NetworkArch {
  std::size_t inputs = kSensorOutputs;
  std::size_t hidden = kHiddenUnits;
  std::size_t outputs = 0;

  static NetworkArch for_groups(const GroupSet& g) { return {kSensorOutputs, kHiddenUnits, g.size()}; }

  void validate() const {
    if (inputs != kSensorOutputs || hidden != kHiddenUnits) {
      throw DimensionError("hidden crossbar is fixed at 6x14");
    }
    if (outputs < 2) throw DimensionError("network needs at least two output ports");
  }
};

struct TrainConfig {
  double lr = 0.05;
  std::size_t epochs = 500;
  std::size_t batch = 32;
  double sigma2 = 0.02;  // noise-augmented training, lbf^2
  Mode mode = Mode::Analog;
  bool train_sensor_states = false;
  double state_lr = 0.05;
  double state_step = 1e-6;  // relative central-difference step
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lr > 0.0) || !(state_lr > 0.0)) throw ConfigError("learning rates must be > 0");
    if (epochs < 1 || batch < 1) throw ConfigError("epochs and batch must be >= 1");
    NoiseSpec{sigma2, 0}.validate();
  }

  static TrainConfig from_config(const FlatConfig& cfg) { return from_config(cfg, TrainConfig()); }

  static TrainConfig from_config(const FlatConfig& cfg, TrainConfig t) {
    t.lr = cfg.get("train.lr", t.lr);
    t.epochs = static_cast<std::size_t>(cfg.get("train.epochs", static_cast<double>(t.epochs)));
    t.batch = static_cast<std::size_t>(cfg.get("train.batch", static_cast<double>(t.batch)));
    t.train_sensor_states = cfg.get("train.sensor_states", t.train_sensor_states ? 1.0 : 0.0) != 0.0;
    t.state_lr = cfg.get("train.state_lr", t.state_lr);
    t.validate();
    return t;
  }
};

struct TrainedNetwork {
  NetworkArch arch;
  GroupSet groups;
  Mode mode = Mode::Analog;
  Eigen::MatrixXd w_hidden;  // 6 x 14
  Eigen::VectorXd b_hidden;  // 14
  Eigen::MatrixXd w_out;     // 14 x N
  Eigen::VectorXd b_out;     // N
  SensorStates sensor_states = SensorStates::Ones();
  Eigen::VectorXd thresholds = Eigen::VectorXd::Zero(kSensorOutputs);  // binary cut, normalized units
  DeviceConfig devices;
  double train_sigma2 = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> ports() const { return groups.symbol_indices(); }

  void validate() const {
    arch.validate();
    const auto h = static_cast<Eigen::Index>(arch.hidden), n = static_cast<Eigen::Index>(arch.outputs);
    if (w_hidden.rows() != static_cast<Eigen::Index>(arch.inputs) || w_hidden.cols() != h || b_hidden.size() != h ||
        w_out.rows() != h || w_out.cols() != n || b_out.size() != n ||
        thresholds.size() != static_cast<Eigen::Index>(kSensorOutputs)) {
      throw DimensionError("trained network weights do not match the architecture");
    }
    if (groups.size() != arch.outputs) throw DimensionError("output count does not match the group selection");
    if ((sensor_states.array() < 0.0).any() || (sensor_states.array() > 1.0).any()) {
      throw DomainError("sensor memristor states must lie in [0,1]");
    }
  }
};

/// Normalized network input from lbf-referred readouts.
inline Eigen::VectorXd network_input(const SensorReadout& lbf, const TrainedNetwork& tn, Mode mode) {
  Eigen::VectorXd x = lbf / tn.devices.f_press;
  if (mode == Mode::Binary) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = x(i) > tn.thresholds(i) ? 1.0 : 0.0;
  }
  return x;
}

/// Software logits for a network input.
inline Eigen::VectorXd software_logits(const TrainedNetwork& tn, const Eigen::VectorXd& x) {
  const Eigen::VectorXd h = relu(Eigen::VectorXd(tn.w_hidden.transpose() * x + tn.b_hidden));
  return tn.w_out.transpose() * h + tn.b_out;
}

namespace detail {

inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

inline Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return i;
}

inline std::map<std::size_t, std::size_t> port_lookup(const GroupSet& groups) {
  std::map<std::size_t, std::size_t> m;
  const auto ports = groups.symbol_indices();
  for (std::size_t p = 0; p < ports.size(); ++p) m[ports[p]] = p;
  return m;
}

}  // namespace detail

struct SensorContext {
  Fidelity fidelity = Fidelity::Ideal;
  Parasitics parasitics{};
};

/// Gradient-descent training of the software model with noise-augmented
/// inputs. Sensor states start from the equal-spacing layout and are trained
/// only when `train_sensor_states` is set (analog mode).
inline TrainedNetwork train(const std::vector<DatasetItem>& items, const GroupSet& groups, const TrainConfig& cfg,
                            const DeviceConfig& devices = {}, const SensorContext& sensor = {}) {
  cfg.validate();
  devices.validate();
  if (items.empty()) throw ConfigError("training set is empty");

  TrainedNetwork tn;
  tn.arch = NetworkArch::for_groups(groups);
  tn.arch.validate();
  tn.groups = groups;
  tn.mode = cfg.mode;
  tn.devices = devices;
  tn.train_sigma2 = cfg.sigma2;
  tn.seed = cfg.seed;
  tn.sensor_states = equal_spacing_states(devices);

  const auto lookup = detail::port_lookup(groups);
  std::vector<Eigen::Index> labels;
  for (const auto& it : items) {
    auto p = lookup.find(it.symbol);
    if (p == lookup.end()) {
      throw LookupError("training item '" + it.info().label + "' is not an output of " + groups.name());
    }
    labels.push_back(static_cast<Eigen::Index>(p->second));
  }

  const auto n_items = static_cast<Eigen::Index>(items.size());
  const auto in = static_cast<Eigen::Index>(tn.arch.inputs);
  const auto hid = static_cast<Eigen::Index>(tn.arch.hidden);
  const auto out = static_cast<Eigen::Index>(tn.arch.outputs);

  auto lbf_features = [&](const SensorStates& states) {
    Eigen::MatrixXd f(n_items, in);
    for (Eigen::Index i = 0; i < n_items; ++i) {
      f.row(i) = readout_to_lbf(
                     sensor_layer_forward(items[static_cast<std::size_t>(i)].forces, states, devices,
                                          sensor.fidelity, sensor.parasitics),
                     devices)
                     .transpose();
    }
    return f;
  };
  Eigen::MatrixXd base = lbf_features(tn.sensor_states);
  tn.thresholds = 0.5 * (base / devices.f_press).colwise().maxCoeff().transpose();

  std::mt19937_64 rng(derive_seed(cfg.seed, 0x747261696eULL));
  std::normal_distribution<double> unit(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c, double sd) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = sd * unit(rng);
    return m;
  };
  Eigen::MatrixXd W = gaussian(in, hid, std::sqrt(2.0 / static_cast<double>(in)));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(hid);
  Eigen::MatrixXd U = gaussian(hid, out, std::sqrt(1.0 / static_cast<double>(hid)));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(out);

  const double sd = std::sqrt(cfg.sigma2);
  const bool learn_states = cfg.train_sensor_states && cfg.mode == Mode::Analog;
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const auto B = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd noise(B, in), x(B, in);
      for (Eigen::Index r = 0; r < B; ++r) {
        for (Eigen::Index j = 0; j < in; ++j) noise(r, j) = sd * unit(rng);
        x.row(r) = (base.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)])) + noise.row(r)) /
                   devices.f_press;
      }
      if (cfg.mode == Mode::Binary) {
        for (Eigen::Index r = 0; r < B; ++r)
          for (Eigen::Index j = 0; j < in; ++j) x(r, j) = x(r, j) > tn.thresholds(j) ? 1.0 : 0.0;
      }

      const Eigen::MatrixXd a = (x * W).rowwise() + b.transpose();
      const Eigen::MatrixXd h = a.cwiseMax(0.0);
      Eigen::MatrixXd z = (h * U).rowwise() + c.transpose();
      Eigen::MatrixXd dz(B, out);
      for (Eigen::Index r = 0; r < B; ++r) {
        const Eigen::VectorXd p = detail::softmax(z.row(r).transpose());
        const auto y = labels[order[start + static_cast<std::size_t>(r)]];
        loss -= std::log(std::max(p(y), 1e-300));
        dz.row(r) = p.transpose();
        dz(r, y) -= 1.0;
      }
      dz /= static_cast<double>(B);
      const Eigen::MatrixXd dU = h.transpose() * dz;
      const Eigen::VectorXd dc = dz.colwise().sum().transpose();
      const Eigen::MatrixXd da = ((dz * U.transpose()).array() * (a.array() > 0.0).cast<double>()).matrix();
      const Eigen::MatrixXd dW = x.transpose() * da;
      const Eigen::VectorXd db = da.colwise().sum().transpose();

      if (learn_states) {
        const Eigen::MatrixXd dx = da * W.transpose();
        SensorStates grad = SensorStates::Zero();
        for (Eigen::Index k = 0; k < 4; ++k) {
          for (Eigen::Index l = 0; l < 2; ++l) {
            const double w0 = tn.sensor_states(k, l);
            const double step = cfg.state_step * std::max(std::abs(w0), 1e-3);
            SensorStates up = tn.sensor_states, dn = tn.sensor_states;
            up(k, l) = std::min(1.0, w0 + step);
            dn(k, l) = std::max(0.0, w0 - step);
            const double span = up(k, l) - dn(k, l);
            for (Eigen::Index r = 0; r < B; ++r) {
              const auto& forces = items[order[start + static_cast<std::size_t>(r)]].forces;
              const SensorReadout d =
                  (readout_to_lbf(sensor_layer_forward(forces, up, devices, sensor.fidelity, sensor.parasitics),
                                  devices) -
                   readout_to_lbf(sensor_layer_forward(forces, dn, devices, sensor.fidelity, sensor.parasitics),
                                  devices)) /
                  (span * devices.f_press);
              grad(k, l) += dx.row(r).dot(d.transpose());
            }
          }
        }
        tn.sensor_states = (tn.sensor_states - cfg.state_lr * grad).cwiseMax(0.0).cwiseMin(1.0);
      }

      W -= cfg.lr * dW;
      b -= cfg.lr * db;
      U -= cfg.lr * dU;
      c -= cfg.lr * dc;
    }
    if (!std::isfinite(loss) || !W.allFinite() || !U.allFinite()) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1) + " (loss " +
                          format_double(loss) + ", lr " + format_double(cfg.lr) + ")");
    }
    if (learn_states) base = lbf_features(tn.sensor_states);
  }

  tn.w_hidden = W;
  tn.b_hidden = b;
  tn.w_out = U;
  tn.b_out = c;
  tn.validate();
  return tn;
}

/// One differentially mapped layer. The bias is the last crossbar row,
/// driven at the read voltage.
struct HardwareLayer {
  DifferentialMatrices g;
  double r_tia = 0.0;  // ohm
};

struct HardwareNetwork {
  TrainedNetwork software;
  HardwareLayer hidden;
  HardwareLayer output;
  double v_read = 0.2;  // V
  SoftmaxParams softmax{};
};

inline HardwareLayer map_layer(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const MemristorModel& m,
                               double r_tia) {
  Eigen::MatrixXd full(w.rows() + 1, w.cols());
  full.topRows(w.rows()) = w;
  full.bottomRows(1) = b.transpose();
  const double scale = max_differential_scale(full, m.r_on, m.r_off);
  return {weights_to_differential(full, m.r_on, m.r_off, scale), r_tia};
}

/// Programs both weight layers onto differential 1T1M crossbars and sizes the
/// transimpedance stages: the hidden stage reproduces v_read (Wx + b) and the
/// output stage v_t times the software logits.
inline HardwareNetwork map_network(const TrainedNetwork& tn, double v_read = 0.2, const SoftmaxParams& sp = {}) {
  tn.validate();
  sp.validate();
  if (!(v_read > 0.0)) throw DomainError("v_read must be > 0");
  HardwareNetwork hw;
  hw.software = tn;
  hw.v_read = v_read;
  hw.softmax = sp;
  hw.hidden = map_layer(tn.w_hidden, tn.b_hidden, tn.devices.memristor, 0.0);
  hw.hidden.r_tia = 1.0 / hw.hidden.g.scale;
  hw.output = map_layer(tn.w_out, tn.b_out, tn.devices.memristor, 0.0);
  hw.output.r_tia = sp.v_t / (v_read * hw.output.g.scale);
  return hw;
}

namespace detail {

inline Eigen::VectorXd differential_stage(const HardwareLayer& layer, const Eigen::VectorXd& drive, double v_bias) {
  Eigen::VectorXd v(drive.size() + 1);
  v << drive, v_bias;
  const Eigen::VectorXd i_plus = ideal_mac_vl(v, layer.g.g_plus);
  const Eigen::VectorXd i_minus = ideal_mac_vl(v, layer.g.g_minus);
  return (i_plus - i_minus) * layer.r_tia;
}

}  // namespace detail

struct Prediction {
  Eigen::VectorXd probabilities;  // softmax outputs / (r_f i_s)
  Eigen::VectorXd output_volts;   // softmax circuit outputs
  std::size_t port = 0;
  std::size_t symbol = 0;  // canonical index

  const BrailleSymbol& info() const { return symbol_table().at(symbol); }
};

/// Hardware forward pass from a network input vector.
inline Prediction forward_input(const HardwareNetwork& hw, const Eigen::VectorXd& x) {
  const Eigen::VectorXd h = relu(detail::differential_stage(hw.hidden, x * hw.v_read, hw.v_read));
  const Eigen::VectorXd a = detail::differential_stage(hw.output, h, hw.v_read);
  Prediction p;
  p.output_volts = softmax_circuit(a, hw.softmax);
  p.probabilities = p.output_volts / hw.softmax.unit();
  p.port = static_cast<std::size_t>(detail::argmax(p.probabilities));
  p.symbol = hw.software.ports().at(p.port);
  return p;
}

/// Hardware forward pass for a press, with lbf-referred readout noise drawn
/// from `rng`.
inline Prediction forward(const HardwareNetwork& hw, const ForceGrid& forces, double sigma2, std::mt19937_64& rng,
                          Mode mode, const SensorContext& sensor = {}) {
  const auto& tn = hw.software;
  const SensorReadout lbf = readout_to_lbf(
      sensor_layer_forward(forces, tn.sensor_states, tn.devices, sensor.fidelity, sensor.parasitics), tn.devices);
  return forward_input(hw, network_input(add_noise(lbf, sigma2, rng), tn, mode));
}

inline Prediction forward(const HardwareNetwork& hw, const ForceGrid& forces, const NoiseSpec& noise, Mode mode,
                          const SensorContext& sensor = {}) {
  std::mt19937_64 rng(noise.seed);
  return forward(hw, forces, noise.sigma2, rng, mode, sensor);
}

struct EvalConfig {
  double sigma2 = 0.0;
  std::size_t draws = 20;
  std::uint64_t seed = 1;
  SensorContext sensor{};
};

struct ConfusionPair {
  std::size_t truth;      // canonical index
  std::size_t predicted;  // canonical index
  std::size_t count;
};

struct EvalReport {
  std::string groups;
  Mode mode = Mode::Analog;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t correct = 0;
  std::map<int, std::pair<std::size_t, std::size_t>> per_group;  // group -> (correct, samples)
  std::vector<ConfusionPair> confusions;                          // most frequent first

  double accuracy() const { return samples ? 100.0 * static_cast<double>(correct) / static_cast<double>(samples) : 0.0; }

  double group_accuracy(int g) const {
    auto it = per_group.find(g);
    if (it == per_group.end() || it->second.second == 0) throw LookupError("no samples for group " + std::to_string(g));
    return 100.0 * static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }

  bool operator==(const EvalReport& o) const {
    if (groups != o.groups || mode != o.mode || sigma2 != o.sigma2 || seed != o.seed || samples != o.samples ||
        correct != o.correct || per_group != o.per_group || confusions.size() != o.confusions.size()) {
      return false;
    }
    for (std::size_t i = 0; i < confusions.size(); ++i) {
      const auto &a = confusions[i], &b = o.confusions[i];
      if (a.truth != b.truth || a.predicted != b.predicted || a.count != b.count) return false;
    }
    return true;
  }
};

/// Accuracy of the mapped network over `items`, each pressed `draws` times
/// with independent noise seeded from (seed, item, draw).
inline EvalReport evaluate(const HardwareNetwork& hw, const std::vector<DatasetItem>& items, const EvalConfig& cfg,
                           Mode mode) {
  NoiseSpec{cfg.sigma2, cfg.seed}.validate();
  if (cfg.draws < 1) throw ConfigError("evaluation needs draws >= 1");
  const auto lookup = detail::port_lookup(hw.software.groups);
  EvalReport rep;
  rep.groups = hw.software.groups.name();
  rep.mode = mode;
  rep.sigma2 = cfg.sigma2;
  rep.seed = cfg.seed;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> confusion;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (!lookup.count(it.symbol)) {
      throw LookupError("evaluation item '" + it.info().label + "' is not an output of " + rep.groups);
    }
    const int g = group_number(it.info().group);
    for (std::size_t d = 0; d < cfg.draws; ++d) {
      std::mt19937_64 rng(derive_seed(cfg.seed, i, d));
      const auto pred = forward(hw, it.forces, cfg.sigma2, rng, mode, cfg.sensor);
      ++rep.samples;
      ++rep.per_group[g].second;
      if (pred.symbol == it.symbol) {
        ++rep.correct;
        ++rep.per_group[g].first;
      } else {
        ++confusion[{it.symbol, pred.symbol}];
      }
    }
  }
  for (const auto& [k, n] : confusion) rep.confusions.push_back({k.first, k.second, n});
  std::stable_sort(rep.confusions.begin(), rep.confusions.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  return rep;
}

inline EvalReport evaluate(const TrainedNetwork& tn, const std::vector<DatasetItem>& items, const EvalConfig& cfg,
                           Mode mode) {
  return evaluate(map_network(tn), items, cfg, mode);
}

struct SweepConfig {
  std::vector<GroupSet> group_sets;
  std::vector<double> sigma2;
  std::vector<Mode> modes{Mode::Analog, Mode::Binary};
  std::vector<std::uint64_t> seeds{1};
  std::size_t copies = 5;
  std::size_t eval_draws = 20;
  TrainConfig train{};
  DeviceConfig devices{};
};

struct SweepRow {
  std::string groups;
  double sigma2 = 0.0;
  Mode mode = Mode::Analog;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

/// One training and held-out evaluation per (group set, sigma2, mode, seed).
/// Training noise equals the evaluation noise.
inline std::vector<SweepRow> sweep(const SweepConfig& cfg,
                                   const std::function<void(const SweepRow&)>& progress = nullptr) {
  if (cfg.group_sets.empty() || cfg.sigma2.empty() || cfg.modes.empty() || cfg.seeds.empty()) {
    throw ConfigError("sweep needs at least one group set, sigma2, mode and seed");
  }
  if (cfg.copies < 2) throw ConfigError("sweep needs copies >= 2 to hold out a test copy");
  std::vector<SweepRow> rows;
  for (const auto& gs : cfg.group_sets) {
    for (double s2 : cfg.sigma2) {
      for (Mode mode : cfg.modes) {
        for (std::uint64_t seed : cfg.seeds) {
          const auto data = build_dataset(gs, cfg.copies, seed, cfg.devices.f_press);
          const auto [train_set, test_set] = split_holdout(data);
          TrainConfig tc = cfg.train;
          tc.sigma2 = s2;
          tc.mode = mode;
          tc.seed = seed;
          const auto tn = train(train_set, gs, tc, cfg.devices);
          const auto rep = evaluate(tn, test_set, {s2, cfg.eval_draws, derive_seed(seed, 0x6576616cULL), {}}, mode);
          rows.push_back({gs.name(), s2, mode, seed, rep.accuracy()});
          if (progress) progress(rows.back());
        }
      }
    }
  }
  return rows;
}

struct SweepCell {
  std::string groups;
  double sigma2 = 0.0;
  Mode mode = Mode::Analog;
  std::size_t runs = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and sample standard deviation over seeds, in first-seen order.
inline std::vector<SweepCell> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepCell> cells;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const SweepCell& c) {
      return c.groups == r.groups && c.sigma2 == r.sigma2 && c.mode == r.mode;
    });
    if (it == cells.end()) {
      cells.push_back({r.groups, r.sigma2, r.mode, 0, 0.0, 0.0});
      values.emplace_back();
      it = cells.end() - 1;
    }
    values[static_cast<std::size_t>(it - cells.begin())].push_back(r.accuracy);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& v = values[i];
    const double n = static_cast<double>(v.size());
    cells[i].runs = v.size();
    cells[i].mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : v) ss += (a - cells[i].mean) * (a - cells[i].mean);
    cells[i].stddev = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return cells;
}

inline const SweepCell& find_cell(const std::vector<SweepCell>& cells, const std::string& groups, double sigma2,
                                  Mode mode) {
  for (const auto& c : cells)
    if (c.groups == groups && c.sigma2 == sigma2 && c.mode == mode) return c;
  throw LookupError("no sweep result for " + groups + " at sigma2 " + format_double(sigma2) + " (" + to_string(mode) +
                    ")");
}

}  // namespace tms
