#pragma once

// Crossbar topology, ideal MAC readouts, nodal evaluation with parasitics,
// and differential (two-column) signed-weight mapping.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tms/devices.hpp"
#include "tms/errors.hpp"
#include "tms/nodal.hpp"

namespace tms {

enum class Readout { VlOnly, VlAndHl };

inline std::string to_string(Readout r) { return r == Readout::VlOnly ? "vl_only" : "vl_and_hl"; }

inline Readout parse_readout(const std::string& s) {
  if (s == "vl_only") return Readout::VlOnly;
  if (s == "vl_and_hl") return Readout::VlAndHl;
  throw ConfigError("unknown readout mode: " + s);
}

/// Line parasitics. The switch off-conductance lives on each cell's switches.
struct Parasitics {
  double wire_resistance_per_segment = 0.0;  // ohm
  double switch_g_off = 0.0;                 // S
  double readout_resistance = 0.0;           // ohm; 0 is an ideal virtual ground

  /// Fitted once: with every sensor memristor at w = 1 and 20 lbf presses, the
  /// worst symbol of the fusion set leaks 0.1601 on the 4x2 2T1M1S sensor
  /// crossbar (see README, "Leakage calibration").
  static Parasitics calibrated() {
    return {.wire_resistance_per_segment = 900.0, .switch_g_off = 1e-8, .readout_resistance = 0.0};
  }

  static std::vector<std::string> keys() {
    return {"crossbar.wire_resistance", "crossbar.switch_g_off", "crossbar.readout_resistance"};
  }

  static Parasitics from_config(const FlatConfig& cfg, Parasitics base = calibrated()) {
    base.wire_resistance_per_segment = cfg.get("crossbar.wire_resistance", base.wire_resistance_per_segment);
    base.switch_g_off = cfg.get("crossbar.switch_g_off", base.switch_g_off);
    base.readout_resistance = cfg.get("crossbar.readout_resistance", base.readout_resistance);
    if (!(base.wire_resistance_per_segment >= 0.0) || !(base.switch_g_off >= 0.0) ||
        !(base.readout_resistance >= 0.0)) {
      throw ConfigError("crossbar parasitics must be >= 0");
    }
    return base;
  }

  void write_to(FlatConfig& cfg) const {
    cfg.set("crossbar.wire_resistance", wire_resistance_per_segment);
    cfg.set("crossbar.switch_g_off", switch_g_off);
    cfg.set("crossbar.readout_resistance", readout_resistance);
  }
};

struct CrossbarSpec {
  std::size_t m = 0;  // horizontal lines
  std::size_t n = 0;  // vertical lines
  std::vector<CellState> cells;  // row-major, m*n
  double wire_resistance_per_segment = 0.0;
  double readout_resistance = 0.0;
  Readout readout = Readout::VlOnly;

  CrossbarSpec() = default;
  CrossbarSpec(std::size_t rows, std::size_t cols, const CellState& fill, Readout mode = Readout::VlOnly)
      : m(rows), n(cols), cells(rows * cols, fill), readout(mode) {}

  CellState& at(std::size_t k, std::size_t l) { return cells.at(k * n + l); }
  const CellState& at(std::size_t k, std::size_t l) const { return cells.at(k * n + l); }

  void validate() const {
    if (m < 1 || n < 1) throw DimensionError("crossbar needs m >= 1 and n >= 1");
    if (cells.size() != m * n) {
      throw DimensionError("crossbar cell grid has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(m * n));
    }
    if (!(wire_resistance_per_segment >= 0.0) || !(readout_resistance >= 0.0)) {
      throw DomainError("crossbar parasitic resistances must be >= 0");
    }
    if (readout == Readout::VlAndHl) {
      for (const auto& c : cells) {
        if (c.config == CellConfig::OneT1M) throw ConfigError("1T1M cells have no HL readout");
      }
    }
  }

  void apply(const Parasitics& p) {
    wire_resistance_per_segment = p.wire_resistance_per_segment;
    readout_resistance = p.readout_resistance;
    for (auto& c : cells) {
      c.vl_switch.g_off = p.switch_g_off;
      c.hl_switch.g_off = p.switch_g_off;
    }
  }

  /// Effective conductances toward the given rail, as an m x n matrix.
  Eigen::MatrixXd conductances(ReadPath path = ReadPath::Vertical) const {
    Eigen::MatrixXd g(m, n);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = 0; l < n; ++l) g(k, l) = cell_conductance(at(k, l), path);
    return g;
  }
};

struct ReadoutVector {
  std::vector<double> vl_currents;
  std::vector<double> hl_currents;  // empty for VL-only readout
};

/// i_l = sum_k v_k g_kl.
inline Eigen::VectorXd ideal_mac_vl(const Eigen::VectorXd& v, const Eigen::MatrixXd& g) {
  if (v.size() != g.rows()) {
    throw DimensionError("drive vector has " + std::to_string(v.size()) + " entries, crossbar has " +
                         std::to_string(g.rows()) + " rows");
  }
  return g.transpose() * v;
}

/// Two-phase VL/HL readout with per-row drive voltages: each cell contributes
/// its full current to every rail whose select switch is on.
inline ReadoutVector ideal_dual_readout(const Eigen::VectorXd& drive, const CrossbarSpec& spec) {
  spec.validate();
  if (spec.readout != Readout::VlAndHl) throw ConfigError("ideal_dual_readout needs VL+HL readout");
  for (const auto& c : spec.cells) {
    if (c.config != CellConfig::TwoT1M1S) throw ConfigError("two-phase VL+HL readout requires 2T1M1S cells");
  }
  if (static_cast<std::size_t>(drive.size()) != spec.m) throw DimensionError("drive size != m");
  ReadoutVector out{std::vector<double>(spec.n, 0.0), std::vector<double>(spec.m, 0.0)};
  for (std::size_t k = 0; k < spec.m; ++k) {
    for (std::size_t l = 0; l < spec.n; ++l) {
      const auto& cell = spec.at(k, l);
      const double stack = cell.stack_conductance();
      if (cell.vl_switch.selected) {
        out.vl_currents[l] += drive(k) * series_conductance({stack, cell.vl_switch.g_on});
      }
      if (cell.hl_switch.selected) {
        out.hl_currents[k] += drive(k) * series_conductance({stack, cell.hl_switch.g_on});
      }
    }
  }
  return out;
}

inline ReadoutVector ideal_dual_readout(double v_supply, const CrossbarSpec& spec) {
  return ideal_dual_readout(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.m), v_supply), spec);
}

namespace detail {

enum class Phase { Vertical, Horizontal, Simultaneous };

// One nodal solve of the crossbar. Every cell has a supply tap on its row's
// drive rail, an internal node after the sensor/memristor stack, a tap on
// its VL and (when HL rails exist) a tap on its row's HL readout rail.
// Rails are chained with one wire segment per cell pitch plus one segment to
// the line end. Lines read in this phase end in a sense terminal; the others
// are left open.
inline void solve_phase(const CrossbarSpec& spec, const Eigen::VectorXd& drive, Phase phase,
                        bool hl_rails, ReadoutVector& out) {
  const std::size_t m = spec.m, n = spec.n;
  const double r_w = spec.wire_resistance_per_segment;
  ResistiveNetwork net;

  auto idx = [n](std::size_t k, std::size_t l) { return k * n + l; };
  std::vector<std::size_t> supply(m * n), internal(m * n), vtap(m * n), htap;
  if (hl_rails) htap.resize(m * n);

  for (std::size_t k = 0; k < m; ++k) {
    std::size_t prev = net.add_fixed_node(drive(k));
    for (std::size_t l = 0; l < n; ++l) {
      supply[idx(k, l)] = net.add_node();
      net.add_resistance(prev, supply[idx(k, l)], r_w);
      prev = supply[idx(k, l)];
    }
  }

  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const auto& cell = spec.at(k, l);
      const auto i = idx(k, l);
      internal[i] = net.add_node();
      vtap[i] = net.add_node();
      net.add_conductance(supply[i], internal[i], cell.stack_conductance());
      const double g_v = (phase == Phase::Horizontal) ? cell.vl_switch.g_off : cell.vl_switch.conductance();
      net.add_conductance(internal[i], vtap[i], g_v);
      if (hl_rails) {
        htap[i] = net.add_node();
        double g_h = 0.0;
        if (cell.config == CellConfig::TwoT1M1S) {
          g_h = (phase == Phase::Vertical) ? cell.hl_switch.g_off : cell.hl_switch.conductance();
        } else {
          g_h = kInfiniteConductance;  // no HL select transistor
        }
        net.add_conductance(internal[i], htap[i], g_h);
      }
    }
  }

  // Sense terminal: a 0 V node, or a free node behind the readout resistance.
  struct Terminal {
    std::size_t node;
    std::optional<std::size_t> sense_element;
  };
  auto make_terminal = [&](std::size_t last_tap) {
    Terminal t{};
    if (spec.readout_resistance > 0.0) {
      t.node = net.add_node();
      t.sense_element = net.add_resistance(t.node, ResistiveNetwork::ground(), spec.readout_resistance);
    } else {
      t.node = net.add_fixed_node(0.0);
    }
    net.add_resistance(last_tap, t.node, r_w);
    return t;
  };

  const bool read_v = phase != Phase::Horizontal;
  const bool read_h = hl_rails && phase != Phase::Vertical;
  std::vector<Terminal> vterm, hterm;
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t k = 1; k < m; ++k) net.add_resistance(vtap[idx(k - 1, l)], vtap[idx(k, l)], r_w);
    if (read_v) vterm.push_back(make_terminal(vtap[idx(m - 1, l)]));
  }
  if (hl_rails) {
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t l = 1; l < n; ++l) net.add_resistance(htap[idx(k, l - 1)], htap[idx(k, l)], r_w);
      if (read_h) hterm.push_back(make_terminal(htap[idx(k, n - 1)]));
    }
  }

  const auto sol = net.solve();

  std::vector<const Terminal*> all;
  for (const auto& t : vterm) all.push_back(&t);
  for (const auto& t : hterm) all.push_back(&t);
  if (spec.readout_resistance == 0.0) {
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = a + 1; b < all.size(); ++b)
        if (sol.same_supernode(all[a]->node, all[b]->node)) {
          throw SingularNetworkError(
              "readout terminals are shorted together; the current split is undefined "
              "with ideal virtual grounds (set a positive readout_resistance)");
        }
  }
  auto current = [&](const Terminal& t) {
    return t.sense_element ? sol.element_current(*t.sense_element) : sol.inflow(t.node);
  };
  if (read_v) {
    out.vl_currents.resize(n);
    for (std::size_t l = 0; l < n; ++l) out.vl_currents[l] = current(vterm[l]);
  }
  if (read_h) {
    out.hl_currents.resize(m);
    for (std::size_t k = 0; k < m; ++k) out.hl_currents[k] = current(hterm[k]);
  }
}

}  // namespace detail

/// Full resistive-network evaluation including wire resistance, switch
/// off-leakage and readout impedance.
///
/// VL-only: one solve with VL terminals. VL+HL on 2T1M1S cells: two phases,
/// HL switches forced off while VLs are read and vice versa. VL+HL on 1T1M1S
/// cells: both rail sets are read at once, since the cell has no HL select.
inline ReadoutVector solve_nodal(const CrossbarSpec& spec, const Eigen::VectorXd& drive, Readout mode) {
  if (spec.m < 1 || spec.n < 1 || spec.cells.size() != spec.m * spec.n) {
    throw DimensionError("malformed crossbar spec");
  }
  if (static_cast<std::size_t>(drive.size()) != spec.m) throw DimensionError("drive size != m");
  if (!(spec.wire_resistance_per_segment >= 0.0) || std::isinf(spec.wire_resistance_per_segment)) {
    throw DomainError("wire resistance must be finite and >= 0");
  }
  bool all_two_t = true, any_1t1m = false;
  for (const auto& c : spec.cells) {
    c.vl_switch.validate();
    if (c.config != CellConfig::TwoT1M1S) all_two_t = false;
    if (c.config == CellConfig::OneT1M) any_1t1m = true;
  }
  ReadoutVector out;
  if (mode == Readout::VlOnly) {
    detail::solve_phase(spec, drive, detail::Phase::Vertical, all_two_t, out);
    out.hl_currents.clear();
  } else if (all_two_t) {
    detail::solve_phase(spec, drive, detail::Phase::Vertical, true, out);
    detail::solve_phase(spec, drive, detail::Phase::Horizontal, true, out);
  } else {
    if (any_1t1m) throw ConfigError("1T1M cells have no HL readout");
    detail::solve_phase(spec, drive, detail::Phase::Simultaneous, true, out);
  }
  return out;
}

inline ReadoutVector solve_nodal(const CrossbarSpec& spec, double v_supply, Readout mode) {
  return solve_nodal(spec, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.m), v_supply), mode);
}

/// Two-by-two 1T1M1S crossbar with only cell (0,0) pressed, ideal wires and
/// ideal VL switches, read on both line sets at once through equal sense
/// resistors. Without an HL select transistor every cell joins its VL and HL,
/// so all four lines sit on one node and carry the same current.
inline CrossbarSpec single_active_cell_2x2(const DeviceConfig& d, double readout_resistance = 1.0) {
  CellState idle = d.make_cell(CellConfig::OneT1M1S, 0.0, 1.0);
  idle.vl_switch.g_on = kInfiniteConductance;
  CrossbarSpec spec(2, 2, idle, Readout::VlAndHl);
  spec.at(0, 0).force_lbf = d.f_press;
  spec.readout_resistance = readout_resistance;
  return spec;
}

/// sum |actual - ideal| / sum |ideal| over all VL and HL currents.
inline double leakage_fraction(const ReadoutVector& ideal, const ReadoutVector& actual) {
  if (ideal.vl_currents.size() != actual.vl_currents.size() ||
      ideal.hl_currents.size() != actual.hl_currents.size()) {
    throw DimensionError("readout vectors differ in shape");
  }
  double diff = 0.0, base = 0.0;
  auto acc = [&](const std::vector<double>& i, const std::vector<double>& a) {
    for (std::size_t j = 0; j < i.size(); ++j) {
      diff += std::abs(a[j] - i[j]);
      base += std::abs(i[j]);
    }
  };
  acc(ideal.vl_currents, actual.vl_currents);
  acc(ideal.hl_currents, actual.hl_currents);
  if (base == 0.0) throw DomainError("leakage fraction undefined for an all-zero ideal readout");
  return diff / base;
}

struct DifferentialPair {
  double g_plus;
  double g_minus;
};

struct DifferentialMatrices {
  Eigen::MatrixXd g_plus;
  Eigen::MatrixXd g_minus;
  double scale = 0.0;  // S per unit weight

  DifferentialPair pair(Eigen::Index i, Eigen::Index j) const { return {g_plus(i, j), g_minus(i, j)}; }

  /// (g+ - g-) / scale.
  Eigen::MatrixXd weights() const { return (g_plus - g_minus) / scale; }
};

/// Largest scale (S per unit weight) that keeps every |w| representable.
inline double max_differential_scale(const Eigen::MatrixXd& w, double r_on, double r_off) {
  const double range = 1.0 / r_on - 1.0 / r_off;
  const double wmax = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  return wmax > 0.0 ? range / wmax : range;
}

/// g+ = 1/r_off + max(w,0) s, g- = 1/r_off - min(w,0) s.
inline DifferentialMatrices weights_to_differential(const Eigen::MatrixXd& w, double r_on, double r_off,
                                                    double scale) {
  if (!(r_on > 0.0 && r_on < r_off)) throw DomainError("need 0 < r_on < r_off");
  if (!(scale > 0.0)) throw DomainError("scale must be > 0");
  const double base = 1.0 / r_off;
  const double range = 1.0 / r_on - 1.0 / r_off;
  DifferentialMatrices out{Eigen::MatrixXd(w.rows(), w.cols()), Eigen::MatrixXd(w.rows(), w.cols()), scale};
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double dg = w(i, j) * scale;
      if (!std::isfinite(dg) || std::abs(dg) > range * (1.0 + 1e-12)) {
        throw RangeError("weight " + format_double(w(i, j)) + " at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") exceeds the representable range at scale " +
                         format_double(scale) + " S/unit");
      }
      out.g_plus(i, j) = base + std::max(dg, 0.0);
      out.g_minus(i, j) = base - std::min(dg, 0.0);
    }
  }
  return out;
}

}  // namespace tms
