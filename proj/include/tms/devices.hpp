#pragma once

// Device primitives of a TMS cell: force-sensing resistor, memristor,
// transistor select switch, and their series composition.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "tms/config.hpp"
#include "tms/errors.hpp"

namespace tms {

inline constexpr double kInfiniteConductance = std::numeric_limits<double>::infinity();

/// Conductance of elements stacked in series. A zero element opens the path;
/// an infinite element is a short and drops out of the sum.
inline double series_conductance(std::initializer_list<double> gs) {
  double resistance = 0.0;
  for (double g : gs) {
    if (g <= 0.0) return 0.0;
    if (std::isinf(g)) continue;
    resistance += 1.0 / g;
  }
  return resistance == 0.0 ? kInfiniteConductance : 1.0 / resistance;
}

/// Force-sensing resistor, R(f) = 1 / (k f + c). Force in lbf.
struct SensorModel {
  double sensitivity_k = 1.5e-6;  // S/lbf
  double bias_c = 1e-6;           // S
  double v_supply = 0.5;          // V
  double r_divider = 1.0 / (1.5e-6 * 20.0 + 1e-6);  // ohm; mid-scale at 20 lbf

  void validate() const {
    if (!(sensitivity_k > 0.0)) throw DomainError("sensor sensitivity_k must be > 0");
    if (!(bias_c > 0.0)) throw DomainError("sensor bias_c must be > 0");
    if (!(v_supply > 0.0)) throw DomainError("sensor v_supply must be > 0");
    if (!(r_divider > 0.0)) throw DomainError("sensor r_divider must be > 0");
  }
};

inline void check_force(double f) {
  if (!(f >= 0.0) || std::isinf(f)) {
    throw DomainError("force must be finite and >= 0 lbf, got " + format_double(f));
  }
}

inline double fsr_conductance(const SensorModel& model, double f) {
  check_force(f);
  return model.sensitivity_k * f + model.bias_c;
}

inline double fsr_resistance(const SensorModel& model, double f) {
  return 1.0 / fsr_conductance(model, f);
}

/// Voltage-divider output across r_divider.
inline double fsr_output_voltage(const SensorModel& model, double f) {
  if (!(model.r_divider > 0.0)) throw DomainError("r_divider must be > 0");
  const double r = fsr_resistance(model, f);
  return model.v_supply * model.r_divider / (r + model.r_divider);
}

struct MemristorModel {
  double r_on = 1e3;    // ohm
  double r_off = 1e5;   // ohm
  double state_w = 1.0;

  double g_min() const { return 1.0 / r_off; }
  double g_max() const { return 1.0 / r_on; }
  double g_range() const { return 1.0 / r_on - 1.0 / r_off; }

  void validate_range() const {
    if (!(r_on > 0.0 && r_on < r_off)) throw DomainError("memristor requires 0 < r_on < r_off");
  }
};

/// Linear state-to-conductance map between 1/r_off (w=0) and 1/r_on (w=1).
inline double memristor_conductance(const MemristorModel& m) {
  m.validate_range();
  if (!(m.state_w >= 0.0 && m.state_w <= 1.0)) {
    throw DomainError("memristor state must lie in [0,1], got " + format_double(m.state_w));
  }
  return m.g_min() + m.state_w * m.g_range();
}

/// Inverse of memristor_conductance.
inline double memristor_state_for(const MemristorModel& m, double g) {
  m.validate_range();
  if (!(g >= m.g_min() * (1.0 - 1e-12) && g <= m.g_max() * (1.0 + 1e-12))) {
    throw RangeError("conductance " + format_double(g) + " S outside memristor range");
  }
  const double w = (g - m.g_min()) / m.g_range();
  return std::clamp(w, 0.0, 1.0);
}

/// Transistor select switch. g_on may be infinite (ideal short).
struct SwitchModel {
  double g_on = 1e-2;
  double g_off = 0.0;
  bool selected = true;

  double conductance() const { return selected ? g_on : g_off; }

  void validate() const {
    if (!(g_off >= 0.0)) throw DomainError("switch g_off must be >= 0");
    if (!(g_on > g_off)) throw DomainError("switch requires g_on > g_off");
  }
};

enum class CellConfig { OneT1M1S, TwoT1M1S, OneT1M };

inline std::string to_string(CellConfig c) {
  switch (c) {
    case CellConfig::OneT1M1S: return "1T1M1S";
    case CellConfig::TwoT1M1S: return "2T1M1S";
    case CellConfig::OneT1M: return "1T1M";
  }
  return "?";
}

inline CellConfig parse_cell_config(const std::string& s) {
  if (s == "1T1M1S") return CellConfig::OneT1M1S;
  if (s == "2T1M1S") return CellConfig::TwoT1M1S;
  if (s == "1T1M") return CellConfig::OneT1M;
  throw ConfigError("unknown cell config: " + s);
}

inline bool has_sensor(CellConfig c) { return c != CellConfig::OneT1M; }

/// Which readout rail a cell current is observed on.
enum class ReadPath { Vertical, Horizontal };

struct CellState {
  CellConfig config = CellConfig::OneT1M1S;
  double force_lbf = 0.0;  // ignored for 1T1M
  SensorModel sensor{};
  MemristorModel memristor{};
  SwitchModel vl_switch{};
  SwitchModel hl_switch{.g_on = 1e-2, .g_off = 0.0, .selected = false};  // 2T1M1S only

  /// Sensor and memristor in series, without any switch.
  double stack_conductance() const {
    const double g_m = memristor_conductance(memristor);
    if (!has_sensor(config)) return g_m;
    return series_conductance({fsr_conductance(sensor, force_lbf), g_m});
  }
};

/// Effective conductance from the cell's supply to the chosen readout rail.
/// The 1T1M1S cell has no switch on its horizontal path.
inline double cell_conductance(const CellState& cell, ReadPath path = ReadPath::Vertical) {
  const double stack = cell.stack_conductance();
  if (path == ReadPath::Vertical) {
    return series_conductance({stack, cell.vl_switch.conductance()});
  }
  switch (cell.config) {
    case CellConfig::TwoT1M1S: return series_conductance({stack, cell.hl_switch.conductance()});
    case CellConfig::OneT1M1S: return stack;
    case CellConfig::OneT1M: break;
  }
  throw DomainError("1T1M cells have no horizontal readout path");
}

/// Device parameters shared by every cell of a system, plus the reference press.
struct DeviceConfig {
  SensorModel sensor{};
  MemristorModel memristor{};
  SwitchModel transistor{};
  double f_press = 20.0;  // lbf

  void validate() const {
    sensor.validate();
    memristor.validate_range();
    transistor.validate();
    if (!(f_press > 0.0)) throw DomainError("f_press must be > 0");
  }

  static std::vector<std::string> keys() {
    return {"sensor.k",        "sensor.c",        "sensor.v_supply", "sensor.r_divider",
            "memristor.r_on",  "memristor.r_off", "switch.g_on",     "switch.g_off",
            "braille.f_press"};
  }

  static DeviceConfig from_config(const FlatConfig& cfg) {
    DeviceConfig d;
    d.sensor.sensitivity_k = cfg.get("sensor.k", d.sensor.sensitivity_k);
    d.sensor.bias_c = cfg.get("sensor.c", d.sensor.bias_c);
    d.sensor.v_supply = cfg.get("sensor.v_supply", d.sensor.v_supply);
    d.sensor.r_divider = cfg.get("sensor.r_divider", d.sensor.r_divider);
    d.memristor.r_on = cfg.get("memristor.r_on", d.memristor.r_on);
    d.memristor.r_off = cfg.get("memristor.r_off", d.memristor.r_off);
    d.transistor.g_on = cfg.get("switch.g_on", d.transistor.g_on);
    d.transistor.g_off = cfg.get("switch.g_off", d.transistor.g_off);
    d.f_press = cfg.get("braille.f_press", d.f_press);
    d.validate();
    return d;
  }

  void write_to(FlatConfig& cfg) const {
    cfg.set("sensor.k", sensor.sensitivity_k);
    cfg.set("sensor.c", sensor.bias_c);
    cfg.set("sensor.v_supply", sensor.v_supply);
    cfg.set("sensor.r_divider", sensor.r_divider);
    cfg.set("memristor.r_on", memristor.r_on);
    cfg.set("memristor.r_off", memristor.r_off);
    cfg.set("switch.g_on", transistor.g_on);
    cfg.set("switch.g_off", transistor.g_off);
    cfg.set("braille.f_press", f_press);
  }

  /// A cell of the given configuration built from these device parameters.
  CellState make_cell(CellConfig config, double force_lbf, double state_w) const {
    CellState c;
    c.config = config;
    c.force_lbf = force_lbf;
    c.sensor = sensor;
    c.memristor = memristor;
    c.memristor.state_w = state_w;
    c.vl_switch = transistor;
    c.vl_switch.selected = true;
    c.hl_switch = transistor;
    c.hl_switch.selected = (config == CellConfig::TwoT1M1S);
    return c;
  }
};

}  // namespace tms
