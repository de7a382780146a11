#pragma once

// Area and power accounting for the recognition system under
// {analog, binary} x {serial, parallel} processing.
//
// Instance counts come from the network dimensions; unit costs come from a
// CostTable. Parallel processing instantiates one readout amplifier per
// sensor line and one TIA, exponential and division stage per output line
// plus one summing stage. Serial processing shares one amplifier per layer
// stage through analog multiplexers, with a sample-and-hold per output so
// the single division circuit can normalize the held exponentials.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "tms/config.hpp"
#include "tms/errors.hpp"

namespace tms {

enum class CircuitStyle { Analog, Binary };
enum class Processing { Serial, Parallel };

inline std::string to_string(CircuitStyle s) { return s == CircuitStyle::Analog ? "analog" : "binary"; }
inline std::string to_string(Processing p) { return p == Processing::Serial ? "serial" : "parallel"; }

/// Layer dimensions the cost model counts against.
struct CostArch {
  std::size_t sensors = 8;
  std::size_t sensor_lines = 6;
  std::size_t hidden = 14;
  std::size_t outputs = 125;

  bool operator==(const CostArch&) const = default;

  /// Weight cells of the hidden and output crossbars: two columns per signed
  /// weight and one bias row per layer.
  std::size_t hidden_cells() const { return 2 * ((sensor_lines + 1) * hidden + (hidden + 1) * outputs); }
};

/// Unit costs keyed "<style>.<entry>", e.g. "analog.cell_area", plus the
/// shared "sensor_area". Areas in m^2, powers in W.
class CostTable {
 public:
  static const std::vector<std::string>& entries() {
    static const std::vector<std::string> e{"cell_area",  "cell_power", "sense_amp_area", "stage_area", "amp_power",
                                            "mux_area",   "mux_power",  "hold_area",      "hold_power"};
    return e;
  }

  static CostTable from_config(const FlatConfig& cfg) {
    CostTable t;
    for (const auto& [k, v] : cfg.values()) {
      if (k.rfind("cost.", 0) != 0) continue;
      if (v < 0.0) throw ConfigError("cost entry " + k + " must be >= 0");
      t.values_[k.substr(5)] = v;
    }
    return t;
  }

  /// Fitted once against the reference fusion system (8 sensors, 6 x 14
  /// hidden layer, 125 outputs); data/cost_table.cfg holds the same values.
  static CostTable calibrated() {
    CostTable t;
    t.set("sensor_area", 0.0025);
    t.set("analog.cell_area", 1.0010136847440445e-08);
    t.set("analog.cell_power", 6.626201315123926e-08);
    t.set("analog.sense_amp_area", 5.633333333333333e-07);
    t.set("analog.stage_area", 1.1242307692307693e-06);
    t.set("analog.amp_power", 0.0005969696969696969);
    t.set("analog.mux_area", 5.711111111111112e-08);
    t.set("analog.mux_power", 2.8631138975966556e-06);
    t.set("analog.hold_area", 6.205170598290599e-07);
    t.set("analog.hold_power", 0.0);
    t.set("binary.cell_area", 1.4249873289406992e-07);
    t.set("binary.cell_power", 9.104704097116843e-07);
    t.set("binary.sense_amp_area", 1.1283333333333335e-06);
    t.set("binary.stage_area", 7.5179487179487185e-06);
    t.set("binary.amp_power", 0.004797979797979798);
    t.set("binary.mux_area", 5.694444444444441e-08);
    t.set("binary.mux_power", 0.0005242075931731104);
    t.set("binary.hold_area", 9.281034188034188e-07);
    t.set("binary.hold_power", 0.0);
    return t;
  }

  /// Every entry at zero.
  static CostTable zero() {
    CostTable t;
    t.set("sensor_area", 0.0);
    for (const char* s : {"analog", "binary"})
      for (const auto& e : entries()) t.set(std::string(s) + "." + e, 0.0);
    return t;
  }

  void set(const std::string& key, double v) {
    if (!(v >= 0.0)) throw ConfigError("cost entry " + key + " must be >= 0");
    values_[key] = v;
  }

  double get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("cost table has no entry '" + key + "'");
    return it->second;
  }

  double get(CircuitStyle s, const std::string& entry) const { return get(to_string(s) + "." + entry); }

  void write_to(FlatConfig& cfg) const {
    for (const auto& [k, v] : values_) cfg.set("cost." + k, v);
  }

  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct CostBlock {
  std::string name;
  double area = 0.0;   // m^2
  double power = 0.0;  // W
};

struct CostReport {
  CostArch arch;
  CircuitStyle style = CircuitStyle::Analog;
  Processing processing = Processing::Parallel;
  std::vector<CostBlock> blocks;  // crossbar_layer1, crossbar_layer23, amplifiers_layer1, amplifiers_layer23
  double total_area = 0.0;
  double total_power = 0.0;

  const CostBlock& block(const std::string& name) const {
    for (const auto& b : blocks)
      if (b.name == name) return b;
    throw LookupError("no cost block named " + name);
  }

  double crossbar_power() const { return block("crossbar_layer1").power + block("crossbar_layer23").power; }
  double amplifier_power() const { return block("amplifiers_layer1").power + block("amplifiers_layer23").power; }
};

namespace detail {

// Looks up a unit cost, naming the block that needs it when it is missing.
inline double unit_cost(const CostTable& t, CircuitStyle s, const std::string& entry, const std::string& block) {
  try {
    return t.get(s, entry);
  } catch (const ConfigError&) {
    throw ConfigError("cost table is missing " + to_string(s) + "." + entry + " needed by block " + block);
  }
}

}  // namespace detail

inline CostReport estimate(const CostArch& arch, const CostTable& table, CircuitStyle style, Processing processing) {
  if (arch.sensors < 1 || arch.sensor_lines < 1 || arch.hidden < 1 || arch.outputs < 1) {
    throw DimensionError("cost model needs non-empty layers");
  }
  auto u = [&](const std::string& entry, const std::string& block) {
    return detail::unit_cost(table, style, entry, block);
  };
  const auto n = [](std::size_t c) { return static_cast<double>(c); };

  CostReport r;
  r.arch = arch;
  r.style = style;
  r.processing = processing;

  double sensor_area = 0.0;
  try {
    sensor_area = table.get("sensor_area");
  } catch (const ConfigError&) {
    throw ConfigError("cost table is missing sensor_area needed by block crossbar_layer1");
  }
  r.blocks.push_back({"crossbar_layer1", n(arch.sensors) * sensor_area,
                      n(arch.sensors) * u("cell_power", "crossbar_layer1")});
  r.blocks.push_back({"crossbar_layer23", n(arch.hidden_cells()) * u("cell_area", "crossbar_layer23"),
                      n(arch.hidden_cells()) * u("cell_power", "crossbar_layer23")});

  const double amp_power = u("amp_power", "amplifiers");
  const std::size_t l23_lines = arch.hidden + arch.outputs;
  if (processing == Processing::Parallel) {
    // TIAs on every hidden and output line, exp and division per output, one sum.
    const std::size_t stages = l23_lines + 2 * arch.outputs + 1;
    r.blocks.push_back({"amplifiers_layer1", n(arch.sensor_lines) * u("sense_amp_area", "amplifiers_layer1"),
                        n(arch.sensor_lines) * amp_power});
    r.blocks.push_back({"amplifiers_layer23", n(stages) * u("stage_area", "amplifiers_layer23"), n(stages) * amp_power});
  } else {
    const double mux_area = u("mux_area", "amplifiers"), mux_power = u("mux_power", "amplifiers");
    r.blocks.push_back({"amplifiers_layer1",
                        u("sense_amp_area", "amplifiers_layer1") + n(arch.sensor_lines) * mux_area,
                        amp_power + n(arch.sensor_lines) * mux_power});
    // One shared TIA, exp, sum and division stage.
    r.blocks.push_back({"amplifiers_layer23",
                        4.0 * u("stage_area", "amplifiers_layer23") + n(l23_lines) * mux_area +
                            n(arch.outputs) * u("hold_area", "amplifiers_layer23"),
                        4.0 * amp_power + n(l23_lines) * mux_power +
                            n(arch.outputs) * u("hold_power", "amplifiers_layer23")});
  }
  for (const auto& b : r.blocks) {
    r.total_area += b.area;
    r.total_power += b.power;
  }
  return r;
}

struct CostComparison {
  std::vector<CostBlock> deltas;  // b - a per block
  double total_area_delta = 0.0;
  double total_power_delta = 0.0;
  std::vector<std::string> violations;  // expected orderings that do not hold

  bool orderings_hold() const { return violations.empty(); }
};

/// Per-block and total deltas (b - a). Where the pair differs in exactly one
/// of processing or style, checks the expected ordering: serial draws less
/// total power than parallel, and analog amplifiers draw less than binary.
inline CostComparison compare(const CostReport& a, const CostReport& b) {
  if (!(a.arch == b.arch)) throw DimensionError("cost reports describe different architectures");
  CostComparison c;
  for (const auto& blk : a.blocks) {
    const auto& other = b.block(blk.name);
    c.deltas.push_back({blk.name, other.area - blk.area, other.power - blk.power});
  }
  c.total_area_delta = b.total_area - a.total_area;
  c.total_power_delta = b.total_power - a.total_power;

  if (a.style == b.style && a.processing != b.processing) {
    const auto& serial = a.processing == Processing::Serial ? a : b;
    const auto& parallel = a.processing == Processing::Serial ? b : a;
    if (!(serial.total_power < parallel.total_power)) {
      c.violations.push_back(to_string(a.style) + ": serial total power is not below parallel");
    }
  }
  if (a.processing == b.processing && a.style != b.style) {
    const auto& analog = a.style == CircuitStyle::Analog ? a : b;
    const auto& binary = a.style == CircuitStyle::Analog ? b : a;
    if (!(analog.amplifier_power() < binary.amplifier_power())) {
      c.violations.push_back(to_string(a.processing) + ": analog amplifier power is not below binary");
    }
  }
  return c;
}

/// Ten significant digits, shortest form.
inline std::string format_cost(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline const std::vector<std::pair<CircuitStyle, Processing>>& cost_columns() {
  static const std::vector<std::pair<CircuitStyle, Processing>> cols{{CircuitStyle::Analog, Processing::Parallel},
                                                                      {CircuitStyle::Analog, Processing::Serial},
                                                                      {CircuitStyle::Binary, Processing::Parallel},
                                                                      {CircuitStyle::Binary, Processing::Serial}};
  return cols;
}

/// Table with one row per circuit block and an area/power column pair per
/// (style, processing). Crossbar power and amplifier power are reported once
/// per layer pair, on the layer-1 row.
inline std::string cost_table_csv(const CostArch& arch, const CostTable& table) {
  std::vector<CostReport> reports;
  for (const auto& [s, p] : cost_columns()) reports.push_back(estimate(arch, table, s, p));

  std::string out = "block";
  for (const auto& r : reports) {
    const std::string col = to_string(r.style) + "_" + to_string(r.processing);
    out += "," + col + "_area_m2," + col + "_power_w";
  }
  out += "\n";
  const char* rows[] = {"crossbar_layer1", "crossbar_layer23", "amplifiers_layer1", "amplifiers_layer23"};
  for (const char* name : rows) {
    out += name;
    for (const auto& r : reports) {
      out += "," + format_cost(r.block(name).area) + ",";
      if (std::string(name) == "crossbar_layer1") out += format_cost(r.crossbar_power());
      if (std::string(name) == "amplifiers_layer1") out += format_cost(r.amplifier_power());
    }
    out += "\n";
  }
  out += "total";
  for (const auto& r : reports) out += "," + format_cost(r.total_area) + "," + format_cost(r.total_power);
  out += "\n";
  return out;
}

}  // namespace tms
