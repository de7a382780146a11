#pragma once

// Versioned JSON for crossbar specs and trained networks, readout CSV, and
// the provenance header carried by every emitted file.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tms/config.hpp"
#include "tms/crossbar.hpp"
#include "tms/errors.hpp"
#include "tms/pipeline.hpp"

namespace tms {

using json = nlohmann::json;

inline constexpr const char* kToolName = "tms";
inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
  std::string command;
  std::uint64_t config_hash = 0;
  std::optional<std::uint64_t> seed;

  /// "# key=value" lines placed ahead of CSV content.
  std::string csv_header() const {
    std::string s = std::string("# tool=") + kToolName + " " + kToolVersion + " " + command + "\n";
    s += "# config_hash=" + hex64(config_hash) + "\n";
    s += "# seed=" + (seed ? std::to_string(*seed) : std::string("none")) + "\n";
    return s;
  }

  json to_json() const {
    json j{{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"config_hash", hex64(config_hash)}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
  }
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Drops "#" comment lines.
inline std::string strip_comment_lines(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

namespace detail {

// Infinite conductances are written as the string "inf".
inline json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

inline double read_number(const json& j, const char* what) {
  if (j.is_string() && j.get<std::string>() == "inf") return kInfiniteConductance;
  if (!j.is_number()) throw ConfigError(std::string("expected a number for ") + what);
  return j.get<double>();
}

inline void check_schema(const json& j, const char* schema, int version) {
  if (!j.is_object() || j.value("schema", "") != schema) {
    throw ConfigError(std::string("not a ") + schema + " document");
  }
  const int v = j.value("version", 0);
  if (v != version) {
    throw ConfigError(std::string(schema) + " version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(version) + ")");
  }
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ConfigError(std::string(what) + " rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = read_number(j[i][c], what);
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i], what);
  return v;
}

inline json switch_to_json(const SwitchModel& s) {
  return {{"g_on", number_or_inf(s.g_on)}, {"g_off", s.g_off}, {"selected", s.selected}};
}

inline SwitchModel switch_from_json(const json& j) {
  SwitchModel s;
  s.g_on = read_number(j.at("g_on"), "g_on");
  s.g_off = read_number(j.at("g_off"), "g_off");
  s.selected = j.at("selected").get<bool>();
  return s;
}

}  // namespace detail

inline json crossbar_to_json(const CrossbarSpec& spec) {
  json cells = json::array();
  for (const auto& c : spec.cells) {
    cells.push_back({{"config", to_string(c.config)},
                     {"force_lbf", c.force_lbf},
                     {"sensor",
                      {{"k", c.sensor.sensitivity_k},
                       {"c", c.sensor.bias_c},
                       {"v_supply", c.sensor.v_supply},
                       {"r_divider", c.sensor.r_divider}}},
                     {"memristor", {{"r_on", c.memristor.r_on}, {"r_off", c.memristor.r_off}, {"w", c.memristor.state_w}}},
                     {"vl_switch", detail::switch_to_json(c.vl_switch)},
                     {"hl_switch", detail::switch_to_json(c.hl_switch)}});
  }
  return {{"schema", "tms.crossbar"},
          {"version", 1},
          {"m", spec.m},
          {"n", spec.n},
          {"readout", to_string(spec.readout)},
          {"wire_resistance_per_segment", spec.wire_resistance_per_segment},
          {"readout_resistance", spec.readout_resistance},
          {"cells", cells}};
}

inline CrossbarSpec crossbar_from_json(const json& j) {
  detail::check_schema(j, "tms.crossbar", 1);
  try {
    CrossbarSpec spec;
    spec.m = j.at("m").get<std::size_t>();
    spec.n = j.at("n").get<std::size_t>();
    spec.readout = parse_readout(j.at("readout").get<std::string>());
    spec.wire_resistance_per_segment = j.at("wire_resistance_per_segment").get<double>();
    spec.readout_resistance = j.at("readout_resistance").get<double>();
    for (const auto& cj : j.at("cells")) {
      CellState c;
      c.config = parse_cell_config(cj.at("config").get<std::string>());
      c.force_lbf = cj.at("force_lbf").get<double>();
      const auto& s = cj.at("sensor");
      c.sensor = {s.at("k").get<double>(), s.at("c").get<double>(), s.at("v_supply").get<double>(),
                  s.at("r_divider").get<double>()};
      const auto& m = cj.at("memristor");
      c.memristor = {m.at("r_on").get<double>(), m.at("r_off").get<double>(), m.at("w").get<double>()};
      c.vl_switch = detail::switch_from_json(cj.at("vl_switch"));
      c.hl_switch = detail::switch_from_json(cj.at("hl_switch"));
      spec.cells.push_back(c);
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed crossbar document: ") + e.what());
  }
}

inline json group_set_to_json(const GroupSet& g) {
  json a = json::array();
  for (Group x : g.groups()) a.push_back(group_number(x));
  return a;
}

inline json network_to_json(const TrainedNetwork& tn) {
  FlatConfig dev;
  tn.devices.write_to(dev);
  json devices = json::object();
  for (const auto& [k, v] : dev.values()) devices[k] = v;
  return {{"schema", "tms.network"},
          {"version", 1},
          {"groups", group_set_to_json(tn.groups)},
          {"mode", to_string(tn.mode)},
          {"arch", {{"inputs", tn.arch.inputs}, {"hidden", tn.arch.hidden}, {"outputs", tn.arch.outputs}}},
          {"seed", tn.seed},
          {"train_sigma2", tn.train_sigma2},
          {"devices", devices},
          {"sensor_states", detail::matrix_to_json(tn.sensor_states)},
          {"thresholds", detail::vector_to_json(tn.thresholds)},
          {"w_hidden", detail::matrix_to_json(tn.w_hidden)},
          {"b_hidden", detail::vector_to_json(tn.b_hidden)},
          {"w_out", detail::matrix_to_json(tn.w_out)},
          {"b_out", detail::vector_to_json(tn.b_out)}};
}

inline TrainedNetwork network_from_json(const json& j) {
  detail::check_schema(j, "tms.network", 1);
  try {
    TrainedNetwork tn;
    std::string spec;
    for (const auto& g : j.at("groups")) spec += (spec.empty() ? "" : ",") + std::to_string(g.get<int>());
    tn.groups = GroupSet::parse(spec);
    tn.mode = parse_mode(j.at("mode").get<std::string>());
    const auto& a = j.at("arch");
    tn.arch = {a.at("inputs").get<std::size_t>(), a.at("hidden").get<std::size_t>(), a.at("outputs").get<std::size_t>()};
    tn.seed = j.at("seed").get<std::uint64_t>();
    tn.train_sigma2 = j.at("train_sigma2").get<double>();
    FlatConfig dev;
    for (const auto& [k, v] : j.at("devices").items()) dev.set(k, v.get<double>());
    tn.devices = DeviceConfig::from_config(dev);
    const Eigen::MatrixXd states = detail::matrix_from_json(j.at("sensor_states"), "sensor_states");
    if (states.rows() != 4 || states.cols() != 2) throw DimensionError("sensor_states must be 4x2");
    tn.sensor_states = states;
    tn.thresholds = detail::vector_from_json(j.at("thresholds"), "thresholds");
    tn.w_hidden = detail::matrix_from_json(j.at("w_hidden"), "w_hidden");
    tn.b_hidden = detail::vector_from_json(j.at("b_hidden"), "b_hidden");
    tn.w_out = detail::matrix_from_json(j.at("w_out"), "w_out");
    tn.b_out = detail::vector_from_json(j.at("b_out"), "b_out");
    tn.validate();
    return tn;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed network document: ") + e.what());
  }
}

/// Full-precision, stable text for a JSON document.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// One row per evaluation: a label then VL currents then HL currents (A).
inline std::string readouts_to_csv(const std::vector<std::pair<std::string, ReadoutVector>>& rows) {
  if (rows.empty()) return "label\n";
  const auto n = rows.front().second.vl_currents.size();
  const auto m = rows.front().second.hl_currents.size();
  std::string out = "label";
  for (std::size_t l = 0; l < n; ++l) out += ",vl" + std::to_string(l + 1) + "_a";
  for (std::size_t k = 0; k < m; ++k) out += ",hl" + std::to_string(k + 1) + "_a";
  out += "\n";
  for (const auto& [label, r] : rows) {
    if (r.vl_currents.size() != n || r.hl_currents.size() != m) throw DimensionError("readout rows differ in shape");
    out += label;
    for (double i : r.vl_currents) out += "," + format_double(i);
    for (double i : r.hl_currents) out += "," + format_double(i);
    out += "\n";
  }
  return out;
}

}  // namespace tms
