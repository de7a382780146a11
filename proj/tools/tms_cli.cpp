// tms: experiment runner for the TMS crossbar simulator.
//
// Exit codes: 0 success, 2 configuration or usage error (including missing
// inputs and refused overwrites), 3 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tms/tms.hpp"

namespace fs = std::filesystem;
using namespace tms;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kEnvPrefix = "TMS_";

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::vector<std::string> groups;
  std::string sigma2;
  std::string mode = "analog";
  std::string out = ".";
  bool force = false;

  // subcommand specific
  std::size_t copies = 0;
  std::string dataset_path;
  std::string network_path;
  std::string fidelity = "ideal";
  std::size_t runs = 10;
  std::string wire_values = "0,100,200,400,600,800,900,1000,1500,2000";
  std::string goff_values = "0,1e-8,1e-7";
  std::string cost_table_path;
};

std::vector<std::string> all_config_keys() {
  auto keys = DeviceConfig::keys();
  for (const auto& k : Parasitics::keys()) keys.push_back(k);
  for (const char* k : {"softmax.r_f", "softmax.i_s", "softmax.v_t", "softmax.r_sum", "network.v_read", "train.lr",
                        "train.epochs", "train.batch", "train.sensor_states", "train.state_lr", "eval.draws",
                        "dataset.copies"}) {
    keys.push_back(k);
  }
  return keys;
}

/// Embedded defaults, then the --config file, then TMS_* environment values.
FlatConfig load_config(const Options& o) {
  FlatConfig cfg;
  DeviceConfig{}.write_to(cfg);
  Parasitics::calibrated().write_to(cfg);
  SoftmaxParams{}.write_to(cfg);
  cfg.set("network.v_read", 0.2);
  cfg.set("eval.draws", 20);
  cfg.set("dataset.copies", 5);
  if (!o.config_path.empty()) cfg.merge(FlatConfig::load(o.config_path));
  cfg.apply_env(kEnvPrefix, all_config_keys());
  return cfg;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') throw ConfigError(std::string("invalid ") + what + " value: " + item);
    v.push_back(x);
  }
  if (v.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return v;
}

std::vector<Mode> parse_modes(const std::string& s) {
  if (s == "both") return {Mode::Analog, Mode::Binary};
  return {parse_mode(s)};
}

std::size_t as_count(const FlatConfig& cfg, const std::string& key) {
  const double v = cfg.require(key);
  if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

/// Hash of the effective configuration plus the options that shape outputs.
std::uint64_t run_hash(const FlatConfig& cfg, const std::string& extra) { return fnv1a(extra, cfg.hash()); }

class Outputs {
 public:
  Outputs(const std::string& dir, bool force) : dir_(dir), force_(force) {}

  /// Refuses to clobber any of `names` unless --force was given.
  void claim(std::initializer_list<std::string> names) const {
    for (const auto& n : names) {
      const auto p = dir_ / n;
      if (fs::exists(p) && !force_) {
        throw ConfigError("refusing to overwrite " + p.string() + " (pass --force)");
      }
    }
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) const {
    const auto p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + p.string());
    std::cout << "wrote " << p.string() << "\n";
  }

 private:
  fs::path dir_;
  bool force_;
};

GroupSet single_groups(const Options& o) {
  if (o.groups.size() > 1) throw ConfigError("this command takes one --groups selection");
  return GroupSet::parse(o.groups.empty() ? "fusion" : o.groups.front());
}

int cmd_dataset(const Options& o) {
  const auto cfg = load_config(o);
  const auto devices = DeviceConfig::from_config(cfg);
  const auto groups = single_groups(o);
  const std::size_t copies = o.copies ? o.copies : as_count(cfg, "dataset.copies");
  const Outputs out(o.out, o.force);
  out.claim({"dataset.csv", "dataset_manifest.json"});

  const auto items = build_dataset(groups, copies, o.seed, devices.f_press);
  const std::string body = dataset_to_csv(items);
  const Provenance prov{"dataset", run_hash(cfg, "groups=" + groups.name() + ";copies=" + std::to_string(copies)),
                        o.seed};
  out.write("dataset.csv", prov.csv_header() + body);
  json manifest{{"schema", "tms.dataset_manifest"},
                {"version", 1},
                {"provenance", prov.to_json()},
                {"groups", group_set_to_json(groups)},
                {"copies", copies},
                {"symbols", groups.size()},
                {"count", items.size()},
                {"checksum", hex64(fnv1a(body))}};
  out.write("dataset_manifest.json", dump(manifest));
  return 0;
}

std::vector<DatasetItem> dataset_for(const Options& o, const GroupSet& groups, const FlatConfig& cfg,
                                     const DeviceConfig& devices) {
  if (!o.dataset_path.empty()) return dataset_from_csv(read_text_file(o.dataset_path));
  return build_dataset(groups, as_count(cfg, "dataset.copies"), o.seed, devices.f_press);
}

int cmd_train(const Options& o) {
  const auto cfg = load_config(o);
  const auto devices = DeviceConfig::from_config(cfg);
  const auto groups = single_groups(o);
  const auto sigma2 = parse_list(o.sigma2.empty() ? "0.02" : o.sigma2, "sigma2");
  if (sigma2.size() != 1) throw ConfigError("train takes a single --sigma2 value");
  const Outputs out(o.out, o.force);
  out.claim({"network.json"});

  TrainConfig tc = TrainConfig::from_config(cfg);
  tc.sigma2 = sigma2.front();
  tc.mode = parse_mode(o.mode);
  tc.seed = o.seed;
  const auto data = dataset_for(o, groups, cfg, devices);
  const auto train_set = split_holdout(data).first;
  const auto tn = train(train_set, groups, tc, devices);

  const Provenance prov{"train", run_hash(cfg, "groups=" + groups.name() + ";mode=" + o.mode + ";sigma2=" +
                                                   format_double(tc.sigma2) + ";dataset=" + o.dataset_path),
                        o.seed};
  json doc = network_to_json(tn);
  doc["provenance"] = prov.to_json();
  out.write("network.json", dump(doc));
  return 0;
}

int cmd_eval(const Options& o) {
  const auto cfg = load_config(o);
  if (o.network_path.empty()) throw ConfigError("eval needs --network (run 'tms train' first)");
  if (!fs::exists(o.network_path)) {
    throw ConfigError("network file not found: " + o.network_path + " (run 'tms train' first)");
  }
  const auto tn = network_from_json(json::parse(read_text_file(o.network_path)));
  const auto sigma2 = parse_list(o.sigma2.empty() ? format_double(tn.train_sigma2) : o.sigma2, "sigma2");
  const Mode mode = o.mode.empty() ? tn.mode : parse_mode(o.mode);
  const Outputs out(o.out, o.force);
  out.claim({"eval.csv", "eval_confusions.csv"});

  const auto data = dataset_for(o, tn.groups, cfg, tn.devices);
  const auto test_set = o.dataset_path.empty() ? split_holdout(data).second : data;
  if (test_set.empty()) throw ConfigError("evaluation set is empty");
  const auto hw = map_network(tn, cfg.require("network.v_read"), SoftmaxParams::from_config(cfg));

  EvalConfig ec;
  ec.draws = as_count(cfg, "eval.draws");
  ec.seed = derive_seed(o.seed, 0x6576616cULL);
  ec.sensor.fidelity = parse_fidelity(o.fidelity);
  ec.sensor.parasitics = Parasitics::from_config(cfg);

  const Provenance prov{"eval", run_hash(cfg, "network=" + hex64(fnv1a(read_text_file(o.network_path))) + ";sigma2=" +
                                                  o.sigma2 + ";mode=" + to_string(mode) + ";fidelity=" + o.fidelity),
                        o.seed};
  std::string csv = prov.csv_header() + "scope,mode,sigma2,samples,correct,accuracy_pct\n";
  std::string conf = prov.csv_header() + "sigma2,truth,truth_group,predicted,predicted_group,count\n";
  for (double s2 : sigma2) {
    ec.sigma2 = s2;
    const auto rep = evaluate(hw, test_set, ec, mode);
    csv += rep.groups + "," + to_string(mode) + "," + format_double(s2) + "," + std::to_string(rep.samples) + "," +
           std::to_string(rep.correct) + "," + format_cost(rep.accuracy()) + "\n";
    for (const auto& [g, counts] : rep.per_group) {
      csv += "group" + std::to_string(g) + "," + to_string(mode) + "," + format_double(s2) + "," +
             std::to_string(counts.second) + "," + std::to_string(counts.first) + "," +
             format_cost(rep.group_accuracy(g)) + "\n";
    }
    for (const auto& c : rep.confusions) {
      const auto &t = symbol_table()[c.truth], &p = symbol_table()[c.predicted];
      conf += format_double(s2) + "," + t.label + "," + std::to_string(group_number(t.group)) + "," + p.label + "," +
              std::to_string(group_number(p.group)) + "," + std::to_string(c.count) + "\n";
    }
    std::cout << rep.groups << " " << to_string(mode) << " sigma2=" << format_double(s2)
              << " accuracy=" << format_cost(rep.accuracy()) << "%\n";
  }
  out.write("eval.csv", csv);
  out.write("eval_confusions.csv", conf);
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto cfg = load_config(o);
  SweepConfig sc;
  sc.devices = DeviceConfig::from_config(cfg);
  sc.train = TrainConfig::from_config(cfg);
  sc.copies = as_count(cfg, "dataset.copies");
  sc.eval_draws = as_count(cfg, "eval.draws");
  if (o.groups.empty()) {
    for (const char* g : {"1", "2", "3", "4", "fusion"}) sc.group_sets.push_back(GroupSet::parse(g));
  } else {
    for (const auto& g : o.groups) sc.group_sets.push_back(GroupSet::parse(g));
  }
  sc.sigma2 = parse_list(o.sigma2.empty() ? "0.02,0.05,0.1,0.5" : o.sigma2, "sigma2");
  sc.modes = parse_modes(o.mode);
  if (o.runs < 1) throw ConfigError("--runs must be >= 1");
  sc.seeds.clear();
  for (std::size_t r = 0; r < o.runs; ++r) sc.seeds.push_back(o.seed + r);
  const Outputs out(o.out, o.force);
  out.claim({"sweep_runs.csv", "sweep_table.csv"});

  std::string extra = "sigma2=" + o.sigma2 + ";mode=" + o.mode + ";runs=" + std::to_string(o.runs) + ";groups=";
  for (const auto& g : sc.group_sets) extra += g.name() + " ";
  const Provenance prov{"sweep", run_hash(cfg, extra), o.seed};

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = sweep(sc, [](const SweepRow& r) {
    std::cerr << r.groups << " sigma2=" << format_double(r.sigma2) << " " << to_string(r.mode) << " seed=" << r.seed
              << " accuracy=" << format_cost(r.accuracy) << "\n";
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string runs = prov.csv_header() + "groups,sigma2,mode,seed,accuracy_pct\n";
  for (const auto& r : rows) {
    runs += r.groups + "," + format_double(r.sigma2) + "," + to_string(r.mode) + "," + std::to_string(r.seed) + "," +
            format_cost(r.accuracy) + "\n";
  }
  const auto cells = summarize(rows);
  std::string table = prov.csv_header() + "groups";
  for (Mode m : sc.modes)
    for (double s2 : sc.sigma2) table += "," + to_string(m) + "_sigma2_" + format_double(s2);
  table += "\n";
  for (const auto& g : sc.group_sets) {
    table += g.name();
    for (Mode m : sc.modes)
      for (double s2 : sc.sigma2) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", find_cell(cells, g.name(), s2, m).mean);
        table += std::string(",") + buf;
      }
    table += "\n";
  }
  out.write("sweep_runs.csv", runs);
  out.write("sweep_table.csv", table);
  std::cerr << rows.size() << " runs in " << format_cost(secs) << " s\n";
  return 0;
}

int cmd_leakage(const Options& o) {
  const auto cfg = load_config(o);
  const auto devices = DeviceConfig::from_config(cfg);
  const auto base = Parasitics::from_config(cfg);
  const auto wires = parse_list(o.wire_values, "wire resistance");
  const auto goffs = parse_list(o.goff_values, "switch g_off");
  const Outputs out(o.out, o.force);
  out.claim({"leakage.csv", "leakage_summary.json"});

  const SensorStates ref = SensorStates::Ones();
  auto worst_case = [&](const Parasitics& p) {
    double worst = 0.0, sum = 0.0;
    std::string label;
    for (const auto& sym : symbol_table()) {
      const auto spec = sensor_crossbar(symbol_to_forces(sym, devices.f_press), ref, devices, p);
      const double lf = leakage_fraction(ideal_dual_readout(devices.sensor.v_supply, spec),
                                         solve_nodal(spec, devices.sensor.v_supply, Readout::VlAndHl));
      sum += lf;
      if (lf > worst) {
        worst = lf;
        label = sym.label + "/group" + std::to_string(group_number(sym.group));
      }
    }
    return std::make_tuple(worst, sum / static_cast<double>(symbol_table().size()), label);
  };

  const Provenance prov{"leakage", run_hash(cfg, "wire=" + o.wire_values + ";g_off=" + o.goff_values), std::nullopt};
  std::string csv = prov.csv_header() +
                    "wire_resistance_ohm,switch_g_off_s,readout_resistance_ohm,leakage_max,leakage_mean,worst_symbol,"
                    "status\n";
  for (double g_off : goffs) {
    for (double rw : wires) {
      Parasitics p{rw, g_off, base.readout_resistance};
      csv += format_double(rw) + "," + format_double(g_off) + "," + format_double(p.readout_resistance) + ",";
      try {
        const auto [worst, mean, label] = worst_case(p);
        csv += format_double(worst) + "," + format_double(mean) + "," + label + ",ok\n";
      } catch (const SingularNetworkError& e) {
        csv += ",,,singular: " + std::string(e.what()) + "\n";
      }
    }
  }

  const auto deg = single_active_cell_2x2(devices);
  const auto r = solve_nodal(deg, devices.sensor.v_supply, Readout::VlAndHl);
  std::vector<double> all = r.vl_currents;
  all.insert(all.end(), r.hl_currents.begin(), r.hl_currents.end());
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  const bool equal = (*hi - *lo) < 1e-12;

  const auto [cal_worst, cal_mean, cal_label] = worst_case(base);
  json summary{{"schema", "tms.leakage_summary"},
               {"version", 1},
               {"provenance", prov.to_json()},
               {"parasitics",
                {{"wire_resistance", base.wire_resistance_per_segment},
                 {"switch_g_off", base.switch_g_off},
                 {"readout_resistance", base.readout_resistance}}},
               {"leakage_max", cal_worst},
               {"leakage_mean", cal_mean},
               {"worst_symbol", cal_label},
               {"in_band_0_12_0_20", cal_worst >= 0.12 && cal_worst <= 0.20},
               {"degenerate_2x2_currents", all},
               {"degenerate_2x2_equal_currents", equal}};
  out.write("leakage.csv", csv);
  out.write("leakage_summary.json", dump(summary));
  std::cout << "leakage at configured parasitics: " << format_cost(cal_worst) << " (worst symbol " << cal_label
            << ")\n";
  return 0;
}

int cmd_cost(const Options& o) {
  FlatConfig cfg;
  CostTable::calibrated().write_to(cfg);
  if (!o.cost_table_path.empty()) {
    cfg = FlatConfig::load(o.cost_table_path);
  } else if (!o.config_path.empty()) {
    cfg.merge(FlatConfig::load(o.config_path));
  }
  const auto table = CostTable::from_config(cfg);
  const CostArch arch{};
  const Outputs out(o.out, o.force);
  out.claim({"cost.csv", "cost_orderings.csv"});

  const Provenance prov{"cost", cfg.hash(), std::nullopt};
  out.write("cost.csv", prov.csv_header() + cost_table_csv(arch, table));

  std::string ord = prov.csv_header() + "check,a,b,holds\n";
  for (auto style : {CircuitStyle::Analog, CircuitStyle::Binary}) {
    const auto s = estimate(arch, table, style, Processing::Serial);
    const auto p = estimate(arch, table, style, Processing::Parallel);
    ord += "serial_total_power_below_parallel," + to_string(style) + "_serial," + to_string(style) + "_parallel," +
           (compare(s, p).orderings_hold() ? "true" : "false") + "\n";
  }
  for (auto proc : {Processing::Parallel, Processing::Serial}) {
    const auto a = estimate(arch, table, CircuitStyle::Analog, proc);
    const auto b = estimate(arch, table, CircuitStyle::Binary, proc);
    ord += "analog_amplifier_power_below_binary,analog_" + to_string(proc) + ",binary_" + to_string(proc) + "," +
           (compare(a, b).orderings_hold() ? "true" : "false") + "\n";
  }
  out.write("cost_orderings.csv", ord);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TMS crossbar simulator and Braille recognition experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--config", o.config_path, "Flat key = value config file")->envname("TMS_CONFIG");
    auto* seed = sub->add_option("--seed", o.seed, "Master seed")->envname("TMS_SEED");
    if (seeded) seed->required();
    sub->add_option("--out", o.out, "Output directory")->envname("TMS_OUT");
    sub->add_flag("--force", o.force, "Overwrite existing outputs");
  };

  auto* ds = app.add_subcommand("dataset", "Write a Braille press dataset and its manifest");
  common(ds, true);
  ds->add_option("--groups", o.groups, "Group selection: 1, 2, 3, 4, comma lists, or fusion");
  ds->add_option("--copies", o.copies, "Copies of every symbol (default dataset.copies)");

  auto* tr = app.add_subcommand("train", "Train a network on all but the last copy of each symbol");
  common(tr, true);
  tr->add_option("--groups", o.groups, "Group selection");
  tr->add_option("--sigma2", o.sigma2, "Readout noise variance in lbf^2 (default 0.02)");
  tr->add_option("--mode", o.mode, "analog or binary")->check(CLI::IsMember({"analog", "binary"}));
  tr->add_option("--dataset", o.dataset_path, "Dataset CSV (default: generated from --seed)");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained network on held-out presses");
  common(ev, true);
  ev->add_option("--network", o.network_path, "network.json from 'tms train'")->required();
  ev->add_option("--sigma2", o.sigma2, "Comma-separated noise variances (default: training value)");
  ev->add_option("--mode", o.mode, "analog or binary (default: the network's)")
      ->check(CLI::IsMember({"analog", "binary"}));
  ev->add_option("--dataset", o.dataset_path, "Dataset CSV to evaluate in full");
  ev->add_option("--fidelity", o.fidelity, "Sensor layer model: ideal or nodal")
      ->check(CLI::IsMember({"ideal", "nodal"}));

  auto* sw = app.add_subcommand("sweep", "Accuracy table over groups x sigma2 x mode, averaged over seeds");
  common(sw, true);
  sw->add_option("--groups", o.groups, "Group selections (repeatable; default 1 2 3 4 fusion)");
  sw->add_option("--sigma2", o.sigma2, "Comma-separated noise variances (default 0.02,0.05,0.1,0.5)");
  sw->add_option("--mode", o.mode, "analog, binary or both")->check(CLI::IsMember({"analog", "binary", "both"}));
  sw->add_option("--runs", o.runs, "Seeds per cell, starting at --seed (default 10)");

  auto* lk = app.add_subcommand("leakage", "Sensor crossbar leakage versus line parasitics");
  common(lk, false);
  lk->add_option("--wire-resistance", o.wire_values, "Comma-separated wire resistances per segment (ohm)");
  lk->add_option("--g-off", o.goff_values, "Comma-separated switch off-conductances (S)");

  auto* co = app.add_subcommand("cost", "Area and power table for all style/processing combinations");
  common(co, false);
  co->add_option("--table", o.cost_table_path, "Cost table config (default: calibrated table)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (ds->parsed()) return cmd_dataset(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) {
      if (ev->count("--mode") == 0) o.mode.clear();
      return cmd_eval(o);
    }
    if (sw->parsed()) {
      if (sw->count("--mode") == 0) o.mode = "both";
      return cmd_sweep(o);
    }
    if (lk->parsed()) return cmd_leakage(o);
    if (co->parsed()) return cmd_cost(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const LookupError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
