#include <gtest/gtest.h>

#include "tms/io.hpp"

using namespace tms;

TEST(FlatConfigTest, ParsesCommentsAndWhitespace) {
  const auto cfg = FlatConfig::parse("# header\n  a.b = 1.5  # trailing\n\nc=2e-3\n");
  EXPECT_EQ(cfg.require("a.b"), 1.5);
  EXPECT_EQ(cfg.get("c", 0.0), 2e-3);
  EXPECT_EQ(cfg.get("missing", 7.0), 7.0);
  EXPECT_THROW(cfg.require("missing"), ConfigError);
}

TEST(FlatConfigTest, ErrorsCarryLineNumbers) {
  try {
    FlatConfig::parse("a = 1\nb = nope\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(FlatConfig::parse("novalue\n"), ConfigError);
  EXPECT_THROW(FlatConfig::parse(" = 3\n"), ConfigError);
  EXPECT_THROW(FlatConfig::load("/nonexistent/path.cfg"), ConfigError);
}

TEST(FlatConfigTest, MergeAndHash) {
  auto a = FlatConfig::parse("x = 1\ny = 2\n");
  const auto b = FlatConfig::parse("y = 3\nz = 4\n");
  const auto h0 = a.hash();
  a.merge(b);
  EXPECT_EQ(a.require("y"), 3.0);
  EXPECT_EQ(a.require("z"), 4.0);
  EXPECT_NE(a.hash(), h0);
  EXPECT_EQ(FlatConfig::parse("p=1\nq=2\n").hash(), FlatConfig::parse("q = 2\np = 1.0\n").hash());
  EXPECT_EQ(FlatConfig::env_name("TMS_", "sensor.bias_c"), "TMS_SENSOR_BIAS_C");
}

TEST(FlatConfigTest, DefaultFileMatchesBuiltInDevices) {
  const auto cfg = FlatConfig::load(std::string(TMS_DATA_DIR) + "/default.cfg");
  const auto d = DeviceConfig::from_config(cfg);
  const DeviceConfig ref;
  EXPECT_EQ(d.sensor.sensitivity_k, ref.sensor.sensitivity_k);
  EXPECT_EQ(d.memristor.r_on, ref.memristor.r_on);
  EXPECT_EQ(d.f_press, ref.f_press);
  const auto p = Parasitics::from_config(cfg);
  EXPECT_EQ(p.wire_resistance_per_segment, Parasitics::calibrated().wire_resistance_per_segment);
  EXPECT_EQ(p.switch_g_off, Parasitics::calibrated().switch_g_off);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(20.0), "20");
  EXPECT_EQ(format_double(0.1), "0.1");
  for (double v : {1.0 / 3.0, 2.99778e-5, 1e-300, 123456789.123}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(CrossbarJson, RoundTripWithInfiniteSwitch) {
  DeviceConfig d;
  auto spec = single_active_cell_2x2(d);
  spec.wire_resistance_per_segment = 12.5;
  const auto text = dump(crossbar_to_json(spec));
  EXPECT_NE(text.find("\"inf\""), std::string::npos);
  const auto back = crossbar_from_json(json::parse(text));
  EXPECT_EQ(back.m, 2u);
  EXPECT_EQ(back.readout, Readout::VlAndHl);
  EXPECT_EQ(back.wire_resistance_per_segment, 12.5);
  EXPECT_TRUE(std::isinf(back.at(0, 0).vl_switch.g_on));
  EXPECT_EQ(back.at(0, 0).force_lbf, d.f_press);
  const auto a = solve_nodal(spec, 0.5, Readout::VlAndHl), b = solve_nodal(back, 0.5, Readout::VlAndHl);
  EXPECT_EQ(a.vl_currents, b.vl_currents);
  EXPECT_EQ(a.hl_currents, b.hl_currents);
}

TEST(CrossbarJson, RejectsWrongSchemaVersionAndShape) {
  auto j = crossbar_to_json(single_active_cell_2x2(DeviceConfig{}));
  j["version"] = 2;
  try {
    crossbar_from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
  j["version"] = 1;
  j["cells"].erase(0);
  EXPECT_THROW(crossbar_from_json(j), DimensionError);
  EXPECT_THROW(crossbar_from_json(json{{"schema", "other"}}), ConfigError);
  json bad = crossbar_to_json(single_active_cell_2x2(DeviceConfig{}));
  bad.erase("m");
  EXPECT_THROW(crossbar_from_json(bad), ConfigError);
}

TEST(NetworkJson, BitExactRoundTrip) {
  const GroupSet gs{Group::Group4};
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 3;
  cfg.mode = Mode::Binary;
  const auto tn = train(build_dataset(gs, 2, 3), gs, cfg);
  auto j = network_to_json(tn);
  j["provenance"] = Provenance{"train", 0x1234, 3}.to_json();
  const auto back = network_from_json(json::parse(dump(j)));
  EXPECT_EQ(back.w_hidden, tn.w_hidden);
  EXPECT_EQ(back.b_hidden, tn.b_hidden);
  EXPECT_EQ(back.w_out, tn.w_out);
  EXPECT_EQ(back.b_out, tn.b_out);
  EXPECT_EQ(back.thresholds, tn.thresholds);
  EXPECT_EQ(back.sensor_states, tn.sensor_states);
  EXPECT_EQ(back.mode, Mode::Binary);
  EXPECT_EQ(back.groups.name(), "group4");
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(dump(network_to_json(back)), dump(network_to_json(tn)));
}

TEST(NetworkJson, MismatchedShapesRejected) {
  const GroupSet gs{Group::Group1};
  TrainConfig cfg;
  cfg.epochs = 1;
  auto j = network_to_json(train(build_dataset(gs, 1, 1), gs, cfg));
  j["groups"] = json::array({1, 2});
  EXPECT_THROW(network_from_json(j), DimensionError);
  j["version"] = 9;
  EXPECT_THROW(network_from_json(j), ConfigError);
}

TEST(Provenance, CsvHeader) {
  const Provenance p{"cost", 0xabcdefULL, std::nullopt};
  EXPECT_EQ(p.csv_header(), "# tool=tms 0.1.0 cost\n# config_hash=0000000000abcdef\n# seed=none\n");
  EXPECT_EQ(strip_comment_lines(p.csv_header() + "a,b\n1,2\n"), "a,b\n1,2\n");
  EXPECT_EQ(Provenance({"train", 1, 42}).to_json()["seed"], 42);
}

TEST(ReadoutCsv, ColumnsAndShapeCheck) {
  const std::vector<std::pair<std::string, ReadoutVector>> rows{{"A", {{1e-6, 2e-6}, {3e-6}}},
                                                                {"B", {{0.5, 0.0}, {1.0}}}};
  EXPECT_EQ(readouts_to_csv(rows), "label,vl1_a,vl2_a,hl1_a\nA,1e-06,2e-06,3e-06\nB,0.5,0,1\n");
  EXPECT_EQ(readouts_to_csv({}), "label\n");
  EXPECT_THROW(readouts_to_csv({{"A", {{1.0}, {}}}, {"B", {{1.0, 2.0}, {}}}}), DimensionError);
}
