#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "kg/cli.hpp"

using namespace kg;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json{{"system", {{"d", 1}, {"b", {1.0}}, {"c", {1.0}}}}};
}

json default_doc() {
  json doc = minimal_doc();
  doc["system"]["Q"] = {{{"alpha", 1}, {"beta", 1}, {"gamma", 1}, {"slot_a", 0}, {"slot_b", 0},
                         {"value", 1.0}}};
  return doc;
}

}  // namespace

TEST_CASE("config parsing: defaults, strictness, key-path errors") {
  auto cfg = config_from_json(minimal_doc());
  CHECK(cfg.system.d == 1);
  CHECK(cfg.n == 32);
  CHECK(cfg.T == 10.0);
  CHECK(cfg.dt == 0.1);
  CHECK(cfg.output_dt == 1.0);
  CHECK(cfg.scheme == Scheme::rk4_profile);
  CHECK(cfg.preset == "stkg");
  CHECK(cfg.tolerance == 1e-10);
  CHECK(cfg.triples.empty());
  CHECK(cfg.search_box == std::array<double, 4>{0.1, 5.0, -6.0, 6.0});

  // b array length != d names the key.
  json bad = minimal_doc();
  bad["system"]["b"] = {1.0, 2.0};
  try {
    config_from_json(bad);
    FAIL("expected a validation error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("system.b") != std::string::npos);
  }

  // unknown keys are rejected, naming the key.
  json unk = minimal_doc();
  unk["masses"] = {1.0};
  try {
    config_from_json(unk);
    FAIL("expected a validation error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("masses") != std::string::npos);
  }
  json unk2 = minimal_doc();
  unk2["grid"] = {{"n", 16}, {"cells", 3}};
  CHECK_THROWS_AS(config_from_json(unk2), validation_error);

  // index ranges are validated with the full key path.
  json oob = default_doc();
  oob["system"]["Q"][0]["gamma"] = 2;
  try {
    config_from_json(oob);
    FAIL("expected a validation error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("system.Q[0].gamma") != std::string::npos);
  }
  json badtrip = minimal_doc();
  badtrip["triples"] = {{1, 1, 2}};
  CHECK_THROWS_AS(config_from_json(badtrip), validation_error);

  // missing mandatory keys.
  CHECK_THROWS_AS(config_from_json(json::object()), validation_error);
  json nod = minimal_doc();
  nod["system"].erase("c");
  CHECK_THROWS_AS(config_from_json(nod), validation_error);

  // file-level errors.
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), validation_error);
}

TEST_CASE("config echo round-trips to an equivalent config") {
  json doc = default_doc();
  doc["grid"] = {{"n", 24}, {"L", 48.0}};
  doc["time"] = {{"T", 5.0}, {"dt", 0.05}, {"output_dt", 0.5}};
  doc["scheme"] = "exponential_midpoint";
  doc["data"] = {{"amplitude", {0.01}}, {"width", {2.0}}};
  doc["triples"] = {{1, 1, 1}, {-1, 1, -1}};
  doc["localization"] = {{"j", 2}, {"k", 0}, {"l", -1}};
  doc["caps"] = {{"N_sub", 6}, {"K0", 12.0}};
  auto cfg = config_from_json(doc);
  auto echo = config_echo(cfg);
  auto cfg2 = config_from_json(echo);
  CHECK(config_echo(cfg2) == echo);
  CHECK(cfg2.n == 24);
  CHECK(cfg2.scheme == Scheme::exponential_midpoint);
  CHECK(cfg2.triples.size() == 2);
  CHECK(cfg2.triples[1].sigma == -1);
  CHECK(cfg2.localization.has_value());
  CHECK(cfg2.caps.N_sub == 6);
}

TEST_CASE("analyze: sphere family, empty resonances, empty triple list") {
  json doc;
  doc["system"] = {{"d", 3}, {"b", {2.0, 1.0, 1.0}}, {"c", {1.0, 1.0, 1.0}}};
  doc["triples"] = {{1, 2, 3}};
  auto rep = analyze_report(config_from_json(doc));
  CHECK(rep["schema_version"] == "1.0");
  CHECK(rep["command"] == "analyze");
  CHECK(rep["results"]["error_count"] == 0);
  const auto& entry = rep["results"]["triples"][0];
  CHECK(entry["resonance"]["kind"] == "sphere_family");
  CHECK(entry["resonance"]["rho"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(entry["factorization"]["reduced"] == true);
  CHECK(entry["sublevel"]["scan"].size() == 5);

  // d = 1, b = c = (1): conditions hold, triple (1,1,1) has no resonances.
  json d1 = minimal_doc();
  d1["triples"] = {{1, 1, 1}};
  auto rep1 = analyze_report(config_from_json(d1));
  CHECK(rep1["results"]["conditions"]["assm1_holds"] == true);
  CHECK(rep1["results"]["conditions"]["assm2_holds"] == true);
  CHECK(rep1["results"]["triples"][0]["resonance"]["kind"] == "empty");

  // empty triple list is a valid document with an empty results array.
  auto rep0 = analyze_report(config_from_json(minimal_doc()));
  CHECK(rep0["results"]["triples"].empty());
  CHECK(rep0["results"]["error_count"] == 0);
}

TEST_CASE("evolve: row-count contract and report envelope") {
  json doc = default_doc();
  doc["grid"] = {{"n", 24}, {"L", 75.4}};
  doc["time"] = {{"T", 10.0}, {"dt", 0.5}, {"output_dt", 1.0}};
  std::string csv;
  auto rep = evolve_report(config_from_json(doc), &csv);
  CHECK(rep["command"] == "evolve");
  CHECK(rep["results"]["rows"] == 11);  // floor(T/output_dt) + 1
  CHECK(rep["results"]["aborted"] == false);
  CHECK(rep["results"]["max_energy_ratio"].get<double>() <= 1.01);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 12);  // header + one row per snapshot
  CHECK(csv.rfind("t,E,L2,Linf_u,Linf_du,cauchy_defect\n", 0) == 0);
}

TEST_CASE("decay: preset fit lands in the expected band") {
  std::string csv;
  auto rep = decay_report(config_from_json(minimal_doc()), &csv);
  double slope = rep["results"]["slope"].get<double>();
  CHECK(rep["results"]["preset"] == "stkg");
  CHECK(slope >= -1.6);
  CHECK(slope <= -1.4);
  CHECK(rep["results"]["reference_slope"].get<double>() == doctest::Approx(-1.5));
  CHECK(csv.rfind("t,sup\n", 0) == 0);

  json bad = minimal_doc();
  bad["preset"] = "warp9";
  CHECK_THROWS_AS(decay_report(config_from_json(bad)), validation_error);
}

TEST_CASE("verify: all invariants pass and the output is deterministic") {
  auto cfg = config_from_json(default_doc());
  auto rep = verify_report(cfg);
  for (const char* key :
       {"schema_version", "command", "config", "results", "tolerances", "wall_clock_seconds"})
    CHECK(rep.contains(key));
  CHECK(rep["results"]["all_pass"] == true);
  const auto& checks = rep["results"]["checks"];
  CHECK(checks.size() >= 12);
  for (const auto& c : checks) {
    CHECK(c.contains("name"));
    CHECK(c["pass"] == true);
    CHECK(c["measured"].get<double>() <= c["tolerance"].get<double>());
  }

  auto rep2 = verify_report(cfg);
  rep.erase("wall_clock_seconds");
  rep2.erase("wall_clock_seconds");
  CHECK(rep.dump() == rep2.dump());
}

TEST_CASE("run_cli: exit codes and artifact writing") {
  // Write a config file and drive the real entry point.
  std::string dir = "/tmp/kg_cli_test";
  std::filesystem::create_directories(dir);
  std::string cfg_path = dir + "/config.json";
  {
    json doc = default_doc();
    doc["grid"] = {{"n", 16}, {"L", 50.0}};
    doc["time"] = {{"T", 3.0}, {"dt", 0.5}, {"output_dt", 1.0}};
    std::ofstream(cfg_path) << doc.dump(2);
  }
  auto run = [&](std::vector<const char*> args) {
    args.insert(args.begin(), "kgms");
    return run_cli(int(args.size()), args.data());
  };
  CHECK(run({"evolve", "--config", cfg_path.c_str(), "--out", dir.c_str()}) == 0);
  CHECK(std::ifstream(dir + "/report.json").good());
  CHECK(std::ifstream(dir + "/trajectory.csv").good());
  CHECK(std::ifstream(dir + "/state_final.json").good());
  {
    json rep = json::parse(std::ifstream(dir + "/report.json"));
    CHECK(rep["results"]["rows"] == 4);
  }
  CHECK(run({"analyze", "--config", cfg_path.c_str(), "--out", dir.c_str()}) == 0);
  // validation errors exit 1
  CHECK(run({"evolve", "--config", "/nonexistent.json"}) == 1);
  std::string bad_path = dir + "/bad.json";
  {
    json doc = minimal_doc();
    doc["typo_key"] = 1;
    std::ofstream(bad_path) << doc.dump();
  }
  CHECK(run({"analyze", "--config", bad_path.c_str(), "--out", dir.c_str()}) == 1);
}
