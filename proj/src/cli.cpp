#include "kg/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "kg/dyadic.hpp"
#include "kg/oscillatory.hpp"
#include "kg/phase.hpp"
#include "kg/spherical.hpp"

namespace kg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Strict config parsing.
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
  throw validation_error("config: " + path + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad_key(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad_key(path, "unknown key '" + it.key() + "'");
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) bad_key(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad_key(path, "expected an integer");
  return j.get<int>();
}

std::vector<double> get_num_array(const json& j, const std::string& path) {
  if (!j.is_array()) bad_key(path, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(get_num(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

int get_component(const json& e, const char* key, int d, const std::string& path) {
  if (!e.contains(key)) bad_key(path, std::string("missing key '") + key + "'");
  int v = get_int(e[key], path + "." + key);
  if (v < 1 || v > d) bad_key(path + "." + key, "component index out of range 1.." + std::to_string(d));
  return v;
}

int get_axis(const json& e, const char* key, const std::string& path) {
  int v = get_int(e.contains(key) ? e[key] : json(-1), path + "." + key);
  if (v < 0 || v > 2) bad_key(path + "." + key, "axis index out of range 0..2");
  return v;
}

void parse_system(const json& js, SystemConfig& sys) {
  check_keys(js, "system", {"d", "b", "c", "A", "B", "Q"});
  if (!js.contains("d")) bad_key("system.d", "missing mandatory key");
  sys.d = get_int(js["d"], "system.d");
  if (sys.d < 1) bad_key("system.d", "must be >= 1");
  if (!js.contains("b")) bad_key("system.b", "missing mandatory key");
  if (!js.contains("c")) bad_key("system.c", "missing mandatory key");
  sys.b = get_num_array(js["b"], "system.b");
  sys.c = get_num_array(js["c"], "system.c");
  if (int(sys.b.size()) != sys.d) bad_key("system.b", "expected exactly d = " + std::to_string(sys.d) + " entries");
  if (int(sys.c.size()) != sys.d) bad_key("system.c", "expected exactly d = " + std::to_string(sys.d) + " entries");

  int d = sys.d;
  if (js.contains("A")) {
    if (!js["A"].is_array()) bad_key("system.A", "expected an array of entries");
    sys.A.d = d;
    sys.A.a.assign(size_t(d) * d * d * 9, 0.0);
    for (size_t i = 0; i < js["A"].size(); ++i) {
      std::string path = "system.A[" + std::to_string(i) + "]";
      const json& e = js["A"][i];
      check_keys(e, path, {"alpha", "beta", "gamma", "j", "k", "value"});
      int al = get_component(e, "alpha", d, path), be = get_component(e, "beta", d, path),
          ga = get_component(e, "gamma", d, path);
      int jj = get_axis(e, "j", path), kk = get_axis(e, "k", path);
      if (!e.contains("value")) bad_key(path, "missing key 'value'");
      sys.A.at(al - 1, be - 1, ga - 1, jj, kk) = get_num(e["value"], path + ".value");
    }
  }
  if (js.contains("B")) {
    if (!js["B"].is_array()) bad_key("system.B", "expected an array of entries");
    sys.B.d = d;
    sys.B.b.assign(size_t(d) * d * d * 27, 0.0);
    for (size_t i = 0; i < js["B"].size(); ++i) {
      std::string path = "system.B[" + std::to_string(i) + "]";
      const json& e = js["B"][i];
      check_keys(e, path, {"alpha", "beta", "gamma", "j", "k", "l", "value"});
      int al = get_component(e, "alpha", d, path), be = get_component(e, "beta", d, path),
          ga = get_component(e, "gamma", d, path);
      int jj = get_axis(e, "j", path), kk = get_axis(e, "k", path), ll = get_axis(e, "l", path);
      if (!e.contains("value")) bad_key(path, "missing key 'value'");
      sys.B.at(al - 1, be - 1, ga - 1, jj, kk, ll) = get_num(e["value"], path + ".value");
    }
  }
  if (js.contains("Q")) {
    if (!js["Q"].is_array()) bad_key("system.Q", "expected an array of entries");
    sys.Qp.d = d;
    sys.Qp.q.assign(size_t(d) * d * d * 25, 0.0);
    for (size_t i = 0; i < js["Q"].size(); ++i) {
      std::string path = "system.Q[" + std::to_string(i) + "]";
      const json& e = js["Q"][i];
      check_keys(e, path, {"alpha", "beta", "gamma", "slot_a", "slot_b", "value"});
      int al = get_component(e, "alpha", d, path), be = get_component(e, "beta", d, path),
          ga = get_component(e, "gamma", d, path);
      auto slot = [&](const char* key) {
        if (!e.contains(key)) bad_key(path, std::string("missing key '") + key + "'");
        int v = get_int(e[key], path + "." + key);
        if (v < 0 || v > 4) bad_key(path + "." + std::string(key), "factor slot out of range 0..4");
        return v;
      };
      int sa = slot("slot_a"), sb = slot("slot_b");
      if (!e.contains("value")) bad_key(path, "missing key 'value'");
      sys.Qp.at(al - 1, be - 1, ga - 1, sa, sb) = get_num(e["value"], path + ".value");
    }
  }
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  check_keys(doc, "(top level)",
             {"system", "grid", "time", "scheme", "data", "triples", "search_box", "preset",
              "time_grid", "localization", "tolerance", "caps", "out_dir"});
  RunConfig cfg;
  if (!doc.contains("system")) bad_key("system", "missing mandatory key");
  parse_system(doc["system"], cfg.system);
  int d = cfg.system.d;

  if (doc.contains("grid")) {
    check_keys(doc["grid"], "grid", {"n", "L"});
    if (doc["grid"].contains("n")) {
      cfg.n = get_int(doc["grid"]["n"], "grid.n");
      if (cfg.n < 4 || cfg.n % 2) bad_key("grid.n", "must be even and >= 4");
    }
    if (doc["grid"].contains("L")) {
      cfg.L = get_num(doc["grid"]["L"], "grid.L");
      if (cfg.L <= 0) bad_key("grid.L", "must be positive");
    }
  }
  if (doc.contains("time")) {
    check_keys(doc["time"], "time", {"T", "dt", "output_dt"});
    if (doc["time"].contains("T")) cfg.T = get_num(doc["time"]["T"], "time.T");
    if (doc["time"].contains("dt")) cfg.dt = get_num(doc["time"]["dt"], "time.dt");
    if (doc["time"].contains("output_dt"))
      cfg.output_dt = get_num(doc["time"]["output_dt"], "time.output_dt");
    if (cfg.T <= 0) bad_key("time.T", "must be positive");
    if (cfg.dt <= 0) bad_key("time.dt", "must be positive");
    if (cfg.output_dt <= 0) bad_key("time.output_dt", "must be positive");
  }
  if (doc.contains("scheme")) {
    if (!doc["scheme"].is_string()) bad_key("scheme", "expected a string");
    std::string s = doc["scheme"].get<std::string>();
    if (s == "rk4_profile") cfg.scheme = Scheme::rk4_profile;
    else if (s == "exponential_midpoint") cfg.scheme = Scheme::exponential_midpoint;
    else bad_key("scheme", "unknown scheme '" + s + "'");
  }
  if (doc.contains("data")) {
    check_keys(doc["data"], "data", {"amplitude", "width"});
    if (doc["data"].contains("amplitude"))
      cfg.amplitude = get_num_array(doc["data"]["amplitude"], "data.amplitude");
    if (doc["data"].contains("width"))
      cfg.width = get_num_array(doc["data"]["width"], "data.width");
    if (!cfg.amplitude.empty() && int(cfg.amplitude.size()) != d)
      bad_key("data.amplitude", "expected exactly d = " + std::to_string(d) + " entries");
    if (!cfg.width.empty() && int(cfg.width.size()) != d)
      bad_key("data.width", "expected exactly d = " + std::to_string(d) + " entries");
    for (double w : cfg.width)
      if (w <= 0) bad_key("data.width", "widths must be positive");
  }
  if (doc.contains("triples")) {
    if (!doc["triples"].is_array()) bad_key("triples", "expected an array of [sigma, mu, nu]");
    for (size_t i = 0; i < doc["triples"].size(); ++i) {
      std::string path = "triples[" + std::to_string(i) + "]";
      const json& e = doc["triples"][i];
      if (!e.is_array() || e.size() != 3) bad_key(path, "expected [sigma, mu, nu]");
      PhaseTriple t;
      t.sigma = get_int(e[0], path + "[0]");
      t.mu = get_int(e[1], path + "[1]");
      t.nu = get_int(e[2], path + "[2]");
      for (int s : {t.sigma, t.mu, t.nu})
        if (s == 0 || std::abs(s) > d) bad_key(path, "signed component index out of range");
      cfg.triples.push_back(t);
    }
  }
  if (doc.contains("search_box")) {
    auto v = get_num_array(doc["search_box"], "search_box");
    if (v.size() != 4) bad_key("search_box", "expected [a_lo, a_hi, b_lo, b_hi]");
    cfg.search_box = {v[0], v[1], v[2], v[3]};
    if (v[0] >= v[1] || v[2] >= v[3]) bad_key("search_box", "bounds must be increasing");
  }
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) bad_key("preset", "expected a string");
    cfg.preset = doc["preset"].get<std::string>();
  }
  if (doc.contains("time_grid")) cfg.time_grid = get_num_array(doc["time_grid"], "time_grid");
  if (doc.contains("localization")) {
    check_keys(doc["localization"], "localization", {"j", "k", "l"});
    Localization loc;
    if (doc["localization"].contains("j")) loc.j = get_int(doc["localization"]["j"], "localization.j");
    if (doc["localization"].contains("k")) loc.k = get_int(doc["localization"]["k"], "localization.k");
    if (doc["localization"].contains("l")) loc.l = get_int(doc["localization"]["l"], "localization.l");
    cfg.localization = loc;
  }
  if (doc.contains("tolerance")) {
    cfg.tolerance = get_num(doc["tolerance"], "tolerance");
    if (cfg.tolerance <= 0) bad_key("tolerance", "must be positive");
  }
  if (doc.contains("caps")) {
    check_keys(doc["caps"], "caps", {"N_sub", "N0_sub", "gamma_order", "K0"});
    const json& c = doc["caps"];
    if (c.contains("N_sub")) cfg.caps.N_sub = get_int(c["N_sub"], "caps.N_sub");
    if (c.contains("N0_sub")) cfg.caps.N0_sub = get_int(c["N0_sub"], "caps.N0_sub");
    if (c.contains("gamma_order")) cfg.caps.gamma_order = get_int(c["gamma_order"], "caps.gamma_order");
    if (c.contains("K0")) cfg.caps.K0 = get_num(c["K0"], "caps.K0");
  }
  if (doc.contains("out_dir")) {
    if (!doc["out_dir"].is_string()) bad_key("out_dir", "expected a string");
    cfg.out_dir = doc["out_dir"].get<std::string>();
  }

  build_system(cfg.system);  // surface system validation errors at parse time
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("config: JSON parse error: ") + e.what());
  }
  return config_from_json(doc);
}

json config_echo(const RunConfig& cfg) {
  json sys;
  sys["d"] = cfg.system.d;
  sys["b"] = cfg.system.b;
  sys["c"] = cfg.system.c;
  json A = json::array(), B = json::array(), Q = json::array();
  int d = cfg.system.d;
  if (!cfg.system.A.a.empty())
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int ga = 0; ga < d; ++ga)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              if (double v = cfg.system.A.at(al, be, ga, j, k); v != 0)
                A.push_back({{"alpha", al + 1}, {"beta", be + 1}, {"gamma", ga + 1},
                             {"j", j}, {"k", k}, {"value", v}});
  if (!cfg.system.B.b.empty())
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int ga = 0; ga < d; ++ga)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l)
                if (double v = cfg.system.B.at(al, be, ga, j, k, l); v != 0)
                  B.push_back({{"alpha", al + 1}, {"beta", be + 1}, {"gamma", ga + 1},
                               {"j", j}, {"k", k}, {"l", l}, {"value", v}});
  if (!cfg.system.Qp.q.empty())
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int ga = 0; ga < d; ++ga)
          for (int sa = 0; sa < 5; ++sa)
            for (int sb = 0; sb < 5; ++sb)
              if (double v = cfg.system.Qp.at(al, be, ga, sa, sb); v != 0)
                Q.push_back({{"alpha", al + 1}, {"beta", be + 1}, {"gamma", ga + 1},
                             {"slot_a", sa}, {"slot_b", sb}, {"value", v}});
  if (!A.empty()) sys["A"] = A;
  if (!B.empty()) sys["B"] = B;
  if (!Q.empty()) sys["Q"] = Q;

  json doc;
  doc["system"] = sys;
  doc["grid"] = {{"n", cfg.n}, {"L", cfg.L}};
  doc["time"] = {{"T", cfg.T}, {"dt", cfg.dt}, {"output_dt", cfg.output_dt}};
  doc["scheme"] = cfg.scheme == Scheme::rk4_profile ? "rk4_profile" : "exponential_midpoint";
  json data;
  if (!cfg.amplitude.empty()) data["amplitude"] = cfg.amplitude;
  if (!cfg.width.empty()) data["width"] = cfg.width;
  if (!data.empty()) doc["data"] = data;
  json triples = json::array();
  for (auto& t : cfg.triples) triples.push_back({t.sigma, t.mu, t.nu});
  doc["triples"] = triples;
  doc["search_box"] = cfg.search_box;
  doc["preset"] = cfg.preset;
  if (!cfg.time_grid.empty()) doc["time_grid"] = cfg.time_grid;
  if (cfg.localization)
    doc["localization"] = {{"j", cfg.localization->j}, {"k", cfg.localization->k},
                           {"l", cfg.localization->l}};
  doc["tolerance"] = cfg.tolerance;
  doc["caps"] = {{"N_sub", cfg.caps.N_sub}, {"N0_sub", cfg.caps.N0_sub},
                 {"gamma_order", cfg.caps.gamma_order}, {"K0", cfg.caps.K0}};
  doc["out_dir"] = cfg.out_dir;
  return doc;
}

// ---------------------------------------------------------------------------
// Report envelope.
// ---------------------------------------------------------------------------

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

json envelope(const std::string& command, const RunConfig& cfg, json results, json tolerances,
              double seconds) {
  json doc;
  doc["schema_version"] = "1.0";
  doc["command"] = command;
  doc["config"] = config_echo(cfg);
  doc["results"] = std::move(results);
  doc["tolerances"] = std::move(tolerances);
  doc["wall_clock_seconds"] = seconds;
  return doc;
}

SpectralField gaussian_initial(const RunConfig& cfg, int comp) {
  double amp = cfg.amplitude.empty() ? 1e-3 : cfg.amplitude[comp - 1];
  double wid = cfg.width.empty() ? 4.0 : cfg.width[comp - 1];
  SpectralField f(cfg.n, cfg.L, comp);
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j)
      for (int k = 0; k < cfg.n; ++k) {
        double x = f.freq_of(i), y = f.freq_of(j), z = f.freq_of(k);
        f.values[f.idx(i, j, k)] = amp * std::exp(-wid * (x * x + y * y + z * z));
      }
  return dealias_truncate(f);
}

}  // namespace

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

json analyze_report(const RunConfig& cfg) {
  Stopwatch sw;
  SystemParams p = build_system(cfg.system);
  auto cond = check_ip12_conditions(p, cfg.tolerance);
  json conditions;
  conditions["assm1_holds"] = cond.assm1_holds;
  conditions["assm2_holds"] = cond.assm2_holds;
  conditions["assm1_violations"] = cond.assm1_violations;
  conditions["assm2_violations"] = cond.assm2_violations;
  conditions["equal_speed_null_mass_triples"] = cond.equal_speed_null_mass_triples;

  int errors = 0;
  json per_triple = json::array();
  for (const auto& t : cfg.triples) {
    json entry;
    entry["triple"] = {t.sigma, t.mu, t.nu};
    try {
      validate_triple(p, t);
      entry["resonance"] = json::parse(to_json_string(spacetime_resonances(p, t, cfg.search_box)));
      entry["degenerate"] = json::parse(to_json_string(classify_low_freq(p, t, cfg.tolerance)));

      json fac;
      auto f = factor_dbeta(p, t, cfg.search_box[0], cfg.search_box[1], 40);
      fac["reduced"] = f.reduced;
      if (f.reduced) {
        fac["rho"] = f.rho;
      } else {
        fac["sign"] = f.sign;
        fac["Q_zeros"] = f.Q_zeros;
        fac["max_recon_residual"] = f.max_recon_residual;
        fac["samples"] = f.samples.size();
      }
      entry["factorization"] = fac;

      double alpha = 0.5 * (cfg.search_box[0] + cfg.search_box[1]);
      json scan = json::array();
      for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        double m = sublevel_measure(p, t, alpha, eps, cfg.search_box[2], cfg.search_box[3]);
        scan.push_back({{"eps", eps}, {"measure", m}, {"measure_over_cbrt_eps", m / std::cbrt(eps)}});
      }
      entry["sublevel"] = {{"alpha", alpha}, {"scan", scan}};
    } catch (const std::exception& e) {
      entry["error"] = e.what();
      ++errors;
    }
    per_triple.push_back(entry);
  }

  json results;
  results["conditions"] = conditions;
  results["triples"] = per_triple;
  results["error_count"] = errors;
  return envelope("analyze", cfg, results, {{"tolerance", cfg.tolerance}}, sw.seconds());
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

json evolve_report(const RunConfig& cfg, std::string* csv, Trajectory* traj_out) {
  Stopwatch sw;
  SystemParams p = build_system(cfg.system);
  std::vector<SpectralField> g, h;
  for (int a = 1; a <= p.d; ++a) {
    g.push_back(gaussian_initial(cfg, a));
    h.emplace_back(cfg.n, cfg.L, a);
  }
  auto st = diagonalize(p, g, h);
  EvolveOptions opts;
  opts.output_dt = cfg.output_dt;
  opts.caps = cfg.caps;
  auto traj = evolve(p, st, cfg.T, cfg.dt, cfg.scheme, opts);
  if (traj_out) *traj_out = traj;

  if (csv) {
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    *csv = os.str();
  }

  json results;
  results["rows"] = traj.diagnostics.size();
  results["aborted"] = traj.aborted;
  results["last_stable_t"] = traj.last_stable_t;
  results["retained_states"] = traj.states.size();
  double e0 = traj.diagnostics.front().energy, ratio = 1.0;
  for (auto& dgn : traj.diagnostics)
    if (e0 > 0) ratio = std::max(ratio, dgn.energy / e0);
  results["initial_energy"] = e0;
  results["max_energy_ratio"] = ratio;
  const auto& last = traj.diagnostics.back();
  results["final"] = {{"t", last.t}, {"l2", last.l2}, {"linf_u", last.linf_u},
                      {"linf_du", last.linf_du}};
  if (traj.states.size() >= 3 && !traj.aborted) {
    try {
      results["scattering_tail_defect"] = scattering_check(traj, 0.25);
    } catch (const range_error&) {
      // tail window too short for a Cauchy estimate; omit the field
    }
  }
  return envelope("evolve", cfg, results,
                  {{"tolerance", cfg.tolerance}, {"dt", cfg.dt}, {"output_dt", cfg.output_dt}},
                  sw.seconds());
}

// ---------------------------------------------------------------------------
// decay
// ---------------------------------------------------------------------------

json decay_report(const RunConfig& cfg, std::string* csv) {
  Stopwatch sw;
  SystemParams p = build_system(cfg.system);
  auto rep = decay_preset(p, cfg.preset);
  if (csv) {
    std::ostringstream os;
    os.precision(12);
    os << "t,sup\n";
    for (size_t i = 0; i < rep.fit.times.size(); ++i)
      os << rep.fit.times[i] << "," << rep.fit.sup_norms[i] << "\n";
    *csv = os.str();
  }
  json results;
  results["preset"] = rep.name;
  results["slope"] = rep.fit.slope;
  results["slope_ci"] = rep.fit.slope_ci;
  results["window"] = rep.fit.window;
  results["reference_slope"] = rep.reference_slope;
  results["notes"] = rep.notes;
  results["points"] = rep.fit.times.size();
  return envelope("decay", cfg, results, {{"tolerance", cfg.tolerance}}, sw.seconds());
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace {

json check_entry(const std::string& name, double measured, double tol) {
  return {{"name", name}, {"measured", measured}, {"tolerance", tol}, {"pass", measured <= tol}};
}

SpectralField verify_field(int n, double L, int comp) {
  SpectralField f(n, L, comp);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double x = f.freq_of(i), y = f.freq_of(j), z = f.freq_of(k);
        // Odd part imaginary, even part real: conjugate-symmetric, so the
        // physical field is real and the data pass diagonalize validation.
        f.values[f.idx(i, j, k)] =
            std::exp(-0.9 * (x * x + y * y + z * z)) * cplx(1.0 - 0.2 * y * z, 0.3 * x);
      }
  return f;
}

}  // namespace

json verify_report(const RunConfig& cfg) {
  Stopwatch sw;
  SystemParams p = build_system(cfg.system);
  json checks = json::array();

  // Dyadic partition of unity over a wide band.
  {
    double worst = 0, tele = 0;
    for (double x = 0.75; x <= 96.0; x *= 1.1) {
      worst = std::max(worst, std::fabs(shell_band(-30, 30, x) - 1.0));
      double s = 0;
      for (int k = -6; k <= 8; ++k) s += shell(k, x);
      tele = std::max(tele, std::fabs(s - shell_band(-6, 8, x)));
    }
    checks.push_back(check_entry("dyadic.partition_of_unity", worst, 1e-12));
    checks.push_back(check_entry("dyadic.shell_telescoping", tele, 1e-12));
  }

  // Angular band weights sum to one on every degree.
  {
    double worst = 0;
    for (int q = 0; q <= 40; ++q) {
      double s = 0;
      for (int l = 0; l <= 10; ++l) s += angular_weight(l, q);
      worst = std::max(worst, std::fabs(s - 1.0));
    }
    checks.push_back(check_entry("spherical.angular_partition", worst, 1e-12));
  }

  // Spherical projector is an L2 contraction.
  {
    auto f = verify_field(16, 16, 1);
    double before = f.l2();
    double after = spherical_project(f, 2).l2();
    checks.push_back(check_entry("spherical.projector_contraction",
                                 std::max(0.0, after / before - 1.0), 1e-12));
  }

  // Phase symmetry under exchanging the two input slots.
  {
    SystemConfig sc;
    sc.d = 2;
    sc.b = {1.0, 1.7};
    sc.c = {1.0, 0.6};
    auto p2 = build_system(sc);
    double worst = 0;
    for (double s = 0.3; s <= 3.0; s += 0.7) {
      vec3 xi{s, -0.4 * s, 0.2 * s}, eta{0.3 * s, s, -0.1 * s};
      vec3 rem{xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]};
      double a = eval_phase(p2, {1, 1, 2}, xi, eta);
      double b = eval_phase(p2, {1, 2, 1}, xi, rem);
      worst = std::max(worst, std::fabs(a - b));
    }
    checks.push_back(check_entry("phase.factor_exchange_symmetry", worst, 1e-12));
  }

  // The equal-speed mass-resonant sphere family is exactly resonant.
  {
    SystemConfig sc;
    sc.d = 3;
    sc.b = {2.0, 1.0, 1.0};
    sc.c = {1.0, 1.0, 1.0};
    auto p3 = build_system(sc);
    double worst = 0;
    for (int i = 1; i <= 20; ++i) {
      double r = 0.5 * i;
      vec3 xi{r * 0.6, r * 0.64, -r * 0.48};
      vec3 eta{xi[0] / 2, xi[1] / 2, xi[2] / 2};
      worst = std::max(worst, std::fabs(eval_phase(p3, {1, 2, 3}, xi, eta)));
    }
    checks.push_back(check_entry("phase.resonance_sphere_exactness", worst, 1e-12));
  }

  // Sharp bound calculator: the special epsilon ladder collapses to the
  // documented two-term minimum.
  {
    IbpParameters ip;
    ip.K = 800;
    ip.n = 3;
    ip.lambda = 6;
    double eps = 0.05;
    for (int j = 1; j <= ip.n; ++j) ip.eps.push_back(std::pow(eps, double(ip.n - j + 1) / ip.n));
    double expect = std::min(ip.K * std::pow(eps, double(ip.n + 1) / ip.n), ip.K * eps / ip.lambda);
    checks.push_back(check_entry("oscillatory.ibp_special_choice",
                                 std::fabs(ibp_bound(ip).M - expect) / expect, 1e-12));
  }

  // Signed-index conventions of the dispersion data.
  {
    double worst = std::fabs(p.mass(-1) + p.mass(1));
    worst = std::max(worst, std::fabs(p.lambda(-1, 0.7) + p.lambda(1, 0.7)));
    worst = std::max(worst, std::fabs(p.speed(-1) - p.speed(1)));
    checks.push_back(check_entry("system.signed_index_conventions", worst, 1e-12));
  }

  // Free propagator: unitary and a one-parameter group.
  {
    auto f = verify_field(16, 16, 1);
    double before = f.l2();
    auto ft = propagate(p, f, 1, 1.3);
    double unit = std::fabs(ft.l2() - before) / before;
    auto ab = propagate(p, propagate(p, f, 1, 0.9), 1, 0.4);
    SpectralField diff = ab;
    diff -= ft;
    checks.push_back(check_entry("linear.propagate_unitary", unit, 1e-12));
    checks.push_back(check_entry("linear.propagate_group_law", diff.l2() / before, 1e-12));
  }

  // Diagonalization round trip on the configured system.
  {
    std::vector<SpectralField> g, h, u, du;
    for (int a = 1; a <= p.d; ++a) {
      auto f = verify_field(16, 16, a);
      f *= 0.1 * a;
      g.push_back(dealias_truncate(f));
      h.emplace_back(16, 16.0, a);
    }
    auto st = diagonalize(p, g, h);
    invert(p, st, u, du);
    double worst = conjugation_defect(st);
    for (int a = 0; a < p.d; ++a) {
      SpectralField e = u[a];
      e -= g[a];
      worst = std::max(worst, e.l2() / g[a].l2());
      worst = std::max(worst, du[a].l2() / g[a].l2());
    }
    checks.push_back(check_entry("solver.diagonalize_roundtrip", worst, 1e-12));

    // Zero nonlinearity: profiles are constant and the CSV row contract holds.
    SystemConfig lin;
    lin.d = p.d;
    lin.b = cfg.system.b;
    lin.c = cfg.system.c;
    auto pl = build_system(lin);
    auto traj = evolve(pl, st, 4.0, 0.5, Scheme::rk4_profile);
    double drift = 0;
    for (auto& [sg, f] : traj.states.back().fhat) {
      SpectralField e = f;
      e -= st.fhat.at(sg);
      drift = std::max(drift, e.l2());
    }
    checks.push_back(check_entry("solver.free_profile_constant", drift, 1e-12));
    checks.push_back(
        check_entry("solver.csv_row_contract", std::fabs(double(traj.diagnostics.size()) - 5.0), 0.5));
    double e0 = traj.diagnostics.front().energy, edrift = 0;
    for (auto& dgn : traj.diagnostics) edrift = std::max(edrift, std::fabs(dgn.energy - e0) / e0);
    checks.push_back(check_entry("solver.free_energy_conservation", edrift, 1e-10));

    // Aliased input is rejected.
    bool threw = false;
    if (p.has_nonlinearity()) {
      auto bad = st;
      bad.fhat.begin()->second.values[bad.fhat.begin()->second.idx(7, 0, 0)] += 1.0;
      try {
        duhamel_rhs(p, bad, 0.0);
      } catch (const numeric_error&) {
        threw = true;
      }
      checks.push_back(check_entry("solver.dealias_guard", threw ? 0.0 : 1.0, 0.5));
    }
  }

  bool all_pass = true;
  for (auto& c : checks) all_pass = all_pass && c["pass"].get<bool>();
  json results;
  results["checks"] = checks;
  results["all_pass"] = all_pass;
  return envelope("verify", cfg, results, {{"tolerance", cfg.tolerance}}, sw.seconds());
}

// ---------------------------------------------------------------------------
// Command-line driver.
// ---------------------------------------------------------------------------

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write '" + path.string() + "'");
  out << text;
}

void write_report(const std::filesystem::path& dir, const json& doc) {
  write_text(dir / "report.json", doc.dump(2) + "\n");
}

void write_state(const std::filesystem::path& dir, const ProfileState& st) {
  json side;
  side["t"] = st.t;
  side["components"] = json::array();
  for (auto& [sg, f] : st.fhat) {
    std::string base = std::string("state_final_") + (sg < 0 ? "m" : "p") + std::to_string(std::abs(sg));
    dump_field(f, (dir / base).string());
    side["components"].push_back({{"sigma", sg}, {"base", base}});
  }
  write_text(dir / "state_final.json", side.dump(2) + "\n");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"kgms: resonance analysis and pseudo-spectral simulation of "
               "multispeed Klein-Gordon systems"};
  app.require_subcommand(1);
  std::string config_path, out_override, preset_override;

  auto* analyze = app.add_subcommand("analyze", "phase/resonance analysis of configured triples");
  auto* evolve_cmd = app.add_subcommand("evolve", "pseudo-spectral profile evolution");
  auto* decay = app.add_subcommand("decay", "free-space decay-rate measurement");
  auto* verify = app.add_subcommand("verify", "run the cross-module invariant suite");
  for (auto* sub : {analyze, evolve_cmd, decay, verify}) {
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_override, "output directory (overrides config out_dir)");
  }
  decay->add_option("--preset", preset_override, "decay regime preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    RunConfig cfg = parse_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!preset_override.empty()) cfg.preset = preset_override;
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    if (analyze->parsed()) {
      json doc = analyze_report(cfg);
      write_report(dir, doc);
      int errors = doc["results"]["error_count"].get<int>();
      std::cout << "analyze: " << doc["results"]["triples"].size() << " triple(s), " << errors
                << " error(s); report at " << (dir / "report.json").string() << "\n";
      return errors ? 1 : 0;
    }
    if (evolve_cmd->parsed()) {
      std::string csv;
      Trajectory traj;
      json doc = evolve_report(cfg, &csv, &traj);
      write_report(dir, doc);
      write_text(dir / "trajectory.csv", csv);
      write_state(dir, traj.states.back());
      std::cout << "evolve: " << doc["results"]["rows"] << " snapshot(s)";
      if (traj.aborted) {
        std::cout << "; instability detected, last stable t = " << traj.last_stable_t << "\n";
        return 2;
      }
      std::cout << "; report at " << (dir / "report.json").string() << "\n";
      return 0;
    }
    if (decay->parsed()) {
      std::string csv;
      json doc = decay_report(cfg, &csv);
      write_report(dir, doc);
      write_text(dir / "decay.csv", csv);
      std::cout << "decay: preset " << cfg.preset << ", slope "
                << doc["results"]["slope"].get<double>() << "; report at "
                << (dir / "report.json").string() << "\n";
      return 0;
    }
    // verify
    json doc = verify_report(cfg);
    write_report(dir, doc);
    bool ok = doc["results"]["all_pass"].get<bool>();
    for (auto& c : doc["results"]["checks"])
      std::cout << (c["pass"].get<bool>() ? "pass " : "FAIL ") << c["name"].get<std::string>()
                << "\n";
    std::cout << (ok ? "verify: all checks passed\n" : "verify: FAILURES detected\n");
    return ok ? 0 : 2;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const range_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace kg
