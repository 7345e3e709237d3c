#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kg/linear.hpp"
#include "kg/solver.hpp"
#include "kg/system.hpp"

namespace kg {

// ---------------------------------------------------------------------------
// Run configuration: one JSON document drives every command. Parsing is
// strict -- unknown keys are rejected and every error names the offending
// key path -- because a silent typo in (b, c) invalidates a whole study.
// ---------------------------------------------------------------------------

struct RunConfig {
  SystemConfig system;

  // Grid and time stepping (evolve).
  int n = 32;
  double L = 32 * pi;
  double T = 10.0;
  double dt = 0.1;
  double output_dt = 1.0;
  Scheme scheme = Scheme::rk4_profile;

  // Gaussian initial data per component: ghat_a(xi) = amplitude_a
  // exp(-width_a |xi|^2), d_t u(0) = 0. Empty vectors mean the defaults
  // (1e-3 and 4.0) for every component.
  std::vector<double> amplitude;
  std::vector<double> width;

  // Phase analysis (analyze).
  std::vector<PhaseTriple> triples;
  std::array<double, 4> search_box{0.1, 5.0, -6.0, 6.0};

  // Decay measurement (decay).
  std::string preset = "stkg";
  std::vector<double> time_grid;
  std::optional<Localization> localization;

  double tolerance = 1e-10;
  DiagnosticCaps caps;
  std::string out_dir = ".";
};

// Strict parse; fills defaults, validates index ranges and array lengths,
// and builds the system once to surface validation errors early.
RunConfig parse_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& doc);

// Full echo including defaulted values; re-parses to an equivalent config.
nlohmann::json config_echo(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Report documents. Every command produces one JSON document with the same
// envelope: schema_version, command, config echo, results, tolerances and
// wall_clock_seconds (the only non-deterministic field).
// ---------------------------------------------------------------------------

// Per-triple condition checks, resonance report, degenerate classification,
// factorization summary and sublevel-measure scan. Per-triple errors are
// collected under "error"; the document carries an "error_count".
nlohmann::json analyze_report(const RunConfig& cfg);

// Pseudo-spectral run summary; the diagnostics CSV (one row per snapshot,
// floor(T/output_dt)+1 rows) is returned through `csv` when non-null, and the
// trajectory through `traj_out` when non-null.
nlohmann::json evolve_report(const RunConfig& cfg, std::string* csv = nullptr,
                             Trajectory* traj_out = nullptr);

// Free-space decay preset fit; the (t, sup-norm) series goes to `csv`.
nlohmann::json decay_report(const RunConfig& cfg, std::string* csv = nullptr);

// Deterministic cross-module invariant suite; every check is listed by name
// with its measured defect and tolerance.
nlohmann::json verify_report(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Command-line entry point: analyze / evolve / decay / verify.
// Exit codes: 0 success, 1 validation error, 2 numerical failure.
// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv);

}  // namespace kg
