#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kg/field.hpp"
#include "kg/system.hpp"

namespace kg {

// ---------------------------------------------------------------------------
// Diagnostic caps: desk-scale stand-ins for the proof-scale parameters.
// ---------------------------------------------------------------------------

struct DiagnosticCaps {
  int N_sub = 8;        // energy-norm derivative count stand-in
  int N0_sub = 4;       // weight exponent stand-in
  int gamma_order = 2;  // max vector-field word length
  double K0 = 10;       // dyadic threshold between the two weight branches
};

// ---------------------------------------------------------------------------
// Free flow and vector fields.
// ---------------------------------------------------------------------------

// Multiply each Fourier coefficient by exp(i t Lambda_sigma(xi)).
SpectralField propagate(const SystemParams& p, const SpectralField& f, int sigma, double t);

// d_axis as the Fourier multiplier (i xi_axis).
SpectralField apply_partial(const SpectralField& f, int axis);
// Rotation x_a d_b - x_b d_a (equivalently xi_a d_{xi_b} - xi_b d_{xi_a} on
// the transform side), computed spectrally.
SpectralField apply_rotation(const SpectralField& f, int a, int b);

// All words Gamma^mu of length <= order over the six generators
// (0..2 = partials, 3..5 = rotations (0,1), (0,2), (1,2)), in length-major
// lexicographic order; words[i] lists the generator indices applied
// right-to-left to f.
struct GammaFamily {
  std::vector<std::vector<int>> words;
  std::vector<SpectralField> fields;
};
GammaFamily vector_fields(const SpectralField& f, int order, const DiagnosticCaps& caps = {});

// ---------------------------------------------------------------------------
// Decay measurement.
// ---------------------------------------------------------------------------

struct DecayFit {
  std::vector<double> times;
  std::vector<double> sup_norms;
  double slope = 0;
  double slope_ci = 0;                 // 2 x least-squares standard error
  std::array<double, 2> window{0, 0};  // fit restricted to this t interval
};

// Optional pre-localization: frequency/space index (j, k), then the angular
// band l (l < 0 skips the angular projection).
struct Localization {
  int j = 0;
  int k = 0;
  int l = -1;
};

// Evolve `initial` with the free flow, measure the physical sup-norm at each
// time (4x zero-padded spectral interpolation), and fit a log-log slope over
// `window` ({0,0} = full time range). Raises a numeric error when physical
// mass reaches the box boundary (periodic wrap-around would contaminate the
// sup-norm).
DecayFit decay_fit(const SystemParams& p, int sigma, const SpectralField& initial,
                   const std::vector<double>& time_grid,
                   const std::optional<Localization>& loc = std::nullopt,
                   std::array<double, 2> window = {0, 0});

// ---------------------------------------------------------------------------
// Z diagnostic (capped localization weight).
// ---------------------------------------------------------------------------

// The weighted-norm expression for the localized piece labelled (j, k):
//   |k| >= K0 : <j>^N0 2^{min(k/2,0)} 2^j sup_mu ||Gamma^mu f||_L2
//   |k| <  K0 : sup_mu (2^{5j/6} <j>^{-N0} ||Gamma^mu f||_L2
//                       + <j>^N0 2^j ||FT(Gamma^mu f)||_L1)
// with N0 = caps.N0_sub and the sup over words |mu| <= caps.gamma_order.
// The caller passes the already-localized piece; the labels only select the
// weights. This is a scaled diagnostic for relative comparisons, not the
// proof-scale norm.
double z_diagnostic(const SpectralField& f, int j, int k, const DiagnosticCaps& caps = {});

// ---------------------------------------------------------------------------
// Free-space radial reduction of the flow (no periodic box).
// ---------------------------------------------------------------------------

// For data whose transform is g(|xi|) Y_l^M(xi/|xi|), the flow at radius r:
//   u_l(t, r) = (2 pi)^{-3} 4 pi i^l
//               int e^{i (t Lambda_sigma(rho) + chirp rho)} g(rho) j_l(rho r)
//               rho^2 d rho                over [rho_lo, rho_hi];
// |u(t, x)| = |u_l(t, |x|)| |Y_l^M(x/|x|)|. The chirp e^{i chirp rho}
// translates the profile radially to |x| ~ chirp. Quadrature resolution is
// set by the sampled phase gradient; for l = 0 the Bessel factor is split
// into its two exponential branches so that only the near-stationary branch
// needs resolving (the discarded branch is bounded and must be negligible,
// otherwise a numeric error is raised).
cplx radial_flow(const SystemParams& p, int sigma, const std::function<cplx(double)>& g, int l,
                 double t, double r, double rho_lo, double rho_hi, double chirp = 0);

// max over an r-scan of |u_l(t, r)| |Y_l^0|_sup, with 3-point parabolic
// refinement around the grid maximum.
double radial_flow_sup(const SystemParams& p, int sigma, const std::function<cplx(double)>& g,
                       int l, double t, double rho_lo, double rho_hi, double r_lo, double r_hi,
                       int n_scan, double chirp = 0);

// ---------------------------------------------------------------------------
// Decay experiment presets (free-space radial path).
// ---------------------------------------------------------------------------

struct PresetReport {
  std::string name;
  DecayFit fit;
  double reference_slope = 0;  // the regime's predicted log-log exponent
  std::string notes;           // regime description, data used, caveats
};

// Named regimes: "stkg" (generic medium-frequency Gaussian, t in [5, 50]),
// "disper1" (low frequency), "disper2" (high frequency, data at |x| ~ t),
// "disper3" (medium frequency, fixed spatial scale), "disper4" (medium
// frequency, data at |x| ~ t), "disper5" (high frequency, fixed spatial
// scale). Masses/speeds are taken from component sigma = 1 of `p`; the
// regimes assume O(1) mass and speed. Slopes are power-law fits only;
// logarithmic corrections are not modelled.
PresetReport decay_preset(const SystemParams& p, const std::string& name);

}  // namespace kg
