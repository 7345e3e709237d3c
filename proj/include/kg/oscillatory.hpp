#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "kg/field.hpp"
#include "kg/phase.hpp"
#include "kg/system.hpp"

namespace kg {

// ---------------------------------------------------------------------------
// Sharp integration-by-parts bound calculator.
// ---------------------------------------------------------------------------

struct IbpParameters {
  double K = 1;                // oscillation scale (>= 1)
  int n = 1;                   // derivative depth (>= 1)
  std::vector<double> eps;     // eps_1 .. eps_n, positive
  double lambda = 1;           // amplitude derivative scale (>= 1)
  double gamma = 0.1;          // decay constant, configurable
};

struct IbpResult {
  double M = 0;
  double bound = 0;  // exp(-gamma * M^gamma)
};

// M = min(K e1^2/e2, K e1 e2/e3, ..., K e1 e_{n-1}/e_n, K e1 e_n, K e1/lambda);
// for n = 1 the chain collapses to min(K e1^2, K e1/lambda).
IbpResult ibp_bound(const IbpParameters& p);

// ---------------------------------------------------------------------------
// Brute-force oscillatory-integral quadrature oracles.
// ---------------------------------------------------------------------------

struct OscResult {
  cplx value{0, 0};
  double error_estimate = 0;  // |S_N - S_{N/2}| Richardson-style estimate
  long evaluations = 0;
};

// int_a^b e^{iK phase(x)} amp(x) dx by composite Simpson whose resolution is
// driven by the sampled phase gradient (phase varies < pi/4 per cell).
OscResult osc_integral_1d(const std::function<double(double)>& phase,
                          const std::function<cplx(double)>& amp, double K, double a, double b);

// Same over the cube [a,b]^3.
OscResult osc_integral_3d(const std::function<double(const vec3&)>& phase,
                          const std::function<cplx(const vec3&)>& amp, double K, double a,
                          double b);

// ---------------------------------------------------------------------------
// Radial bilinear reduction (2-D (rho, tau) form of the 3-D convolution).
// ---------------------------------------------------------------------------

// (2 pi / lambda) * int int rho tau F(rho) G(tau) kernel(rho, tau, lambda),
// over the admissible triangle |rho - tau| <= lambda <= rho + tau, with
// rho, tau in [r_lo, r_hi]; midpoint rule with n points per axis.
cplx radial_bilinear(const std::function<cplx(double)>& F, const std::function<cplx(double)>& G,
                     const std::function<double(double, double, double)>& kernel, double lambda,
                     double r_lo, double r_hi, int n = 1024);

// ---------------------------------------------------------------------------
// Angular-restricted bilinear integral.
// ---------------------------------------------------------------------------

struct AngularConfig {
  double t = 0;        // time, |t| ~ 2^m
  double upsilon = 0;  // angular restriction exponent: band sin(angle) ~ 2^-upsilon
  double kappa = 0;    // phase cutoff exponent in psi_1(2^kappa Phi)
  double xi_mag = 1;   // |xi| of the output frequency
  int k = 0, k1 = 0, k2 = 0;  // dyadic frequency indices of output / F / G
  int l1 = 0, l2 = 0;         // angular band indices of F / G
  double j1 = 0;              // spatial index of F (hypothesis check only)
  int case_id = 1;            // which case of the lemma hypotheses to check
  double rho_lo = 0.5, rho_hi = 2.0;  // radial support window of G
  int oversample = 1;         // quadrature refinement factor (convergence checks)
};

struct AngularResult {
  cplx restricted{0, 0};
  cplx unrestricted{0, 0};
  double ratio = 0;  // |restricted| / |unrestricted|
  std::vector<std::string> warnings;
  long evaluations = 0;
};

// Direct quadrature of the restricted bilinear integral at one output xi,
// for zonal inputs F(xi-eta) = Fprof(|xi-eta|) P_qF(cos angle(xi-eta, xi)),
// G(eta) = Gprof(|eta|) P_qG(cos angle(eta, xi)). Hypothesis violations are
// attached as warnings, never silently dropped.
AngularResult angular_bilinear(const SystemParams& p, const PhaseTriple& t,
                               const std::function<cplx(double)>& Fprof, int qF,
                               const std::function<cplx(double)>& Gprof, int qG,
                               const AngularConfig& cfg);

// Grid-field variant (tensor midpoint quadrature with off-lattice evaluation);
// used for rotational-invariance checks and CLI plumbing.
cplx bilinear_field_integral(const SystemParams& p, const PhaseTriple& t, const SpectralField& F,
                             const SpectralField& G, const vec3& xi, double time, double upsilon,
                             double kappa, int n_quad);

}  // namespace kg
