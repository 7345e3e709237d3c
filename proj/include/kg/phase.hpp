#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kg/system.hpp"

namespace kg {

using vec3 = std::array<double, 3>;
using mat3 = std::array<std::array<double, 3>, 3>;

// Phi(xi, eta) = Lambda_sigma(xi) - Lambda_mu(xi - eta) - Lambda_nu(eta).
double eval_phase(const SystemParams& p, const PhaseTriple& t, const vec3& xi, const vec3& eta);

struct PhaseDerivatives {
  vec3 grad_eta;
  vec3 grad_xi;
  mat3 hess_eta;
};
PhaseDerivatives phase_derivatives(const SystemParams& p, const PhaseTriple& t, const vec3& xi,
                                   const vec3& eta);

// One-dimensional parallel phase Phi+(alpha, beta) and its beta-derivatives,
// orders 0..max_order (max_order <= 4).
std::vector<double> parallel_phase(const SystemParams& p, const PhaseTriple& t, double alpha,
                                   double beta, int max_order);

// Factorization of d_beta Phi+ at one alpha:
//   d_beta Phi+ = sign * P(alpha,beta) * (beta - R1) * ((beta - R2)^2 - Q)
struct FactorPoint {
  double alpha = 0;
  double R1 = 0, R2 = 0, Q = 0;
  double R3() const;  // R2 + sqrt|Q|
  double R4() const;  // R2 - sqrt|Q|
};

struct PhaseFactorization {
  bool reduced = false;  // c_mu == c_nu: single root beta = rho * alpha
  double rho = 0;
  int sign = 1;
  double tolerance = 1e-10;
  std::vector<FactorPoint> samples;
  std::vector<double> Q_zeros;
  double max_recon_residual = 0;  // relative, over a (alpha, beta) grid
};

// Single-alpha factorization (requires c_mu != c_nu and alpha != 0).
FactorPoint factor_at(const SystemParams& p, const PhaseTriple& t, double alpha);
PhaseFactorization factor_dbeta(const SystemParams& p, const PhaseTriple& t, double a_lo,
                                double a_hi, int samples);

enum class ResonanceKind { empty, finite, sphere_family, degenerate_origin };

struct ResonancePoint {
  double alpha = 0, beta = 0;
  double phi_res = 0, dphi_res = 0;  // residuals |Phi+|, |d_beta Phi+|
  double d2beta = 0;
  bool hess_nondegenerate = false;
};

struct ResonanceReport {
  ResonanceKind kind = ResonanceKind::empty;
  double rho = 0;  // sphere-family slope eta = rho xi
  std::vector<ResonancePoint> points;
  std::vector<std::array<double, 2>> unresolved_seeds;
  std::array<double, 4> box{0, 0, 0, 0};  // searched (a_lo, a_hi, b_lo, b_hi)
  double tolerance = 1e-10;
};
ResonanceReport spacetime_resonances(const SystemParams& p, const PhaseTriple& t,
                                     const std::array<double, 4>& box);

struct DegenerateReport {
  std::array<double, 3> sigma1{0, 0, 0};  // sigma_{1,0}, sigma_{1,1}, sigma_{1,2}
  std::array<double, 3> sigma2{0, 0, 0};  // sigma_{2,0}, sigma_{2,1}, sigma_{2,2}
  double rho0 = 0, rho1 = 0, rho3 = 0;    // quadratic model in (|xi|^2, xi.eta, |eta|^2)
  bool perfect_square = false;
  double rho5 = 0;  // critical line eta = rho5 xi
  std::optional<double> caseA_lambda;
  std::string case_label;  // "A" | "B" | "nondegenerate"
  double phi_origin = 0;   // Phi(0,0) = b_sigma - b_mu - b_nu (signed)
  double tolerance = 1e-10;
};
DegenerateReport classify_low_freq(const SystemParams& p, const PhaseTriple& t,
                                   double tol = 1e-10);

struct QZeroExpansion {
  double lambda = 0;
  double lambda_prime_left = 0, lambda_prime_right = 0;
  double fit_exponent = 0;                    // expected 3/2
  std::optional<double> derivative_exponent;  // expected 1/2 when lambda = 0
};
QZeroExpansion expansion_at_Q_zero(const SystemParams& p, const PhaseTriple& t, double alpha0,
                                   double h_lo = 1e-4, double h_hi = 1e-2);

// |{beta in [b_lo, b_hi] : |Phi+(alpha, beta)| <= eps}|
double sublevel_measure(const SystemParams& p, const PhaseTriple& t, double alpha, double eps,
                        double b_lo, double b_hi);

std::string to_json_string(const ResonanceReport& r);
std::string to_json_string(const DegenerateReport& r);

}  // namespace kg
