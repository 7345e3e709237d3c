#pragma once

#include <array>
#include <vector>

#include "kg/common.hpp"

namespace kg {

// Quasilinear tensor A_{alpha,beta,gamma}^{jk} and B_{alpha,beta,gamma}^{jkl},
// stored dense; spatial indices j,k,l run over 0..2.
struct QuasiTensorA {
  int d = 0;
  std::vector<double> a;  // (alpha,beta,gamma,j,k), zero-initialized
  double& at(int al, int be, int ga, int j, int k) {
    return a[(((al * d + be) * d + ga) * 3 + j) * 3 + k];
  }
  double at(int al, int be, int ga, int j, int k) const {
    return a[(((al * d + be) * d + ga) * 3 + j) * 3 + k];
  }
};

struct QuasiTensorB {
  int d = 0;
  std::vector<double> b;  // (alpha,beta,gamma,j,k,l)
  double& at(int al, int be, int ga, int j, int k, int l) {
    return b[((((al * d + be) * d + ga) * 3 + j) * 3 + k) * 3 + l];
  }
  double at(int al, int be, int ga, int j, int k, int l) const {
    return b[((((al * d + be) * d + ga) * 3 + j) * 3 + k) * 3 + l];
  }
};

// Semilinear quadratic form Q'_alpha(u, du). Factor slots 0..4 select the
// field itself (0), a spatial derivative (1..3) or the time derivative (4).
struct SemilinearForm {
  int d = 0;
  std::vector<double> q;  // (alpha,beta,gamma,a,b)
  double& at(int al, int be, int ga, int fa, int fb) {
    return q[(((al * d + be) * d + ga) * 5 + fa) * 5 + fb];
  }
  double at(int al, int be, int ga, int fa, int fb) const {
    return q[(((al * d + be) * d + ga) * 5 + fa) * 5 + fb];
  }
};

// The (b, c) data of the Klein-Gordon system plus the quadratic nonlinearity.
struct SystemParams {
  int d = 0;
  std::vector<double> b;  // masses, one per equation
  std::vector<double> c;  // speeds, one per equation
  QuasiTensorA A;
  QuasiTensorB B;
  SemilinearForm Qp;

  // Signed-index conventions: b_{-a} = -b_a, c_{-a} = c_a.
  double mass(int s) const { return s > 0 ? b[s - 1] : -b[-s - 1]; }
  double speed(int s) const { return c[std::abs(s) - 1]; }

  // Dispersion relation Lambda_s(r) for scalar radius r (signed index s).
  double lambda(int s, double r) const {
    double cc = speed(s), bb = b[std::abs(s) - 1];
    double v = std::sqrt(cc * cc * r * r + bb * bb);
    return s > 0 ? v : -v;
  }
  bool has_nonlinearity() const;
};

// One choice of signed indices (sigma, mu, nu) selecting a nonlinear phase.
struct PhaseTriple {
  int sigma = 1, mu = 1, nu = 1;
};

struct ConditionReport {
  bool assm1_holds = true;
  bool assm2_holds = true;
  double tolerance = 1e-12;
  std::vector<std::array<int, 2>> assm1_violations;   // (alpha, beta)
  std::vector<std::array<int, 3>> assm2_violations;   // (alpha, beta, gamma)
  // Triples (sigma, mu, nu) of positive indices with equal speeds and
  // b_sigma - b_mu - b_nu = 0; these are the resonance-sphere systems.
  std::vector<std::array<int, 3>> equal_speed_null_mass_triples;
};

// Raw configuration data before validation, as parsed from a config document.
struct SystemConfig {
  int d = 0;
  std::vector<double> b, c;
  QuasiTensorA A;      // empty -> zero
  QuasiTensorB B;      // empty -> zero
  SemilinearForm Qp;   // empty -> zero
};

SystemParams build_system(const SystemConfig& cfg);
ConditionReport check_ip12_conditions(const SystemParams& p, double tol = 1e-12);
void validate_triple(const SystemParams& p, const PhaseTriple& t);

}  // namespace kg
