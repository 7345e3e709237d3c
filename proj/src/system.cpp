#include "kg/system.hpp"

#include <algorithm>
#include <cmath>

namespace kg {

bool SystemParams::has_nonlinearity() const {
  auto nz = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
  };
  return nz(A.a) || nz(B.b) || nz(Qp.q);
}

SystemParams build_system(const SystemConfig& cfg) {
  if (cfg.d <= 0) throw validation_error("system: d must be a positive integer");
  const int d = cfg.d;
  if ((int)cfg.b.size() != d)
    throw validation_error("system: b must have length d=" + std::to_string(d));
  if ((int)cfg.c.size() != d)
    throw validation_error("system: c must have length d=" + std::to_string(d));
  for (int i = 0; i < d; ++i) {
    if (!(cfg.b[i] > 0.0))
      throw validation_error("system: mass must be positive (b[" + std::to_string(i + 1) + "])");
    if (!(cfg.c[i] > 0.0))
      throw validation_error("system: speed must be positive (c[" + std::to_string(i + 1) + "])");
  }

  SystemParams p;
  p.d = d;
  p.b = cfg.b;
  p.c = cfg.c;
  p.A = cfg.A.a.empty() ? QuasiTensorA{d, std::vector<double>(size_t(d) * d * d * 9, 0.0)} : cfg.A;
  p.B = cfg.B.b.empty() ? QuasiTensorB{d, std::vector<double>(size_t(d) * d * d * 27, 0.0)} : cfg.B;
  p.Qp = cfg.Qp.q.empty() ? SemilinearForm{d, std::vector<double>(size_t(d) * d * d * 25, 0.0)} : cfg.Qp;
  if (p.A.d != d || p.A.a.size() != size_t(d) * d * d * 9)
    throw validation_error("system: tensor A has wrong shape");
  if (p.B.d != d || p.B.b.size() != size_t(d) * d * d * 27)
    throw validation_error("system: tensor B has wrong shape");
  if (p.Qp.d != d || p.Qp.q.size() != size_t(d) * d * d * 25)
    throw validation_error("system: Q' coefficients have wrong shape");

  // Symmetry in (alpha, beta) is required, not repaired.
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be)
      for (int ga = 0; ga < d; ++ga)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            if (p.A.at(al, be, ga, j, k) != p.A.at(be, al, ga, j, k))
              throw validation_error("system: tensor A not symmetric under alpha<->beta at (" +
                                     std::to_string(al + 1) + "," + std::to_string(be + 1) + ")");
            if (p.A.at(al, be, ga, j, k) != p.A.at(al, be, ga, k, j))
              throw validation_error("system: tensor A not symmetric under j<->k");
            for (int l = 0; l < 3; ++l)
              if (p.B.at(al, be, ga, j, k, l) != p.B.at(be, al, ga, j, k, l))
                throw validation_error("system: tensor B not symmetric under alpha<->beta at (" +
                                       std::to_string(al + 1) + "," + std::to_string(be + 1) + ")");
          }

  auto maxabs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
  };
  if (maxabs(p.A.a) > 1.0) throw validation_error("system: tensor A entry magnitude exceeds 1");
  if (maxabs(p.B.b) > 1.0) throw validation_error("system: tensor B entry magnitude exceeds 1");
  return p;
}

ConditionReport check_ip12_conditions(const SystemParams& p, double tol) {
  ConditionReport r;
  r.tolerance = tol;
  const int d = p.d;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double v = (p.c[a] - p.c[b]) * (p.c[a] * p.c[a] * p.b[a] - p.c[b] * p.c[b] * p.b[b]);
      if (v < -tol) r.assm1_violations.push_back({a + 1, b + 1});
    }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int g = 0; g < d; ++g)
        if (std::fabs(p.b[a] + p.b[b] - p.b[g]) <= tol)
          r.assm2_violations.push_back({a + 1, b + 1, g + 1});
  r.assm1_holds = r.assm1_violations.empty();
  r.assm2_holds = r.assm2_violations.empty();
  // Triples with c_sigma = c_mu = c_nu and b_sigma - b_mu - b_nu = 0.
  for (int s = 0; s < d; ++s)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n)
        if (std::fabs(p.c[s] - p.c[m]) <= tol && std::fabs(p.c[m] - p.c[n]) <= tol &&
            std::fabs(p.b[s] - p.b[m] - p.b[n]) <= tol)
          r.equal_speed_null_mass_triples.push_back({s + 1, m + 1, n + 1});
  return r;
}

void validate_triple(const SystemParams& p, const PhaseTriple& t) {
  for (int s : {t.sigma, t.mu, t.nu})
    if (s == 0 || std::abs(s) > p.d)
      throw validation_error("triple: signed index " + std::to_string(s) +
                             " out of range for d=" + std::to_string(p.d));
}

}  // namespace kg
