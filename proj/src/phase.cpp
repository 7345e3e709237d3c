#include "kg/phase.hpp"

#include <gsl/gsl_poly.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "json.hpp"

namespace kg {

namespace {

// Unsigned dispersion u(x) = sqrt(c^2 x^2 + b^2) and derivatives in the
// scalar argument; the signed branch multiplies everything by sgn(s).
double disp(const SystemParams& p, int s, double x, int order) {
  double c = p.speed(s), b = std::fabs(p.mass(s));
  double c2 = c * c, b2 = b * b;
  double u = std::sqrt(c2 * x * x + b2);
  double v;
  switch (order) {
    case 0: v = u; break;
    case 1: v = c2 * x / u; break;
    case 2: v = c2 * b2 / (u * u * u); break;
    case 3: v = -3 * c2 * c2 * b2 * x / std::pow(u, 5); break;
    case 4:
      v = -3 * c2 * c2 * b2 / std::pow(u, 5) +
          15 * c2 * c2 * c2 * b2 * x * x / std::pow(u, 7);
      break;
    default: throw validation_error("parallel_phase: order must be <= 4");
  }
  return s > 0 ? v : -v;
}

double dot(const vec3& a, const vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm3(const vec3& a) { return std::sqrt(dot(a, a)); }
vec3 sub(const vec3& a, const vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// d_beta Phi+ and d_alpha Phi+ as standalone scalars.
double dbeta_phi(const SystemParams& p, const PhaseTriple& t, double a, double b) {
  return disp(p, t.mu, a - b, 1) - disp(p, t.nu, b, 1);
}
double dalpha_phi(const SystemParams& p, const PhaseTriple& t, double a, double b) {
  return disp(p, t.sigma, a, 1) - disp(p, t.mu, a - b, 1);
}
double phi_plus(const SystemParams& p, const PhaseTriple& t, double a, double b) {
  return disp(p, t.sigma, a, 0) - disp(p, t.mu, a - b, 0) - disp(p, t.nu, b, 0);
}
double d2beta_phi(const SystemParams& p, const PhaseTriple& t, double a, double b) {
  return -disp(p, t.mu, a - b, 2) - disp(p, t.nu, b, 2);
}

}  // namespace

double eval_phase(const SystemParams& p, const PhaseTriple& t, const vec3& xi, const vec3& eta) {
  validate_triple(p, t);
  return p.lambda(t.sigma, norm3(xi)) - p.lambda(t.mu, norm3(sub(xi, eta))) -
         p.lambda(t.nu, norm3(eta));
}

PhaseDerivatives phase_derivatives(const SystemParams& p, const PhaseTriple& t, const vec3& xi,
                                   const vec3& eta) {
  validate_triple(p, t);
  PhaseDerivatives d;
  vec3 zmu = sub(xi, eta);
  double Lmu = p.lambda(t.mu, norm3(zmu));
  double Lnu = p.lambda(t.nu, norm3(eta));
  double Lsg = p.lambda(t.sigma, norm3(xi));
  double cmu2 = p.speed(t.mu) * p.speed(t.mu);
  double cnu2 = p.speed(t.nu) * p.speed(t.nu);
  double csg2 = p.speed(t.sigma) * p.speed(t.sigma);
  for (int i = 0; i < 3; ++i) {
    d.grad_eta[i] = cmu2 * zmu[i] / Lmu - cnu2 * eta[i] / Lnu;
    d.grad_xi[i] = csg2 * xi[i] / Lsg - cmu2 * zmu[i] / Lmu;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double id = i == j ? 1.0 : 0.0;
      d.hess_eta[i][j] = -(cmu2 * id / Lmu - cmu2 * cmu2 * zmu[i] * zmu[j] / (Lmu * Lmu * Lmu)) -
                         (cnu2 * id / Lnu - cnu2 * cnu2 * eta[i] * eta[j] / (Lnu * Lnu * Lnu));
    }
  return d;
}

std::vector<double> parallel_phase(const SystemParams& p, const PhaseTriple& t, double alpha,
                                   double beta, int max_order) {
  validate_triple(p, t);
  if (max_order < 0 || max_order > 4)
    throw validation_error("parallel_phase: max_order must be in 0..4");
  std::vector<double> out(max_order + 1);
  out[0] = phi_plus(p, t, alpha, beta);
  for (int n = 1; n <= max_order; ++n) {
    // d^n/d beta^n [ -Lambda_mu(alpha-beta) - Lambda_nu(beta) ]
    double from_mu = -std::pow(-1.0, n) * disp(p, t.mu, alpha - beta, n);
    out[n] = from_mu - disp(p, t.nu, beta, n);
  }
  return out;
}

double FactorPoint::R3() const { return R2 + std::sqrt(std::fabs(Q)); }
double FactorPoint::R4() const { return R2 - std::sqrt(std::fabs(Q)); }

FactorPoint factor_at(const SystemParams& p, const PhaseTriple& t, double alpha) {
  validate_triple(p, t);
  double cmu = p.speed(t.mu), cnu = p.speed(t.nu);
  double bmu = std::fabs(p.mass(t.mu)), bnu = std::fabs(p.mass(t.nu));
  if (std::fabs(cmu - cnu) < 1e-12)
    throw validation_error("factor_at: equal speeds degenerate to the reduced single-root form");
  if (std::fabs(alpha) < 1e-9)
    throw validation_error("factor_at: alpha must be nonzero");

  // Quartic from cross-multiplying the squared critical-point equation:
  // cmu^4 (b-a)^2 (cnu^2 b^2 + bnu^2) - cnu^4 b^2 (cmu^2 (b-a)^2 + bmu^2) = 0
  double A = std::pow(cmu, 4) * cnu * cnu;
  double B = std::pow(cmu, 4) * bnu * bnu;
  double C = std::pow(cnu, 4) * cmu * cmu;
  double D = std::pow(cnu, 4) * bmu * bmu;
  double lead = A - C;  // = cmu^2 cnu^2 (cmu^2 - cnu^2) != 0
  double coef[5] = {B * alpha * alpha, -2 * alpha * B, lead * alpha * alpha + B - D,
                    -2 * alpha * lead, lead};
  double z[8];
  gsl_poly_complex_workspace* w = gsl_poly_complex_workspace_alloc(5);
  int status = gsl_poly_complex_solve(coef, 5, w, z);
  gsl_poly_complex_workspace_free(w);
  if (status != 0) throw numeric_error("factor_at: quartic solve failed at alpha=" + std::to_string(alpha));

  std::array<std::complex<double>, 4> roots;
  for (int i = 0; i < 4; ++i) roots[i] = {z[2 * i], z[2 * i + 1]};

  // The two distinguished real roots: one strictly between 0 and alpha, one in
  // the outer region whose side depends on sign(cmu - cnu).
  auto is_real = [](const std::complex<double>& r) { return std::fabs(r.imag()) < 1e-7 * (1 + std::fabs(r.real())); };
  double in_lo = std::min(0.0, alpha), in_hi = std::max(0.0, alpha);
  int idx_in = -1, idx_out = -1;
  for (int i = 0; i < 4; ++i) {
    if (!is_real(roots[i])) continue;
    double r = roots[i].real();
    if (r > in_lo && r < in_hi) {
      idx_in = i;
    } else {
      bool outer;
      if (cmu > cnu)
        outer = alpha > 0 ? r > alpha : r < alpha;
      else
        outer = alpha > 0 ? r < 0 : r > 0;
      if (outer) idx_out = i;
    }
  }
  if (idx_in < 0 || idx_out < 0)
    throw numeric_error("factor_at: distinguished roots not found at alpha=" +
                        std::to_string(alpha));

  // Exactly one of them solves the unsquared equation; that one is R1.
  auto resid = [&](double b) { return std::fabs(dbeta_phi(p, t, alpha, b)); };
  double g_in = resid(roots[idx_in].real()), g_out = resid(roots[idx_out].real());
  double scale = std::max(1.0, std::fabs(disp(p, t.mu, alpha, 1)) + std::fabs(disp(p, t.nu, alpha, 1)));
  double lo = std::min(g_in, g_out), hi = std::max(g_in, g_out);
  if (lo > 1e-5 * scale || hi < 10 * lo)
    throw numeric_error("factor_at: root identification ambiguous at alpha=" +
                        std::to_string(alpha));
  double R1 = (g_in < g_out) ? roots[idx_in].real() : roots[idx_out].real();

  // Newton polish of R1 on the unsquared equation.
  for (int it = 0; it < 40; ++it) {
    double g = dbeta_phi(p, t, alpha, R1);
    double dg = d2beta_phi(p, t, alpha, R1);
    if (dg == 0.0) break;
    double step = g / dg;
    R1 -= step;
    if (std::fabs(step) < 1e-14 * (1 + std::fabs(R1))) break;
  }

  // The remaining pair carries the quadratic factor.
  FactorPoint fp;
  fp.alpha = alpha;
  fp.R1 = R1;
  std::array<std::complex<double>, 2> pair;
  int n = 0;
  for (int i = 0; i < 4; ++i)
    if (i != idx_in && i != idx_out && n < 2) pair[n++] = roots[i];
  if (n != 2) throw numeric_error("factor_at: quartic root bookkeeping failed");
  fp.R2 = 0.5 * (pair[0].real() + pair[1].real());
  if (std::fabs(pair[0].imag()) > 1e-10 * (1 + std::fabs(pair[0].real()))) {
    fp.Q = -pair[0].imag() * pair[0].imag();  // conjugate pair R2 +- i sqrt(-Q)
  } else {
    double h = 0.5 * (pair[0].real() - pair[1].real());
    fp.Q = h * h;
  }
  return fp;
}

PhaseFactorization factor_dbeta(const SystemParams& p, const PhaseTriple& t, double a_lo,
                                double a_hi, int samples) {
  validate_triple(p, t);
  if (!(a_hi > a_lo) || samples < 2)
    throw validation_error("factor_dbeta: need a_hi > a_lo and samples >= 2");
  PhaseFactorization f;
  double cmu = p.speed(t.mu), cnu = p.speed(t.nu);
  if (std::fabs(cmu - cnu) < 1e-12) {
    double denom = p.mass(t.mu) + p.mass(t.nu);
    if (std::fabs(denom) < 1e-14)
      throw numeric_error("factor_dbeta: b_mu + b_nu = 0, critical line undefined");
    f.reduced = true;
    f.rho = p.mass(t.nu) / denom;
    return f;
  }

  for (int i = 0; i < samples; ++i) {
    double a = a_lo + (a_hi - a_lo) * i / (samples - 1);
    if (std::fabs(a) < 1e-6) continue;  // factorization defined for alpha != 0
    f.samples.push_back(factor_at(p, t, a));
  }
  if (f.samples.empty()) throw numeric_error("factor_dbeta: no valid samples in range");

  // Overall sign from the large-beta behaviour at the first sample.
  {
    const FactorPoint& fp = f.samples.front();
    double b = fp.R2 + 10 * (1 + std::fabs(fp.R2) + std::sqrt(std::fabs(fp.Q)));
    double denom = (b - fp.R1) * ((b - fp.R2) * (b - fp.R2) - fp.Q);
    f.sign = dbeta_phi(p, t, fp.alpha, b) / denom >= 0 ? 1 : -1;
  }

  // Reconstruction check. The quotient P = d_beta Phi+ / [sign (b-R1)((b-R2)^2-Q)]
  // carries the factorization's content: it must stay strictly positive. We
  // record the worst of (a) the zero residual at the polished R1 and (b) any
  // sign violation of the quotient where the derivative is bounded away
  // from zero.
  for (const FactorPoint& fp : f.samples) {
    double a = fp.alpha;
    double res = std::fabs(dbeta_phi(p, t, a, fp.R1)) /
                 std::max(1e-12, std::fabs(d2beta_phi(p, t, a, fp.R1)));
    double w = std::sqrt(std::fabs(fp.Q));
    double lo = std::min({fp.R1, fp.R2 - w, a}) - 2.0;
    double hi = std::max({fp.R1, fp.R2 + w, a}) + 2.0;
    for (int i = 0; i <= 64; ++i) {
      double b = lo + (hi - lo) * i / 64;
      double g = dbeta_phi(p, t, a, b);
      double den = f.sign * (b - fp.R1) * ((b - fp.R2) * (b - fp.R2) - fp.Q);
      if (std::fabs(g) < 1e-6 || std::fabs(den) < 1e-6) continue;
      if (g / den <= 0) res = std::max(res, 1.0);
    }
    f.max_recon_residual = std::max(f.max_recon_residual, res);
  }

  // Q zeros by sign change + bisection on alpha -> Q(alpha).
  for (size_t i = 0; i + 1 < f.samples.size(); ++i) {
    double qa = f.samples[i].Q, qb = f.samples[i + 1].Q;
    if (qa == 0.0) f.Q_zeros.push_back(f.samples[i].alpha);
    if (qa * qb >= 0.0) continue;
    double lo = f.samples[i].alpha, hi = f.samples[i + 1].alpha;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      double qm = factor_at(p, t, mid).Q;
      if (qm == 0.0) { lo = hi = mid; break; }
      if ((qm > 0) == (qa > 0)) lo = mid; else hi = mid;
    }
    f.Q_zeros.push_back(0.5 * (lo + hi));
  }
  return f;
}

ResonanceReport spacetime_resonances(const SystemParams& p, const PhaseTriple& t,
                                     const std::array<double, 4>& box) {
  validate_triple(p, t);
  ResonanceReport r;
  r.box = box;
  const double tol = r.tolerance;
  double cs = p.speed(t.sigma), cm = p.speed(t.mu), cn = p.speed(t.nu);
  double mass_sum = p.mass(t.sigma) - p.mass(t.mu) - p.mass(t.nu);

  auto annotate = [&](double a, double b) {
    ResonancePoint pt;
    pt.alpha = a;
    pt.beta = b;
    pt.phi_res = std::fabs(phi_plus(p, t, a, b));
    pt.dphi_res = std::fabs(dbeta_phi(p, t, a, b));
    pt.d2beta = d2beta_phi(p, t, a, b);
    auto d = phase_derivatives(p, t, {a, 0, 0}, {b, 0, 0});
    double det =
        d.hess_eta[0][0] * (d.hess_eta[1][1] * d.hess_eta[2][2] - d.hess_eta[1][2] * d.hess_eta[2][1]) -
        d.hess_eta[0][1] * (d.hess_eta[1][0] * d.hess_eta[2][2] - d.hess_eta[1][2] * d.hess_eta[2][0]) +
        d.hess_eta[0][2] * (d.hess_eta[1][0] * d.hess_eta[2][1] - d.hess_eta[1][1] * d.hess_eta[2][0]);
    pt.hess_nondegenerate = std::fabs(det) > tol;
    return pt;
  };

  bool all_equal = std::fabs(cs - cm) < 1e-12 && std::fabs(cm - cn) < 1e-12;
  if (all_equal) {
    if (std::fabs(mass_sum) < 1e-12) {
      r.kind = ResonanceKind::sphere_family;
      r.rho = p.mass(t.nu) / p.mass(t.sigma);
    } else {
      r.kind = ResonanceKind::empty;
    }
    return r;
  }

  std::vector<ResonancePoint> pts;
  auto push_dedup = [&](double a, double b) {
    for (const auto& q : pts)
      if (std::fabs(q.alpha - a) < 1e-6 && std::fabs(q.beta - b) < 1e-6) return;
    pts.push_back(annotate(a, b));
  };

  if (std::fabs(cm - cn) < 1e-12) {
    // Critical line beta = rho alpha; scan Phi+ along it.
    double denom = p.mass(t.mu) + p.mass(t.nu);
    if (std::fabs(denom) < 1e-14)
      throw numeric_error("spacetime_resonances: b_mu + b_nu = 0 on the equal-speed line");
    double rho = p.mass(t.nu) / denom;
    auto h = [&](double a) { return phi_plus(p, t, a, rho * a); };
    const int N = 8192;
    for (int i = 0; i < N; ++i) {
      double a0 = box[0] + (box[1] - box[0]) * i / N;
      double a1 = box[0] + (box[1] - box[0]) * (i + 1) / N;
      double h0 = h(a0), h1 = h(a1);
      if (h0 == 0.0) push_dedup(a0, rho * a0);
      if (h0 * h1 >= 0) continue;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (a0 + a1);
        double hm = h(mid);
        if (hm == 0.0) { a0 = a1 = mid; break; }
        if ((hm > 0) == (h0 > 0)) a0 = mid; else a1 = mid;
      }
      double a = 0.5 * (a0 + a1), b = rho * a;
      if (b >= box[2] && b <= box[3]) push_dedup(a, b);
    }
  } else {
    // 2-D grid scan for joint minima of |Phi+| + |d_beta Phi+|, Newton polish.
    const int N = 220;
    auto F = [&](double a, double b) {
      return std::fabs(phi_plus(p, t, a, b)) + std::fabs(dbeta_phi(p, t, a, b));
    };
    std::vector<double> grid(size_t(N + 1) * (N + 1));
    auto at = [&](int i, int j) -> double& { return grid[size_t(i) * (N + 1) + j]; };
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j)
        at(i, j) = F(box[0] + (box[1] - box[0]) * i / N, box[2] + (box[3] - box[2]) * j / N);
    double cell = std::max(box[1] - box[0], box[3] - box[2]) / N;
    for (int i = 1; i < N; ++i)
      for (int j = 1; j < N; ++j) {
        double v = at(i, j);
        if (v > 2.0 * cell && v > 0.2) continue;
        bool is_min = true;
        for (int di = -1; di <= 1 && is_min; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            if ((di || dj) && at(i + di, j + dj) < v) { is_min = false; break; }
        if (!is_min) continue;
        double a = box[0] + (box[1] - box[0]) * i / N;
        double b = box[2] + (box[3] - box[2]) * j / N;
        // Newton on (Phi+, d_beta Phi+) in (alpha, beta)
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
          double f1 = phi_plus(p, t, a, b), f2 = dbeta_phi(p, t, a, b);
          if (std::fabs(f1) < tol && std::fabs(f2) < tol) { ok = true; break; }
          double j11 = dalpha_phi(p, t, a, b), j12 = f2;
          double j21 = disp(p, t.mu, a - b, 2);  // d_alpha d_beta Phi+
          double j22 = d2beta_phi(p, t, a, b);
          double det = j11 * j22 - j12 * j21;
          if (std::fabs(det) < 1e-14) break;
          double da = (f1 * j22 - f2 * j12) / det;
          double db = (f2 * j11 - f1 * j21) / det;
          a -= da;
          b -= db;
          if (std::fabs(da) + std::fabs(db) > 10 * (box[1] - box[0])) break;
        }
        if (ok && a >= box[0] && a <= box[1] && b >= box[2] && b <= box[3])
          push_dedup(a, b);
        else
          r.unresolved_seeds.push_back({box[0] + (box[1] - box[0]) * i / N,
                                        box[2] + (box[3] - box[2]) * j / N});
      }
  }

  bool origin_degenerate = std::fabs(mass_sum) < tol && box[0] <= 0 && box[1] >= 0 &&
                           box[2] <= 0 && box[3] >= 0;
  if (origin_degenerate) {
    // Phi and d_beta Phi+ vanish quadratically at the origin, so Newton seeds
    // settle anywhere inside its basin; collapse them onto the origin itself.
    std::erase_if(pts, [](const ResonancePoint& q) {
      return std::hypot(q.alpha, q.beta) < 1e-3;
    });
    pts.insert(pts.begin(), annotate(0.0, 0.0));
  }
  bool nonorigin = false;
  for (const auto& q : pts)
    if (std::fabs(q.alpha) > 1e-6 || std::fabs(q.beta) > 1e-6) nonorigin = true;
  r.points = std::move(pts);
  if (r.points.empty() && !origin_degenerate)
    r.kind = ResonanceKind::empty;
  else if (origin_degenerate && !nonorigin)
    r.kind = ResonanceKind::degenerate_origin;
  else
    r.kind = ResonanceKind::finite;
  return r;
}

DegenerateReport classify_low_freq(const SystemParams& p, const PhaseTriple& t, double tol) {
  validate_triple(p, t);
  DegenerateReport r;
  r.tolerance = tol;
  double bs = p.mass(t.sigma), bm = p.mass(t.mu), bn = p.mass(t.nu);
  double cs = p.speed(t.sigma), cm = p.speed(t.mu), cn = p.speed(t.nu);
  r.phi_origin = bs - bm - bn;
  r.sigma1 = {cs * cs / (2 * bs), -cm * cm / (2 * bm), -cn * cn / (2 * bn)};
  r.sigma2 = {std::pow(cs, 4) / (8 * std::pow(bs, 3)), -std::pow(cm, 4) / (8 * std::pow(bm, 3)),
              -std::pow(cn, 4) / (8 * std::pow(bn, 3))};
  r.rho0 = r.sigma1[0] + r.sigma1[1];
  r.rho1 = -2 * r.sigma1[1];
  r.rho3 = r.sigma1[1] + r.sigma1[2];
  double second = bs / (cs * cs) - bm / (cm * cm) - bn / (cn * cn);
  r.perfect_square = std::fabs(second) < tol;
  r.rho5 = -r.sigma1[0] / r.sigma1[2];

  bool first = std::fabs(r.phi_origin) < tol;
  bool equal_speeds = std::fabs(cs - cm) < tol && std::fabs(cm - cn) < tol;
  if (!first || !r.perfect_square) {
    r.case_label = "nondegenerate";
  } else if (equal_speeds) {
    r.case_label = "B";
  } else {
    r.case_label = "A";
    r.caseA_lambda = -std::pow(cs * cm * cn, 4) * (cs * cs - cm * cm) * (cm * cm - cn * cn) *
                     (cn * cn - cs * cs);
  }
  return r;
}

QZeroExpansion expansion_at_Q_zero(const SystemParams& p, const PhaseTriple& t, double alpha0,
                                   double h_lo, double h_hi) {
  FactorPoint f0 = factor_at(p, t, alpha0);
  if (std::fabs(f0.Q) > 1e-6)
    throw validation_error("expansion_at_Q_zero: Q(alpha0) is not zero (Q=" +
                           std::to_string(f0.Q) + ")");
  if (std::fabs(phi_plus(p, t, alpha0, f0.R2)) > 1e-6)
    throw validation_error("expansion_at_Q_zero: Phi+(alpha0, R2) is not zero");
  QZeroExpansion e;
  e.lambda = dalpha_phi(p, t, alpha0, f0.R2);

  auto fit_side = [&](int side, double& slope, double& coef) {
    const int M = 16;
    std::vector<double> lx, ly;
    for (int i = 0; i < M; ++i) {
      double h = h_lo * std::pow(h_hi / h_lo, double(i) / (M - 1));
      double a = alpha0 + side * h;
      FactorPoint fp = factor_at(p, t, a);
      double y = std::fabs(phi_plus(p, t, a, fp.R3()) - e.lambda * (a - alpha0));
      if (y <= 0) continue;
      lx.push_back(std::log(h));
      ly.push_back(std::log(y));
    }
    if (lx.size() < 4) throw numeric_error("expansion_at_Q_zero: fit window degenerate");
    double n = lx.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
    }
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    coef = std::exp((sy - slope * sx) / n);
  };

  double sl, sr;
  fit_side(-1, sl, e.lambda_prime_left);
  fit_side(+1, sr, e.lambda_prime_right);
  e.fit_exponent = 0.5 * (sl + sr);

  if (std::fabs(e.lambda) < 1e-8) {
    // Eq-(more) branch: |d_alpha Phi+(alpha, R3(alpha))| ~ |alpha-alpha0|^{1/2},
    // measured on the side where Q > 0 (there R3 is a genuine critical point).
    for (int side : {+1, -1}) {
      if (factor_at(p, t, alpha0 + side * h_hi).Q <= 0) continue;
      const int M = 16;
      std::vector<double> lx, ly;
      for (int i = 0; i < M; ++i) {
        double h = h_lo * std::pow(h_hi / h_lo, double(i) / (M - 1));
        double a = alpha0 + side * h;
        FactorPoint fp = factor_at(p, t, a);
        double y = std::fabs(dalpha_phi(p, t, a, fp.R3()));
        if (y <= 0) continue;
        lx.push_back(std::log(h));
        ly.push_back(std::log(y));
      }
      if (lx.size() < 4) continue;
      double n = lx.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
      }
      e.derivative_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      break;
    }
  }
  return e;
}

double sublevel_measure(const SystemParams& p, const PhaseTriple& t, double alpha, double eps,
                        double b_lo, double b_hi) {
  validate_triple(p, t);
  if (!(eps > 0)) throw validation_error("sublevel_measure: eps must be positive");
  if (!(b_hi > b_lo)) throw validation_error("sublevel_measure: empty window");
  auto g = [&](double b) { return std::fabs(phi_plus(p, t, alpha, b)) - eps; };
  const int per_unit = 4096;
  long N = std::min<long>(1 << 22, std::max<long>(4096, std::lround(per_unit * (b_hi - b_lo))));
  std::vector<double> cuts{b_lo};
  double prev = g(b_lo);
  for (long i = 1; i <= N; ++i) {
    double x = b_lo + (b_hi - b_lo) * i / N;
    double cur = g(x);
    if (prev * cur < 0) {
      double lo = b_lo + (b_hi - b_lo) * (i - 1) / N, hi = x;
      double glo = prev;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        double gm = g(mid);
        if (gm == 0.0) { lo = hi = mid; break; }
        if ((gm > 0) == (glo > 0)) { lo = mid; glo = gm; } else hi = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  cuts.push_back(b_hi);
  double measure = 0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    if (g(0.5 * (cuts[i] + cuts[i + 1])) < 0) measure += cuts[i + 1] - cuts[i];
  return measure;
}

namespace {
const char* kind_name(ResonanceKind k) {
  switch (k) {
    case ResonanceKind::empty: return "empty";
    case ResonanceKind::finite: return "finite";
    case ResonanceKind::sphere_family: return "sphere_family";
    case ResonanceKind::degenerate_origin: return "degenerate_origin";
  }
  return "?";
}
}  // namespace

std::string to_json_string(const ResonanceReport& r) {
  nlohmann::json j;
  j["kind"] = kind_name(r.kind);
  j["rho"] = r.rho;
  j["box"] = r.box;
  j["tolerance"] = r.tolerance;
  j["points"] = nlohmann::json::array();
  for (const auto& q : r.points)
    j["points"].push_back({{"alpha", q.alpha},
                           {"beta", q.beta},
                           {"phi_residual", q.phi_res},
                           {"dphi_residual", q.dphi_res},
                           {"d2beta", q.d2beta},
                           {"hess_nondegenerate", q.hess_nondegenerate}});
  j["unresolved_seeds"] = r.unresolved_seeds;
  return j.dump(2);
}

std::string to_json_string(const DegenerateReport& r) {
  nlohmann::json j;
  j["sigma1"] = r.sigma1;
  j["sigma2"] = r.sigma2;
  j["quad_coeffs"] = {{"rho0", r.rho0}, {"rho1", r.rho1}, {"rho3", r.rho3}};
  j["perfect_square"] = r.perfect_square;
  j["rho5"] = r.rho5;
  if (r.caseA_lambda)
    j["caseA_lambda"] = *r.caseA_lambda;
  else
    j["caseA_lambda"] = nullptr;
  j["case_label"] = r.case_label;
  j["phi_origin"] = r.phi_origin;
  j["tolerance"] = r.tolerance;
  return j.dump(2);
}

}  // namespace kg
