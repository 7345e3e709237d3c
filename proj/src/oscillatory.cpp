#include "kg/oscillatory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kg/dyadic.hpp"

namespace kg {

namespace {

// Composite Simpson on [a, b] with N (even) intervals.
template <class F>
cplx simpson1(const F& f, double a, double b, long N) {
  double h = (b - a) / double(N);
  cplx s = f(a) + f(b);
  for (long i = 1; i < N; ++i) s += f(a + i * h) * double(i % 2 ? 4 : 2);
  return s * (h / 3.0);
}

long even_ceil(double x) {
  long n = (long)std::ceil(x);
  return n + (n & 1);
}

// Smooth compactly supported window on (-1, 1), Gevrey-regular, g(0) = 1.
double window01(double s) {
  if (std::abs(s) >= 1) return 0;
  double u = s * s;
  return std::exp(-u / (1 - u));
}

// psi_2: smooth even window supported in |z| in [5/8, 8/5] (the |z| ~ 1
// annulus), with fast Fourier decay so angular restriction is sharp.
double psi2(double z) {
  double a = std::abs(z);
  constexpr double lo = 0.625, hi = 1.6;
  return window01((a - 0.5 * (lo + hi)) / (0.5 * (hi - lo)));
}

double legendre_q(int q, double x) {
  if (q < 0) throw validation_error("angular_bilinear: angular degree must be >= 0");
  return std::legendre((unsigned)q, std::clamp(x, -1.0, 1.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// ibp_bound
// ---------------------------------------------------------------------------

IbpResult ibp_bound(const IbpParameters& p) {
  if (!(p.K >= 1)) throw validation_error("ibp_bound: K must be >= 1");
  if (p.n < 1) throw validation_error("ibp_bound: n must be >= 1");
  if ((int)p.eps.size() != p.n)
    throw validation_error("ibp_bound: eps must have exactly n entries");
  for (double e : p.eps)
    if (!(e > 0)) throw validation_error("ibp_bound: eps entries must be positive");
  if (!(p.lambda >= 1)) throw validation_error("ibp_bound: lambda must be >= 1");
  if (!(p.gamma > 0)) throw validation_error("ibp_bound: gamma must be positive");

  double e1 = p.eps.front();
  double M = p.K * e1 * p.eps.back();            // K e1 e_n (= K e1^2 when n = 1)
  for (int j = 0; j + 1 < p.n; ++j)              // chain K e1 e_j / e_{j+1}
    M = std::min(M, p.K * e1 * p.eps[j] / p.eps[j + 1]);
  M = std::min(M, p.K * e1 / p.lambda);

  IbpResult r;
  r.M = M;
  r.bound = std::exp(-p.gamma * std::pow(M, p.gamma));
  return r;
}

// ---------------------------------------------------------------------------
// osc_integral
// ---------------------------------------------------------------------------

OscResult osc_integral_1d(const std::function<double(double)>& phase,
                          const std::function<cplx(double)>& amp, double K, double a, double b) {
  if (!(K > 0)) throw validation_error("osc_integral: K must be positive");
  if (!(b > a)) throw validation_error("osc_integral: empty interval");

  // Sampled sup of |phase'| drives the resolution (phase step < pi/8 per cell).
  const int ns = 512;
  double dh = (b - a) * 1e-6, sup = 0;
  for (int i = 0; i < ns; ++i) {
    double x = a + (i + 0.5) * (b - a) / ns;
    sup = std::max(sup, std::abs(phase(x + dh) - phase(x - dh)) / (2 * dh));
  }
  const long cap = 1L << 21;
  double need = K * sup * (b - a) / (pi / 8);
  long N = std::max<long>(4096, even_ceil(need));
  if (N > cap) {
    std::ostringstream os;
    os << "osc_integral: resolution for K=" << K << " exceeds the cost cap; "
       << "suggested maximum K ~ " << K * double(cap) / need;
    throw numeric_error(os.str());
  }

  auto f = [&](double x) {
    cplx v = amp(x);
    if (v == cplx(0, 0)) return v;
    return v * std::exp(cplx(0, K * phase(x)));
  };
  OscResult r;
  cplx coarse = simpson1(f, a, b, N / 2);
  r.value = simpson1(f, a, b, N);
  r.error_estimate = std::abs(r.value - coarse);
  r.evaluations = (N + 1) + (N / 2 + 1) + 2L * ns;
  return r;
}

OscResult osc_integral_3d(const std::function<double(const vec3&)>& phase,
                          const std::function<cplx(const vec3&)>& amp, double K, double a,
                          double b) {
  if (!(K > 0)) throw validation_error("osc_integral: K must be positive");
  if (!(b > a)) throw validation_error("osc_integral: empty box");

  const int ns = 9;
  double dh = (b - a) * 1e-6;
  std::array<double, 3> sup{0, 0, 0};
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j)
      for (int k = 0; k < ns; ++k) {
        vec3 x{a + (i + 0.5) * (b - a) / ns, a + (j + 0.5) * (b - a) / ns,
               a + (k + 0.5) * (b - a) / ns};
        for (int ax = 0; ax < 3; ++ax) {
          vec3 xp = x, xm = x;
          xp[ax] += dh;
          xm[ax] -= dh;
          sup[ax] = std::max(sup[ax], std::abs(phase(xp) - phase(xm)) / (2 * dh));
        }
      }

  const long cap = 320;
  std::array<long, 3> N;
  for (int ax = 0; ax < 3; ++ax) {
    double need = K * sup[ax] * (b - a) / (pi / 8);
    N[ax] = std::max<long>(32, even_ceil(need));
    if (N[ax] > cap) {
      std::ostringstream os;
      os << "osc_integral: 3-D resolution for K=" << K << " exceeds the cost cap; "
         << "suggested maximum K ~ " << K * double(cap) / need;
      throw numeric_error(os.str());
    }
  }

  auto tensor = [&](const std::array<long, 3>& n) {
    std::array<double, 3> h{(b - a) / n[0], (b - a) / n[1], (b - a) / n[2]};
    auto w = [](long i, long m) { return (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    cplx s{0, 0};
    for (long i = 0; i <= n[0]; ++i)
      for (long j = 0; j <= n[1]; ++j)
        for (long k = 0; k <= n[2]; ++k) {
          vec3 x{a + i * h[0], a + j * h[1], a + k * h[2]};
          cplx v = amp(x);
          if (v == cplx(0, 0)) continue;
          s += w(i, n[0]) * w(j, n[1]) * w(k, n[2]) * v * std::exp(cplx(0, K * phase(x)));
        }
    return s * (h[0] * h[1] * h[2] / 27.0);
  };

  OscResult r;
  std::array<long, 3> Nc{N[0] / 2, N[1] / 2, N[2] / 2};
  cplx coarse = tensor(Nc);
  r.value = tensor(N);
  r.error_estimate = std::abs(r.value - coarse);
  r.evaluations = (N[0] + 1) * (N[1] + 1) * (N[2] + 1) +
                  (Nc[0] + 1) * (Nc[1] + 1) * (Nc[2] + 1) + 3L * ns * ns * ns * 2;
  return r;
}

// ---------------------------------------------------------------------------
// radial_bilinear
// ---------------------------------------------------------------------------

cplx radial_bilinear(const std::function<cplx(double)>& F, const std::function<cplx(double)>& G,
                     const std::function<double(double, double, double)>& kernel, double lambda,
                     double r_lo, double r_hi, int n) {
  if (!(lambda > 0)) throw validation_error("radial_bilinear: lambda must be positive");
  if (!(r_hi > r_lo) || r_lo < 0)
    throw validation_error("radial_bilinear: invalid radial window");
  if (n < 16) throw validation_error("radial_bilinear: need at least 16 points per axis");

  double h = (r_hi - r_lo) / n;
  std::vector<double> rv(n);
  std::vector<cplx> Fv(n), Gv(n);
  for (int i = 0; i < n; ++i) {
    rv[i] = r_lo + (i + 0.5) * h;
    Fv[i] = F(rv[i]);
    Gv[i] = G(rv[i]);
  }
  cplx sum{0, 0};
  for (int i = 0; i < n; ++i) {
    if (Fv[i] == cplx(0, 0)) continue;
    double rho = rv[i];
    for (int j = 0; j < n; ++j) {
      double tau = rv[j];
      if (std::abs(rho - tau) > lambda || lambda > rho + tau) continue;
      if (Gv[j] == cplx(0, 0)) continue;
      double ker = kernel(rho, tau, lambda);
      if (ker == 0) continue;
      sum += rho * tau * Fv[i] * Gv[j] * ker;
    }
  }
  return sum * (2 * pi / lambda) * h * h;
}

// ---------------------------------------------------------------------------
// angular_bilinear
// ---------------------------------------------------------------------------

AngularResult angular_bilinear(const SystemParams& p, const PhaseTriple& tr,
                               const std::function<cplx(double)>& Fprof, int qF,
                               const std::function<cplx(double)>& Gprof, int qG,
                               const AngularConfig& cfg) {
  validate_triple(p, tr);
  if (!(cfg.xi_mag > 0)) throw validation_error("angular_bilinear: xi_mag must be positive");
  if (!(cfg.rho_hi > cfg.rho_lo) || cfg.rho_lo < 0)
    throw validation_error("angular_bilinear: invalid radial window");
  if (cfg.t == 0) throw validation_error("angular_bilinear: t must be nonzero");
  if (qF < 0 || qG < 0) throw validation_error("angular_bilinear: angular degree must be >= 0");

  AngularResult res;
  const double T = cfg.t, xim = cfg.xi_mag;
  const double m_eff = std::log2(std::abs(T));
  const double K0 = 10;

  // Hypothesis checks; violations are recorded, never silently dropped.
  auto warn = [&](const std::string& s) { res.warnings.push_back("hypothesis violated: " + s); };
  int kbar = std::max({0, cfg.k1, cfg.k2});
  int lbar = std::max(cfg.l1, cfg.l2);
  if (!(std::max(cfg.k1, cfg.k2) >= -2 * K0 * K0)) warn("max(k1,k2) >= -2*K0^2");
  if (!(cfg.kappa < m_eff)) warn("kappa << m");
  if (!(lbar < m_eff / 10)) warn("max(l1,l2) < m/10");
  if (!(cfg.j1 - cfg.k1 < m_eff)) warn("j1 - k1 << m");
  switch (cfg.case_id) {
    case 1:
      if (std::abs(cfg.k1 - cfg.k2) > 6) warn("case 1: |k1 - k2| <= 6");
      if (!(cfg.upsilon < (m_eff + cfg.k) / 2 - kbar)) warn("case 1: upsilon < (m+k)/2 - kbar");
      if (!(m_eff + cfg.k > 2 * lbar)) warn("case 1: m + k > 2*lbar");
      break;
    case 2:
      if (std::abs(cfg.k - cfg.k1) > 6) warn("case 2: |k - k1| <= 6");
      if (!(cfg.upsilon < (m_eff + cfg.k2) / 2 - kbar)) warn("case 2: upsilon < (m+k2)/2 - kbar");
      if (!(m_eff + cfg.k2 > 2 * lbar)) warn("case 2: m + k2 > 2*lbar");
      break;
    case 3:
      if (std::abs(cfg.k - cfg.k2) > 6) warn("case 3: |k - k2| <= 6");
      if (!(std::abs(cfg.k1) < (m_eff - lbar) / 2)) warn("case 3: |k1| < (m - lbar)/2");
      if (!(cfg.upsilon < (m_eff - lbar) / 2)) warn("case 3: upsilon < (m - lbar)/2");
      break;
    default:
      throw validation_error("angular_bilinear: case_id must be 1, 2 or 3");
  }

  // Geometry at xi = xim * e1, eta in spherical coordinates (rho, theta).
  auto rho_prime = [&](double rho, double ct) {
    return std::sqrt(std::max(0.0, rho * rho + xim * xim - 2 * rho * xim * ct));
  };
  auto phase = [&](double rho, double ct) {
    return p.lambda(tr.sigma, xim) - p.lambda(tr.mu, rho_prime(rho, ct)) -
           p.lambda(tr.nu, rho);
  };
  const double twok = std::pow(2.0, cfg.kappa);
  auto amp = [&](double rho, double ct) -> cplx {
    double rp = rho_prime(rho, ct);
    cplx a = Fprof(rp) * Gprof(rho);
    if (a == cplx(0, 0)) return a;
    double ph = phase(rho, ct);
    double z = twok * ph;
    a *= std::exp(-z * z);  // psi_1 (Schwartz cutoff on the phase)
    double ctp = rp > 1e-300 ? (xim - rho * ct) / rp : 1.0;
    a *= legendre_q(qF, ctp) * legendre_q(qG, ct);
    return a * (rho * rho);
  };

  // Coarse scan: amplitude support in theta and phase-gradient bounds.
  const int CR = 192, CT = 768;
  double hr_c = (cfg.rho_hi - cfg.rho_lo) / CR, ht_c = pi / CT;
  int it_lo = CT, it_hi = -1;
  double sup_t = 0, sup_r = 0;
  for (int it = 0; it < CT; ++it) {
    double th = (it + 0.5) * ht_c, ct = std::cos(th);
    bool live = false;
    for (int ir = 0; ir < CR; ++ir) {
      double rho = cfg.rho_lo + (ir + 0.5) * hr_c;
      double rp = rho_prime(rho, ct);
      if (Fprof(rp) == cplx(0, 0) || Gprof(rho) == cplx(0, 0)) continue;
      live = true;
      double dt = 1e-5;
      sup_t = std::max(sup_t, std::abs(phase(rho, std::cos(th + dt)) -
                                       phase(rho, std::cos(th - dt))) / (2 * dt));
      sup_r = std::max(sup_r, std::abs(phase(rho + dt, ct) - phase(rho - dt, ct)) / (2 * dt));
    }
    if (live) {
      it_lo = std::min(it_lo, it);
      it_hi = std::max(it_hi, it);
    }
  }
  res.evaluations += 2L * CR * CT;
  if (it_hi < 0) {  // amplitude vanishes identically
    res.ratio = 0;
    return res;
  }
  double th_a = std::max(0.0, (it_lo - 2) * ht_c);
  double th_b = std::min(pi, (it_hi + 3) * ht_c);

  const double fk = shell(cfg.k, xim);  // varphi_k(xi), constant in eta
  const double aT = std::abs(T);
  const long cell_cap = 1L << 26;

  // Tensor Simpson over [rho_lo, rho_hi] x [ta, tb] with an extra theta window.
  auto integrate = [&](double ta, double tb,
                       const std::function<double(double)>& win) -> cplx {
    int ov = std::max(1, cfg.oversample);
    long Nt = ov * std::max<long>(512, even_ceil(aT * sup_t * (tb - ta) / (pi / 8)));
    long Nr = ov * std::max<long>(
                       256, even_ceil(aT * sup_r * (cfg.rho_hi - cfg.rho_lo) / (pi / 8)));
    if (Nt * Nr > cell_cap * ov * ov) {
      std::ostringstream os;
      os << "angular_bilinear: resolution for t=" << T << " exceeds the cost cap; "
         << "suggested maximum |t| ~ " << aT * double(cell_cap) / (double(Nt) * double(Nr));
      throw numeric_error(os.str());
    }
    double ht = (tb - ta) / Nt, hrr = (cfg.rho_hi - cfg.rho_lo) / Nr;
    auto w = [](long i, long m) { return (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    cplx s{0, 0};
    for (long it = 0; it <= Nt; ++it) {
      double th = ta + it * ht;
      double wv = win(th);
      if (wv == 0) continue;
      double ct = std::cos(th), st = std::sin(th);
      cplx row{0, 0};
      for (long ir = 0; ir <= Nr; ++ir) {
        double rho = cfg.rho_lo + ir * hrr;
        cplx a = amp(rho, ct);
        if (a == cplx(0, 0)) continue;
        row += w(ir, Nr) * a * std::exp(cplx(0, T * phase(rho, ct)));
      }
      s += w(it, Nt) * wv * st * row;
      res.evaluations += Nr + 1;
    }
    return s * (2 * pi * ht * hrr / 9.0);  // 2*pi from the azimuthal integral
  };

  res.unrestricted = fk * integrate(th_a, th_b, [](double) { return 1.0; });

  // Restricted: psi_2(2^upsilon sin theta) lives where sin theta is in
  // [5/8, 8/5] * 2^-upsilon; integrate the (at most two) matching theta bands.
  const double twou = std::pow(2.0, cfg.upsilon);
  double s_lo = 0.625 / twou, s_hi = 1.6 / twou;
  auto win = [&](double th) { return psi2(twou * std::sin(th)); };
  cplx restr{0, 0};
  if (s_lo < 1) {
    std::vector<std::array<double, 2>> bands;
    if (s_hi >= 1) {
      bands.push_back({std::asin(s_lo), pi - std::asin(s_lo)});
    } else {
      bands.push_back({std::asin(s_lo), std::asin(s_hi)});
      bands.push_back({pi - std::asin(s_hi), pi - std::asin(s_lo)});
    }
    for (auto& bd : bands) {
      double ta = std::max(bd[0], th_a), tb = std::min(bd[1], th_b);
      if (tb > ta) restr += integrate(ta, tb, win);
    }
  }
  res.restricted = fk * restr;

  double ua = std::abs(res.unrestricted);
  double ra = std::abs(res.restricted);
  res.ratio = ua > 0 ? ra / ua : (ra > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  return res;
}

cplx bilinear_field_integral(const SystemParams& p, const PhaseTriple& tr, const SpectralField& F,
                             const SpectralField& G, const vec3& xi, double time, double upsilon,
                             double kappa, int n_quad) {
  validate_triple(p, tr);
  if (F.resolution == 0 || G.resolution == 0)
    throw validation_error("bilinear_field_integral: empty field");
  if (n_quad < 4) throw validation_error("bilinear_field_integral: n_quad too small");
  double xim = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  if (!(xim > 0)) throw validation_error("bilinear_field_integral: xi must be nonzero");

  OffGridEvaluator eF(F), eG(G);
  double R = std::max(F.nyquist(), G.nyquist());
  double h = 2 * R / n_quad;
  const double twou = std::pow(2.0, upsilon), twok = std::pow(2.0, kappa);

  cplx sum{0, 0};
  for (int i = 0; i < n_quad; ++i)
    for (int j = 0; j < n_quad; ++j)
      for (int k = 0; k < n_quad; ++k) {
        vec3 eta{-R + (i + 0.5) * h, -R + (j + 0.5) * h, -R + (k + 0.5) * h};
        double em = std::sqrt(eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2]);
        if (em == 0) continue;
        vec3 cr{xi[1] * eta[2] - xi[2] * eta[1], xi[2] * eta[0] - xi[0] * eta[2],
                xi[0] * eta[1] - xi[1] * eta[0]};
        double sinang =
            std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]) / (xim * em);
        double w2 = psi2(twou * sinang);
        if (w2 == 0) continue;
        cplx g = eG({eta[0], eta[1], eta[2]});
        if (g == cplx(0, 0)) continue;
        cplx f = eF({xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]});
        if (f == cplx(0, 0)) continue;
        double ph = eval_phase(p, tr, xi, eta);
        double z = twok * ph;
        sum += w2 * std::exp(-z * z) * f * g * std::exp(cplx(0, time * ph));
      }
  return sum * (h * h * h);
}

}  // namespace kg
