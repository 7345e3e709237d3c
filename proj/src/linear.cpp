#include "kg/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "kg/dyadic.hpp"
#include "kg/spherical.hpp"

namespace kg {

namespace {

void check_component(const SystemParams& p, int sigma) {
  if (sigma == 0 || std::abs(sigma) > p.d)
    throw validation_error("component index out of range: " + std::to_string(sigma));
}

long even_ceil(double x) {
  long n = (long)std::ceil(x);
  return n + (n & 1);
}

// d Lambda_sigma / d rho (magnitude component; signed like Lambda itself).
double dlambda(const SystemParams& p, int sigma, double rho) {
  double cc = p.speed(sigma);
  return cc * cc * rho / p.lambda(std::abs(sigma), rho);
}

double window01(double s) { return std::abs(s) < 1 ? std::exp(-s * s / (1 - s * s)) : 0.0; }

// Least-squares log-log fit of sups vs times restricted to the window;
// degenerate abscissas (a single repeated time) give slope 0.
void fit_loglog(const std::vector<double>& times, const std::vector<double>& sups,
                const std::array<double, 2>& window, double& slope, double& ci) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window[0] * (1 - 1e-12) || times[i] > window[1] * (1 + 1e-12)) continue;
    xs.push_back(std::log(times[i]));
    ys.push_back(std::log(sups[i]));
  }
  slope = 0;
  ci = 0;
  size_t n = xs.size();
  if (n < 2) return;
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx < 1e-24) return;  // repeated time grid
  slope = sxy / sxx;
  if (n > 2) {
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
      double r = ys[i] - my - slope * (xs[i] - mx);
      ss += r * r;
    }
    ci = 2.0 * std::sqrt(ss / double(n - 2) / sxx);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Free flow and vector fields.
// ---------------------------------------------------------------------------

SpectralField propagate(const SystemParams& p, const SpectralField& f, int sigma, double t) {
  check_component(p, sigma);
  SpectralField out = f;
  const int n = f.resolution;
  std::vector<double> fr(n);
  for (int i = 0; i < n; ++i) fr[i] = f.freq_of(i);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double rij = fr[i] * fr[i] + fr[j] * fr[j];
      for (int k = 0; k < n; ++k) {
        double r = std::sqrt(rij + fr[k] * fr[k]);
        out.values[f.idx(i, j, k)] *= std::polar(1.0, t * p.lambda(sigma, r));
      }
    }
  return out;
}

SpectralField apply_partial(const SpectralField& f, int axis) {
  if (axis < 0 || axis > 2) throw validation_error("partial axis must be 0..2");
  SpectralField out = f;
  const int n = f.resolution;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int m = axis == 0 ? i : axis == 1 ? j : k;
        out.values[f.idx(i, j, k)] *= cplx(0, f.freq_of(m));
      }
  return out;
}

SpectralField apply_rotation(const SpectralField& f, int a, int b) {
  if (a < 0 || a > 2 || b < 0 || b > 2 || a == b)
    throw validation_error("rotation axes must be distinct and in 0..2");
  auto pb = to_physical(apply_partial(f, b));
  auto pa = to_physical(apply_partial(f, a));
  const int n = f.resolution;
  // The wrapped coordinate has a jump at the box boundary whose slow Fourier
  // tail would alias into the band; taper it smoothly to zero near the edge.
  // Exact for fields supported in |x| <= 0.85 * L/2.
  const double half = f.box_length / 2.0;
  auto coord = [&](int i) {
    double x = f.coord_of(i), s = std::abs(x) / half;
    if (s <= 0.85) return x;
    if (s >= 0.995) return 0.0;
    return x * window01((s - 0.85) / 0.145);
  };
  std::vector<cplx> phys(pa.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        size_t id = f.idx(i, j, k);
        double x[3] = {coord(i), coord(j), coord(k)};
        phys[id] = x[a] * pb[id] - x[b] * pa[id];
      }
  SpectralField out = from_physical(phys, n, f.box_length, f.component);
  out.tag = f.tag;
  return out;
}

namespace {
SpectralField apply_generator(const SpectralField& f, int g) {
  switch (g) {
    case 0:
    case 1:
    case 2:
      return apply_partial(f, g);
    case 3:
      return apply_rotation(f, 0, 1);
    case 4:
      return apply_rotation(f, 0, 2);
    default:
      return apply_rotation(f, 1, 2);
  }
}
}  // namespace

GammaFamily vector_fields(const SpectralField& f, int order, const DiagnosticCaps& caps) {
  if (order < 0) throw validation_error("vector-field order must be >= 0");
  if (order > caps.gamma_order)
    throw range_error("vector-field order " + std::to_string(order) +
                      " exceeds the configured cap " + std::to_string(caps.gamma_order));
  GammaFamily fam;
  std::map<std::vector<int>, size_t> pos;
  fam.words.push_back({});
  fam.fields.push_back(f);
  pos[{}] = 0;
  for (int len = 1; len <= order; ++len) {
    size_t begin = fam.words.size();
    // extend every word of length len-1 by one leading generator
    std::vector<std::vector<int>> prev;
    for (const auto& w : fam.words)
      if ((int)w.size() == len - 1) prev.push_back(w);
    for (int g = 0; g < 6; ++g)
      for (const auto& w : prev) {
        std::vector<int> nw;
        nw.push_back(g);
        nw.insert(nw.end(), w.begin(), w.end());
        fam.words.push_back(nw);
        fam.fields.push_back(apply_generator(fam.fields[pos[w]], g));
        pos[nw] = fam.words.size() - 1;
      }
    (void)begin;
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Z diagnostic.
// ---------------------------------------------------------------------------

double z_diagnostic(const SpectralField& f, int j, int k, const DiagnosticCaps& caps) {
  DyadicIndex jk{j, k};
  if (!jk.in_J())
    throw range_error("(j,k)=(" + std::to_string(j) + "," + std::to_string(k) +
                      ") outside the admissible index set");
  if (caps.N_sub <= 0 || caps.N0_sub <= 0 || caps.gamma_order < 0 || caps.K0 <= 0)
    throw validation_error("diagnostic caps must be positive");
  GammaFamily fam = vector_fields(f, caps.gamma_order, caps);
  double jb = std::pow(jbracket(j), caps.N0_sub);
  if (std::abs(k) >= caps.K0) {
    double m2 = 0;
    for (const auto& g : fam.fields) m2 = std::max(m2, g.l2());
    return jb * std::exp2(std::min(k / 2.0, 0.0)) * pow2(j) * m2;
  }
  double best = 0;
  for (const auto& g : fam.fields)
    best = std::max(best, std::exp2(5.0 * j / 6.0) / jb * g.l2() + jb * pow2(j) * g.fourier_l1());
  return best;
}

// ---------------------------------------------------------------------------
// Decay measurement (grid path).
// ---------------------------------------------------------------------------

DecayFit decay_fit(const SystemParams& p, int sigma, const SpectralField& initial,
                   const std::vector<double>& time_grid, const std::optional<Localization>& loc,
                   std::array<double, 2> window) {
  check_component(p, sigma);
  if (time_grid.empty()) throw validation_error("time grid is empty");
  for (size_t i = 0; i < time_grid.size(); ++i) {
    if (!(time_grid[i] > 0)) throw validation_error("time grid must be positive");
    if (i && time_grid[i] < time_grid[i - 1])
      throw validation_error("time grid must be nondecreasing");
  }
  if (window[0] == 0 && window[1] == 0) window = {time_grid.front(), time_grid.back()};
  if (window[0] > window[1]) throw validation_error("fit window is inverted");

  SpectralField f0 = initial;
  if (loc) {
    DyadicIndex jk{loc->j, loc->k};
    if (!jk.in_J()) throw range_error("localization (j,k) outside the admissible index set");
    f0 = localize_dyadic(f0, LocalizeMode::Q_jk, jk);
    if (loc->l >= 0) f0 = spherical_project(f0, loc->l);
  }

  DecayFit fit;
  fit.window = window;
  const double wrap_threshold = 1e-3;
  for (double t : time_grid) {
    SpectralField g = propagate(p, f0, sigma, t);
    double bm = boundary_mass_fraction(g);
    if (bm > wrap_threshold) {
      std::ostringstream os;
      os << "wrap-around: boundary mass fraction " << bm << " at t=" << t
         << " exceeds " << wrap_threshold << "; enlarge the box";
      throw numeric_error(os.str());
    }
    double s = sup_norm_padded(g, 4);
    if (!(s > 0)) throw numeric_error("sup-norm vanished; nothing to fit");
    fit.times.push_back(t);
    fit.sup_norms.push_back(s);
  }
  fit_loglog(fit.times, fit.sup_norms, fit.window, fit.slope, fit.slope_ci);
  return fit;
}

// ---------------------------------------------------------------------------
// Free-space radial reduction.
// ---------------------------------------------------------------------------

namespace {

constexpr long kRadialCap = 1 << 21;

// Composite Simpson of amp(rho) * exp(i phase(rho)) over [a, b].
template <class Phase, class Amp>
cplx simpson_osc(Phase&& phase, Amp&& amp, double a, double b, long N) {
  double h = (b - a) / N;
  cplx s{0, 0};
  for (long i = 0; i <= N; ++i) {
    double x = a + i * h;
    double w = (i == 0 || i == N) ? 1.0 : (i & 1) ? 4.0 : 2.0;
    s += w * amp(x) * std::polar(1.0, phase(x));
  }
  return s * (h / 3.0);
}

}  // namespace

cplx radial_flow(const SystemParams& p, int sigma, const std::function<cplx(double)>& g, int l,
                 double t, double r, double rho_lo, double rho_hi, double chirp) {
  check_component(p, sigma);
  if (l < 0) throw validation_error("angular degree must be >= 0");
  if (!(rho_hi > rho_lo) || rho_lo < 0)
    throw validation_error("radial support must satisfy 0 <= rho_lo < rho_hi");
  if (r < 0) throw validation_error("radius must be >= 0");

  const double range = rho_hi - rho_lo;
  auto phase = [&](double rho) { return t * p.lambda(sigma, rho) + chirp * rho; };
  // sampled phase-gradient bound for the combined oscillation
  const int n_probe = 512;
  double sup_dphi = 0;
  for (int i = 0; i <= n_probe; ++i) {
    double rho = rho_lo + range * i / n_probe;
    sup_dphi = std::max(sup_dphi, std::abs(t * dlambda(p, sigma, rho) + chirp));
  }
  const cplx pref = std::polar(1.0, l * pi / 2.0) * (4.0 * pi / std::pow(2.0 * pi, 3));

  long n_direct = even_ceil(std::max(512.0, (sup_dphi + r) * range / (pi / 8)));
  if ((l == 0 && n_direct <= (1 << 15)) ||
      (l != 0 && n_direct <= kRadialCap && rho_hi * r < 3e4)) {
    auto j0 = [](double x) { return std::abs(x) < 1e-4 ? 1.0 - x * x / 6 : std::sin(x) / x; };
    auto amp = [&](double rho) {
      double jl = l == 0 ? j0(rho * r) : std::sph_bessel(unsigned(l), rho * r);
      return g(rho) * jl * rho * rho;
    };
    return pref * simpson_osc(phase, amp, rho_lo, rho_hi, n_direct);
  }

  if (l != 0)
    throw numeric_error("radial quadrature needs " + std::to_string(n_direct) +
                        " points (cap " + std::to_string(kRadialCap) +
                        ") or an over-large Bessel argument; only l=0 supports the branch split");

  // j_0(x) = sin(x)/x: split into the two exponential branches; each branch
  // resolves only its own phase gradient, and a branch whose gradient never
  // vanishes may be discarded when its integration-by-parts bound is
  // negligible against the retained branch's scale.
  double sup_amp = 0, l1_damp = 0, mid = 0.5 * (rho_lo + rho_hi);
  {
    double prev = 0;
    for (int i = 0; i <= n_probe; ++i) {
      double rho = rho_lo + range * i / n_probe;
      double a = std::abs(g(rho)) * rho;
      sup_amp = std::max(sup_amp, a);
      if (i) l1_damp += std::abs(a - prev);
      prev = a;
    }
  }
  double ddl = (dlambda(p, sigma, mid + 1e-4 * range) - dlambda(p, sigma, mid - 1e-4 * range)) /
               (2e-4 * range);
  double coherent = std::min(range, std::sqrt(2 * pi / std::max(std::abs(t * ddl), 1e-300)));
  double kept_scale = sup_amp * coherent;

  cplx total{0, 0};
  for (int br = 0; br < 2; ++br) {
    double sgn = br == 0 ? 1.0 : -1.0;  // e^{i(phase + sgn * r rho)}
    double sup_b = 0, min_b = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_probe; ++i) {
      double rho = rho_lo + range * i / n_probe;
      double d = std::abs(t * dlambda(p, sigma, rho) + chirp + sgn * r);
      sup_b = std::max(sup_b, d);
      min_b = std::min(min_b, d);
    }
    long nb = even_ceil(std::max(512.0, sup_b * range / (pi / 8)));
    double drop_bound = (l1_damp + 2 * sup_amp) / std::max(min_b, 1e-300);
    if (drop_bound <= 1e-4 * kept_scale) continue;  // negligible branch
    if (nb > kRadialCap)
      throw numeric_error("radial branch needs " + std::to_string(nb) +
                          " points (cap " + std::to_string(kRadialCap) +
                          ") and its discard bound is not negligible");
    auto ph = [&](double rho) { return phase(rho) + sgn * r * rho; };
    auto amp = [&](double rho) { return g(rho) * rho; };
    total += sgn * simpson_osc(ph, amp, rho_lo, rho_hi, nb);
  }
  return pref * total / (cplx(0, 2) * r);
}

double radial_flow_sup(const SystemParams& p, int sigma, const std::function<cplx(double)>& g,
                       int l, double t, double rho_lo, double rho_hi, double r_lo, double r_hi,
                       int n_scan, double chirp) {
  if (n_scan < 8) throw validation_error("r-scan needs at least 8 points");
  if (!(r_hi > r_lo) || r_lo < 0) throw validation_error("r-scan interval invalid");
  std::vector<double> vals(n_scan);
  double h = (r_hi - r_lo) / (n_scan - 1);
  int best = 0;
  for (int i = 0; i < n_scan; ++i) {
    double r = r_lo + i * h;
    vals[i] = std::abs(radial_flow(p, sigma, g, l, t, r, rho_lo, rho_hi, chirp));
    if (vals[i] > vals[best]) best = i;
  }
  double peak = vals[best];
  if (best > 0 && best < n_scan - 1) {
    double y0 = vals[best - 1], y1 = vals[best], y2 = vals[best + 1];
    double den = y0 - 2 * y1 + y2;
    if (std::abs(den) > 1e-300) {
      double dx = 0.5 * (y0 - y2) / den;
      if (std::abs(dx) <= 1) {
        double r = r_lo + (best + dx) * h;
        peak = std::max(peak, std::abs(radial_flow(p, sigma, g, l, t, r, rho_lo, rho_hi, chirp)));
      }
    }
  }
  double ymax = std::sqrt((2.0 * l + 1.0) / (4.0 * pi));
  return peak * ymax;
}

// ---------------------------------------------------------------------------
// Decay presets.
// ---------------------------------------------------------------------------

namespace {

struct PresetSample {
  double t;
  double chirp;
  double r_lo, r_hi;
  int n_scan;
};

PresetReport run_radial_preset(const SystemParams& p, const std::string& name,
                               const std::function<cplx(double)>& g, int l, double rho_lo,
                               double rho_hi, const std::vector<PresetSample>& samples,
                               double reference, const std::string& notes) {
  PresetReport rep;
  rep.name = name;
  rep.reference_slope = reference;
  rep.notes = notes;
  for (const auto& s : samples) {
    double v = radial_flow_sup(p, 1, g, l, s.t, rho_lo, rho_hi, s.r_lo, s.r_hi, s.n_scan, s.chirp);
    rep.fit.times.push_back(s.t);
    rep.fit.sup_norms.push_back(v);
  }
  rep.fit.window = {rep.fit.times.front(), rep.fit.times.back()};
  fit_loglog(rep.fit.times, rep.fit.sup_norms, rep.fit.window, rep.fit.slope, rep.fit.slope_ci);
  return rep;
}

}  // namespace

PresetReport decay_preset(const SystemParams& p, const std::string& name) {
  check_component(p, 1);
  const double c = p.speed(1);
  auto vgr = [&](double rho) { return dlambda(p, 1, rho); };

  if (name == "stkg") {
    auto g = [](double rho) { return cplx(std::exp(-rho * rho / 2), 0); };
    std::vector<PresetSample> samples;
    for (double t : {5.0, 7.9, 12.6, 20.0, 31.5, 50.0})
      samples.push_back({t, 0.0, 0.0, c * t + 8.0, 700});
    return run_radial_preset(p, name, g, 0, 0.0, 8.0, samples, -1.5,
                             "generic medium-frequency Gaussian, sup-norm over t in [5,50]");
  }
  if (name == "disper1") {
    double r0 = 1.5 * pow2(-10), w = 0.45 * pow2(-10);
    auto g = [=](double rho) { return cplx(window01((rho - r0) / w), 0); };
    std::vector<PresetSample> samples;
    for (int m : {25, 27, 29}) {
      double t = pow2(m);
      samples.push_back({t, 0.0, 0.4 * t * vgr(r0 - w), 1.4 * t * vgr(r0 + w), 600});
    }
    return run_radial_preset(p, name, g, 0, r0 - w, r0 + w, samples, -1.5,
                             "low-frequency shell, decay branch of the min");
  }
  if (name == "disper2") {
    double r0 = 1536, w = 64;
    auto g = [=](double rho) { return cplx(window01((rho - r0) / w), 0); };
    std::vector<PresetSample> samples;
    for (int m : {6, 7, 8}) {
      double t = pow2(m), ctr = t * vgr(r0) + pow2(m);
      // the packet is a spherical shell of physical thickness ~ 1/w
      samples.push_back({t, pow2(m), ctr - 3.0, ctr + 3.0, 600});
    }
    return run_radial_preset(p, name, g, 0, r0 - w, r0 + w, samples, -1.0,
                             "high-frequency shell translated to |x| ~ t (wave zone)");
  }
  if (name == "disper3") {
    double r0 = 1.25, w = 0.4, chirp = 32;
    auto g = [=](double rho) { return cplx(window01((rho - r0) / w), 0); };
    std::vector<PresetSample> samples;
    for (int m : {8, 9, 10}) {
      double t = pow2(m);
      samples.push_back({t, chirp, 0.3 * t * vgr(r0 - w), 1.25 * (t * vgr(r0 + w) + chirp), 700});
    }
    return run_radial_preset(p, name, g, 0, r0 - w, r0 + w, samples, -1.5,
                             "medium-frequency shell at fixed spatial scale 2^5");
  }
  if (name == "disper4") {
    double r0 = 1.25, w = 0.4;
    auto g = [=](double rho) { return cplx(window01((rho - r0) / w), 0); };
    std::vector<PresetSample> samples;
    for (int m : {7, 8, 9}) {
      double t = pow2(m), ctr = t * vgr(r0) + pow2(m);
      samples.push_back({t, pow2(m), 0.5 * ctr, 1.3 * ctr, 700});
    }
    return run_radial_preset(p, name, g, 0, r0 - w, r0 + w, samples, -1.0,
                             "medium-frequency shell translated to |x| ~ t");
  }
  if (name == "disper5") {
    double r0 = 1536, w = 450;
    auto g = [=](double rho) { return cplx(window01((rho - r0) / w), 0); };
    std::vector<PresetSample> samples;
    for (int m : {18, 20, 22}) {
      double t = pow2(m);
      double lo = t * vgr(r0 - w), hi = t * vgr(r0 + w);
      samples.push_back({t, 0.0, lo - 10.0, hi + 10.0, 400});
    }
    return run_radial_preset(p, name, g, 0, r0 - w, r0 + w, samples, -1.5,
                             "high-frequency shell at fixed spatial scale (caustic zone)");
  }
  throw validation_error("unknown decay preset: " + name);
}

}  // namespace kg
