#include "kg/dyadic.hpp"

#include <algorithm>
#include <cmath>

namespace kg {

namespace {
// Smooth step: 0 for t <= 0, 1 for t >= 1, via the exp(-1/t) glue.
double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}
}  // namespace

double bump(double x) {
  double r = std::fabs(x);
  if (r <= 1.25) return 1.0;
  if (r >= 1.6) return 0.0;
  // transition on [5/4, 8/5], width 7/20
  return smoothstep((1.6 - r) / 0.35);
}

double shell(int k, double x) { return bump(x / pow2(k)) - bump(x / pow2(k - 1)); }

double shell_leq(int B, double x) { return bump(x / pow2(B)); }

double shell_band(int k_lo, int k_hi, double x) {
  return bump(x / pow2(k_hi)) - bump(x / pow2(k_lo - 1));
}

double shell_localized(const DyadicIndex& jk, double x) {
  if (!jk.in_J())
    throw range_error("dyadic_shell: (j,k)=(" + std::to_string(jk.j) + "," +
                      std::to_string(jk.k) + ") not in J");
  return jk.at_floor() ? shell_leq(jk.j, x) : shell(jk.j, x);
}

SpectralField localize_dyadic(const SpectralField& f, LocalizeMode mode, const DyadicIndex& jk) {
  const int k = jk.k;
  const double lo = 1.25 * pow2(k - 1);  // inner edge of supp phi_k
  const double hi = 1.6 * pow2(k);       // outer edge
  const double step = f.freq_step();
  const double nyq_rad = f.nyquist() * std::sqrt(3.0);  // corner of the lattice

  SpectralField out = f;
  if (lo > nyq_rad)
    throw range_error("localize_dyadic: shell k=" + std::to_string(k) +
                      " lies entirely above the lattice Nyquist range");
  if (hi < step)
    throw range_error("localize_dyadic: shell k=" + std::to_string(k) +
                      " contains no nonzero lattice frequency");
  if (hi > f.nyquist() || lo < step) out.scale_warning = true;

  const int n = f.resolution;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int kk = 0; kk < n; ++kk) {
        double fx = f.freq_of(i), fy = f.freq_of(j), fz = f.freq_of(kk);
        double r = std::sqrt(fx * fx + fy * fy + fz * fz);
        out.values[out.idx(i, j, kk)] *= shell(k, r);
      }
  if (mode == LocalizeMode::P_k) return out;

  if (!jk.in_J())
    throw range_error("localize_dyadic: (j,k) not in J");
  // Physical cutoff at |x| ~ 2^j. A shell entirely outside the box is
  // meaningless on a periodic domain.
  const double box_rad = 0.5 * f.box_length * std::sqrt(3.0);
  if (!jk.at_floor() && 1.25 * pow2(jk.j - 1) > box_rad)
    throw range_error("localize_dyadic: spatial scale 2^" + std::to_string(jk.j) +
                      " exceeds the periodic box");
  if (1.6 * pow2(jk.j) > 0.5 * f.box_length) out.scale_warning = true;

  auto phys = to_physical(out);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int kk = 0; kk < n; ++kk) {
        double x = f.coord_of(i), y = f.coord_of(j), z = f.coord_of(kk);
        double r = std::sqrt(x * x + y * y + z * z);
        phys[f.idx(i, j, kk)] *= shell_localized(jk, r);
      }
  SpectralField loc = from_physical(phys, n, f.box_length, f.component);
  loc.tag = f.tag;
  loc.scale_warning = out.scale_warning;
  if (mode == LocalizeMode::Q_jk) return loc;

  // star variant: re-project onto the band [k-2, k+2]
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int kk = 0; kk < n; ++kk) {
        double fx = f.freq_of(i), fy = f.freq_of(j), fz = f.freq_of(kk);
        double r = std::sqrt(fx * fx + fy * fy + fz * fz);
        loc.values[loc.idx(i, j, kk)] *= shell_band(k - 2, k + 2, r);
      }
  return loc;
}

}  // namespace kg
