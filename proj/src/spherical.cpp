#include "kg/spherical.hpp"

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_legendre.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "kg/dyadic.hpp"

namespace kg {

SphereDesign::SphereDesign(int Q) : Q_(Q), n_theta_(Q + 1), n_phi_(2 * Q + 2) {
  if (Q < 0) throw validation_error("sphere design: degree must be >= 0");
  ctheta_.resize(n_theta_);
  wtheta_.resize(n_theta_);
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n_theta_);
  for (int i = 0; i < n_theta_; ++i) {
    double x, w;
    gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, t);
    ctheta_[i] = x;
    wtheta_[i] = w;
  }
  gsl_integration_glfixed_table_free(t);
}

void SphereDesign::plm_row(double x, std::vector<double>& buf) const {
  buf.resize(gsl_sf_legendre_array_n(Q_));
  gsl_sf_legendre_array(GSL_SF_LEGENDRE_SPHARM, Q_, x, buf.data());
}

std::array<double, 3> SphereDesign::node(int it, int ip) const {
  double ct = ctheta_[it], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  double ph = phi_angle(ip);
  return {st * std::cos(ph), st * std::sin(ph), ct};
}

std::vector<cplx> SphereDesign::analyze(const std::vector<cplx>& node_vals) const {
  if (node_vals.size() != n_nodes())
    throw validation_error("sphere analyze: node array has wrong length");
  // Azimuthal DFT per theta row: F[i][m] = sum_p f(i,p) e^{-im phi_p} * (2pi/n_phi)
  std::vector<cplx> F(size_t(n_theta_) * (2 * Q_ + 1));
  const double dphi = 2.0 * pi / n_phi_;
  std::vector<cplx> tw(n_phi_);
  for (int p = 0; p < n_phi_; ++p) {
    double a = phi_angle(p);
    tw[p] = cplx(std::cos(a), -std::sin(a));
  }
  for (int i = 0; i < n_theta_; ++i) {
    for (int m = -Q_; m <= Q_; ++m) {
      cplx s(0, 0);
      cplx w(1, 0);
      // w walks e^{-im phi_p} by repeated multiplication with e^{-im dphi}
      double a = m * dphi;
      cplx stepw(std::cos(a), -std::sin(a));
      for (int p = 0; p < n_phi_; ++p) {
        s += node_vals[size_t(i) * n_phi_ + p] * w;
        w *= stepw;
      }
      F[size_t(i) * (2 * Q_ + 1) + (m + Q_)] = s * dphi;
    }
  }
  // Theta quadrature against the normalized associated Legendre factor.
  std::vector<cplx> c(n_coef(), cplx(0, 0));
  std::vector<double> plm;
  for (int i = 0; i < n_theta_; ++i) {
    plm_row(ctheta_[i], plm);
    for (int q = 0; q <= Q_; ++q)
      for (int m = -q; m <= q; ++m) {
        int am = std::abs(m);
        double sgn = (m < 0 && (am & 1)) ? -1.0 : 1.0;
        c[cidx(q, m)] += sgn * wtheta_[i] * plm[gsl_sf_legendre_array_index(q, am)] *
                         F[size_t(i) * (2 * Q_ + 1) + (m + Q_)];
      }
  }
  return c;
}

std::vector<cplx> SphereDesign::synthesize(const std::vector<cplx>& coef) const {
  if (coef.size() != n_coef())
    throw validation_error("sphere synthesize: coefficient array has wrong length");
  std::vector<cplx> out(n_nodes(), cplx(0, 0));
  std::vector<double> plm;
  const double dphi = 2.0 * pi / n_phi_;
  for (int i = 0; i < n_theta_; ++i) {
    plm_row(ctheta_[i], plm);
    // Collapse degrees first: G[m] = sum_q c_qm * (normalized P at this row)
    std::vector<cplx> G(2 * Q_ + 1, cplx(0, 0));
    for (int q = 0; q <= Q_; ++q)
      for (int m = -q; m <= q; ++m) {
        int am = std::abs(m);
        double sgn = (m < 0 && (am & 1)) ? -1.0 : 1.0;
        G[m + Q_] += coef[cidx(q, m)] * sgn * plm[gsl_sf_legendre_array_index(q, am)];
      }
    for (int p = 0; p < n_phi_; ++p) {
      cplx s(0, 0);
      double ph = p * dphi;
      for (int m = -Q_; m <= Q_; ++m) {
        double a = m * ph;
        s += G[m + Q_] * cplx(std::cos(a), std::sin(a));
      }
      out[size_t(i) * n_phi_ + p] = s;
    }
  }
  return out;
}

cplx SphereDesign::evaluate(const std::vector<cplx>& coef, const std::array<double, 3>& dir) const {
  double r = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  double ct = dir[2] / r;
  double ph = std::atan2(dir[1], dir[0]);
  std::vector<double> plm;
  plm_row(ct, plm);
  cplx s(0, 0);
  for (int q = 0; q <= Q_; ++q)
    for (int m = -q; m <= q; ++m) {
      int am = std::abs(m);
      double sgn = (m < 0 && (am & 1)) ? -1.0 : 1.0;
      double a = m * ph;
      s += coef[cidx(q, m)] * sgn * plm[gsl_sf_legendre_array_index(q, am)] *
           cplx(std::cos(a), std::sin(a));
    }
  return s;
}

double SphereDesign::node_l2(const std::vector<cplx>& node_vals) const {
  double s = 0;
  for (int i = 0; i < n_theta_; ++i)
    for (int p = 0; p < n_phi_; ++p) s += weight(i) * std::norm(node_vals[size_t(i) * n_phi_ + p]);
  return std::sqrt(s);
}

double SphereDesign::node_sup(const std::vector<cplx>& node_vals) const {
  double m = 0;
  for (const cplx& v : node_vals) m = std::max(m, std::abs(v));
  return m;
}

double angular_weight(int l, int q) {
  if (l < 0) throw validation_error("angular band: l must be >= 0");
  return l == 0 ? bump(double(q)) : shell(l, double(q));
}

int angular_band_limit(int l) { return (int)std::floor(1.6 * pow2(l)); }

PolarField to_polar(const SpectralField& f, int Q) {
  if (Q + 1 > 2 * f.resolution)
    throw range_error("to_polar: requested angular degree " + std::to_string(Q) +
                      " exceeds the grid's angular resolution");
  PolarField pf;
  pf.box_length = f.box_length;
  pf.resolution = f.resolution;
  pf.Q = Q;
  pf.component = f.component;

  // Group lattice sites by integer |m|^2.
  std::map<long, std::vector<size_t>> classes;
  const int n = f.resolution;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        long mi = f.mode_of(i), mj = f.mode_of(j), mk = f.mode_of(k);
        long r2 = mi * mi + mj * mj + mk * mk;
        if (r2 == 0)
          pf.origin = f.values[f.idx(i, j, k)];
        else
          classes[r2].push_back(f.idx(i, j, k));
      }

  SphereDesign sd(Q);
  OffGridEvaluator ev(f);
  std::vector<cplx> node_vals(sd.n_nodes());
  const long nyq2 = long(n / 2) * (n / 2);  // resolved ball: sphere stays in the cell
  for (auto& [r2, sites] : classes) {
    double r = f.freq_step() * std::sqrt((double)r2);
    if (r2 > nyq2) {
      pf.raw_radii.push_back(r);
      std::vector<cplx> vals;
      vals.reserve(sites.size());
      for (size_t s : sites) vals.push_back(f.values[s]);
      pf.raw_sites.push_back(std::move(sites));
      pf.raw_values.push_back(std::move(vals));
      continue;
    }
    for (int it = 0; it < sd.n_theta(); ++it)
      for (int ip = 0; ip < sd.n_phi(); ++ip) {
        auto d = sd.node(it, ip);
        node_vals[size_t(it) * sd.n_phi() + ip] = ev({r * d[0], r * d[1], r * d[2]});
      }
    pf.radii.push_back(r);
    pf.sites.push_back(std::move(sites));
    pf.coef.push_back(sd.analyze(node_vals));
  }
  return pf;
}

SpectralField from_polar(const PolarField& pf) {
  SpectralField f(pf.resolution, pf.box_length, pf.component);
  const int n = pf.resolution;
  auto dir_of = [&](size_t flat) {
    int k = int(flat % n);
    int j = int((flat / n) % n);
    int i = int(flat / (size_t(n) * n));
    return std::array<double, 3>{(double)f.mode_of(i), (double)f.mode_of(j),
                                 (double)f.mode_of(k)};
  };
  SphereDesign sd(pf.Q);
  f.values[f.idx(0, 0, 0)] = pf.origin;
  for (size_t c = 0; c < pf.radii.size(); ++c)
    for (size_t s : pf.sites[c]) f.values[s] = sd.evaluate(pf.coef[c], dir_of(s));
  for (size_t c = 0; c < pf.raw_radii.size(); ++c)
    for (size_t i = 0; i < pf.raw_sites[c].size(); ++i)
      f.values[pf.raw_sites[c][i]] = pf.raw_values[c][i];
  return f;
}

void apply_angular_band(PolarField& pf, int l) {
  if (angular_band_limit(l) > pf.Q)
    throw range_error("angular band: l=" + std::to_string(l) +
                      " exceeds the stored degree limit Q=" + std::to_string(pf.Q));
  pf.origin *= angular_weight(l, 0);
  for (auto& c : pf.coef)
    for (int q = 0; q <= pf.Q; ++q) {
      double w = angular_weight(l, q);
      for (int m = -q; m <= q; ++m) c[SphereDesign::cidx(q, m)] *= w;
    }
  // Unresolved classes count as lowest-band content.
  double w0 = angular_weight(l, 0);
  for (auto& vals : pf.raw_values)
    for (cplx& v : vals) v *= w0;
}

void apply_radial_multiplier(PolarField& pf, const std::function<double(double)>& mult) {
  pf.origin *= mult(0.0);
  for (size_t c = 0; c < pf.radii.size(); ++c) {
    double w = mult(pf.radii[c]);
    for (cplx& v : pf.coef[c]) v *= w;
  }
  for (size_t c = 0; c < pf.raw_radii.size(); ++c) {
    double w = mult(pf.raw_radii[c]);
    for (cplx& v : pf.raw_values[c]) v *= w;
  }
}

SpectralField spherical_project(const SpectralField& f, int l) {
  if (l < 0) throw validation_error("spherical_project: l must be >= 0");
  int band = angular_band_limit(l);
  if (band + 1 > 2 * f.resolution)
    throw range_error("spherical_project: l=" + std::to_string(l) +
                      " exceeds the grid's angular resolution");
  // Analyze with headroom above the band limit so content beyond the band is
  // resolved (and then dropped) instead of aliasing into the kept degrees.
  int Q = std::min(2 * f.resolution - 1, std::max(band + 8, 16));
  PolarField pf = to_polar(f, Q);
  apply_angular_band(pf, l);
  SpectralField out = from_polar(pf);
  out.tag = f.tag;
  return out;
}

double zonal_kernel(int l, double cosangle) {
  if (l < 0) throw validation_error("zonal_kernel: l must be >= 0");
  if (cosangle < -1.0 || cosangle > 1.0)
    throw validation_error("zonal_kernel: cosangle outside [-1,1]");
  // K_l uses the plain cutoff phi(q/2^l): all degrees below the band edge.
  int Q = angular_band_limit(l);
  double s = 0;
  for (int q = 0; q <= Q; ++q)
    s += bump(q / pow2(l)) * (2.0 * q + 1.0) / (4.0 * pi) * gsl_sf_legendre_Pl(q, cosangle);
  return s;
}

}  // namespace kg
