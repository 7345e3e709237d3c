#pragma once

#include <functional>
#include <vector>

#include "kg/field.hpp"

namespace kg {

// Gauss-Legendre (polar) x uniform (azimuth) sphere quadrature with a full
// forward/backward spherical-harmonic transform up to degree Q. Exact for
// band-limited data: analysis of a degree-<=Q function recovers its
// coefficients to rounding, and the node weights reproduce integrals of
// degree-<=2Q integrands.
class SphereDesign {
 public:
  explicit SphereDesign(int Q);

  int degree() const { return Q_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  size_t n_nodes() const { return size_t(n_theta_) * n_phi_; }
  size_t n_coef() const { return size_t(Q_ + 1) * (Q_ + 1); }

  // Node layout: row-major (theta index slow, phi index fast).
  std::array<double, 3> node(int it, int ip) const;
  double weight(int it) const { return wtheta_[it] * (2.0 * pi / n_phi_); }
  double cos_theta(int it) const { return ctheta_[it]; }
  double phi_angle(int ip) const { return 2.0 * pi * ip / n_phi_; }

  // Packed coefficient index for degree q, order m (|m| <= q).
  static size_t cidx(int q, int m) { return size_t(q) * q + (q + m); }

  std::vector<cplx> analyze(const std::vector<cplx>& node_vals) const;
  std::vector<cplx> synthesize(const std::vector<cplx>& coef) const;
  // Evaluate a coefficient vector at one direction (unit vector).
  cplx evaluate(const std::vector<cplx>& coef, const std::array<double, 3>& dir) const;

  // Quadrature norms of node data.
  double node_l2(const std::vector<cplx>& node_vals) const;
  double node_sup(const std::vector<cplx>& node_vals) const;

 private:
  void plm_row(double x, std::vector<double>& buf) const;

  int Q_, n_theta_, n_phi_;
  std::vector<double> ctheta_, wtheta_;
};

// A spectral field regrouped onto lattice radius classes (spheres of constant
// integer |m|^2), each carrying a spherical-harmonic expansion of the
// trigonometric interpolant restricted to that sphere. Radial multipliers are
// diagonal over classes; angular band weights are diagonal over degrees.
struct PolarField {
  double box_length = 0;
  int resolution = 0;
  int Q = 0;
  int component = 0;
  cplx origin{0, 0};                            // the |m|=0 mode
  std::vector<double> radii;                    // one radius per class
  std::vector<std::vector<size_t>> sites;       // flat lattice indices per class
  std::vector<std::vector<cplx>> coef;          // packed (Q+1)^2 per class

  // Classes outside the resolved ball (radius beyond the per-axis Nyquist):
  // their spheres leave the fundamental frequency cell, so no angular
  // expansion is attempted. Values pass through verbatim; radial multipliers
  // act exactly, angular bands treat them as lowest-band content.
  std::vector<double> raw_radii;
  std::vector<std::vector<size_t>> raw_sites;
  std::vector<std::vector<cplx>> raw_values;
};

PolarField to_polar(const SpectralField& f, int Q);
SpectralField from_polar(const PolarField& pf);

// phi_l(q) with the l = 0 convention phi_{<=0}.
double angular_weight(int l, int q);
// Largest degree on which phi_l is nonzero.
int angular_band_limit(int l);

// Multiply each degree-q coefficient by phi_l(q).
void apply_angular_band(PolarField& pf, int l);
// Multiply each class by mult(radius); the origin gets mult(0).
void apply_radial_multiplier(PolarField& pf, const std::function<double(double)>& mult);

// S_l f, realized as from_polar . angular band . to_polar.
SpectralField spherical_project(const SpectralField& f, int l);

// Band-limited zonal kernel K_l(cosangle) = sum_q phi_l(q) (2q+1)/(4pi) P_q.
double zonal_kernel(int l, double cosangle);

}  // namespace kg
