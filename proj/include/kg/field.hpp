#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "kg/common.hpp"

namespace kg {

using cplx = std::complex<double>;

// Complex values on the discrete Fourier lattice of a periodic box.
// Storage is in FFT (wrapped) order along each axis: index i corresponds to
// the integer mode m = i for i < n/2 and m = i - n otherwise, i.e. frequency
// xi = (2*pi/L) * m. The values are samples of the continuum Fourier
// transform; the physical field is f(x) = L^{-3} sum_m v_m exp(i xi_m . x).
struct SpectralField {
  int component = 0;      // signed equation index (0 = untagged scalar data)
  double box_length = 0;  // physical period L
  int resolution = 0;     // n, grid is n^3
  std::string tag;
  bool scale_warning = false;  // set when a requested dyadic scale is marginal
  std::vector<cplx> values;    // size n^3, row-major (ix slow, iz fast)

  SpectralField() = default;
  SpectralField(int n, double L, int comp = 0)
      : component(comp), box_length(L), resolution(n), values(size_t(n) * n * n) {}

  size_t idx(int i, int j, int k) const {
    return (size_t(i) * resolution + j) * resolution + k;
  }
  int mode_of(int i) const { return i < (resolution + 1) / 2 ? i : i - resolution; }
  double freq_step() const { return 2.0 * pi * (1.0 / box_length); }
  double freq_of(int i) const { return freq_step() * mode_of(i); }
  // Largest resolvable |xi| along one axis (Nyquist).
  double nyquist() const { return freq_step() * (resolution / 2); }
  // Physical coordinate (wrapped, centered on 0) of grid index i.
  double coord_of(int i) const { return (box_length / resolution) * mode_of(i); }

  // L2 norm of the physical field (Parseval on the box).
  double l2() const;
  // Plain l1 sum of Fourier samples times the cell volume (2*pi/L)^3.
  double fourier_l1() const;
  double max_abs() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
};

// FFT transforms between Fourier samples and physical grid values (both in
// wrapped order). Plans are cached per resolution.
std::vector<cplx> to_physical(const SpectralField& f);
SpectralField from_physical(const std::vector<cplx>& phys, int n, double L, int comp = 0);
void fft3_inplace(std::vector<cplx>& data, int n, int sign);  // unnormalized

// Max of |f| on the physical grid after zero-padded spectral refinement by
// the given factor (1 = plain grid max).
double sup_norm_padded(const SpectralField& f, int pad_factor);

// Fraction of physical L2 mass at |x|_inf > frac * L/2, used as the
// wrap-around detector for decay runs.
double boundary_mass_fraction(const SpectralField& f, double frac = 0.8);

// Evaluate the field's continuum Fourier transform at an arbitrary frequency
// point, as the transform of the (box-supported) physical samples. Physical
// samples below prune_tol * max are skipped. Exact at lattice frequencies.
class OffGridEvaluator {
 public:
  explicit OffGridEvaluator(const SpectralField& f, double prune_tol = 1e-14);
  cplx operator()(const std::array<double, 3>& xi) const;
  size_t support_size() const { return pts_.size(); }

 private:
  struct Pt {
    double x, y, z;
    cplx w;
  };
  std::vector<Pt> pts_;
};

// Raw binary dump (little-endian doubles, interleaved re/im, lattice
// row-major) plus a JSON sidecar.
void dump_field(const SpectralField& f, const std::string& path_base);
SpectralField load_field(const std::string& path_base);

}  // namespace kg
