#pragma once

#include "kg/field.hpp"

namespace kg {

// Space/frequency localization index (k, j) with j >= 0 and k + j >= 0.
struct DyadicIndex {
  int j = 0;
  int k = 0;
  bool in_J() const { return j >= 0 && j + k >= 0; }
  // The lowest admissible j uses the "<= j" cutoff instead of the shell.
  bool at_floor() const { return j == std::max(0, -k); }
};

// Even smooth cutoff: 1 on [-5/4, 5/4], supported in [-8/5, 8/5],
// monotone on the transition, values in [0, 1].
double bump(double x);

// phi_k(x) = bump(x/2^k) - bump(x/2^{k-1}).
double shell(int k, double x);
// phi_{<=B}(x) = bump(x/2^B).
double shell_leq(int B, double x);
// phi_I for I = [k_lo, k_hi] (telescoped).
double shell_band(int k_lo, int k_hi, double x);
// phi_j^{(k)}: shell j away from the floor, phi_{<=j} at the floor.
double shell_localized(const DyadicIndex& jk, double x);

enum class LocalizeMode { P_k, Q_jk, Star_jk };

// P_k (Fourier shell multiplier), Q_jk (P_k then physical cutoff at |x|~2^j),
// or the star variant P_[k-2,k+2] Q_jk.
SpectralField localize_dyadic(const SpectralField& f, LocalizeMode mode, const DyadicIndex& jk);

}  // namespace kg
