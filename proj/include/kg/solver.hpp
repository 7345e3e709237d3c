#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kg/field.hpp"
#include "kg/linear.hpp"
#include "kg/system.hpp"

namespace kg {

// ---------------------------------------------------------------------------
// First-order diagonalization: v_sigma = (d_t - i Lambda_sigma) u_sigma for
// signed sigma, with u_{-a} = u_a, Lambda_{-a} = -Lambda_a; the profile is
// f_sigma(t) = e^{i t Lambda_sigma} v_sigma(t).
// ---------------------------------------------------------------------------

struct ProfileState {
  double t = 0;
  // Fourier data of the profiles, keyed by the signed component index.
  std::map<int, SpectralField> fhat;
};

// Build the t=0 profile state from real initial data u(0) = g, d_t u(0) = h
// (one field per equation): v_a = h_a - i Lambda_a g_a and its conjugate
// partner. Inputs must be conjugate-symmetric (real physical fields).
ProfileState diagonalize(const SystemParams& p, const std::vector<SpectralField>& g,
                         const std::vector<SpectralField>& h);

// Recover (u, d_t u) from a profile state:
//   d_t u_a = (v_a + v_{-a})/2,  u_a = (i/2) Lambda_a^{-1} (v_a - v_{-a}),
// with v_sigma = e^{-i t Lambda_sigma} f_sigma.
void invert(const SystemParams& p, const ProfileState& state, std::vector<SpectralField>& u,
            std::vector<SpectralField>& dtu);

// Relative deviation from the conjugation symmetry f_{-a} = conj-reflect f_a
// (zero for states generated from real data).
double conjugation_defect(const ProfileState& state);

// ---------------------------------------------------------------------------
// Duhamel multiplier and right-hand side.
// ---------------------------------------------------------------------------

// The explicit bilinear symbol m_{sigma,mu,nu}(xi, eta) obtained by
// substituting the diagonalization inverse into the quadratic nonlinearity:
// the profile equation reads
//   d_t fhat_sigma(t, xi) = sum_{mu,nu} (2 pi)^{-3} int e^{i t Phi(xi,eta)}
//       m_{sigma,mu,nu}(xi, eta) fhat_mu(t, xi-eta) fhat_nu(t, eta) d eta
// with Phi = Lambda_sigma(xi) - Lambda_mu(xi-eta) - Lambda_nu(eta).
cplx multiplier_m(const SystemParams& p, const PhaseTriple& triple,
                  const std::array<double, 3>& xi, const std::array<double, 3>& eta);

// Zero all modes with max-axis integer frequency above n/3 (the 2/3 rule for
// quadratic products); inputs to duhamel_rhs must be in this band.
SpectralField dealias_truncate(const SpectralField& f);
bool is_dealiased(const SpectralField& f);

// d_t fhat_sigma at time s for every signed sigma, evaluated pseudo-spectrally
// (physical-space products of the recovered u, du factors with the e^{-+ i s
// Lambda} phases absorbed; 1/Lambda factors applied as Fourier multipliers).
// Raises an aliasing error when an input carries content outside the
// dealiased band.
std::map<int, SpectralField> duhamel_rhs(const SystemParams& p, const ProfileState& state,
                                         double s);

// ---------------------------------------------------------------------------
// Symmetrized energy.
// ---------------------------------------------------------------------------

// Quadratic core + cubic symmetrized correction:
//   E = sum_{|mu| <= order} sum_a int |d_t G u_a|^2 + b_a^2 |G u_a|^2
//       + c_a^2 |grad G u_a|^2
//       + sum_{a,b,j,k} S^{jk}_{ab}(u, du) d_j G u_a d_k G u_b,
// with S^{jk}_{ab} = sum_g (A^{jk}_{abg} u_g + sum_l B^{jkl}_{abg} d_l u_g).
double symmetrized_energy(const SystemParams& p, const std::vector<SpectralField>& u,
                          const std::vector<SpectralField>& dtu, int order,
                          const DiagnosticCaps& caps = {});

// ---------------------------------------------------------------------------
// Time integration of the profile equation.
// ---------------------------------------------------------------------------

enum class Scheme { rk4_profile, exponential_midpoint };

struct SnapshotDiagnostics {
  double t = 0;
  double energy = 0;      // symmetrized energy at the configured order
  double hn_norm = 0;     // H^{N_sub} norm of u
  double l2 = 0;          // L2 norm of u
  double linf_u = 0;      // sup norm of u (padded spectral interpolation)
  double linf_du = 0;     // sup norm over (d_x, d_t) u
  double conj_drift = 0;  // max pre-projection conjugation defect since last snapshot
  double cauchy_defect = 0;  // profile L2 distance to the previous snapshot
  std::vector<double> z_samples;  // z diagnostic of the first profile
};

struct Trajectory {
  std::vector<ProfileState> states;  // strided subset of the snapshots
  std::vector<SnapshotDiagnostics> diagnostics;  // every snapshot
  bool aborted = false;       // instability detected; data end at last_stable_t
  double last_stable_t = 0;
};

struct EvolveOptions {
  double output_dt = 1.0;  // snapshot cadence
  int energy_order = 0;    // vector-field order for the energy diagnostic
  int max_states = 25;     // cap on retained ProfileState snapshots
  int sup_pad = 2;         // zero-padding factor for sup-norm diagnostics
  DiagnosticCaps caps;
};

// Integrate d_t f = duhamel_rhs(f, s) from the initial state to time
// initial.t + T. The linear flow is absorbed in the profile formulation, so
// dt is limited by the nonlinear amplitude only. Conjugation symmetry is
// re-projected every step (drift logged); non-finite values abort with the
// trajectory truncated at the last stable snapshot.
Trajectory evolve(const SystemParams& p, const ProfileState& initial, double T, double dt,
                  Scheme scheme, const EvolveOptions& opts = {});

// Max profile L2 distance over pairs of retained states in the trailing
// `tail_fraction` of the run (Cauchy defect; scattering indicator).
double scattering_check(const Trajectory& traj, double tail_fraction);

// CSV diagnostics stream: t,E,L2,Linf_u,Linf_du,cauchy_defect.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

}  // namespace kg
