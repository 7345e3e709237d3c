#include "kg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace kg {

namespace {

// Conjugate reflection on the Fourier lattice: out(m) = conj(in(-m)).
SpectralField conj_reflect(const SpectralField& f) {
  const int n = f.resolution;
  SpectralField out(n, f.box_length, -f.component);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int ri = (n - i) % n, rj = (n - j) % n, rk = (n - k) % n;
        out.values[out.idx(i, j, k)] = std::conj(f.values[f.idx(ri, rj, rk)]);
      }
  return out;
}

double hermitian_defect(const SpectralField& f) {
  auto r = conj_reflect(f);
  double num = 0, den = 0;
  for (size_t q = 0; q < f.values.size(); ++q) {
    num += std::norm(f.values[q] - r.values[q]);
    den += std::norm(f.values[q]);
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

void check_field_grid(const SpectralField& f, int n, double L, const char* what) {
  if (f.resolution != n || f.box_length != L)
    throw validation_error(std::string(what) + ": inconsistent grid");
}

// Multiply Fourier samples by a radial function of |xi|.
template <class Fn>
SpectralField radial_multiplier(const SpectralField& f, Fn&& fn) {
  SpectralField out = f;
  const int n = f.resolution;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double x = f.freq_of(i), y = f.freq_of(j), z = f.freq_of(k);
        out.values[out.idx(i, j, k)] *= fn(std::sqrt(x * x + y * y + z * z));
      }
  return out;
}

// Per-factor symbol of the diagonalization inverse at signed index mu:
// slot 0 -> u, 1..3 -> d_j u, 4 -> d_t u.
cplx factor_symbol(const SystemParams& p, int slot, int mu, const std::array<double, 3>& zeta) {
  double r = std::sqrt(zeta[0] * zeta[0] + zeta[1] * zeta[1] + zeta[2] * zeta[2]);
  if (slot == 4) return cplx(0.5, 0.0);
  cplx a = cplx(0.0, (mu > 0 ? 0.5 : -0.5) / p.lambda(std::abs(mu), r));
  if (slot == 0) return a;
  return cplx(0.0, zeta[slot - 1]) * a;
}

int dealias_band(int n) { return n / 3; }

}  // namespace

// ---------------------------------------------------------------------------
// diagonalize / invert
// ---------------------------------------------------------------------------

ProfileState diagonalize(const SystemParams& p, const std::vector<SpectralField>& g,
                         const std::vector<SpectralField>& h) {
  if (int(g.size()) != p.d || int(h.size()) != p.d)
    throw validation_error("diagonalize: need one (g, h) field per equation");
  const int n = g[0].resolution;
  const double L = g[0].box_length;
  ProfileState st;
  st.t = 0;
  for (int a = 1; a <= p.d; ++a) {
    check_field_grid(g[a - 1], n, L, "diagonalize g");
    check_field_grid(h[a - 1], n, L, "diagonalize h");
    if (hermitian_defect(g[a - 1]) > 1e-8 || hermitian_defect(h[a - 1]) > 1e-8)
      throw validation_error("diagonalize: initial data must be real (conjugate-symmetric)");
    for (int sg : {+1, -1}) {
      int sigma = sg * a;
      SpectralField v = h[a - 1];
      v.component = sigma;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double x = v.freq_of(i), y = v.freq_of(j), z = v.freq_of(k);
            double lam = p.lambda(sigma, std::sqrt(x * x + y * y + z * z));
            size_t id = v.idx(i, j, k);
            v.values[id] -= cplx(0.0, lam) * g[a - 1].values[id];
          }
      st.fhat.emplace(sigma, std::move(v));
    }
  }
  return st;
}

void invert(const SystemParams& p, const ProfileState& state, std::vector<SpectralField>& u,
            std::vector<SpectralField>& dtu) {
  u.clear();
  dtu.clear();
  for (int a = 1; a <= p.d; ++a) {
    auto ip = state.fhat.find(a), im = state.fhat.find(-a);
    if (ip == state.fhat.end() || im == state.fhat.end())
      throw validation_error("profile state is missing component " + std::to_string(a));
    const SpectralField& fp = ip->second;
    const SpectralField& fm = im->second;
    const int n = fp.resolution;
    check_field_grid(fm, n, fp.box_length, "profile state");
    SpectralField ua(n, fp.box_length, a), da(n, fp.box_length, a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double x = fp.freq_of(i), y = fp.freq_of(j), z = fp.freq_of(k);
          double lam = p.lambda(a, std::sqrt(x * x + y * y + z * z));
          size_t id = fp.idx(i, j, k);
          cplx ph = std::polar(1.0, -state.t * lam);
          cplx vp = ph * fp.values[id];
          cplx vm = std::conj(ph) * fm.values[id];
          da.values[id] = 0.5 * (vp + vm);
          ua.values[id] = cplx(0.0, 0.5 / lam) * (vp - vm);
        }
    u.push_back(std::move(ua));
    dtu.push_back(std::move(da));
  }
}

double conjugation_defect(const ProfileState& state) {
  double worst = 0;
  for (auto& [sigma, f] : state.fhat) {
    if (sigma < 0) continue;
    auto im = state.fhat.find(-sigma);
    if (im == state.fhat.end())
      throw validation_error("profile state is missing component " + std::to_string(-sigma));
    auto r = conj_reflect(im->second);
    double num = 0, den = 0;
    for (size_t q = 0; q < f.values.size(); ++q) {
      num += std::norm(f.values[q] - r.values[q]);
      den += std::norm(f.values[q]);
    }
    if (den > 0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// multiplier_m
// ---------------------------------------------------------------------------

cplx multiplier_m(const SystemParams& p, const PhaseTriple& triple,
                  const std::array<double, 3>& xi, const std::array<double, 3>& eta) {
  validate_triple(p, triple);
  const int alpha = std::abs(triple.sigma);
  const int mb = std::abs(triple.mu), nb = std::abs(triple.nu);
  std::array<double, 3> zeta{xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]};
  cplx m{0, 0};
  // Quasilinear (A u_g + B d_l u_g) d_j d_k u_b: first factor at xi - eta
  // carries |mu|, the second-derivative factor at eta carries |nu|.
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      cplx hess = cplx(0.0, eta[j]) * cplx(0.0, eta[k]) *
                  factor_symbol(p, 0, triple.nu, eta);
      double a = p.A.d ? p.A.at(alpha - 1, nb - 1, mb - 1, j, k) : 0.0;
      if (a != 0) m += a * factor_symbol(p, 0, triple.mu, zeta) * hess;
      if (p.B.d)
        for (int l = 0; l < 3; ++l) {
          double b = p.B.at(alpha - 1, nb - 1, mb - 1, j, k, l);
          if (b != 0) m += b * factor_symbol(p, l + 1, triple.mu, zeta) * hess;
        }
    }
  // Semilinear Q'_a = sum q(a, b, g, s1, s2) D_{s1} u_b D_{s2} u_g.
  if (p.Qp.d)
    for (int s1 = 0; s1 < 5; ++s1)
      for (int s2 = 0; s2 < 5; ++s2) {
        double q = p.Qp.at(alpha - 1, mb - 1, nb - 1, s1, s2);
        if (q != 0)
          m += q * factor_symbol(p, s1, triple.mu, zeta) * factor_symbol(p, s2, triple.nu, eta);
      }
  return m;
}

// ---------------------------------------------------------------------------
// Dealiasing
// ---------------------------------------------------------------------------

SpectralField dealias_truncate(const SpectralField& f) {
  SpectralField out = f;
  const int n = f.resolution, band = dealias_band(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int mi = std::abs(f.mode_of(i)), mj = std::abs(f.mode_of(j)), mk = std::abs(f.mode_of(k));
        if (std::max({mi, mj, mk}) > band) out.values[out.idx(i, j, k)] = 0.0;
      }
  return out;
}

bool is_dealiased(const SpectralField& f) {
  const int n = f.resolution, band = dealias_band(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int mi = std::abs(f.mode_of(i)), mj = std::abs(f.mode_of(j)), mk = std::abs(f.mode_of(k));
        if (std::max({mi, mj, mk}) > band && f.values[f.idx(i, j, k)] != cplx(0.0, 0.0))
          return false;
      }
  return true;
}

// ---------------------------------------------------------------------------
// duhamel_rhs
// ---------------------------------------------------------------------------

std::map<int, SpectralField> duhamel_rhs(const SystemParams& p, const ProfileState& state,
                                         double s) {
  if (state.fhat.empty()) throw validation_error("profile state has no components");
  const SpectralField& first = state.fhat.begin()->second;
  const int n = first.resolution;
  const double L = first.box_length;
  for (auto& [sigma, f] : state.fhat) {
    if (std::abs(sigma) < 1 || std::abs(sigma) > p.d)
      throw validation_error("profile state component out of range");
    check_field_grid(f, n, L, "profile state");
    if (!is_dealiased(f))
      throw numeric_error("aliasing: profile " + std::to_string(sigma) +
                          " has content outside the 2/3 band; apply dealias_truncate");
  }

  // Fourier data of u_a and d_t u_a at time s from the profiles.
  std::vector<SpectralField> uhat, dthat;
  ProfileState at_s = state;
  at_s.t = s;
  invert(p, at_s, uhat, dthat);

  // Lazily computed physical factors, keyed by (slot, component): slot 0 = u,
  // 1..3 = d_j u, 4 = d_t u, 5 + 3j + k = d_j d_k u.
  std::map<std::pair<int, int>, std::vector<cplx>> cache;
  auto factor = [&](int slot, int a) -> const std::vector<cplx>& {
    auto key = std::make_pair(slot, a);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    SpectralField base = (slot == 4) ? dthat[a - 1] : uhat[a - 1];
    if (slot >= 1 && slot <= 3) base = apply_partial(base, slot - 1);
    if (slot >= 5) {
      int j = (slot - 5) / 3, k = (slot - 5) % 3;
      base = apply_partial(apply_partial(base, j), k);
    }
    return cache.emplace(key, to_physical(base)).first->second;
  };

  const size_t sz = first.values.size();
  std::map<int, SpectralField> rhs;
  for (int a = 1; a <= p.d; ++a) {
    std::vector<cplx> q(sz, cplx(0, 0));
    if (p.Qp.d)
      for (int be = 0; be < p.d; ++be)
        for (int ga = 0; ga < p.d; ++ga)
          for (int s1 = 0; s1 < 5; ++s1)
            for (int s2 = 0; s2 < 5; ++s2) {
              double cq = p.Qp.at(a - 1, be, ga, s1, s2);
              if (cq == 0) continue;
              const auto& f1 = factor(s1, be + 1);
              const auto& f2 = factor(s2, ga + 1);
              for (size_t x = 0; x < sz; ++x) q[x] += cq * f1[x] * f2[x];
            }
    for (int be = 0; be < p.d && (p.A.d || p.B.d); ++be)
      for (int ga = 0; ga < p.d; ++ga)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            double ca = p.A.d ? p.A.at(a - 1, be, ga, j, k) : 0.0;
            const std::vector<cplx>* hess = nullptr;
            if (ca != 0) {
              hess = &factor(5 + 3 * j + k, be + 1);
              const auto& f1 = factor(0, ga + 1);
              for (size_t x = 0; x < sz; ++x) q[x] += ca * f1[x] * (*hess)[x];
            }
            if (p.B.d)
              for (int l = 0; l < 3; ++l) {
                double cb = p.B.at(a - 1, be, ga, j, k, l);
                if (cb == 0) continue;
                if (!hess) hess = &factor(5 + 3 * j + k, be + 1);
                const auto& f1 = factor(l + 1, ga + 1);
                for (size_t x = 0; x < sz; ++x) q[x] += cb * f1[x] * (*hess)[x];
              }
          }
    SpectralField qhat = from_physical(q, n, L, a);
    for (int sg : {+1, -1}) {
      int sigma = sg * a;
      SpectralField r = radial_multiplier(
          qhat, [&](double rr) { return std::polar(1.0, s * p.lambda(sigma, rr)); });
      r.component = sigma;
      rhs.emplace(sigma, dealias_truncate(r));
    }
  }
  return rhs;
}

// ---------------------------------------------------------------------------
// symmetrized_energy
// ---------------------------------------------------------------------------

double symmetrized_energy(const SystemParams& p, const std::vector<SpectralField>& u,
                          const std::vector<SpectralField>& dtu, int order,
                          const DiagnosticCaps& caps) {
  if (int(u.size()) != p.d || int(dtu.size()) != p.d)
    throw validation_error("symmetrized_energy: need one (u, d_t u) field per equation");
  const int n = u[0].resolution;
  const double L = u[0].box_length;
  const double vol = (L / n) * (L / n) * (L / n);

  std::vector<GammaFamily> fam_u, fam_t;
  for (int a = 0; a < p.d; ++a) {
    check_field_grid(u[a], n, L, "symmetrized_energy u");
    check_field_grid(dtu[a], n, L, "symmetrized_energy dtu");
    fam_u.push_back(vector_fields(u[a], order, caps));
    fam_t.push_back(vector_fields(dtu[a], order, caps));
  }
  const size_t nwords = fam_u[0].fields.size();
  const bool cubic = p.A.d || p.B.d;

  // Physical coefficient fields S^{jk}_{ab} from the plain (order-0) u.
  std::vector<std::vector<cplx>> phys_u(p.d), phys_dl(3 * p.d);
  if (cubic)
    for (int g = 0; g < p.d; ++g) {
      phys_u[g] = to_physical(u[g]);
      for (int l = 0; l < 3; ++l) phys_dl[3 * g + l] = to_physical(apply_partial(u[g], l));
    }

  double E = 0;
  std::vector<std::vector<cplx>> grad(3 * p.d);
  for (size_t w = 0; w < nwords; ++w) {
    for (int a = 0; a < p.d; ++a) {
      double l2t = fam_t[a].fields[w].l2();
      double l2u = fam_u[a].fields[w].l2();
      E += l2t * l2t + p.b[a] * p.b[a] * l2u * l2u;
      for (int j = 0; j < 3; ++j) {
        auto dj = apply_partial(fam_u[a].fields[w], j);
        double l2d = dj.l2();
        E += p.c[a] * p.c[a] * l2d * l2d;
        if (cubic) grad[3 * a + j] = to_physical(dj);
      }
    }
    if (!cubic) continue;
    for (int a = 0; a < p.d; ++a)
      for (int b = 0; b < p.d; ++b)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            bool any = false;
            for (int g = 0; g < p.d && !any; ++g) {
              if (p.A.d && p.A.at(a, b, g, j, k) != 0) any = true;
              if (p.B.d)
                for (int l = 0; l < 3 && !any; ++l)
                  if (p.B.at(a, b, g, j, k, l) != 0) any = true;
            }
            if (!any) continue;
            const auto& da = grad[3 * a + j];
            const auto& db = grad[3 * b + k];
            double acc = 0;
            for (size_t x = 0; x < da.size(); ++x) {
              double S = 0;
              for (int g = 0; g < p.d; ++g) {
                if (p.A.d && p.A.at(a, b, g, j, k) != 0)
                  S += p.A.at(a, b, g, j, k) * phys_u[g][x].real();
                if (p.B.d)
                  for (int l = 0; l < 3; ++l)
                    if (p.B.at(a, b, g, j, k, l) != 0)
                      S += p.B.at(a, b, g, j, k, l) * phys_dl[3 * g + l][x].real();
              }
              acc += S * da[x].real() * db[x].real();
            }
            E += vol * acc;
          }
  }
  return E;
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

namespace {

using StateMap = std::map<int, SpectralField>;

void axpy(StateMap& y, const StateMap& x, double a) {
  for (auto& [sigma, f] : y) {
    const auto& g = x.at(sigma);
    for (size_t q = 0; q < f.values.size(); ++q) f.values[q] += a * g.values[q];
  }
}

bool all_finite(const StateMap& m) {
  for (auto& [sigma, f] : m)
    for (const cplx& v : f.values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double profile_distance(const StateMap& a, const StateMap& b) {
  double acc = 0;
  for (auto& [sigma, f] : a) {
    SpectralField d = f;
    d -= b.at(sigma);
    double l2 = d.l2();
    acc += l2 * l2;
  }
  return std::sqrt(acc);
}

}  // namespace

Trajectory evolve(const SystemParams& p, const ProfileState& initial, double T, double dt,
                  Scheme scheme, const EvolveOptions& opts) {
  if (!(T > 0) || !(dt > 0)) throw validation_error("evolve: T and dt must be positive");
  if (!(opts.output_dt > 0)) throw validation_error("evolve: output_dt must be positive");
  for (auto& [sigma, f] : initial.fhat)
    if (!is_dealiased(f))
      throw numeric_error("aliasing: initial profiles carry content outside the 2/3 band");

  const double t0 = initial.t, t_end = t0 + T;
  const int total_snaps = int(std::floor(T / opts.output_dt + 1e-9)) + 1;
  const int stride = std::max(1, (total_snaps + opts.max_states - 1) / opts.max_states);

  Trajectory traj;
  ProfileState cur = initial;
  StateMap prev_snapshot = cur.fhat;
  double drift_since = 0;
  int snap_index = 0;
  double next_snap = t0;

  auto emit = [&](double t) {
    SnapshotDiagnostics d;
    d.t = t;
    std::vector<SpectralField> u, dtu;
    ProfileState at = cur;
    at.t = t;
    invert(p, at, u, dtu);
    d.energy = symmetrized_energy(p, u, dtu, opts.energy_order, opts.caps);
    double l2acc = 0, hnacc = 0;
    for (int a = 0; a < p.d; ++a) {
      double l2 = u[a].l2();
      l2acc += l2 * l2;
      const SpectralField& f = u[a];
      const int n = f.resolution;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double x = f.freq_of(i), y = f.freq_of(j), z = f.freq_of(k);
            double w = std::pow(1.0 + x * x + y * y + z * z, opts.caps.N_sub);
            hnacc += w * std::norm(f.values[f.idx(i, j, k)]);
          }
      d.linf_u = std::max(d.linf_u, sup_norm_padded(u[a], opts.sup_pad));
      d.linf_du = std::max(d.linf_du, sup_norm_padded(dtu[a], opts.sup_pad));
      for (int j = 0; j < 3; ++j)
        d.linf_du = std::max(d.linf_du, sup_norm_padded(apply_partial(u[a], j), opts.sup_pad));
    }
    double L = u[0].box_length;
    d.l2 = std::sqrt(l2acc);
    d.hn_norm = std::sqrt(hnacc / (L * L * L));
    d.conj_drift = drift_since;
    d.cauchy_defect = snap_index == 0 ? 0.0 : profile_distance(cur.fhat, prev_snapshot);
    DiagnosticCaps c0 = opts.caps;
    c0.gamma_order = 0;
    d.z_samples.push_back(z_diagnostic(cur.fhat.at(1), 0, 0, c0));
    prev_snapshot = cur.fhat;
    drift_since = 0;
    if (snap_index % stride == 0 || t >= t_end - 1e-9) {
      ProfileState snap = cur;
      snap.t = t;
      traj.states.push_back(std::move(snap));
    }
    traj.diagnostics.push_back(std::move(d));
    ++snap_index;
    next_snap = t0 + snap_index * opts.output_dt;
  };

  double t = t0;
  emit(t);
  traj.last_stable_t = t;
  while (t < t_end - 1e-9 && snap_index <= total_snaps) {
    double h = std::min(dt, t_end - t);
    if (next_snap <= t_end + 1e-9) h = std::min(h, next_snap - t);

    if (scheme == Scheme::rk4_profile) {
      auto k1 = duhamel_rhs(p, cur, t);
      ProfileState s2 = cur;
      axpy(s2.fhat, k1, h / 2);
      auto k2 = duhamel_rhs(p, s2, t + h / 2);
      ProfileState s3 = cur;
      axpy(s3.fhat, k2, h / 2);
      auto k3 = duhamel_rhs(p, s3, t + h / 2);
      ProfileState s4 = cur;
      axpy(s4.fhat, k3, h);
      auto k4 = duhamel_rhs(p, s4, t + h);
      axpy(cur.fhat, k1, h / 6);
      axpy(cur.fhat, k2, h / 3);
      axpy(cur.fhat, k3, h / 3);
      axpy(cur.fhat, k4, h / 6);
    } else {
      auto k1 = duhamel_rhs(p, cur, t);
      ProfileState mid = cur;
      axpy(mid.fhat, k1, h / 2);
      auto k2 = duhamel_rhs(p, mid, t + h / 2);
      axpy(cur.fhat, k2, h);
    }
    t += h;
    cur.t = t;

    if (!all_finite(cur.fhat)) {
      traj.aborted = true;
      return traj;
    }

    // Conjugation-symmetry projection (averaging); log the drift first.
    drift_since = std::max(drift_since, conjugation_defect(cur));
    for (int a = 1; a <= p.d; ++a) {
      SpectralField& fp = cur.fhat.at(a);
      SpectralField& fm = cur.fhat.at(-a);
      auto r = conj_reflect(fm);
      for (size_t q = 0; q < fp.values.size(); ++q)
        fp.values[q] = 0.5 * (fp.values[q] + r.values[q]);
      fm = conj_reflect(fp);
    }

    if (t >= next_snap - 1e-9 && snap_index < total_snaps) emit(t);
    traj.last_stable_t = t;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// scattering_check / CSV
// ---------------------------------------------------------------------------

double scattering_check(const Trajectory& traj, double tail_fraction) {
  if (!(tail_fraction > 0) || tail_fraction > 1)
    throw validation_error("tail fraction must be in (0, 1]");
  if (traj.states.empty()) throw range_error("trajectory has no stored states");
  double t_first = traj.states.front().t, t_last = traj.states.back().t;
  double cut = t_last - tail_fraction * (t_last - t_first);
  std::vector<const ProfileState*> tail;
  for (const auto& st : traj.states)
    if (st.t >= cut - 1e-9) tail.push_back(&st);
  if (tail.size() < 3)
    throw range_error("scattering check needs at least 3 snapshots in the tail window");
  double worst = 0;
  for (size_t i = 0; i < tail.size(); ++i)
    for (size_t j = i + 1; j < tail.size(); ++j)
      worst = std::max(worst, profile_distance(tail[i]->fhat, tail[j]->fhat));
  return worst;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,E,L2,Linf_u,Linf_du,cauchy_defect\n";
  std::ostringstream buf;
  buf.precision(12);
  for (const auto& d : traj.diagnostics) {
    buf.str("");
    buf << d.t << "," << d.energy << "," << d.l2 << "," << d.linf_u << "," << d.linf_du << ","
        << d.cauchy_defect << "\n";
    os << buf.str();
  }
}

}  // namespace kg
