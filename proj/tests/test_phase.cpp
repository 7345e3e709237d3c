#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "kg/phase.hpp"

using namespace kg;

namespace {

SystemParams sys3(std::array<double, 3> b, std::array<double, 3> c) {
  SystemConfig cfg;
  cfg.d = 3;
  cfg.b = {b[0], b[1], b[2]};
  cfg.c = {c[0], c[1], c[2]};
  return build_system(cfg);
}

double phi1d(const SystemParams& p, const PhaseTriple& t, double a, double b) {
  return parallel_phase(p, t, a, b, 0)[0];
}

}  // namespace

TEST_CASE("eval_phase closed-form values") {
  auto p = sys3({1, 1, 1}, {1, 1, 1});
  CHECK(eval_phase(p, {1, 1, 1}, {0, 0, 0}, {0, 0, 0}) == doctest::Approx(-1.0));
  CHECK(eval_phase(p, {1, -1, 1}, {0, 0, 0}, {0, 0, 0}) == doctest::Approx(1.0));
  auto q = sys3({2, 1, 1}, {1, 1, 1});
  for (vec3 xi : {vec3{0.3, -1.2, 2.0}, vec3{5, 0, 0}, vec3{-1, 1, -1}}) {
    vec3 eta{xi[0] / 2, xi[1] / 2, xi[2] / 2};
    CHECK(std::fabs(eval_phase(q, {1, 2, 3}, xi, eta)) < 1e-13);
  }
}

TEST_CASE("sign symmetry and exchange identity") {
  auto p = sys3({1.3, 0.7, 2.1}, {1.0, 1.4, 0.6});
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int rep = 0; rep < 50; ++rep) {
    vec3 xi{U(rng), U(rng), U(rng)}, eta{U(rng), U(rng), U(rng)};
    int s = rng() % 2 ? 1 : -1, m = rng() % 2 ? 2 : -2, n = rng() % 2 ? 3 : -3;
    double v = eval_phase(p, {s, m, n}, xi, eta);
    CHECK(eval_phase(p, {-s, -m, -n}, xi, eta) == doctest::Approx(-v).epsilon(1e-12));
    vec3 xme{xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]};
    CHECK(eval_phase(p, {s, n, m}, xi, xme) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("phase_derivatives matches central finite differences") {
  auto p = sys3({1.3, 0.7, 2.1}, {1.0, 1.4, 0.6});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-3, 3);
  const double h = 1e-5;
  double worst = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    vec3 xi{U(rng), U(rng), U(rng)}, eta{U(rng), U(rng), U(rng)};
    PhaseTriple t{rng() % 2 ? 1 : -1, rng() % 2 ? 2 : -2, rng() % 2 ? 3 : -3};
    auto d = phase_derivatives(p, t, xi, eta);
    for (int i = 0; i < 3; ++i) {
      vec3 ep = eta, em = eta, xp = xi, xm = xi;
      ep[i] += h; em[i] -= h; xp[i] += h; xm[i] -= h;
      double fd_eta = (eval_phase(p, t, xi, ep) - eval_phase(p, t, xi, em)) / (2 * h);
      double fd_xi = (eval_phase(p, t, xp, eta) - eval_phase(p, t, xm, eta)) / (2 * h);
      worst = std::max(worst, std::fabs(d.grad_eta[i] - fd_eta) / (1 + std::fabs(fd_eta)));
      worst = std::max(worst, std::fabs(d.grad_xi[i] - fd_xi) / (1 + std::fabs(fd_xi)));
      for (int j = 0; j < 3; ++j) {
        auto gp = phase_derivatives(p, t, xi, ep), gm = phase_derivatives(p, t, xi, em);
        double fd_h = (gp.grad_eta[j] - gm.grad_eta[j]) / (2 * h);
        worst = std::max(worst, std::fabs(d.hess_eta[j][i] - fd_h) / (1 + std::fabs(fd_h)));
      }
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("parallel_phase values and derivative chain") {
  auto p = sys3({1, 1, 1}, {1, 1, 1});
  auto d = parallel_phase(p, {1, 1, 1}, 0, 0, 2);
  CHECK(d[0] == doctest::Approx(-1.0));
  CHECK(d[1] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(-2.0));

  // order 0 agrees with eval_phase on the collinear ray
  auto q = sys3({1.3, 0.7, 2.1}, {1.0, 1.4, 0.6});
  PhaseTriple t{1, -2, 3};
  double a = 1.7, b = -0.4;
  CHECK(parallel_phase(q, t, a, b, 0)[0] ==
        doctest::Approx(eval_phase(q, t, {a, 0, 0}, {b, 0, 0})).epsilon(1e-13));

  // orders 1..4 agree with finite differences of the next-lower order
  const double h = 1e-4;
  for (double bb : {-1.2, 0.3, 2.5}) {
    auto v = parallel_phase(q, t, a, bb, 4);
    for (int n = 1; n <= 4; ++n) {
      double fd = (parallel_phase(q, t, a, bb + h, n - 1)[n - 1] -
                   parallel_phase(q, t, a, bb - h, n - 1)[n - 1]) /
                  (2 * h);
      CHECK(v[n] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  CHECK_THROWS_AS(parallel_phase(q, t, 0, 0, 5), validation_error);
}

TEST_CASE("derivative lower bound over a compact grid") {
  // min over the grid of max_{order<=3} |d^order Phi+| stays positive.
  auto p = sys3({1, 1, 1}, {1, 1, 2});
  for (PhaseTriple t : {PhaseTriple{1, 2, 3}, PhaseTriple{3, 1, 2}, PhaseTriple{1, -2, 3}}) {
    double lo = 1e300;
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        auto d = parallel_phase(p, t, -5 + i / 20.0, -5 + j / 20.0, 3);
        double mx = 0;
        for (int n = 0; n <= 3; ++n) mx = std::max(mx, std::fabs(d[n]));
        lo = std::min(lo, mx);
      }
    CHECK(lo > 0.05);
    MESSAGE("order<=3 lower bound: ", lo);
  }
  // Restricted scan: near the coordinate axes (some radius small) two orders
  // already suffice.
  {
    PhaseTriple t{1, 2, 3};
    double lo = 1e300;
    for (int i = 0; i <= 400; ++i) {
      double a = -5 + i / 40.0;
      for (double b : {a + 1e-3, 1e-3, -1e-3, a - 1e-3}) {
        auto d = parallel_phase(p, t, a, b, 2);
        double mx = 0;
        for (int n = 0; n <= 2; ++n) mx = std::max(mx, std::fabs(d[n]));
        lo = std::min(lo, mx);
      }
    }
    CHECK(lo > 0.05);
    MESSAGE("order<=2 restricted lower bound: ", lo);
  }
}

TEST_CASE("factorization: equal-speed reduced form") {
  auto p = sys3({2, 1, 3}, {1.3, 1.1, 1.1});
  auto f = factor_dbeta(p, {1, 2, 3}, 0.1, 2.0, 10);
  CHECK(f.reduced);
  CHECK(f.rho == doctest::Approx(3.0 / 4.0));
  // the critical line really is a root of d_beta Phi+
  for (double a : {0.5, 1.5, -2.0})
    CHECK(std::fabs(parallel_phase(p, {1, 2, 3}, a, f.rho * a, 1)[1]) < 1e-12);
}

TEST_CASE("factorization at one alpha against a dense scan oracle") {
  auto p = sys3({1, 1, 1}, {1, 1, 2});
  PhaseTriple t{1, 2, 3};
  auto fp = factor_at(p, t, 1.0);
  // oracle: unique sign change of d_beta Phi+ over a dense beta grid
  double root = 0;
  int found = 0;
  double prev = parallel_phase(p, t, 1.0, -8.0, 1)[1];
  for (int i = 1; i <= 65536; ++i) {
    double b = -8.0 + i / 4096.0;
    double cur = parallel_phase(p, t, 1.0, b, 1)[1];
    if (prev * cur < 0) {
      double lo = b - 1.0 / 4096, hi = b, glo = prev;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi), gm = parallel_phase(p, t, 1.0, mid, 1)[1];
        if ((gm > 0) == (glo > 0)) { lo = mid; glo = gm; } else hi = mid;
      }
      root = 0.5 * (lo + hi);
      ++found;
    }
    prev = cur;
  }
  CHECK(found == 1);
  CHECK(fp.R1 == doctest::Approx(root).epsilon(1e-8));
  CHECK(std::fabs(parallel_phase(p, t, 1.0, fp.R1, 1)[1]) < 1e-10);
  CHECK(fp.Q < 0);  // the remaining quadratic has no real roots here

  CHECK_THROWS_AS(factor_at(p, {3, 1, 2}, 1.0), validation_error);  // equal speeds
  CHECK_THROWS_AS(factor_at(p, t, 0.0), validation_error);
}

TEST_CASE("factorization over a range: reconstruction and Q structure") {
  // Signed triple whose quadratic factor carries real critical points.
  auto p = sys3({1, 0.5, 2}, {1, 1, 1.5});
  PhaseTriple t{1, -2, 3};
  auto f = factor_dbeta(p, t, 0.05, 3.0, 300);
  CHECK(!f.reduced);
  CHECK(f.max_recon_residual < 1e-8);
  REQUIRE(f.Q_zeros.size() == 1);
  double a0 = f.Q_zeros[0];
  CHECK(a0 == doctest::Approx(0.2144425868).epsilon(1e-6));

  // the zero is simple and R1, R2 stay separated around it
  double h = 1e-4;
  double qp = (factor_at(p, t, a0 + h).Q - factor_at(p, t, a0 - h).Q) / (2 * h);
  CHECK(std::fabs(qp) > 0.1);
  for (double a = a0 - 0.1; a <= a0 + 0.1; a += 0.01) {
    auto fp = factor_at(p, t, a);
    CHECK(std::fabs(fp.R1 - fp.R2) > 0.5);
  }
  // on the Q>0 side, R3 and R4 are genuine critical points of this triple
  auto fq = factor_at(p, t, a0 - 0.05);
  CHECK(fq.Q > 0);
  CHECK(std::fabs(parallel_phase(p, t, fq.alpha, fq.R3(), 1)[1]) < 1e-9);
  CHECK(std::fabs(parallel_phase(p, t, fq.alpha, fq.R4(), 1)[1]) < 1e-9);

  // all-positive triples on the same masses keep a negative Q: the real pair
  // of the squared equation belongs to the sign-flipped triple
  auto fpos = factor_dbeta(p, {1, 2, 3}, 0.5, 3.0, 50);
  CHECK(fpos.max_recon_residual < 1e-8);
  CHECK(fpos.Q_zeros.empty());
}

TEST_CASE("spacetime resonances: analytic equal-speed kinds") {
  auto p = sys3({1, 1, 1}, {1, 1, 1});
  auto r = spacetime_resonances(p, {1, 1, 1}, {-5, 5, -5, 5});
  CHECK(r.kind == ResonanceKind::empty);

  auto q = sys3({2, 1, 1}, {1, 1, 1});
  auto s = spacetime_resonances(q, {1, 2, 3}, {-5, 5, -5, 5});
  CHECK(s.kind == ResonanceKind::sphere_family);
  CHECK(s.rho == doctest::Approx(0.5));
  // sphere-family invariants on sampled rays up to |xi| = 10
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 40; ++rep) {
    vec3 d{g(rng), g(rng), g(rng)};
    double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    double rad = 10.0 * (rep + 1) / 40.0;
    vec3 xi{rad * d[0] / n, rad * d[1] / n, rad * d[2] / n};
    vec3 eta{0.5 * xi[0], 0.5 * xi[1], 0.5 * xi[2]};
    CHECK(std::fabs(eval_phase(q, {1, 2, 3}, xi, eta)) <= 1e-12);
    auto pd = phase_derivatives(q, {1, 2, 3}, xi, eta);
    double gn = std::sqrt(pd.grad_eta[0] * pd.grad_eta[0] + pd.grad_eta[1] * pd.grad_eta[1] +
                          pd.grad_eta[2] * pd.grad_eta[2]);
    CHECK(gn <= 1e-10);
  }
}

TEST_CASE("spacetime resonances: finite sets with closed-form checks") {
  // sigma fast, mu/nu equal-speed: Phi+(a, a/2) = sqrt(4a^2+1) - 2 sqrt(a^2/4+1)
  // vanishes exactly at a = +-1.
  auto p = sys3({1, 1, 1}, {1, 1, 2});
  auto r = spacetime_resonances(p, {3, 1, 2}, {-5, 5, -5, 5});
  REQUIRE(r.kind == ResonanceKind::finite);
  REQUIRE(r.points.size() == 2);
  CHECK(r.unresolved_seeds.empty());
  for (const auto& q : r.points) {
    CHECK(std::fabs(std::fabs(q.alpha) - 1.0) < 1e-10);
    CHECK(std::fabs(std::fabs(q.beta) - 0.5) < 1e-10);
    CHECK(q.phi_res <= 1e-10);
    CHECK(q.dphi_res <= 1e-10);
    CHECK(q.hess_nondegenerate);
  }

  // fully unequal speeds: the 2-D Newton branch; points continue smoothly
  // from the equal-speed pair as c_nu moves off 1.
  auto u = sys3({1, 1, 1}, {2, 1, 1.1});
  auto s = spacetime_resonances(u, {1, 2, 3}, {-5, 5, -5, 5});
  REQUIRE(s.kind == ResonanceKind::finite);
  REQUIRE(s.points.size() == 2);
  for (const auto& q : s.points) {
    CHECK(q.phi_res <= 1e-10);
    CHECK(q.dphi_res <= 1e-10);
    CHECK(std::fabs(std::fabs(q.alpha) - 1.0) < 0.1);
    CHECK(std::fabs(std::fabs(q.beta) - 0.5) < 0.1);
  }
}

TEST_CASE("spacetime resonances: degenerate origin") {
  auto p = sys3({2, 1, 1}, {1, 1, 2});  // mass-null but speeds unequal
  auto r = spacetime_resonances(p, {1, 2, 3}, {-2, 2, -2, 2});
  CHECK(r.kind == ResonanceKind::degenerate_origin);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].alpha == 0.0);
  CHECK(r.points[0].beta == 0.0);
}

TEST_CASE("low-frequency classification") {
  auto p = sys3({1, 1, 1}, {1, 1, 1});
  auto r = classify_low_freq(p, {1, 1, 1});
  CHECK(r.sigma1[0] == doctest::Approx(0.5));
  CHECK(r.sigma2[0] == doctest::Approx(0.125));
  CHECK(r.case_label == "nondegenerate");
  CHECK(r.phi_origin == doctest::Approx(-1.0));

  auto q = sys3({2, 1, 1}, {1, 1, 1});
  auto s = classify_low_freq(q, {1, 2, 3});
  CHECK(s.perfect_square);
  CHECK(s.case_label == "B");
  CHECK(s.rho5 == doctest::Approx(0.5));
  CHECK(!s.caseA_lambda);
  // quadratic-model coefficients and the perfect-square identity
  CHECK(s.rho1 * s.rho1 - 4 * s.rho0 * s.rho3 == doctest::Approx(0.0).epsilon(1e-12));

  // Case A: pairwise distinct speeds with masses built to satisfy both the
  // mass-null and perfect-square identities (32 = 5 + 27, 32/4 = 5/1 + 27/9).
  auto u = sys3({32, 5, 27}, {2, 1, 3});
  auto a = classify_low_freq(u, {1, 2, 3});
  CHECK(a.perfect_square);
  CHECK(a.case_label == "A");
  REQUIRE(a.caseA_lambda.has_value());
  CHECK(*a.caseA_lambda == doctest::Approx(155520.0));
}

TEST_CASE("expansion at a Q zero: generic and vanishing lambda") {
  auto base = sys3({1, 0.5, 2}, {1, 1, 1.5});
  PhaseTriple t{1, -2, 3};
  auto f = factor_dbeta(base, t, 0.05, 3.0, 300);
  REQUIRE(f.Q_zeros.size() == 1);
  double a0 = f.Q_zeros[0];
  auto fp = factor_at(base, t, a0);
  // tune the sigma component so Phi+(a0, R2) = 0:  Lambda_sigma(a0) = S
  double S = base.lambda(3, fp.R2) - base.lambda(2, a0 - fp.R2);
  REQUIRE(S > 0);

  {  // generic lambda != 0
    double cs = 0.5, bs = std::sqrt(S * S - cs * cs * a0 * a0);
    auto p = sys3({bs, 0.5, 2}, {cs, 1, 1.5});
    auto e = expansion_at_Q_zero(p, t, a0);
    CHECK(std::fabs(e.lambda) > 0.1);
    CHECK(e.fit_exponent > 1.45);
    CHECK(e.fit_exponent < 1.55);
    CHECK(std::fabs(e.lambda_prime_left) > 1e-3);
    CHECK(std::fabs(e.lambda_prime_right) > 1e-3);
    CHECK(!e.derivative_exponent);
  }
  {  // lambda tuned to zero: solve Lambda_sigma(a0)=S, Lambda_sigma'(a0)=m
    double x = a0 - fp.R2;
    double m = -(x / std::sqrt(x * x + 0.25));  // = -Lambda_2'(a0 - R2)
    double cs2 = m * S / a0;
    REQUIRE(cs2 > 0);
    double bs = std::sqrt(S * (S - m * a0));
    auto p = sys3({bs, 0.5, 2}, {std::sqrt(cs2), 1, 1.5});
    auto e = expansion_at_Q_zero(p, t, a0);
    CHECK(std::fabs(e.lambda) < 1e-8);
    CHECK(e.fit_exponent > 1.45);
    CHECK(e.fit_exponent < 1.55);
    REQUIRE(e.derivative_exponent.has_value());
    CHECK(*e.derivative_exponent > 0.45);
    CHECK(*e.derivative_exponent < 0.55);
  }
  // precondition: a point that is not a Q zero is rejected
  CHECK_THROWS_AS(expansion_at_Q_zero(base, t, a0 + 0.5), validation_error);
}

TEST_CASE("sublevel measure") {
  auto p = sys3({1, 1, 1}, {1, 1, 1});
  CHECK(sublevel_measure(p, {1, 1, 1}, 0.0, 0.3, -3, 3) == 0.0);

  // closed form: Phi+(0,beta) = 2 - 2 sqrt(beta^2+1), so the eps-sublevel set
  // is |beta| <= sqrt((1+eps/2)^2 - 1)
  auto q = sys3({2, 1, 1}, {1, 1, 1});
  double eps = 0.01;
  double exact = 2 * std::sqrt((1 + eps / 2) * (1 + eps / 2) - 1);
  CHECK(sublevel_measure(q, {1, 2, 3}, 0.0, eps, -3, 3) ==
        doctest::Approx(exact).epsilon(1e-6));

  // the eps^{1/3} envelope stays within one order of magnitude over 4 decades
  double rmin = 1e300, rmax = 0;
  for (double e : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    double ratio = sublevel_measure(q, {1, 2, 3}, 0.0, e, -3, 3) / std::cbrt(e);
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
  }
  CHECK(rmax / rmin < 10.0);
  MESSAGE("sublevel ratio range: ", rmin, " .. ", rmax);

  CHECK_THROWS_AS(sublevel_measure(p, {1, 1, 1}, 0.0, -1.0, -3, 3), validation_error);
}

TEST_CASE("high-frequency gradient comparability on the resonant sphere family") {
  // equal speeds, mass-null: |grad_eta Phi| ~ 2^{-3k} |eta - rho xi| along the
  // radial direction, with one constant across k = 3..8.
  auto p = sys3({2, 1, 1}, {1, 1, 1});
  double rmin = 1e300, rmax = 0;
  for (int k = 3; k <= 8; ++k) {
    double xi = pow2(k);
    for (double s : {0.1, xi / 8}) {
      auto d = phase_derivatives(p, {1, 2, 3}, {xi, 0, 0}, {0.5 * xi + s, 0, 0});
      double g = std::sqrt(d.grad_eta[0] * d.grad_eta[0] + d.grad_eta[1] * d.grad_eta[1] +
                           d.grad_eta[2] * d.grad_eta[2]);
      double ratio = g / (pow2(-3 * k) * s);
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
  }
  CHECK(rmax / rmin < 2.0);
  CHECK(rmin > 1.0);
  CHECK(rmax < 100.0);
  MESSAGE("high-frequency ratio range: ", rmin, " .. ", rmax);
}

TEST_CASE("report serialization") {
  auto p = sys3({1, 1, 1}, {1, 1, 2});
  auto r = spacetime_resonances(p, {3, 1, 2}, {-5, 5, -5, 5});
  auto j = nlohmann::json::parse(to_json_string(r));
  CHECK(j["kind"] == "finite");
  CHECK(j["points"].size() == 2);
  CHECK(j["tolerance"].get<double>() == r.tolerance);
  CHECK(j["box"].size() == 4);

  auto q = sys3({2, 1, 1}, {1, 1, 1});
  auto d = nlohmann::json::parse(to_json_string(classify_low_freq(q, {1, 2, 3})));
  CHECK(d["case_label"] == "B");
  CHECK(d["perfect_square"].get<bool>());
  CHECK(d["quad_coeffs"]["rho0"].is_number());
  CHECK(d["caseA_lambda"].is_null());
}
