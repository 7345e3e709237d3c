#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "kg/system.hpp"

using namespace kg;

namespace {
SystemConfig basic(int d, std::vector<double> b, std::vector<double> c) {
  SystemConfig cfg;
  cfg.d = d;
  cfg.b = std::move(b);
  cfg.c = std::move(c);
  return cfg;
}
}  // namespace

TEST_CASE("build_system accepts valid data and fills zero tensors") {
  auto p = build_system(basic(2, {1.0, 2.0}, {1.0, 0.5}));
  CHECK(p.d == 2);
  CHECK(!p.has_nonlinearity());
  CHECK(p.A.a.size() == 2 * 2 * 2 * 9);
  CHECK(p.B.b.size() == 2 * 2 * 2 * 27);
}

TEST_CASE("build_system rejects bad shapes and signs") {
  CHECK_THROWS_AS(build_system(basic(0, {}, {})), validation_error);
  CHECK_THROWS_AS(build_system(basic(2, {1.0}, {1.0, 1.0})), validation_error);
  CHECK_THROWS_AS(build_system(basic(1, {-1.0}, {1.0})), validation_error);
  CHECK_THROWS_AS(build_system(basic(1, {1.0}, {0.0})), validation_error);
}

TEST_CASE("build_system enforces tensor symmetry and magnitude") {
  auto cfg = basic(2, {1.0, 2.0}, {1.0, 1.0});
  cfg.A = QuasiTensorA{2, std::vector<double>(2 * 2 * 2 * 9, 0.0)};
  cfg.A.at(0, 1, 0, 1, 2) = 0.5;  // missing the (beta,alpha) partner
  CHECK_THROWS_AS(build_system(cfg), validation_error);
  cfg.A.at(1, 0, 0, 1, 2) = 0.5;  // still missing j<->k symmetry
  CHECK_THROWS_AS(build_system(cfg), validation_error);
  cfg.A.at(0, 1, 0, 2, 1) = 0.5;
  cfg.A.at(1, 0, 0, 2, 1) = 0.5;
  auto p = build_system(cfg);
  CHECK(p.has_nonlinearity());
  cfg.A.at(0, 0, 0, 0, 0) = 1.5;
  CHECK_THROWS_AS(build_system(cfg), validation_error);
}

TEST_CASE("signed index conventions") {
  auto p = build_system(basic(2, {1.0, 3.0}, {1.0, 2.0}));
  CHECK(p.mass(1) == 1.0);
  CHECK(p.mass(-1) == -1.0);
  CHECK(p.speed(-2) == 2.0);
  CHECK(p.lambda(2, 0.0) == doctest::Approx(3.0));
  CHECK(p.lambda(-2, 0.0) == doctest::Approx(-3.0));
  // Lambda_2(1) = sqrt(4*1 + 9)
  CHECK(p.lambda(2, 1.0) == doctest::Approx(std::sqrt(13.0)));
  CHECK(p.lambda(-2, 1.0) == doctest::Approx(-std::sqrt(13.0)));
}

TEST_CASE("condition check: clean system passes") {
  // b = (1, 2.5), c = (1, 1): no mass-null triple, condition 1 trivial at equal speeds.
  auto p = build_system(basic(2, {1.0, 2.5}, {1.0, 1.0}));
  auto r = check_ip12_conditions(p);
  CHECK(r.assm1_holds);
  CHECK(r.assm2_holds);
  CHECK(r.equal_speed_null_mass_triples.empty());
}

TEST_CASE("condition check: mass-null triple is detected and located") {
  // b_1 + b_1 = b_2 violates the nondegeneracy condition on masses.
  auto p = build_system(basic(2, {1.0, 2.0}, {1.0, 1.0}));
  auto r = check_ip12_conditions(p);
  CHECK(r.assm1_holds);
  CHECK(!r.assm2_holds);
  bool found = false;
  for (auto& v : r.assm2_violations)
    if (v == std::array<int, 3>{1, 1, 2}) found = true;
  CHECK(found);
  // Equal speeds: the same triple generates the resonant sphere family.
  bool sphere = false;
  for (auto& t : r.equal_speed_null_mass_triples)
    if (t == std::array<int, 3>{2, 1, 1}) sphere = true;
  CHECK(sphere);
}

TEST_CASE("condition check: speed/mass monotonicity violation") {
  // c_1 > c_2 but c_1^2 b_1 < c_2^2 b_2: product is negative.
  auto p = build_system(basic(2, {1.0, 10.0}, {2.0, 1.0}));
  auto r = check_ip12_conditions(p);
  CHECK(!r.assm1_holds);
  bool found = false;
  for (auto& v : r.assm1_violations)
    if (v == std::array<int, 2>{1, 2}) found = true;
  CHECK(found);
}

TEST_CASE("validate_triple bounds signed indices") {
  auto p = build_system(basic(2, {1.0, 2.5}, {1.0, 1.0}));
  CHECK_NOTHROW(validate_triple(p, {2, -1, 1}));
  CHECK_THROWS_AS(validate_triple(p, {0, 1, 1}), validation_error);
  CHECK_THROWS_AS(validate_triple(p, {3, 1, 1}), validation_error);
  CHECK_THROWS_AS(validate_triple(p, {1, 1, -3}), validation_error);
}
