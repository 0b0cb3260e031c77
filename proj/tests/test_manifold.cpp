#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "modpot/manifold.hpp"
#include "oracles.hpp"

using namespace modpot;

TEST_CASE("sphere areas match closed forms") {
  Manifold e3(3, WarpKind::Euclidean, 100.0);
  CHECK(e3.sphere_area(1.0) == Catch::Approx(4 * pi).epsilon(1e-14));

  Manifold e2(2, WarpKind::Euclidean, 100.0);
  CHECK(e2.sphere_area(2.0) == Catch::Approx(4 * pi).epsilon(1e-14));

  // frozen via series summation: 2*pi*sinh(1)
  Manifold h2(2, WarpKind::HyperbolicSinh, 100.0);
  const double expected = 2 * oracles::pi * oracles::sinh_series(1.0);
  CHECK(expected == Catch::Approx(7.3840068731976473).epsilon(1e-9));
  CHECK(h2.sphere_area(1.0) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sphere_area domain errors") {
  Manifold m(3, WarpKind::Euclidean, 10.0);
  CHECK_THROWS_AS(m.sphere_area(0.0), std::domain_error);
  CHECK_THROWS_AS(m.sphere_area(-1.0), std::domain_error);
  CHECK_THROWS_AS(m.sphere_area(11.0), std::domain_error);
}

TEST_CASE("sphere_area positive and continuous in r") {
  Manifold m(2, WarpKind::Cylinder, 50.0, 1.0);
  double prev = m.sphere_area(1e-3);
  for (double r = 1e-3 + 0.01; r < 50; r += 0.37) {
    const double a = m.sphere_area(r);
    CHECK(a > 0);
    CHECK(std::abs(a - prev) < 10.0 * (a + prev));  // no jumps at the scale probed
    prev = a;
  }
}

TEST_CASE("manifold invariants enforced") {
  CHECK_THROWS_AS(Manifold(1, WarpKind::Euclidean, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(Manifold(2, WarpKind::Euclidean, -1.0), std::invalid_argument);
  // sigma(r)/r -> 2 at the pole: rejected
  CHECK_THROWS_AS(Manifold(2, WarpKind::Polynomial, 10.0, 1.0, {1e7}), std::invalid_argument);
}

TEST_CASE("radial_integral closed forms") {
  Manifold e2(2, WarpKind::Euclidean, 100.0);
  CHECK(radial_integral(e2, 1.0, std::exp(1.0)) == Catch::Approx(1.0).epsilon(1e-9));

  Manifold e3(3, WarpKind::Euclidean, 100.0);
  CHECK(radial_integral(e3, 1.0, 2.0) == Catch::Approx(0.5).epsilon(1e-9));

  Manifold h2(2, WarpKind::HyperbolicSinh, 100.0);
  CHECK(radial_integral(h2, 1.0, 10.0) ==
        Catch::Approx(oracles::sinh_resistance(1.0, 10.0)).epsilon(1e-9));
}

TEST_CASE("radial_integral domain errors") {
  Manifold m(2, WarpKind::Euclidean, 10.0);
  CHECK_THROWS_AS(radial_integral(m, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(radial_integral(m, -1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(radial_integral(m, 2.0, 1.0), std::domain_error);
}

TEST_CASE("radial_integral additivity") {
  Manifold m(2, WarpKind::HyperbolicSinh, 1000.0);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = oracles::uniform(rng, 0.01, 5.0);
    const double c = a + oracles::uniform(rng, 0.1, 20.0);
    const double b = oracles::uniform(rng, a, c);
    const double whole = radial_integral(m, a, c);
    const double split = radial_integral(m, a, b) + radial_integral(m, b, c);
    CHECK(split == Catch::Approx(whole).epsilon(1e-9));
  }
}

TEST_CASE("power-law closed forms across dimensions") {
  for (int dim : {2, 3, 4, 5}) {
    Manifold m(dim, WarpKind::Euclidean, 100.0);
    const double a = 1.5, b = 7.0;
    double expect;
    if (dim == 2)
      expect = std::log(b / a);
    else
      expect = (std::pow(a, 2.0 - dim) - std::pow(b, 2.0 - dim)) / (dim - 2.0);
    CHECK(radial_integral(m, a, b) == Catch::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("tail divergence probe matches the integrals") {
  CHECK(radial_integral_diverges(Manifold(2, WarpKind::Euclidean, 1e300), 1.0));
  CHECK(radial_integral_diverges(Manifold(2, WarpKind::Cylinder, 1e300), 1.0));
  CHECK_FALSE(radial_integral_diverges(Manifold(3, WarpKind::Euclidean, 1e300), 1.0));
  CHECK_FALSE(radial_integral_diverges(Manifold(2, WarpKind::HyperbolicSinh, 1e300), 1.0));

  // convergent tails report the full integral
  TailIntegral t = radial_integral_tail(Manifold(2, WarpKind::HyperbolicSinh, 1e300), 1.0);
  REQUIRE_FALSE(t.divergent);
  CHECK(t.value == Catch::Approx(-std::log(std::tanh(0.5))).epsilon(1e-8));

  TailIntegral t3 = radial_integral_tail(Manifold(3, WarpKind::Euclidean, 1e300), 1.0);
  REQUIRE_FALSE(t3.divergent);
  CHECK(t3.value == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("unit sphere areas") {
  CHECK(unit_sphere_area(2) == Catch::Approx(2 * pi).epsilon(1e-14));
  CHECK(unit_sphere_area(3) == Catch::Approx(4 * pi).epsilon(1e-14));
  CHECK(unit_sphere_area(4) == Catch::Approx(2 * pi * pi).epsilon(1e-13));
}

TEST_CASE("polynomial warp behaves near the pole") {
  Manifold m(2, WarpKind::Polynomial, 10.0, 1.0, {0.1, 0.01});
  CHECK(m.sigma(2.0) == Catch::Approx(2.0 + 0.1 * 4.0 + 0.01 * 8.0).epsilon(1e-14));
  CHECK(m.sigma(1e-8) / 1e-8 == Catch::Approx(1.0).epsilon(1e-6));
}
