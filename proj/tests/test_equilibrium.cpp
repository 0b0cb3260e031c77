#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "modpot/capacity.hpp"
#include "modpot/equilibrium.hpp"
#include "oracles.hpp"

using namespace modpot;

namespace {

// dim-2 disk with a ring plate: the workhorse geometry for measure tests
struct RingSetup {
  Operator op;
  std::vector<int> ring;
  KernelMatrix km;
};

RingSetup make_ring(double domain_R, int n_theta, double cpo = 8, double ring_r = 1.0) {
  RingSetup s;
  Manifold m(2, WarpKind::Euclidean, 1e300);
  s.op = assemble(m, PolarGrid(RadialGrid::disk(0.25, domain_R, cpo), n_theta));
  const auto& lay = *s.op.layout;
  const int i0 = lay.nearest_cell(ring_r, lay.node_theta[0]) / lay.n_theta;
  for (int j = 0; j < lay.n_theta; ++j) s.ring.push_back(i0 * lay.n_theta + j);
  s.km = kernel_matrix(s.op, s.ring, true);
  return s;
}

}  // namespace

TEST_CASE("energy collapses to the kernel for point masses") {
  RingSetup s = make_ring(64.0, 8);
  DiscreteMeasure mu{{s.ring[0]}, {1.0}, 1.0};
  DiscreteMeasure nu{{s.ring[3]}, {1.0}, 1.0};
  CHECK(energy(mu, nu, s.km) == Catch::Approx(s.km.at(0, 3)).epsilon(1e-14));
  CHECK(energy(mu, nu, s.km) == energy(nu, mu, s.km));

  DiscreteMeasure zero{{s.ring[0]}, {0.0}, 0.0};
  CHECK(energy(zero, nu, s.km) == 0.0);
}

TEST_CASE("measure validation") {
  DiscreteMeasure bad{{0, 1}, {0.7, 0.7}, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  DiscreteMeasure neg{{0, 1}, {-0.1, 1.1}, 1.0};
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
  RingSetup s = make_ring(32.0, 8);
  DiscreteMeasure outside{{999999}, {1.0}, 1.0};
  DiscreteMeasure ok{{s.ring[0]}, {1.0}, 1.0};
  CHECK_THROWS_AS(energy(outside, ok, s.km), std::invalid_argument);
}

TEST_CASE("kernel matrix is symmetric with nonnegative entries") {
  RingSetup s = make_ring(64.0, 12);
  CHECK(s.km.max_asymmetry <= 1e-6);
  for (int i = 0; i < s.km.size(); ++i)
    for (int j = 0; j < s.km.size(); ++j) CHECK(s.km.at(i, j) > 0);
  CHECK(s.km.psd_on_simplex);
}

TEST_CASE("non-psd kernel matrices are flagged, not rejected") {
  KernelMatrix km;
  km.nodes = {0, 1, 2};
  // indefinite on mean-zero directions: v = (1,-1,0) gives v^T G v = 0.2 - 10
  km.g = {0.1, 5.0, 5.0,
          5.0, 0.1, 5.0,
          5.0, 5.0, 0.1};
  refresh_psd_check(km);
  CHECK_FALSE(km.psd_on_simplex);
  CHECK(km.min_simplex_eigenvalue < -1.0);
  // the optimizer still returns a feasible iterate on such input
  EquilibriumResult eq = equilibrium_measure(km, 2000);
  CHECK(eq.nu.w.size() == 3);
  double total = 0;
  for (double w : eq.nu.w) {
    CHECK(w >= 0);
    total += w;
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("single node: point mass with the self-cell diagonal") {
  Manifold m(3, WarpKind::Euclidean, 1e300);
  Operator op = assemble(m, RadialGrid::disk(0.02, 512.0, 16));
  const int node = op.layout->nearest_cell(1.0);
  KernelMatrix km = kernel_matrix(op, {node}, true);
  EquilibriumResult eq = equilibrium_measure(km);
  CHECK(eq.converged);
  CHECK(eq.nu.w[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(eq.eps == Catch::Approx(km.at(0, 0)).epsilon(1e-12));
}

TEST_CASE("symmetric ring: uniform equilibrium measure") {
  RingSetup s = make_ring(128.0, 12);
  EquilibriumResult eq = equilibrium_measure(s.km);
  CHECK(eq.converged);
  for (double w : eq.nu.w) CHECK(w == Catch::Approx(1.0 / 12).margin(1e-6));
  // the reported minimum is the energy of the returned measure
  CHECK(eq.eps == Catch::Approx(energy(eq.nu, eq.nu, s.km)).epsilon(1e-12));
}

TEST_CASE("minimality against random simplex measures") {
  RingSetup s = make_ring(64.0, 10);
  EquilibriumResult eq = equilibrium_measure(s.km);
  REQUIRE(eq.converged);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(10);
    double total = 0;
    for (double& x : w) {
      x = -std::log(oracles::uniform(rng, 1e-12, 1.0));
      total += x;
    }
    for (double& x : w) x /= total;
    DiscreteMeasure mu{s.ring, w, 1.0};
    CHECK(energy(mu, mu, s.km) >= eq.eps - 1e-8);
  }
}

TEST_CASE("equilibrium energy is the inverse capacity (spatial plate)") {
  Manifold m(3, WarpKind::Euclidean, 1e300);
  Operator op = assemble(m, RadialGrid::disk(0.02, 512.0, 16));
  const int node = op.layout->nearest_cell(1.0);
  KernelMatrix km = kernel_matrix(op, {node}, true);
  EquilibriumResult eq = equilibrium_measure(km);

  ExhaustionCapacity cap =
      exhaustion_capacity(m, op.layout->node_r[node], {8.0, 64.0, 512.0, 4096.0}, 16);
  CHECK(eq.eps * cap.limit == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("monotonicity: growing the plate lowers the minimal energy") {
  RingSetup s = make_ring(64.0, 12);
  // sub-arc of the ring vs the full ring
  std::vector<int> arc(s.ring.begin(), s.ring.begin() + 5);
  KernelMatrix km_arc = kernel_matrix(s.op, arc, false);
  EquilibriumResult small = equilibrium_measure(km_arc);
  EquilibriumResult big = equilibrium_measure(s.km);
  CHECK(small.eps >= big.eps - 1e-8);
}

TEST_CASE("equilibrium potential: bounded by eps and proportional to the capacity potential") {
  RingSetup s = make_ring(128.0, 12);
  EquilibriumResult eq = equilibrium_measure(s.km);
  REQUIRE(eq.converged);

  std::vector<int> plate;
  const auto& lay = *s.op.layout;
  for (int i = 0; i < lay.n_cells; ++i)
    if (lay.node_r[i] <= lay.node_r[s.ring[0]] + 1e-12) plate.push_back(i);
  CapacityReport cap = condenser_capacity(s.op, plate);
  REQUIRE(cap.valid);

  std::vector<int> probes;
  for (double r : {2.0, 4.0, 8.0, 16.0, 32.0})
    probes.push_back(lay.nearest_cell(r, 0.3));
  PotentialCheckReport rep =
      equilibrium_potential_check(eq.nu, s.km, cap.potential, s.op, eq.eps, probes);
  INFO((rep.failures.empty() ? std::string("ok") : rep.failures.front()));
  CHECK(rep.ok());
  CHECK(rep.max_match_error <= 0.02);
}

TEST_CASE("spatial far field: unit mass seen through the flux") {
  Manifold m(3, WarpKind::Euclidean, 1e300);
  Operator op = assemble(m, RadialGrid::disk(0.02, 512.0, 24));
  const int node = op.layout->nearest_cell(1.0);
  KernelMatrix km = kernel_matrix(op, {node}, true);
  EquilibriumResult eq = equilibrium_measure(km);
  // G_nu(r) * 4 pi r -> 1 for r between the plate and the truncation
  Field pot = km.columns[0];
  const double r = 4.0;
  const double val = radial_value_at(*op.layout, pot.v, r);
  CHECK(val * 4 * oracles::pi * r == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("harmonic measure: mass one and rotation invariance at the center") {
  Manifold m(2, WarpKind::Euclidean, 100.0);
  // first cell tiny so the evaluation point is the disk center for real
  Operator op = assemble(m, PolarGrid(RadialGrid::disk(4e-6, 2.0, 8), 16));
  const auto boundary = op.layout->boundary();
  const int z0 = 0;  // innermost ring, sector 0, r ~ 2e-6
  DiscreteMeasure xi = harmonic_measure(op, boundary, z0);
  double total = 0;
  for (double w : xi.w) {
    CHECK(w >= 0);
    total += w;
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-8));
  const double mean = total / xi.w.size();
  for (double w : xi.w) CHECK(w == Catch::Approx(mean).margin(1e-6));
}

TEST_CASE("harmonic measure reproduces Dirichlet solves") {
  Manifold m(2, WarpKind::HyperbolicSinh, 100.0);
  Operator op = assemble(m, PolarGrid(RadialGrid::uniform(0.5, 3.0, 20), 12));
  const auto boundary = op.layout->boundary();
  const int z0 = op.layout->nearest_cell(1.7, 2.0);
  DiscreteMeasure xi = harmonic_measure(op, boundary, z0);

  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    BoundaryCondition bc;
    double represented = 0;
    for (size_t k = 0; k < boundary.size(); ++k) {
      const double v = oracles::uniform(rng, -3.0, 3.0);
      bc.add(boundary[k], v);
      represented += xi.w[k] * v;
    }
    Field u = dirichlet_solve(op, bc);
    CHECK(std::abs(represented - u.v[z0]) < 1e-8 * std::max(1.0, bc.sup()));
  }
}

TEST_CASE("harmonic measure: z0 on the boundary degenerates to a point mass") {
  Manifold m(2, WarpKind::Euclidean, 100.0);
  Operator op = assemble(m, PolarGrid(RadialGrid::disk(0.1, 2.0, 16), 8));
  const auto boundary = op.layout->boundary();
  DiscreteMeasure xi = harmonic_measure(op, boundary, boundary[3]);
  CHECK(xi.degenerate);
  CHECK(xi.w[3] == 1.0);
}
