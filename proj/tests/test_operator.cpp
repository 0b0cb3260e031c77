#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "modpot/operator.hpp"
#include "oracles.hpp"

using namespace modpot;

namespace {

Manifold euclid2() { return Manifold(2, WarpKind::Euclidean, 1e6); }
Manifold euclid3() { return Manifold(3, WarpKind::Euclidean, 1e6); }

// max |(-S u / V)| over cells away from the grid ends
double interior_residual_radial(const Operator& op, const Field& u) {
  double worst = 0;
  for (int i = 1; i + 1 < op.layout->n_r; ++i)
    worst = std::max(worst, std::abs(op.laplacian_at(u, i)));
  return worst;
}

double interior_residual_polar(const Operator& op, const Field& u) {
  const auto& lay = *op.layout;
  double worst = 0;
  for (int i = 1; i + 1 < lay.n_r; ++i)
    for (int j = 0; j < lay.n_theta; ++j)
      worst = std::max(worst, std::abs(op.laplacian_at(u, lay.cell_id(i, j))));
  return worst;
}

}  // namespace

TEST_CASE("operator structure: symmetry, row sums, M-matrix sign") {
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 3.0, 24), 16));
  // face-list storage is symmetric by construction; conductance positivity is
  // the M-matrix sign pattern (off-diagonal of -S nonnegative)
  for (const auto& f : op.faces) CHECK(f.t > 0);
  // row sums of S vanish: S applied to constants is zero everywhere
  std::vector<double> ones(op.layout->node_count(), 1.0), y;
  op.apply_stiffness(ones, y);
  for (double v : y) CHECK(std::abs(v) <= 1e-12 * op.diag[0]);
}

TEST_CASE("constants are discretely harmonic") {
  Operator op = assemble(euclid3(), RadialGrid::uniform(0.5, 2.0, 32));
  Field c(op.layout, 3.25);
  for (int i = 0; i < op.layout->n_cells; ++i)
    CHECK(std::abs(op.laplacian_at(c, i)) < 1e-12);
}

TEST_CASE("log r is harmonic on the plane: O(h^2) residual decay") {
  std::map<int, double> res;
  for (int n : {32, 64}) {
    Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, std::exp(1.0), n), 8));
    Field u(op.layout);
    for (int i = 0; i < u.size(); ++i) u.v[i] = std::log(op.layout->node_r[i]);
    res[n] = interior_residual_polar(op, u);
  }
  CHECK(res[64] < res[32] / 2.5);
  CHECK(res[64] < 2e-3);
}

TEST_CASE("r cos(theta) is harmonic on the plane") {
  std::map<int, double> res;
  for (int n : {16, 32}) {
    Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 2.0, n), 2 * n));
    Field u(op.layout);
    for (int i = 0; i < u.size(); ++i)
      u.v[i] = op.layout->node_r[i] * std::cos(op.layout->node_theta[i]);
    res[n] = interior_residual_polar(op, u);
  }
  CHECK(res[32] < res[16] / 2.5);
}

TEST_CASE("1/r is harmonic in space: O(h^2) residual decay") {
  std::map<int, double> res;
  for (int n : {64, 128}) {
    Operator op = assemble(euclid3(), RadialGrid::uniform(1.0, 2.0, n));
    Field u(op.layout);
    for (int i = 0; i < u.size(); ++i) u.v[i] = 1.0 / op.layout->node_r[i];
    res[n] = interior_residual_radial(op, u);
  }
  CHECK(res[128] < res[64] / 2.5);
}

TEST_CASE("polar grids require dim 2") {
  CHECK_THROWS_AS(assemble(euclid3(), PolarGrid(RadialGrid::uniform(1.0, 2.0, 8), 8)),
                  std::invalid_argument);
}

TEST_CASE("dirichlet solve: constants reproduce") {
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 2.0, 16), 8));
  BoundaryCondition bc;
  bc.add(op.layout->boundary(), 1.0);
  Field u = dirichlet_solve(op, bc);
  for (double v : u.v) CHECK(v == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("dirichlet solve: planar annulus log profile") {
  const double e = std::exp(1.0);
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, e, 256));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 0.0);
  bc.add(op.layout->outer_boundary, 1.0);
  Field u = dirichlet_solve(op, bc);
  for (int i = 0; i < op.layout->n_cells; ++i)
    CHECK(std::abs(u.v[i] - std::log(op.layout->node_r[i])) < 1e-3);
}

TEST_CASE("dirichlet solve: spatial annulus 1/r profile") {
  Operator op = assemble(euclid3(), RadialGrid::uniform(1.0, 2.0, 256));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 1.0);
  bc.add(op.layout->outer_boundary, 0.0);
  Field u = dirichlet_solve(op, bc);
  Manifold m = euclid3();
  const double total = radial_integral(m, 1.0, 2.0);
  for (int i = 0; i < op.layout->n_cells; ++i) {
    const double expect = radial_integral(m, op.layout->node_r[i], 2.0) / total;
    CHECK(std::abs(u.v[i] - expect) < 1e-3);
  }
}

TEST_CASE("empty boundary is rejected") {
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, 2.0, 8));
  BoundaryCondition bc;
  CHECK_THROWS_AS(dirichlet_solve(op, bc), std::invalid_argument);
}

TEST_CASE("maximum principle over random data, with strictness") {
  std::mt19937_64 rng(11);
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 4.0, 20), 12));
  for (int trial = 0; trial < 25; ++trial) {
    BoundaryCondition bc;
    double lo = 1e300, hi = -1e300;
    for (int b : op.layout->boundary()) {
      const double v = oracles::uniform(rng, -2.0, 2.0);
      bc.add(b, v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    Field u = dirichlet_solve(op, bc);
    for (int i = 0; i < op.layout->n_cells; ++i) {
      CHECK(u.v[i] >= lo - 1e-9);
      CHECK(u.v[i] <= hi + 1e-9);
      // strict inside for nonconstant data
      CHECK(u.v[i] > lo + 1e-12);
      CHECK(u.v[i] < hi - 1e-12);
    }
  }
}

TEST_CASE("harnack ratio bounded by the extreme-ray constant") {
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 4.0, 24), 16));
  const auto& lay = *op.layout;
  std::vector<int> window;
  for (int i = 0; i < lay.n_cells; ++i)
    if (lay.node_r[i] >= 1.5 && lay.node_r[i] <= 3.0) window.push_back(i);

  // Lambda from the columns of the harmonic-measure basis: data e_b
  const auto boundary = lay.boundary();
  double lambda = 1.0;
  for (int b : boundary) {
    BoundaryCondition bc;
    for (int bb : boundary) bc.add(bb, bb == b ? 1.0 : 0.0);
    Field u = dirichlet_solve(op, bc);
    double lo = 1e300, hi = 0;
    for (int i : window) {
      lo = std::min(lo, u.v[i]);
      hi = std::max(hi, u.v[i]);
    }
    lambda = std::max(lambda, hi / lo);
  }

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    BoundaryCondition bc;
    for (int b : boundary) bc.add(b, oracles::uniform(rng, 0.05, 3.0));
    Field u = dirichlet_solve(op, bc);
    double lo = 1e300, hi = 0;
    for (int i : window) {
      lo = std::min(lo, u.v[i]);
      hi = std::max(hi, u.v[i]);
    }
    CHECK(hi / lo <= lambda * 1.05);
  }
}

TEST_CASE("dirichlet energy: constants and the annulus log profile") {
  const double e = std::exp(1.0);
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, e, 256));
  Field c(op.layout, 42.0);
  CHECK(dirichlet_energy(op, c) == 0.0);

  Field u(op.layout);
  for (int i = 0; i < u.size(); ++i) u.v[i] = std::log(op.layout->node_r[i]);
  u.v[op.layout->inner_boundary[0]] = 0.0;
  u.v[op.layout->outer_boundary[0]] = 1.0;
  CHECK(dirichlet_energy(op, u) == Catch::Approx(2 * pi).epsilon(0.01));
}

TEST_CASE("pairing is bilinear") {
  Operator op = assemble(euclid3(), RadialGrid::uniform(1.0, 2.0, 40));
  std::mt19937_64 rng(3);
  Field f(op.layout), g(op.layout), h(op.layout), fg(op.layout);
  for (int i = 0; i < f.size(); ++i) {
    f.v[i] = oracles::uniform(rng, -1, 1);
    g.v[i] = oracles::uniform(rng, -1, 1);
    h.v[i] = oracles::uniform(rng, -1, 1);
    fg.v[i] = f.v[i] + g.v[i];
  }
  const double lhs = dirichlet_pairing(op, fg, h);
  const double rhs = dirichlet_pairing(op, f, h) + dirichlet_pairing(op, g, h);
  CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  CHECK(dirichlet_pairing(op, f, g) == Catch::Approx(dirichlet_pairing(op, g, f)).epsilon(1e-13));
}

TEST_CASE("grid mismatch is an error") {
  Operator op1 = assemble(euclid3(), RadialGrid::uniform(1.0, 2.0, 8));
  Operator op2 = assemble(euclid3(), RadialGrid::uniform(1.0, 2.0, 8));
  Field f(op2.layout, 1.0);
  CHECK_THROWS_AS(dirichlet_energy(op1, f), std::invalid_argument);
}

TEST_CASE("dirichlet principle: energy splitting is exact discretely") {
  std::mt19937_64 rng(17);
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 3.0, 16), 12));
  const auto boundary = op.layout->boundary();
  for (int trial = 0; trial < 20; ++trial) {
    Field f(op.layout);
    for (int i = 0; i < f.size(); ++i) f.v[i] = oracles::uniform(rng, -1, 1);
    BoundaryCondition bc;
    for (int b : boundary) bc.add(b, f.v[b]);
    Field u = dirichlet_solve(op, bc);
    Field d(op.layout);
    for (int i = 0; i < d.size(); ++i) d.v[i] = f.v[i] - u.v[i];
    const double df = dirichlet_energy(op, f);
    const double du = dirichlet_energy(op, u);
    const double dd = dirichlet_energy(op, d);
    CHECK(std::abs(df - du - dd) <= 1e-8 * std::max(df, 1e-300));
    CHECK(du <= df + 1e-12);
  }
}

TEST_CASE("perron relaxation agrees with the direct solve") {
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, std::exp(1.0), 24));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 0.0);
  bc.add(op.layout->outer_boundary, 1.0);
  Field direct = dirichlet_solve(op, bc);

  Field sub0(op.layout, 0.0);  // min of the data: constant minorant
  PerronResult pr = perron_solve(op, bc, sub0);
  for (int i = 0; i < op.layout->n_cells; ++i)
    CHECK(std::abs(pr.u.v[i] - direct.v[i]) < 1e-8);
}

TEST_CASE("perron: zero data is an immediate fixed point") {
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, 2.0, 16));
  BoundaryCondition bc;
  bc.add(op.layout->boundary(), 0.0);
  Field sub0(op.layout, 0.0);
  PerronResult pr = perron_solve(op, bc, sub0);
  CHECK(pr.sweeps == 1);
  for (double v : pr.u.v) CHECK(v == 0.0);
}

TEST_CASE("perron rejects non-subharmonic starts") {
  Operator op = assemble(euclid2(), RadialGrid::uniform(1.0, 2.0, 16));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 0.0);
  bc.add(op.layout->outer_boundary, 1.0);
  Field bad(op.layout, 0.0);
  bad.v[8] = 0.9;  // interior bump: superharmonic spike
  CHECK_THROWS_AS(perron_solve(op, bc, bad), std::invalid_argument);

  Field above(op.layout, 0.0);
  above.v[op.layout->outer_boundary[0]] = 2.0;  // exceeds its boundary datum
  CHECK_THROWS_AS(perron_solve(op, bc, above), std::invalid_argument);
}

TEST_CASE("perron sweeps increase monotonically") {
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::uniform(1.0, 2.0, 10), 8));
  BoundaryCondition bc;
  std::mt19937_64 rng(23);
  for (int b : op.layout->boundary()) bc.add(b, oracles::uniform(rng, 0.5, 2.0));
  Field sub0(op.layout, 0.5);
  // internal monotonicity assertion would throw on violation
  PerronResult pr = perron_solve(op, bc, sub0);
  Field direct = dirichlet_solve(op, bc);
  for (int i = 0; i < op.layout->n_cells; ++i)
    CHECK(std::abs(pr.u.v[i] - direct.v[i]) < 1e-8);
}

TEST_CASE("perron on a warped annulus matches the quadrature profile") {
  Manifold m(2, WarpKind::HyperbolicSinh, 100.0);
  Operator op = assemble(m, RadialGrid::uniform(1.0, 3.0, 64));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 0.0);
  bc.add(op.layout->outer_boundary, 1.0);
  Field sub0(op.layout, 0.0);
  PerronResult pr = perron_solve(op, bc, sub0);
  const double total = radial_integral(m, 1.0, 3.0);
  for (int i = 0; i < op.layout->n_cells; ++i) {
    const double expect = radial_integral(m, 1.0, op.layout->node_r[i]) / total;
    CHECK(std::abs(pr.u.v[i] - expect) < 1e-3);
  }
}

TEST_CASE("harnack principle: increasing bounded harmonic sequence converges") {
  // exhaustion data 0 lifted to 1 on growing spheres: discrete monotone limit
  Operator op = assemble(euclid3(), RadialGrid::uniform(1.0, 16.0, 120));
  const auto& lay = *op.layout;
  Field prev(op.layout, 0.0);
  bool first = true;
  for (double R : {4.0, 8.0, 12.0, 15.0}) {
    BoundaryCondition bc;
    bc.add(lay.inner_boundary, 1.0);
    for (int i = 0; i < lay.n_cells; ++i)
      if (lay.node_r[i] >= R) bc.add(i, 0.0);
    for (int b : lay.outer_boundary) bc.add(b, 0.0);
    Field u = dirichlet_solve(op, bc);
    if (!first)
      for (int i = 0; i < lay.n_cells; ++i) CHECK(u.v[i] >= prev.v[i] - 1e-9);
    prev = u;
    first = false;
  }
  // limit candidate stays discretely harmonic where it was solved
  for (int i = 1; i < lay.n_cells - 1; ++i)
    if (lay.node_r[i] < 12.0)
      CHECK(std::abs(op.laplacian_at(prev, i)) < 1e-6);
}

TEST_CASE("harmonic projection: harmonic input is a fixed point") {
  Operator op = assemble(euclid3(), RadialGrid::uniform(1.0, 8.0, 64));
  BoundaryCondition bc;
  bc.add(op.layout->inner_boundary, 1.0);
  bc.add(op.layout->outer_boundary, 0.0);
  Field f = dirichlet_solve(op, bc);
  ProjectionResult pr = harmonic_projection(op, f, {6.0, 7.0});
  for (int i = 0; i < f.size(); ++i)
    CHECK(std::abs(pr.projection.v[i] - f.v[i]) < 1e-8);
}

TEST_CASE("harmonic projection: splitting is orthogonal") {
  Operator op = assemble(euclid3(), RadialGrid::geometric(0.5, 256.0, 16));
  std::mt19937_64 rng(29);
  Field f(op.layout);
  for (int i = 0; i < f.size(); ++i) {
    const double r = op.layout->node_r[i];
    f.v[i] = std::tanh(r) + 0.3 * std::sin(r) / (1 + r) + oracles::uniform(rng, -0.01, 0.01);
  }
  ProjectionResult pr = harmonic_projection(op, f, {32.0, 64.0, 128.0});
  CHECK(pr.orth_residual < 1e-6);
}

TEST_CASE("harmonic projection flags non-convergence") {
  Operator op = assemble(euclid2(), PolarGrid(RadialGrid::disk(0.25, 8.0, 12), 12));
  Field f(op.layout);
  for (int i = 0; i < f.size(); ++i) {
    const double r = op.layout->node_r[i];
    f.v[i] = r / (1.0 + r) * std::cos(op.layout->node_theta[i]);
  }
  // the angular mode keeps draining outward; two nearby levels still disagree
  ProjectionResult pr = harmonic_projection(op, f, {2.0, 4.0});
  CHECK_FALSE(pr.converged);
}
