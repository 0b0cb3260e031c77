#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modpot/grid.hpp"
#include "modpot/manifold.hpp"

// Finite-volume Laplace-Beltrami operator in divergence form. The operator is
// stored as its stiffness part: S = sum over faces f of t_f (e_a - e_b)(e_a - e_b)^T
// together with cell volumes, so that the discrete Laplacian is -V^{-1} S.
// This keeps S symmetric positive semidefinite with nonpositive off-diagonal
// entries; the discrete maximum principle holds exactly.
//
// Radial stencil: face conductance omega_{m-1} sigma(r_face)^{m-1} / dr, where
// dr is the distance between the two node positions sharing the face. The pole
// face at r = 0 carries sigma(0)^{m-1} = 0 and is dropped (zero flux). For
// dim-2 polar grids the angular conductance across a face of cell (i,j) is
// dr_i / (sigma(r_i) dtheta), i.e. cell volume times 1/(sigma^2 dtheta^2).

namespace modpot {

class SolveError : public std::runtime_error {
public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

struct BoundaryCondition {
  std::vector<int> nodes;
  std::vector<double> values;

  void add(int node, double value) {
    nodes.push_back(node);
    values.push_back(value);
  }
  void add(const std::vector<int>& ns, double value) {
    for (int n : ns) add(n, value);
  }
  double sup() const {
    double s = 0;
    for (double x : values) s = std::max(s, std::abs(x));
    return s;
  }
};

struct SolveStats {
  int iterations = 0;
  double residual = 0;  // inf-norm of the diagonally scaled residual
};

class Operator {
public:
  struct Face {
    int a, b;
    double t;
  };

  std::shared_ptr<const Layout> layout;
  std::vector<Face> faces;
  std::vector<double> diag;  // row sums of conductances

  void apply_stiffness(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(x.size(), 0.0);
    for (const Face& f : faces) {
      const double d = f.t * (x[f.a] - x[f.b]);
      y[f.a] += d;
      y[f.b] -= d;
    }
  }

  void finalize() {
    for (const Face& f : faces)
      if (!std::isfinite(f.t) || !(f.t > 0))
        throw std::overflow_error("assemble: nonfinite face conductance (warp overflow?)");
    for (int i = 0; i < layout->n_cells; ++i)
      if (!std::isfinite(layout->volume[i]) || !(layout->volume[i] > 0))
        throw std::overflow_error("assemble: nonfinite cell volume (warp overflow?)");
    diag.assign(layout->node_count(), 0.0);
    for (const Face& f : faces) {
      diag[f.a] += f.t;
      diag[f.b] += f.t;
    }
  }

  /// Residual of the discrete Laplacian at a cell: (-S u / V)_i.
  double laplacian_at(const Field& u, int cell) const;
};

namespace detail {

inline double cell_volume(const Manifold& M, double f0, double f1) {
  const double expo = M.dim() - 1;
  auto f = [&](double r) { return std::pow(M.sigma(r), expo); };
  double err = 0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, f0, f1, 10, 1e-12, &err);
}

}  // namespace detail

inline Operator assemble(const Manifold& M, const RadialGrid& g) {
  const int n = g.cells();
  const double omega = unit_sphere_area(M.dim());
  auto lay = std::make_shared<Layout>();
  lay->m = M.dim();
  lay->polar = false;
  lay->n_r = n;
  lay->n_cells = n;
  lay->node_r = g.centers;
  lay->node_theta.assign(n, 0.0);
  lay->volume.resize(n);
  for (int i = 0; i < n; ++i)
    lay->volume[i] = omega * detail::cell_volume(M, g.faces[i], g.faces[i + 1]);

  Operator op;
  op.faces.reserve(n + 1);
  auto cond = [&](double rf, double dr) {
    return omega * std::pow(M.sigma(rf), M.dim() - 1) / dr;
  };
  for (int i = 0; i + 1 < n; ++i)
    op.faces.push_back({i, i + 1, cond(g.faces[i + 1], g.centers[i + 1] - g.centers[i])});

  if (g.faces.front() > 0) {
    const int b = static_cast<int>(lay->node_r.size());
    lay->node_r.push_back(g.faces.front());
    lay->node_theta.push_back(0.0);
    lay->volume.push_back(0.0);
    lay->inner_boundary.push_back(b);
    op.faces.push_back({b, 0, cond(g.faces.front(), g.centers.front() - g.faces.front())});
  }
  {
    const int b = static_cast<int>(lay->node_r.size());
    lay->node_r.push_back(g.faces.back());
    lay->node_theta.push_back(0.0);
    lay->volume.push_back(0.0);
    lay->outer_boundary.push_back(b);
    op.faces.push_back({n - 1, b, cond(g.faces.back(), g.faces.back() - g.centers.back())});
  }

  op.layout = std::move(lay);
  op.finalize();
  return op;
}

inline Operator assemble(const Manifold& M, const PolarGrid& g) {
  if (M.dim() != 2)
    throw std::invalid_argument("assemble: polar grids require a dim-2 manifold");
  const auto& rg = g.radial;
  const int nr = rg.cells();
  const int nt = g.n_theta;
  const double dth = g.dtheta();

  auto lay = std::make_shared<Layout>();
  lay->m = 2;
  lay->polar = true;
  lay->n_r = nr;
  lay->n_theta = nt;
  lay->n_cells = nr * nt;
  lay->node_r.resize(lay->n_cells);
  lay->node_theta.resize(lay->n_cells);
  lay->volume.resize(lay->n_cells);
  for (int i = 0; i < nr; ++i) {
    const double vol = dth * detail::cell_volume(M, rg.faces[i], rg.faces[i + 1]);
    for (int j = 0; j < nt; ++j) {
      const int id = i * nt + j;
      lay->node_r[id] = rg.centers[i];
      lay->node_theta[id] = g.theta(j);
      lay->volume[id] = vol;
    }
  }

  Operator op;
  auto rcond = [&](double rf, double dr) { return dth * M.sigma(rf) / dr; };
  for (int i = 0; i + 1 < nr; ++i) {
    const double t = rcond(rg.faces[i + 1], rg.centers[i + 1] - rg.centers[i]);
    for (int j = 0; j < nt; ++j)
      op.faces.push_back({i * nt + j, (i + 1) * nt + j, t});
  }
  for (int i = 0; i < nr; ++i) {
    const double dr = rg.faces[i + 1] - rg.faces[i];
    const double t = dr / (M.sigma(rg.centers[i]) * dth);
    for (int j = 0; j < nt; ++j)
      op.faces.push_back({i * nt + j, i * nt + (j + 1) % nt, t});
  }

  if (rg.faces.front() > 0) {
    const double t = rcond(rg.faces.front(), rg.centers.front() - rg.faces.front());
    for (int j = 0; j < nt; ++j) {
      const int b = static_cast<int>(lay->node_r.size());
      lay->node_r.push_back(rg.faces.front());
      lay->node_theta.push_back(g.theta(j));
      lay->volume.push_back(0.0);
      lay->inner_boundary.push_back(b);
      op.faces.push_back({b, j, t});
    }
  }
  {
    const double t = rcond(rg.faces.back(), rg.faces.back() - rg.centers.back());
    for (int j = 0; j < nt; ++j) {
      const int b = static_cast<int>(lay->node_r.size());
      lay->node_r.push_back(rg.faces.back());
      lay->node_theta.push_back(g.theta(j));
      lay->volume.push_back(0.0);
      lay->outer_boundary.push_back(b);
      op.faces.push_back({(nr - 1) * nt + j, b, t});
    }
  }

  op.layout = std::move(lay);
  op.finalize();
  return op;
}

inline double Operator::laplacian_at(const Field& u, int cell) const {
  if (u.layout.get() != layout.get()) throw std::invalid_argument("field/operator grid mismatch");
  double s = diag[cell] * u.v[cell];
  for (const Face& f : faces) {
    if (f.a == cell) s -= f.t * u.v[f.b];
    if (f.b == cell) s -= f.t * u.v[f.a];
  }
  return -s / layout->volume[cell];
}

namespace detail {

struct LinearSystem {
  const Operator& op;
  std::vector<char> fixed;
  std::vector<double> rhs;  // for unknowns; includes -S_IB * g contributions
};

// Jacobi-preconditioned CG on the stiffness matrix restricted to unknowns.
// Convergence is declared on the diagonally scaled residual, which lives in
// solution units.
inline SolveStats pcg(const Operator& op, const std::vector<char>& fixed,
                      const std::vector<double>& b, std::vector<double>& x,
                      double tol_units) {
  const int n = op.layout->node_count();
  std::vector<double> r(n, 0.0), z(n, 0.0), p(n, 0.0), q(n, 0.0);

  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.assign(n, 0.0);
    for (const auto& f : op.faces) {
      if (fixed[f.a] || fixed[f.b]) {
        if (!fixed[f.a]) out[f.a] += f.t * in[f.a];
        if (!fixed[f.b]) out[f.b] += f.t * in[f.b];
        continue;
      }
      const double d = f.t * (in[f.a] - in[f.b]);
      out[f.a] += d;
      out[f.b] -= d;
    }
  };

  for (int i = 0; i < n; ++i)
    if (fixed[i]) x[i] = 0.0;

  apply(x, q);
  double scaled_res = 0;
  for (int i = 0; i < n; ++i) {
    r[i] = fixed[i] ? 0.0 : b[i] - q[i];
    if (!fixed[i] && op.diag[i] > 0)
      scaled_res = std::max(scaled_res, std::abs(r[i]) / op.diag[i]);
  }
  SolveStats stats;
  stats.residual = scaled_res;
  if (scaled_res <= tol_units) return stats;

  double rz = 0;
  for (int i = 0; i < n; ++i) {
    z[i] = fixed[i] || op.diag[i] <= 0 ? 0.0 : r[i] / op.diag[i];
    rz += r[i] * z[i];
  }
  p = z;

  const int max_iter =
      static_cast<int>(50.0 * std::sqrt(static_cast<double>(n))) + 200;
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    double pq = 0;
    for (int i = 0; i < n; ++i) pq += p[i] * q[i];
    if (!(pq > 0)) throw SolveError("pcg: matrix not positive definite (no boundary?)");
    const double alpha = rz / pq;
    scaled_res = 0;
    for (int i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      if (op.diag[i] > 0)
        scaled_res = std::max(scaled_res, std::abs(r[i]) / op.diag[i]);
    }
    stats.iterations = it;
    stats.residual = scaled_res;
    if (scaled_res <= tol_units) return stats;
    double rz_next = 0;
    for (int i = 0; i < n; ++i) {
      z[i] = fixed[i] || op.diag[i] <= 0 ? 0.0 : r[i] / op.diag[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolveError("pcg: no convergence in " + std::to_string(max_iter) +
                   " iterations (residual " + std::to_string(stats.residual) + ")");
}

}  // namespace detail

/// Solve S u = rhs with u pinned on bc nodes. rhs entries are given per node.
inline Field poisson_solve(const Operator& op, const BoundaryCondition& bc,
                           const std::vector<std::pair<int, double>>& rhs = {},
                           SolveStats* stats_out = nullptr, const Field* warm = nullptr) {
  const int n = op.layout->node_count();
  if (bc.nodes.empty())
    throw std::invalid_argument(
        "poisson_solve: empty boundary on a bounded grid, no unique solution");

  std::vector<char> fixed(n, 0);
  Field u = warm ? *warm : Field(op.layout, 0.0);
  if (warm && warm->layout.get() != op.layout.get())
    throw std::invalid_argument("poisson_solve: warm start grid mismatch");
  for (size_t k = 0; k < bc.nodes.size(); ++k) {
    if (!std::isfinite(bc.values[k]))
      throw std::invalid_argument("poisson_solve: boundary values must be finite");
    fixed[bc.nodes[k]] = 1;
    u.v[bc.nodes[k]] = bc.values[k];
  }

  std::vector<double> b(n, 0.0);
  for (const auto& f : op.faces) {
    if (fixed[f.a] && !fixed[f.b]) b[f.b] += f.t * u.v[f.a];
    if (fixed[f.b] && !fixed[f.a]) b[f.a] += f.t * u.v[f.b];
  }
  for (const auto& [node, val] : rhs) {
    if (fixed[node]) throw std::invalid_argument("poisson_solve: source on a fixed node");
    b[node] += val;
  }

  double scale = bc.sup();
  for (int i = 0; i < n; ++i)
    if (!fixed[i] && op.diag[i] > 0) scale = std::max(scale, std::abs(b[i]) / op.diag[i]);
  const double tol = 1e-10 * std::max(scale, 1e-300);

  std::vector<double> x(u.v);
  for (int i = 0; i < n; ++i)
    if (fixed[i]) x[i] = 0.0;
  SolveStats stats = detail::pcg(op, fixed, b, x, tol);
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) u.v[i] = x[i];
  if (stats_out) *stats_out = stats;
  return u;
}

inline Field dirichlet_solve(const Operator& op, const BoundaryCondition& bc,
                             SolveStats* stats = nullptr, const Field* warm = nullptr) {
  return poisson_solve(op, bc, {}, stats, warm);
}

/// Quadratic form f^T S f; converges to the Dirichlet integral of f.
inline double dirichlet_energy(const Operator& op, const Field& f) {
  if (f.layout.get() != op.layout.get())
    throw std::invalid_argument("dirichlet_energy: grid mismatch");
  double e = 0;
  for (const auto& fc : op.faces) {
    const double d = f.v[fc.a] - f.v[fc.b];
    e += fc.t * d * d;
  }
  return e;
}

inline double dirichlet_pairing(const Operator& op, const Field& f, const Field& g) {
  if (f.layout.get() != op.layout.get() || g.layout.get() != op.layout.get())
    throw std::invalid_argument("dirichlet_pairing: grid mismatch");
  double e = 0;
  for (const auto& fc : op.faces)
    e += fc.t * (f.v[fc.a] - f.v[fc.b]) * (g.v[fc.a] - g.v[fc.b]);
  return e;
}

struct PerronResult {
  Field u;
  int sweeps = 0;
  double last_change = 0;
};

/// Monotone relaxation: lexicographic sweeps of nodewise harmonic averaging,
/// starting from a discretely subharmonic minorant. The iterates increase
/// pointwise toward the Dirichlet solution.
inline PerronResult perron_solve(const Operator& op, const BoundaryCondition& bc,
                                 const Field& sub0, double sweep_tol = 1e-10,
                                 int max_sweeps = 400000) {
  const int n = op.layout->node_count();
  if (sub0.layout.get() != op.layout.get())
    throw std::invalid_argument("perron_solve: grid mismatch");

  std::vector<char> fixed(n, 0);
  std::vector<double> target(n, 0.0);
  for (size_t k = 0; k < bc.nodes.size(); ++k) {
    fixed[bc.nodes[k]] = 1;
    target[bc.nodes[k]] = bc.values[k];
  }
  const double scale = std::max(1.0, bc.sup());

  // precondition: S*sub0 <= 0 away from pinned nodes, sub0 <= bc on them
  std::vector<double> s;
  op.apply_stiffness(sub0.v, s);
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) {
      if (sub0.v[i] > target[i] + 1e-12 * scale)
        throw std::invalid_argument("perron_solve: minorant exceeds boundary data");
    } else if (s[i] > 1e-9 * std::max(op.diag[i], 1.0) * scale) {
      throw std::invalid_argument("perron_solve: start field is not subharmonic");
    }
  }

  // adjacency in a compact form
  std::vector<int> head(n, -1), next(2 * op.faces.size(), -1), adj_node(2 * op.faces.size());
  std::vector<double> adj_t(2 * op.faces.size());
  int slot = 0;
  for (const auto& f : op.faces) {
    adj_node[slot] = f.b;
    adj_t[slot] = f.t;
    next[slot] = head[f.a];
    head[f.a] = slot++;
    adj_node[slot] = f.a;
    adj_t[slot] = f.t;
    next[slot] = head[f.b];
    head[f.b] = slot++;
  }

  PerronResult res;
  res.u = sub0;
  for (size_t k = 0; k < bc.nodes.size(); ++k) res.u.v[bc.nodes[k]] = bc.values[k];

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0;
    for (int i = 0; i < n; ++i) {
      if (fixed[i] || op.diag[i] <= 0) continue;
      double num = 0;
      for (int s2 = head[i]; s2 >= 0; s2 = next[s2]) num += adj_t[s2] * res.u.v[adj_node[s2]];
      const double lift = num / op.diag[i];
      if (lift < res.u.v[i] - 1e-13 * scale)
        throw SolveError("perron_solve: monotonicity violated");
      change = std::max(change, lift - res.u.v[i]);
      res.u.v[i] = std::max(res.u.v[i], lift);
    }
    res.sweeps = sweep + 1;
    res.last_change = change;
    if (change <= sweep_tol * scale) return res;
  }
  throw SolveError("perron_solve: sweep budget exhausted");
}

struct ProjectionResult {
  Field projection;
  bool converged = true;
  double level_change = 0;      // sup change between the last two levels, probe window
  double window_spread = 0;     // max - min of the limit field over the probe window
  double orth_residual = 0;     // |D(f) - D(pi f) - D(f - pi f)| / max(D(f), eps)
  std::vector<double> level_radii;
};

/// Harmonic replacement inside growing truncations: at each level solve u
/// harmonic on {r < rho} with u = f outside, and keep the last level.
/// Exhaustion limits live on compacts, so convergence and spread are
/// measured on the probe window r <= probe_radius (default: a quarter of the
/// first truncation). The orthogonality residual of the splitting
/// f = pi(f) + (f - pi(f)) is reported rather than assumed.
inline ProjectionResult harmonic_projection(const Operator& op, const Field& f,
                                            const std::vector<double>& truncations,
                                            double probe_radius = 0) {
  if (f.layout.get() != op.layout.get())
    throw std::invalid_argument("harmonic_projection: grid mismatch");
  if (truncations.empty())
    throw std::invalid_argument("harmonic_projection: no truncation radii");
  const auto& lay = *op.layout;
  if (!(probe_radius > 0)) probe_radius = 0.25 * truncations.front();

  double f_sup = 0;
  for (double x : f.v) f_sup = std::max(f_sup, std::abs(x));

  ProjectionResult out;
  Field prev = f;
  bool have_prev = false;
  for (double rho : truncations) {
    BoundaryCondition bc;
    // relative version: the field stays pinned on the inner plate, if any
    for (int b : lay.inner_boundary) bc.add(b, f.v[b]);
    for (int i = 0; i < lay.node_count(); ++i)
      if (lay.node_r[i] >= rho) bc.add(i, f.v[i]);
    if (bc.nodes.empty() || static_cast<int>(bc.nodes.size()) == lay.node_count())
      throw std::invalid_argument("harmonic_projection: truncation outside grid");
    Field u = dirichlet_solve(op, bc, nullptr, have_prev ? &prev : nullptr);
    if (have_prev) {
      double ch = 0;
      for (int i = 0; i < lay.node_count(); ++i)
        if (lay.node_r[i] <= probe_radius)
          ch = std::max(ch, std::abs(u.v[i] - prev.v[i]));
      out.level_change = ch;
    }
    prev = u;
    have_prev = true;
    out.level_radii.push_back(rho);
  }
  out.projection = prev;
  out.converged = truncations.size() < 2 || out.level_change <= 1e-4 * std::max(f_sup, 1e-300);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < lay.n_cells; ++i)
    if (lay.node_r[i] <= probe_radius) {
      lo = std::min(lo, prev.v[i]);
      hi = std::max(hi, prev.v[i]);
    }
  out.window_spread = (hi >= lo) ? hi - lo : 0.0;

  Field h(op.layout);
  for (int i = 0; i < lay.node_count(); ++i) h.v[i] = f.v[i] - prev.v[i];
  const double df = dirichlet_energy(op, f);
  const double du = dirichlet_energy(op, prev);
  const double dh = dirichlet_energy(op, h);
  out.orth_residual = std::abs(df - du - dh) / std::max(df, 1e-300);
  return out;
}

}  // namespace modpot
