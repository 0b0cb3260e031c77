#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpot/green.hpp"
#include "modpot/grid.hpp"
#include "modpot/operator.hpp"

// Discrete measures on node sets, the Green-energy bilinear form, the
// energy-minimizing measure on the probability simplex, harmonic measure,
// and the n-point extremal quantities (transfinite diameter, Chebyshev
// constant) with brute-force oracles.

namespace modpot {

struct DiscreteMeasure {
  std::vector<int> support;  // node ids, distinct
  std::vector<double> w;     // nonnegative, summing to mass
  double mass = 1.0;
  bool degenerate = false;

  void validate() const {
    if (support.size() != w.size())
      throw std::invalid_argument("DiscreteMeasure: support/weight size mismatch");
    double s = 0;
    for (double x : w) {
      if (x < 0) throw std::invalid_argument("DiscreteMeasure: negative weight");
      s += x;
    }
    if (std::abs(s - mass) > 1e-12 * std::max(1.0, mass))
      throw std::invalid_argument("DiscreteMeasure: weights do not sum to mass");
  }
};

// Symmetric matrix of kernel values over a candidate node set. The diagonal
// holds the self-cell regularized value: the kernel with pole at that node,
// read at the node's own cell average. Pairwise sums for the n-point
// quantities never touch it.
struct KernelMatrix {
  std::vector<int> nodes;
  std::vector<double> g;       // row-major n x n, symmetric
  std::vector<Field> columns;  // kernel field per node when retained
  double max_asymmetry = 0;    // before symmetrization
  double min_simplex_eigenvalue = 0;
  bool psd_on_simplex = true;

  int size() const { return static_cast<int>(nodes.size()); }
  double at(int i, int j) const { return g[static_cast<size_t>(i) * nodes.size() + j]; }
  int row_of(int node) const {
    for (int i = 0; i < size(); ++i)
      if (nodes[i] == node) return i;
    throw std::invalid_argument("KernelMatrix: node outside candidate set");
  }
};

namespace detail {

// smallest eigenvalue of the kernel matrix restricted to mean-zero directions
inline double simplex_min_eigenvalue(const KernelMatrix& km) {
  const int n = km.size();
  if (n == 1) return 0;
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    // project, multiply, project
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) p[i] = x[i] - mean;
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) y[i] += km.at(i, j) * p[j];
    mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    for (int i = 0; i < n; ++i) y[i] -= mean;
  };
  auto power = [&](double shift, int iters) {
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * ((i * 2654435761u) % 97);
    double lambda = 0;
    for (int it = 0; it < iters; ++it) {
      apply(x, y);
      for (int i = 0; i < n; ++i) y[i] = shift * x[i] - y[i];
      double norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
      if (norm < 1e-300) return 0.0;
      for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
      apply(x, y);
      lambda = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    }
    return lambda;
  };
  double row_max = 0;
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += std::abs(km.at(i, j));
    row_max = std::max(row_max, s);
  }
  return power(row_max, 300);  // eigenvalue of (shift I - PGP) maximal at min of PGP
}

}  // namespace detail

/// Recompute the positive-semidefiniteness probe on mean-zero directions and
/// set the warning flag accordingly.
inline void refresh_psd_check(KernelMatrix& km) {
  km.min_simplex_eigenvalue = detail::simplex_min_eigenvalue(km);
  double scale = 0;
  for (double v : km.g) scale = std::max(scale, std::abs(v));
  km.psd_on_simplex = km.min_simplex_eigenvalue >= -1e-8 * std::max(scale, 1e-300);
}

/// Kernel matrix over a node set: one unit-flux kernel solve per node, zero
/// data on every boundary face of the layout.
inline KernelMatrix kernel_matrix(const Operator& op, const std::vector<int>& nodes,
                                  bool keep_fields = false) {
  KernelMatrix km;
  km.nodes = nodes;
  const int n = km.size();
  km.g.assign(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    GreenKernel ker = green_on_domain(op, nodes[k]);
    for (int i = 0; i < n; ++i) km.g[static_cast<size_t>(i) * n + k] = ker.values.v[nodes[i]];
    if (keep_fields) km.columns.push_back(ker.values);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = km.g[static_cast<size_t>(i) * n + j];
      const double b = km.g[static_cast<size_t>(j) * n + i];
      km.max_asymmetry =
          std::max(km.max_asymmetry, std::abs(a - b) / std::max({a, b, 1e-300}));
      const double m = 0.5 * (a + b);
      km.g[static_cast<size_t>(i) * n + j] = m;
      km.g[static_cast<size_t>(j) * n + i] = m;
    }
  refresh_psd_check(km);
  return km;
}

/// Mutual energy sum_{ij} mu_i nu_j G(x_i, x_j); symmetric in its arguments.
inline double energy(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     const KernelMatrix& km) {
  mu.validate();
  nu.validate();
  double e = 0;
  for (size_t a = 0; a < mu.support.size(); ++a) {
    if (mu.w[a] == 0) continue;
    const int i = km.row_of(mu.support[a]);
    for (size_t b = 0; b < nu.support.size(); ++b) {
      if (nu.w[b] == 0) continue;
      e += mu.w[a] * nu.w[b] * km.at(i, km.row_of(nu.support[b]));
    }
  }
  return e;
}

namespace detail {

// Euclidean projection onto {w >= 0, sum w = 1} (sort-based).
inline void project_simplex(std::vector<double>& w) {
  const int n = static_cast<int>(w.size());
  std::vector<double> u(w);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0, theta = 0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0) {
      rho = i;
      theta = t;
    }
  }
  (void)rho;
  for (double& x : w) x = std::max(0.0, x - theta);
}

}  // namespace detail

struct EquilibriumResult {
  DiscreteMeasure nu;
  double eps = 0;  // minimal energy
  bool converged = false;
  int iterations = 0;
  double projected_gradient = 0;
};

/// Minimize the quadratic energy over the probability simplex by projected
/// gradient with Armijo backtracking, uniform start. Stops when the
/// fixed-step gradient-projection residual falls below 1e-8.
inline EquilibriumResult equilibrium_measure(const KernelMatrix& km,
                                             int max_iterations = 100000) {
  const int n = km.size();
  if (n == 0) throw std::invalid_argument("equilibrium_measure: empty node set");

  double gmax = 0;
  for (double v : km.g) gmax = std::max(gmax, std::abs(v));
  const double step0 = 1.0 / std::max(2.0 * gmax * n, 1e-300);

  std::vector<double> w(n, 1.0 / n), grad(n), trial(n);
  auto value_grad = [&](const std::vector<double>& x, std::vector<double>& g) {
    double e = 0;
    for (int i = 0; i < n; ++i) {
      double row = 0;
      for (int j = 0; j < n; ++j) row += km.at(i, j) * x[j];
      g[i] = 2 * row;
      e += x[i] * row;
    }
    return e;
  };

  EquilibriumResult res;
  double e = value_grad(w, grad);
  double alpha = 1.0 / std::max(2.0 * gmax, 1e-300);
  for (int it = 1; it <= max_iterations; ++it) {
    // residual with the fixed reference step
    double pg = 0;
    {
      for (int i = 0; i < n; ++i) trial[i] = w[i] - step0 * grad[i];
      detail::project_simplex(trial);
      for (int i = 0; i < n; ++i) pg += (trial[i] - w[i]) * (trial[i] - w[i]);
      pg = std::sqrt(pg) / step0;
    }
    res.projected_gradient = pg;
    res.iterations = it;
    if (pg <= 1e-8) {
      res.converged = true;
      break;
    }
    // Armijo backtracking on the projected step; e tracks the energy of the
    // accepted iterate only
    bool accepted = false;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      for (int i = 0; i < n; ++i) trial[i] = w[i] - alpha * grad[i];
      detail::project_simplex(trial);
      double decr = 0;
      for (int i = 0; i < n; ++i) decr += grad[i] * (trial[i] - w[i]);
      std::vector<double> gt(n);
      const double e_new = value_grad(trial, gt);
      if (e_new <= e + 1e-4 * decr || decr >= 0) {
        w = trial;
        grad = gt;
        e = e_new;
        accepted = true;
      } else {
        alpha *= 0.5;
      }
    }
    if (accepted) alpha *= 1.3;  // cautious step growth
  }

  res.nu.support = km.nodes;
  res.nu.w = w;
  res.nu.mass = 1.0;
  res.eps = e;
  return res;
}

struct PotentialCheckReport {
  double eps = 0;
  double max_potential = 0;          // max of G_nu over all sampled nodes
  double max_on_support = 0;         // max of G_nu on the support of nu
  double max_match_error = 0;        // max |G_nu - eps*u| / eps at probes
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Check the equilibrium potential G_nu = sum_i nu_i G(., x_i) against the
/// capacity potential u of the same plate: bounded by eps everywhere sampled
/// and equal to eps*u off the plate. Failures are listed, not thrown.
inline PotentialCheckReport equilibrium_potential_check(
    const DiscreteMeasure& nu, const KernelMatrix& km, const Field& u,
    const Operator& op, double eps, const std::vector<int>& probes) {
  if (km.columns.empty())
    throw std::invalid_argument("equilibrium_potential_check: kernel fields not retained");
  PotentialCheckReport rep;
  rep.eps = eps;

  Field pot(op.layout, 0.0);
  for (size_t a = 0; a < nu.support.size(); ++a) {
    if (nu.w[a] == 0) continue;
    const int row = km.row_of(nu.support[a]);
    for (int i = 0; i < pot.size(); ++i) pot.v[i] += nu.w[a] * km.columns[row].v[i];
  }

  for (int i = 0; i < pot.size(); ++i) rep.max_potential = std::max(rep.max_potential, pot.v[i]);
  for (int node : nu.support) rep.max_on_support = std::max(rep.max_on_support, pot.v[node]);

  if (rep.max_on_support > eps * (1.0 + 1e-2))
    rep.failures.push_back("potential exceeds eps on the support");
  if (rep.max_potential > eps * (1.0 + 1e-2))
    rep.failures.push_back("potential exceeds eps off the support");

  for (int p : probes) {
    const double err = std::abs(pot.v[p] - eps * u.v[p]) / std::max(eps, 1e-300);
    rep.max_match_error = std::max(rep.max_match_error, err);
  }
  if (rep.max_match_error > 0.02)
    rep.failures.push_back("potential does not match eps * capacity potential at probes");
  return rep;
}

/// Boundary weights representing the Dirichlet solution value at z0, obtained
/// from one adjoint solve: S w = e_z0 on the free nodes, then xi_b = sum of
/// face conductances into b weighted by w.
inline DiscreteMeasure harmonic_measure(const Operator& op,
                                        const std::vector<int>& boundary, int z0) {
  const auto& lay = *op.layout;
  DiscreteMeasure xi;
  xi.support = boundary;
  xi.w.assign(boundary.size(), 0.0);
  for (size_t k = 0; k < boundary.size(); ++k) {
    if (boundary[k] == z0) {
      xi.w.assign(boundary.size(), 0.0);
      xi.w[k] = 1.0;
      xi.degenerate = true;
      return xi;
    }
  }

  BoundaryCondition bc;
  bc.add(boundary, 0.0);
  Field w = poisson_solve(op, bc, {{z0, 1.0}});

  std::vector<char> is_b(lay.node_count(), 0);
  std::vector<int> row(lay.node_count(), -1);
  for (size_t k = 0; k < boundary.size(); ++k) {
    is_b[boundary[k]] = 1;
    row[boundary[k]] = static_cast<int>(k);
  }
  for (const auto& f : op.faces) {
    if (is_b[f.a] && !is_b[f.b]) xi.w[row[f.a]] += f.t * w.v[f.b];
    if (is_b[f.b] && !is_b[f.a]) xi.w[row[f.b]] += f.t * w.v[f.a];
  }
  double total = std::accumulate(xi.w.begin(), xi.w.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-8)
    throw SolveError("harmonic_measure: weights sum to " + std::to_string(total));
  xi.mass = total;
  return xi;
}

/// FNV-1a key over manifold, grid layout and candidate nodes: identifies a
/// kernel matrix for the binary sidecar cache.
inline unsigned long long kernel_cache_key(const Manifold& M, const Layout& lay,
                                           const std::vector<int>& nodes) {
  unsigned long long h = 1469598103934665603ull;
  auto mix = [&h](unsigned long long v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  auto mixd = [&](double d) {
    unsigned long long bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    mix(bits);
  };
  mix(static_cast<unsigned long long>(M.dim()));
  mix(static_cast<unsigned long long>(M.kind()));
  mixd(M.r0());
  mixd(M.r_max());
  for (double c : M.poly()) mixd(c);
  mix(static_cast<unsigned long long>(lay.polar));
  mix(static_cast<unsigned long long>(lay.n_theta));
  for (int i = 0; i < lay.node_count(); ++i) mixd(lay.node_r[i]);
  for (int n : nodes) mix(static_cast<unsigned long long>(n));
  return h;
}

inline void save_kernel_matrix(const std::string& path, const KernelMatrix& km,
                               unsigned long long key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write kernel cache `" + path + "`");
  const char magic[8] = {'m', 'p', 'k', 'm', '0', '0', '0', '1'};
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&key), 8);
  const int n = km.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(km.nodes.data()), n * sizeof(int));
  out.write(reinterpret_cast<const char*>(km.g.data()),
            static_cast<std::streamsize>(km.g.size() * sizeof(double)));
}

/// Load a cached kernel matrix; empty optional-style: size 0 when the file is
/// absent or keyed differently. Cached matrices carry no kernel fields.
inline bool load_kernel_matrix(const std::string& path, unsigned long long key,
                               KernelMatrix& km) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  unsigned long long file_key = 0;
  int n = 0;
  in.read(magic, 8);
  if (std::string(magic, 8) != "mpkm0001") return false;
  in.read(reinterpret_cast<char*>(&file_key), 8);
  if (file_key != key) return false;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (n <= 0 || n > 1 << 20) return false;
  km.nodes.resize(n);
  km.g.resize(static_cast<size_t>(n) * n);
  in.read(reinterpret_cast<char*>(km.nodes.data()), n * sizeof(int));
  in.read(reinterpret_cast<char*>(km.g.data()),
          static_cast<std::streamsize>(km.g.size() * sizeof(double)));
  if (!in) return false;
  km.columns.clear();
  km.max_asymmetry = 0;
  refresh_psd_check(km);
  return true;
}

enum class SearchMode { Brute, Exchange, Greedy };

struct ConfigurationValue {
  double value = 0;          // rho_n or tau_n
  std::vector<int> points;   // rows into the kernel matrix
  bool exact = false;        // brute-force enumeration
};

namespace detail {

inline double pair_sum(const KernelMatrix& km, const std::vector<int>& pts) {
  double s = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) s += km.at(pts[i], pts[j]);
  return s;
}

inline double binom2(int n) { return 0.5 * n * (n - 1); }

inline double count_combinations(int n, int k) {
  double c = 1;
  for (int i = 0; i < k; ++i) c *= static_cast<double>(n - i) / (i + 1);
  return c;
}

}  // namespace detail

/// n-point minimal normalized pairwise energy over the candidate set.
/// Brute mode enumerates subsets (the oracle); exchange mode runs greedy
/// spreading followed by best-improvement 1-swaps.
inline ConfigurationValue transfinite_diameter(const KernelMatrix& km, int n,
                                               SearchMode mode) {
  const int N = km.size();
  if (n < 2) throw std::invalid_argument("transfinite_diameter: needs n >= 2");
  if (N < n) throw std::invalid_argument("transfinite_diameter: candidate set smaller than n");

  ConfigurationValue out;
  if (mode == SearchMode::Brute) {
    if (detail::count_combinations(N, n) > 1e6)
      throw std::invalid_argument("transfinite_diameter: brute enumeration too large");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_pts;
    while (true) {
      const double s = detail::pair_sum(km, idx);
      if (s < best) {
        best = s;
        best_pts = idx;
      }
      int i = n - 1;
      while (i >= 0 && idx[i] == N - n + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    out.value = best / detail::binom2(n);
    out.points = best_pts;
    out.exact = true;
    return out;
  }

  if (mode != SearchMode::Exchange)
    throw std::invalid_argument("transfinite_diameter: mode must be brute or exchange");

  // greedy far-apart start: cheapest pair, then cheapest additions
  std::vector<char> used(N, 0);
  std::vector<int> sel;
  {
    double best = std::numeric_limits<double>::infinity();
    int bi = 0, bj = 1;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        if (km.at(i, j) < best) {
          best = km.at(i, j);
          bi = i;
          bj = j;
        }
    sel = {bi, bj};
    used[bi] = used[bj] = 1;
  }
  while (static_cast<int>(sel.size()) < n) {
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int c = 0; c < N; ++c) {
      if (used[c]) continue;
      double add = 0;
      for (int s : sel) add += km.at(c, s);
      if (add < best) {
        best = add;
        pick = c;
      }
    }
    sel.push_back(pick);
    used[pick] = 1;
  }

  double total = detail::pair_sum(km, sel);
  for (int swaps = 0; swaps < 10000; ++swaps) {
    double best_delta = -1e-14 * std::max(1.0, std::abs(total));
    int best_pos = -1, best_cand = -1;
    for (size_t pos = 0; pos < sel.size(); ++pos) {
      double attach_old = 0;
      for (size_t q = 0; q < sel.size(); ++q)
        if (q != pos) attach_old += km.at(sel[pos], sel[q]);
      for (int c = 0; c < N; ++c) {
        if (used[c]) continue;
        double attach_new = 0;
        for (size_t q = 0; q < sel.size(); ++q)
          if (q != pos) attach_new += km.at(c, sel[q]);
        const double delta = attach_new - attach_old;
        if (delta < best_delta) {
          best_delta = delta;
          best_pos = static_cast<int>(pos);
          best_cand = c;
        }
      }
    }
    if (best_pos < 0) break;
    used[sel[best_pos]] = 0;
    used[best_cand] = 1;
    sel[best_pos] = best_cand;
    total += best_delta;
  }
  std::sort(sel.begin(), sel.end());
  out.value = detail::pair_sum(km, sel) / detail::binom2(n);
  out.points = sel;
  return out;
}

/// n-point maximin normalized kernel sum. Brute mode enumerates multisets
/// (the oracle; repeated points are allowed, matching superadditivity of the
/// continuum quantity); greedy mode picks sequential near-minimizers, ties to
/// the lowest row. The inner minimum runs over candidates off the
/// configuration, so the kernel diagonal is never read.
inline ConfigurationValue chebyshev_constant(const KernelMatrix& km, int n,
                                             SearchMode mode) {
  const int N = km.size();
  if (n < 1) throw std::invalid_argument("chebyshev_constant: needs n >= 1");
  if (N < 1) throw std::invalid_argument("chebyshev_constant: empty candidate set");

  auto config_value = [&](const std::vector<int>& pts) {
    std::vector<char> in(N, 0);
    for (int p : pts) in[p] = 1;
    double lo = std::numeric_limits<double>::infinity();
    for (int c = 0; c < N; ++c) {
      if (in[c]) continue;
      double s = 0;
      for (int p : pts) s += km.at(c, p);
      lo = std::min(lo, s);
    }
    return lo;  // +inf when the configuration covers the whole set
  };

  ConfigurationValue out;
  if (mode == SearchMode::Brute) {
    if (detail::count_combinations(N + n - 1, n) > 1e6)
      throw std::invalid_argument("chebyshev_constant: brute enumeration too large");
    std::vector<int> idx(n, 0);  // nondecreasing rows = multiset
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_pts;
    while (true) {
      const double v = config_value(idx);
      if (v > best) {
        best = v;
        best_pts = idx;
      }
      int i = n - 1;
      while (i >= 0 && idx[i] == N - 1) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < n; ++j) idx[j] = idx[i];
    }
    out.value = best / n;
    out.points = best_pts;
    out.exact = true;
    return out;
  }

  if (mode != SearchMode::Greedy)
    throw std::invalid_argument("chebyshev_constant: mode must be brute or greedy");

  std::vector<int> pts = {0};
  std::vector<char> in(N, 0);
  in[0] = 1;
  while (static_cast<int>(pts.size()) < n) {
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int c = 0; c < N; ++c) {
      if (in[c]) continue;
      double s = 0;
      for (int p : pts) s += km.at(c, p);
      if (s < best) {
        best = s;
        pick = c;
      }
    }
    if (pick < 0) break;  // configuration covers the candidate set
    pts.push_back(pick);
    in[pick] = 1;
  }
  out.value = config_value(pts) / n;
  out.points = pts;
  return out;
}

}  // namespace modpot
