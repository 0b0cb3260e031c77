#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpot/capacity.hpp"
#include "modpot/grid.hpp"
#include "modpot/manifold.hpp"
#include "modpot/operator.hpp"

// Green kernels with unit inward flux. The discrete source is 1/cell-volume
// at the pole cell (so S g = e_pole); conservation makes the flux through any
// node contour enclosing the pole equal -1 up to solver residual, and the
// kernel is renormalized if the measured value drifts.

namespace modpot {

struct GreenKernel {
  Field values;
  int pole = -1;
  double flux_scale = 1.0;    // renormalization applied to hit unit flux
  double domain_radius = 0;   // outer truncation
};

/// Linear interpolation of a radial nodal profile at radius r, spanning the
/// boundary nodes on the domain faces when present.
inline double radial_value_at(const Layout& lay, const std::vector<double>& u, double r) {
  if (lay.polar) throw std::invalid_argument("radial_value_at: radial layouts only");
  std::vector<int> order;
  order.reserve(lay.node_count());
  for (int b : lay.inner_boundary) order.push_back(b);
  for (int i = 0; i < lay.n_cells; ++i) order.push_back(i);
  for (int b : lay.outer_boundary) order.push_back(b);
  size_t hi = 0;
  while (hi < order.size() && lay.node_r[order[hi]] < r) ++hi;
  if (hi == 0) return u[order.front()];
  if (hi >= order.size()) return u[order.back()];
  const double r0 = lay.node_r[order[hi - 1]], r1 = lay.node_r[order[hi]];
  const double w = (r - r0) / (r1 - r0);
  return (1 - w) * u[order[hi - 1]] + w * u[order[hi]];
}

/// Signed flux sum over the faces crossing the sphere r = rho: the discrete
/// version of the boundary integral of *du, positive outward.
inline double contour_flux(const Operator& op, const std::vector<double>& u, double rho) {
  const auto& lay = *op.layout;
  double flux = 0;
  for (const auto& f : op.faces) {
    const double ra = lay.node_r[f.a], rb = lay.node_r[f.b];
    if (ra < rho && rho <= rb) flux += f.t * (u[f.b] - u[f.a]);
    else if (rb < rho && rho <= ra) flux += f.t * (u[f.a] - u[f.b]);
  }
  return flux;
}

inline GreenKernel green_on_domain(const Operator& op, int pole,
                                   const Field* warm = nullptr) {
  const auto& lay = *op.layout;
  if (pole < 0 || pole >= lay.n_cells)
    throw std::domain_error("green_on_domain: pole must be an interior cell");
  if (lay.outer_boundary.empty())
    throw std::domain_error("green_on_domain: domain has no outer boundary");

  BoundaryCondition bc;
  bc.add(lay.inner_boundary, 0.0);
  bc.add(lay.outer_boundary, 0.0);

  GreenKernel k;
  k.pole = pole;
  k.domain_radius = lay.node_r[lay.outer_boundary.front()];
  k.values = poisson_solve(op, bc, {{pole, 1.0}}, nullptr, warm);

  // measured inward flux through a contour tight around the pole cell
  double raw = 0;
  for (const auto& f : op.faces) {
    if (f.a == pole) raw += f.t * (k.values.v[f.b] - k.values.v[f.a]);
    if (f.b == pole) raw += f.t * (k.values.v[f.a] - k.values.v[f.b]);
  }
  if (!(raw < 0) || std::abs(-raw - 1.0) > 1e-3)
    throw SolveError("green_on_domain: pole flux off unit by more than 1e-3");
  k.flux_scale = 1.0 / (-raw);
  if (k.flux_scale != 1.0)
    for (double& v : k.values.v) v *= k.flux_scale;
  return k;
}

enum class ExhaustionVerdict { Converges, Diverges, Undecided };

inline std::string to_string(ExhaustionVerdict v) {
  switch (v) {
    case ExhaustionVerdict::Converges: return "converges";
    case ExhaustionVerdict::Diverges: return "diverges";
    case ExhaustionVerdict::Undecided: return "undecided";
  }
  return "?";
}

struct GreenExhaustion {
  std::vector<double> radii;
  std::vector<double> probe_values;
  std::vector<double> sup_changes;  // between consecutive levels, shared cells
  GreenKernel last;
  ExhaustionVerdict verdict = ExhaustionVerdict::Undecided;
  int probe_cell = -1;
};

/// Kernels on an increasing ladder of truncations sharing one cell layout,
/// pole at the manifold pole (innermost cell). The sequence is nondecreasing
/// pointwise; it converges when the sup change dies out (or the projected
/// geometric tail does) and diverges when the probe increments fail to decay
/// or the probe value passes the guard.
inline GreenExhaustion green_exhaustion(const Manifold& M, const RadialGrid& master,
                                        const std::vector<double>& radii,
                                        double probe_r, double guard = 1e6) {
  if (radii.size() < 3) throw std::domain_error("green_exhaustion: needs >= 3 radii");
  for (size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] < radii[i + 1]))
      throw std::domain_error("green_exhaustion: radii must increase");
  if (!(master.faces.front() == 0))
    throw std::domain_error("green_exhaustion: master grid must include the pole cell");
  if (!(probe_r < radii.front()))
    throw std::domain_error("green_exhaustion: probe outside first level");

  GreenExhaustion out;
  std::vector<double> prev;
  for (double R : radii) {
    const int face = master.face_index_at(R);
    RadialGrid level = master.prefix(face);
    Operator op = assemble(M, level);
    Field warm(op.layout, 0.0);
    if (!prev.empty())
      for (size_t i = 0; i < std::min(prev.size(), warm.v.size()); ++i)
        if (static_cast<int>(i) < op.layout->n_cells) warm.v[i] = prev[i];
    GreenKernel k = green_on_domain(op, 0, prev.empty() ? nullptr : &warm);

    if (out.probe_cell < 0) out.probe_cell = op.layout->nearest_cell(probe_r);
    if (!prev.empty()) {
      double sup = 0;
      const int shared = std::min(static_cast<int>(prev.size()), op.layout->n_cells);
      for (int i = 0; i < shared; ++i) {
        const double d = k.values.v[i] - prev[i];
        if (d < -1e-8) throw std::runtime_error("green_exhaustion: monotonicity violated");
        sup = std::max(sup, d);
      }
      out.sup_changes.push_back(sup);
    }
    prev.assign(k.values.v.begin(), k.values.v.begin() + op.layout->n_cells);
    out.radii.push_back(level.faces.back());
    out.probe_values.push_back(k.values.v[out.probe_cell]);
    out.last = std::move(k);
  }

  const size_t n = out.probe_values.size();
  const double last_probe = out.probe_values.back();
  const double d_last = out.probe_values[n - 1] - out.probe_values[n - 2];
  const double d_prev = out.probe_values[n - 2] - out.probe_values[n - 3];
  if (last_probe > guard) {
    out.verdict = ExhaustionVerdict::Diverges;
  } else if (out.sup_changes.back() <= 1e-6) {
    out.verdict = ExhaustionVerdict::Converges;
  } else if (d_prev > 0 && d_last / d_prev >= 0.8) {
    out.verdict = ExhaustionVerdict::Diverges;
  } else if (d_prev > 0 && d_last / d_prev < 0.8 &&
             d_last * (d_last / d_prev) / (1.0 - d_last / d_prev) <= 1e-6) {
    out.verdict = ExhaustionVerdict::Converges;
  }
  return out;
}

/// Relative asymmetry |G(p,q) - G(q,p)| / max of the two.
inline double green_symmetry_check(const Operator& op, int p, int q) {
  if (p == q) throw std::domain_error("green_symmetry_check: needs p != q");
  GreenKernel gp = green_on_domain(op, p);
  GreenKernel gq = green_on_domain(op, q);
  const double a = gp.values.v[q], b = gq.values.v[p];
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

struct SandwichResult {
  double g_min = 0;       // min of the kernel on the plate's boundary ring
  double g_max = 0;
  double inv_cap = 0;     // 1 / Cap(K, domain)
  bool holds = false;
  CapacityReport capacity;
};

/// min G <= 1/Cap <= max G over the inner-plate boundary ring, pole inside K.
inline SandwichResult cap_green_sandwich(const Operator& op,
                                         const std::vector<int>& k_nodes, int pole) {
  const auto& lay = *op.layout;
  std::vector<char> in_k(lay.node_count(), 0);
  for (int n : k_nodes) in_k[n] = 1;
  if (!in_k[pole]) throw std::domain_error("cap_green_sandwich: pole must lie in K");

  SandwichResult res;
  res.capacity = condenser_capacity(op, k_nodes);
  if (!res.capacity.valid)
    throw std::runtime_error("cap_green_sandwich: capacity report invalid (" +
                             res.capacity.note + ")");
  res.inv_cap = 1.0 / res.capacity.cap_energy;

  GreenKernel g = green_on_domain(op, pole);
  // ring = plate nodes seen by the free region
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& f : op.faces) {
    int plate = -1;
    if (in_k[f.a] && !in_k[f.b] && !lay.is_boundary(f.b)) plate = f.a;
    if (in_k[f.b] && !in_k[f.a] && !lay.is_boundary(f.a)) plate = f.b;
    if (plate >= 0) {
      lo = std::min(lo, g.values.v[plate]);
      hi = std::max(hi, g.values.v[plate]);
    }
  }
  res.g_min = lo;
  res.g_max = hi;
  const double slack = 1e-6 * res.g_max;
  res.holds = (res.g_min - slack <= res.inv_cap) && (res.inv_cap <= res.g_max + slack);
  return res;
}

}  // namespace modpot
