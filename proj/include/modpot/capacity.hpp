#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpot/grid.hpp"
#include "modpot/manifold.hpp"
#include "modpot/operator.hpp"

// Condenser capacity by two estimators: the Dirichlet energy of the capacity
// potential and the flux leaving the inner plate, measured on the faces
// joining the plate to its first ring of free cells. On the divergence-form
// operator the two agree up to solver residual; a report is accepted only
// when they do.

namespace modpot {

struct Condenser {
  double r_inner = 0;
  double r_outer = 0;

  Condenser(double ri, double ro) : r_inner(ri), r_outer(ro) {
    if (!(ri > 0) || !(ro > ri))
      throw std::domain_error("Condenser: need 0 < r_inner < r_outer");
  }
};

struct CapacityReport {
  double cap_energy = 0;
  double cap_flux = 0;
  double agreement = 0;  // relative gap between the estimators
  bool valid = false;
  std::string note;
  Field potential;
  double h = 0;  // representative cell width

  static constexpr double agreement_tol = 1e-4;
};

/// Capacity of a node set held at 1 against every grounded boundary face of
/// the layout (the outer truncation, and the inner plate face when the grid
/// has one and it does not belong to K).
inline CapacityReport condenser_capacity(const Operator& op,
                                         const std::vector<int>& k_nodes) {
  const auto& lay = *op.layout;
  if (k_nodes.empty()) throw std::domain_error("condenser_capacity: empty plate");
  if (lay.outer_boundary.empty())
    throw std::domain_error("condenser_capacity: grid has no outer boundary");

  std::vector<char> in_k(lay.node_count(), 0);
  for (int n : k_nodes) in_k[n] = 1;
  for (int n : lay.outer_boundary)
    if (in_k[n]) throw std::domain_error("condenser_capacity: plate touches the outer boundary");
  std::vector<int> grounded = lay.outer_boundary;
  for (int n : lay.inner_boundary)
    if (!in_k[n]) grounded.push_back(n);

  CapacityReport rep;

  // gap width in cells along the radial direction
  std::set<double> free_radii;
  for (int i = 0; i < lay.n_cells; ++i)
    if (!in_k[i]) free_radii.insert(lay.node_r[i]);
  rep.h = lay.n_r > 1 ? lay.node_r[lay.cell_id(1, 0)] - lay.node_r[lay.cell_id(0, 0)] : 0;
  if (static_cast<int>(free_radii.size()) < 2) {
    rep.note = "annulus thinner than 2 cells";
    rep.valid = false;
    return rep;
  }

  BoundaryCondition bc;
  bc.add(k_nodes, 1.0);
  bc.add(grounded, 0.0);
  rep.potential = dirichlet_solve(op, bc);

  rep.cap_energy = dirichlet_energy(op, rep.potential);
  double flux = 0;
  for (const auto& f : op.faces) {
    if (in_k[f.a] && !in_k[f.b]) flux += f.t * (rep.potential.v[f.a] - rep.potential.v[f.b]);
    if (in_k[f.b] && !in_k[f.a]) flux += f.t * (rep.potential.v[f.b] - rep.potential.v[f.a]);
  }
  rep.cap_flux = flux;
  rep.agreement = std::abs(rep.cap_energy - rep.cap_flux) /
                  std::max({rep.cap_energy, rep.cap_flux, 1e-300});
  rep.valid = rep.agreement <= CapacityReport::agreement_tol;
  if (!rep.valid) rep.note = "energy/flux estimators disagree";
  return rep;
}

/// Radial condenser B(r_inner) inside B(r_outer) at the given resolution.
inline CapacityReport condenser_capacity(const Manifold& M, const Condenser& c,
                                         int cells) {
  if (!(c.r_outer <= M.r_max()))
    throw std::domain_error("condenser_capacity: condenser beyond r_max");
  if (cells < 1) throw std::domain_error("condenser_capacity: needs >= 1 cell");
  RadialGrid g = RadialGrid::uniform(c.r_inner, c.r_outer, cells);
  Operator op = assemble(M, g);
  // the inner plate is the inner boundary node; the solve sees it as a 1-node set
  CapacityReport rep = condenser_capacity(op, op.layout->inner_boundary);
  rep.h = (c.r_outer - c.r_inner) / cells;
  if (cells < 2) {
    rep.valid = false;
    rep.note = "annulus thinner than 2 cells";
  }
  return rep;
}

struct ExhaustionCapacity {
  std::vector<double> radii;
  std::vector<CapacityReport> levels;
  std::vector<double> fit_x;  // 1 / radial_integral(r_k, R_n)
  double limit = 0;           // asymptote of the fitted line
  bool is_bracket = false;    // fewer than 3 levels: [lo, hi] instead of a point
  double lo = 0, hi = 0;
  double x_infinity = 0;      // 0 when the radial integral diverges
};

/// Capacity of B(r_k) against an increasing ladder of truncations sharing one
/// cell layout. The sequence is nonincreasing by the Dirichlet principle; the
/// limit is read off a line fit of cap_n against 1/radial_integral(r_k, R_n),
/// evaluated at the infinite-exhaustion abscissa.
inline ExhaustionCapacity exhaustion_capacity(const Manifold& M, double r_k,
                                              const std::vector<double>& radii,
                                              double cells_per_octave = 24) {
  if (radii.size() < 2) throw std::domain_error("exhaustion_capacity: needs >= 2 radii");
  for (size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] < radii[i + 1]))
      throw std::domain_error("exhaustion_capacity: radii must increase");
  if (!(radii.front() > r_k))
    throw std::domain_error("exhaustion_capacity: first radius must exceed r_k");

  RadialGrid master = RadialGrid::geometric(r_k, radii.back(), cells_per_octave);
  ExhaustionCapacity out;
  for (double R : radii) {
    const int face = master.face_index_at(R);
    if (face < 2) throw std::domain_error("exhaustion_capacity: level below resolution");
    RadialGrid level = master.prefix(face);
    Operator op = assemble(M, level);
    CapacityReport rep = condenser_capacity(op, op.layout->inner_boundary);
    out.radii.push_back(level.faces.back());
    out.fit_x.push_back(1.0 / radial_integral(M, r_k, level.faces.back()));
    if (!out.levels.empty()) {
      const double prev = out.levels.back().cap_energy;
      if (rep.cap_energy > prev * (1.0 + 1e-6))
        throw std::runtime_error("exhaustion_capacity: sequence not nonincreasing");
    }
    out.levels.push_back(std::move(rep));
  }

  TailIntegral tail = radial_integral_tail(M, r_k);
  out.x_infinity = tail.divergent ? 0.0 : 1.0 / tail.value;

  const size_t n = out.levels.size();
  if (n < 3) {
    out.is_bracket = true;
    out.lo = 0;
    out.hi = out.levels.back().cap_energy;
    out.limit = out.levels.back().cap_energy;
    return out;
  }
  // least-squares line through the last three levels, read off at the
  // infinite-exhaustion abscissa
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double x_lo = out.fit_x[n - 3], x_hi = x_lo;
  for (size_t i = n - 3; i < n; ++i) {
    const double x = out.fit_x[i], y = out.levels[i].cap_energy;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
  }
  const double det = 3 * sxx - sx * sx;
  if (x_hi - x_lo <= 1e-9 + 1e-6 * std::abs(sx / 3) || std::abs(det) < 1e-30) {
    // abscissas saturated: the ladder itself has converged
    out.limit = out.levels.back().cap_energy;
  } else {
    const double b = (3 * sxy - sx * sy) / det;
    const double a = (sy - b * sx) / 3;
    out.limit = std::max(0.0, a + b * out.x_infinity);
  }
  return out;
}

enum class ManifoldType { Parabolic, Hyperbolic, Inconclusive };

inline std::string to_string(ManifoldType t) {
  switch (t) {
    case ManifoldType::Parabolic: return "parabolic";
    case ManifoldType::Hyperbolic: return "hyperbolic";
    case ManifoldType::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ClassifyResult {
  ManifoldType verdict = ManifoldType::Inconclusive;
  double cap_limit = 0;
  double cap_first = 0;
  bool numeric_parabolic = false;
  bool quadrature_divergent = false;
  ExhaustionCapacity exhaustion;
};

/// Dual-test classification: the extrapolated capacity limit and the
/// divergence of the radial resistance integral must agree, otherwise the
/// verdict is inconclusive rather than a guess.
inline ClassifyResult classify(const Manifold& M, double r_k,
                               const std::vector<double>& radii,
                               double cells_per_octave = 24) {
  ClassifyResult res;
  res.exhaustion = exhaustion_capacity(M, r_k, radii, cells_per_octave);
  res.cap_limit = res.exhaustion.limit;
  res.cap_first = res.exhaustion.levels.front().cap_energy;
  res.numeric_parabolic = res.cap_limit < 1e-3 * res.cap_first;
  res.quadrature_divergent = radial_integral_diverges(M, r_k);
  if (res.numeric_parabolic && res.quadrature_divergent)
    res.verdict = ManifoldType::Parabolic;
  else if (!res.numeric_parabolic && !res.quadrature_divergent)
    res.verdict = ManifoldType::Hyperbolic;
  else
    res.verdict = ManifoldType::Inconclusive;
  return res;
}

}  // namespace modpot
