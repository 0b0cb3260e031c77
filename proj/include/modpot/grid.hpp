#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "modpot/manifold.hpp"

namespace modpot {

// Cell-centered radial grid. faces[0] may sit at 0 (pole face, zero flux);
// nodes never do.
struct RadialGrid {
  std::vector<double> faces;    // n+1, strictly increasing, faces[0] >= 0
  std::vector<double> centers;  // n cell midpoints

  int cells() const { return static_cast<int>(centers.size()); }

  static RadialGrid from_faces(std::vector<double> f) {
    if (f.size() < 2) throw std::invalid_argument("RadialGrid: needs >= 1 cell");
    for (size_t i = 0; i + 1 < f.size(); ++i)
      if (!(f[i] < f[i + 1])) throw std::invalid_argument("RadialGrid: faces must increase");
    if (f.front() < 0) throw std::invalid_argument("RadialGrid: negative face");
    RadialGrid g;
    g.centers.resize(f.size() - 1);
    for (size_t i = 0; i + 1 < f.size(); ++i) g.centers[i] = 0.5 * (f[i] + f[i + 1]);
    g.faces = std::move(f);
    return g;
  }

  static RadialGrid uniform(double r_in, double r_out, int cells) {
    if (cells < 1 || !(r_out > r_in)) throw std::invalid_argument("RadialGrid::uniform");
    std::vector<double> f(cells + 1);
    for (int i = 0; i <= cells; ++i)
      f[i] = r_in + (r_out - r_in) * (static_cast<double>(i) / cells);
    f.front() = r_in;
    f.back() = r_out;
    return from_faces(std::move(f));
  }

  /// Log-spaced faces from r_in to r_out; the count is rounded so r_out lands
  /// exactly on the last face.
  static RadialGrid geometric(double r_in, double r_out, double cells_per_octave) {
    if (!(r_in > 0) || !(r_out > r_in) || !(cells_per_octave > 0))
      throw std::invalid_argument("RadialGrid::geometric");
    const double octaves = std::log2(r_out / r_in);
    const int n = std::max(1, static_cast<int>(std::lround(octaves * cells_per_octave)));
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i)
      f[i] = r_in * std::pow(r_out / r_in, static_cast<double>(i) / n);
    f.front() = r_in;
    f.back() = r_out;
    return from_faces(std::move(f));
  }

  /// Disk grid: pole face at 0, one cell [0, r_first], then log-spaced faces.
  static RadialGrid disk(double r_first, double r_out, double cells_per_octave) {
    RadialGrid outer = geometric(r_first, r_out, cells_per_octave);
    std::vector<double> f;
    f.reserve(outer.faces.size() + 1);
    f.push_back(0.0);
    f.insert(f.end(), outer.faces.begin(), outer.faces.end());
    return from_faces(std::move(f));
  }

  /// First k cells (exhaustion level sharing this grid's cell layout).
  RadialGrid prefix(int k) const {
    if (k < 1 || k > cells()) throw std::invalid_argument("RadialGrid::prefix");
    return from_faces(std::vector<double>(faces.begin(), faces.begin() + k + 1));
  }

  /// Index of the face closest to r.
  int face_index_at(double r) const {
    auto it = std::lower_bound(faces.begin(), faces.end(), r);
    if (it == faces.end()) return static_cast<int>(faces.size()) - 1;
    if (it == faces.begin()) return 0;
    const auto i = static_cast<int>(it - faces.begin());
    return (std::abs(faces[i] - r) < std::abs(faces[i - 1] - r)) ? i : i - 1;
  }
};

// Uniform angular resolution; meaningful only on dim-2 manifolds.
struct PolarGrid {
  RadialGrid radial;
  int n_theta = 8;

  PolarGrid(RadialGrid r, int nt) : radial(std::move(r)), n_theta(nt) {
    if (n_theta < 8) throw std::invalid_argument("PolarGrid: n_theta must be >= 8");
  }
  double dtheta() const { return 2 * pi / n_theta; }
  double theta(int j) const { return (j + 0.5) * dtheta(); }
};

// Node enumeration of a discretized domain: cells first, then synthetic
// boundary nodes sitting on the inner/outer boundary faces.
struct Layout {
  int m = 2;
  bool polar = false;
  int n_r = 0;
  int n_theta = 1;
  std::vector<double> node_r;
  std::vector<double> node_theta;
  std::vector<double> volume;  // 0 on boundary nodes
  int n_cells = 0;
  std::vector<int> inner_boundary;  // node ids (empty when the pole face is at 0)
  std::vector<int> outer_boundary;

  int node_count() const { return static_cast<int>(node_r.size()); }
  bool is_boundary(int n) const { return n >= n_cells; }

  int cell_id(int i, int j = 0) const { return polar ? i * n_theta + j : i; }

  std::vector<int> boundary() const {
    std::vector<int> b = inner_boundary;
    b.insert(b.end(), outer_boundary.begin(), outer_boundary.end());
    return b;
  }

  int nearest_cell(double r, double theta = 0) const {
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_cells; ++i) {
      double d = std::abs(node_r[i] - r);
      if (polar) {
        double dt = std::remainder(node_theta[i] - theta, 2 * pi);
        d += node_r[i] * std::abs(dt);
      }
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    return best;
  }
};

struct Field {
  std::shared_ptr<const Layout> layout;
  std::vector<double> v;

  Field() = default;
  explicit Field(std::shared_ptr<const Layout> l, double fill = 0)
      : layout(std::move(l)), v(layout->node_count(), fill) {}

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
  int size() const { return static_cast<int>(v.size()); }
};

}  // namespace modpot
