#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

// Rotationally symmetric model manifolds ds^2 = dr^2 + sigma(r)^2 dtheta^2
// and the radial quadrature they induce.

namespace modpot {

inline constexpr double pi = 3.14159265358979323846;

/// Surface measure of the unit (m-1)-sphere: 2 pi^{m/2} / Gamma(m/2).
inline double unit_sphere_area(int m) {
  if (m < 2) throw std::invalid_argument("unit_sphere_area: dim must be >= 2");
  return 2.0 * std::pow(pi, 0.5 * m) / std::tgamma(0.5 * m);
}

enum class WarpKind { Euclidean, HyperbolicSinh, Cylinder, Polynomial };

inline std::string to_string(WarpKind k) {
  switch (k) {
    case WarpKind::Euclidean: return "euclidean";
    case WarpKind::HyperbolicSinh: return "sinh";
    case WarpKind::Cylinder: return "cylinder";
    case WarpKind::Polynomial: return "poly";
  }
  return "?";
}

// Warping factors are named built-ins so experiment files stay serializable.
//   euclidean:  sigma(r) = r
//   sinh:       sigma(r) = sinh r
//   cylinder:   sigma(r) = r below r0, constant r0 beyond
//   poly:       sigma(r) = r + sum_k c[k] r^{k+2}
class Manifold {
public:
  Manifold(int dim, WarpKind kind, double r_max, double r0 = 1.0,
           std::vector<double> poly = {})
      : dim_(dim), kind_(kind), r_max_(r_max), r0_(r0), poly_(std::move(poly)) {
    if (dim_ < 2) throw std::invalid_argument("Manifold: dim must be >= 2");
    if (!(r_max_ > 0)) throw std::invalid_argument("Manifold: r_max must be positive");
    if (kind_ == WarpKind::Cylinder && !(r0_ > 0))
      throw std::invalid_argument("Manifold: cylinder r0 must be positive");
    validate_warp();
  }

  int dim() const { return dim_; }
  WarpKind kind() const { return kind_; }
  double r_max() const { return r_max_; }
  double r0() const { return r0_; }
  const std::vector<double>& poly() const { return poly_; }

  double sigma(double r) const {
    switch (kind_) {
      case WarpKind::Euclidean: return r;
      case WarpKind::HyperbolicSinh: return std::sinh(r);
      case WarpKind::Cylinder: return r < r0_ ? r : r0_;
      case WarpKind::Polynomial: {
        double s = r, p = r * r;
        for (double c : poly_) {
          s += c * p;
          p *= r;
        }
        return s;
      }
    }
    return r;
  }

  /// Area of the geodesic sphere of radius r: omega_{m-1} sigma(r)^{m-1}.
  double sphere_area(double r) const {
    if (!(r > 0) || !(r < r_max_) || !std::isfinite(r))
      throw std::domain_error("sphere_area: r outside (0, r_max)");
    return unit_sphere_area(dim_) * std::pow(sigma(r), dim_ - 1);
  }

private:
  void validate_warp() const {
    // smooth pole: sigma(r)/r -> 1, checked near 0; positivity sampled out to r_max
    const double r_ref = std::min(1.0, r_max_);
    const double r_probe = 1e-6 * r_ref;
    const double ratio = sigma(r_probe) / r_probe;
    if (!(std::abs(ratio - 1.0) <= 1e-2))
      throw std::invalid_argument("Manifold: sigma(r)/r must approach 1 at the pole");
    const double hi = std::min(r_max_, 1e6);
    for (int i = 1; i <= 64; ++i) {
      const double r = r_probe * std::pow(hi / r_probe, i / 64.0);
      if (!(sigma(r) > 0))
        throw std::invalid_argument("Manifold: sigma must be positive on (0, r_max)");
    }
  }

  int dim_;
  WarpKind kind_;
  double r_max_;
  double r0_;
  std::vector<double> poly_;
};

namespace detail {

// One octave chunk keeps the adaptive rule honest on ranges spanning
// hundreds of orders of magnitude.
inline double integrate_chunk(const Manifold& M, double a, double b) {
  const double expo = 1.0 - M.dim();
  auto f = [&](double r) { return std::pow(M.sigma(r), expo); };
  double err = 0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 12, 1e-12, &err);
}

}  // namespace detail

inline constexpr double radial_integral_overflow_guard = 1e14;

/// Quadrature of the radial resistance integral int_a^b sigma(r)^{1-m} dr.
/// Returns +inf once the running value exceeds the overflow guard.
inline double radial_integral(const Manifold& M, double a, double b) {
  if (!(a > 0)) throw std::domain_error("radial_integral: lower bound must be positive");
  if (!(b >= a)) throw std::domain_error("radial_integral: needs a <= b");
  if (!(b <= M.r_max())) throw std::domain_error("radial_integral: b beyond r_max");
  double total = 0;
  double lo = a;
  while (lo < b) {
    const double hi = std::min(b, lo * 2);
    total += detail::integrate_chunk(M, lo, hi);
    if (total > radial_integral_overflow_guard)
      return std::numeric_limits<double>::infinity();
    lo = hi;
  }
  return total;
}

struct TailIntegral {
  double value = 0;        // finite part accumulated (meaningful when !divergent)
  bool divergent = false;  // octave increments failed to decay
};

/// Doubling-ladder probe of int_a^infinity sigma^{1-m} dr. The increments over
/// octaves [a 2^k, a 2^{k+1}] either decay geometrically (convergent tail,
/// value reported) or fail to shrink within the ladder (divergent).
inline TailIntegral radial_integral_tail(const Manifold& M, double a,
                                         int max_octaves = 400) {
  if (!(a > 0)) throw std::domain_error("radial_integral_tail: a must be positive");
  TailIntegral out;
  double lo = a;
  double prev = -1;
  for (int k = 0; k < max_octaves && lo < 1e290; ++k) {
    const double hi = lo * 2;
    const double t = detail::integrate_chunk(M, lo, hi);
    out.value += t;
    if (out.value > radial_integral_overflow_guard) {
      out.divergent = true;
      return out;
    }
    if (prev >= 0 && t <= 0.6 * prev && t <= 1e-12 * out.value) return out;
    prev = t;
    lo = hi;
  }
  out.divergent = true;
  return out;
}

inline bool radial_integral_diverges(const Manifold& M, double a) {
  return radial_integral_tail(M, a).divergent;
}

}  // namespace modpot
