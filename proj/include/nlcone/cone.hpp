#pragma once

#include <cmath>
#include <numbers>

#include "nlcone/errors.hpp"

namespace nlcone {

// Parameters of the cone |z| = alpha*|y| in R^m x R^n, N = m+n, with
// fractional order s.  Canonical ordering is m >= n; construction with
// m < n swaps the factors, which describes the complementary cone and
// replaces alpha by 1/alpha.
template <class Real = double>
struct ConeParams {
  int m = 0;
  int n = 0;
  Real s = 0;
  Real alpha = 1;
  bool swapped = false;  // true if the factors were exchanged at construction

  int N() const { return m + n; }

  static ConeParams make(int m, int n, Real s, Real alpha) {
    if (m < n) {
      if (alpha <= Real(0)) throw InvalidArgument("cone: alpha must be positive");
      ConeParams p = make(n, m, s, Real(1) / alpha);
      p.swapped = true;
      return p;
    }
    if (n < 1) throw InvalidArgument("cone: need n >= 1");
    if (m + n < 3) throw InvalidArgument("cone: need m + n >= 3 (N = 2 is symmetric only)");
    if (!(s >= Real(0) && s < Real(1))) throw InvalidArgument("cone: need 0 <= s < 1");
    if (!(alpha > Real(0)) || !std::isfinite(alpha))
      throw InvalidArgument("cone: alpha must be positive and finite");
    return ConeParams{m, n, s, alpha, false};
  }
};

// A point of the angular kernel domain: radial ratio r and the two polar
// angles.  phi1 is ignored when n = 1 (the z-factor is a sign, not a sphere).
template <class Real = double>
struct KernelPoint {
  Real r = 1;
  Real theta1 = 0;
  Real phi1 = 0;
};

// Branch selector for n = 1, where the surface splits into z = +alpha|y|
// (interior, the branch containing the evaluation point) and z = -alpha|y|
// (exterior).  For n >= 2 only `interior` is meaningful.
enum class Branch { interior, exterior };

// Area of the unit sphere S^k: A_k = 2 pi^{(k+1)/2} / Gamma((k+1)/2).
// A_0 = 2 counts the two points of S^0.
inline double sphere_area(int k) {
  if (k < 0) throw InvalidArgument("sphere_area: need k >= 0");
  const double a = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, a) / std::tgamma(a);
}

// Squared distance |x - p|^2 between the surface point at (r, theta1, phi1)
// and the reference point p = (e1, alpha e1), written so that no term can
// cancel: each summand is nonnegative.  one_minus_r is passed separately
// because near r = 1 it carries more precision than 1 - r recomputed from a
// rounded r.
template <class Real>
Real kernel_denominator_at(const ConeParams<Real>& p, Real r, Real one_minus_r,
                           Real theta1, Real phi1, Branch branch = Branch::interior) {
  const Real a2 = p.alpha * p.alpha;
  const Real st = std::sin(Real(0.5) * theta1);
  const Real d2 = one_minus_r * one_minus_r;
  if (p.n >= 2) {
    const Real sp = std::sin(Real(0.5) * phi1);
    return (1 + a2) * d2 + 4 * r * (st * st + a2 * sp * sp);
  }
  if (branch == Branch::interior) return (1 + a2) * d2 + 4 * r * st * st;
  const Real opr = 1 + r;
  return d2 + 4 * r * st * st + a2 * opr * opr;
}

// D(r, theta1, phi1): the bare kernel denominator base (not yet raised to
// (N+s)/2).  Zero only at the singular point: (1,0,0) for n >= 2, (1,0) on
// the interior branch for n = 1.
template <class Real>
Real kernel_denominator(const ConeParams<Real>& p, const KernelPoint<Real>& pt,
                        Branch branch = Branch::interior) {
  return kernel_denominator_at(p, pt.r, 1 - pt.r, pt.theta1, pt.phi1, branch);
}

// 1 - <nu(x), nu(p)> for the consistent unit normal field on the cone;
// lies in [0, 2].  For n = 1 the exterior branch carries the opposite
// z-orientation, hence the constant 2 offset.
template <class Real>
Real normal_alignment(const ConeParams<Real>& p, const KernelPoint<Real>& pt,
                      Branch branch = Branch::interior) {
  const Real a2 = p.alpha * p.alpha;
  const Real st = std::sin(Real(0.5) * pt.theta1);
  if (p.n >= 2) {
    const Real sp = std::sin(Real(0.5) * pt.phi1);
    return (2 * sp * sp + 2 * a2 * st * st) / (1 + a2);
  }
  if (branch == Branch::interior) return 2 * a2 * st * st / (1 + a2);
  return (2 + 2 * a2 * st * st) / (1 + a2);
}

}  // namespace nlcone
