#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <utility>
#include <vector>

#include "nlcone/errors.hpp"

namespace nlcone {

// Tolerances and subdivision policy for the integrators.  Two presets are
// used throughout: inner() for angular integrals, outer() for radial ones.
struct QuadSpec {
  double abs_tol = 1e-7;
  double rel_tol = 1e-6;
  int max_subdivisions = 4000;
  // Excision half-widths for principal-value integration, strictly
  // decreasing toward 0.  Empty means the default ladder 0.1 * 2^-k,
  // k = 0..10.
  std::vector<double> pv_excision_sequence;
  // Points where the integrand is known to blow up (integrably).  Interior
  // points become panel boundaries; endpoints switch the panel to the
  // double-exponential rule.
  std::vector<double> singularity_locations;

  static QuadSpec inner() {
    QuadSpec q;
    q.abs_tol = 1e-9;
    q.rel_tol = 1e-8;
    return q;
  }
  static QuadSpec outer() { return QuadSpec{}; }

  double target(double value_scale) const {
    return std::max(abs_tol, rel_tol * std::abs(value_scale));
  }
  std::vector<double> excision_ladder() const {
    if (!pv_excision_sequence.empty()) {
      for (std::size_t i = 1; i < pv_excision_sequence.size(); ++i)
        if (!(pv_excision_sequence[i] < pv_excision_sequence[i - 1]))
          throw InvalidArgument("quadrature: excision ladder must decrease");
      return pv_excision_sequence;
    }
    std::vector<double> eps;
    for (int k = 0; k <= 10; ++k) eps.push_back(0.1 * std::ldexp(1.0, -k));
    return eps;
  }
};

struct IntegralResult {
  double value = 0;
  double error_estimate = std::numeric_limits<double>::infinity();
  long long evaluations = 0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Gauss-Legendre rules, generated at runtime.

struct GlRule {
  std::vector<double> x;  // nodes on (-1, 1), symmetric
  std::vector<double> w;
};

namespace detail {

inline GlRule make_gauss_legendre(int k) {
  GlRule rule;
  rule.x.resize(k);
  rule.w.resize(k);
  for (int i = 0; i < (k + 1) / 2; ++i) {
    // Newton iteration on P_k from the Chebyshev-like initial guess; the
    // roots are simple and the guess lands in the right basin for all k.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 64; ++iter) {
      double p0 = 1, p1 = x;
      for (int j = 1; j < k; ++j) {
        double p2 = ((2 * j + 1) * x * p1 - j * p0) / (j + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = k * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // one clean-up step, then recompute dp for the weight
        p0 = 1;
        p1 = x;
        for (int j = 1; j < k; ++j) {
          double p2 = ((2 * j + 1) * x * p1 - j * p0) / (j + 1);
          p0 = p1;
          p1 = p2;
        }
        dp = k * (x * p1 - p0) / (x * x - 1);
        x -= p1 / dp;
        break;
      }
    }
    const double w = 2.0 / ((1 - x * x) * dp * dp);
    rule.x[i] = -x;  // guess enumerates roots from +1 side; store ascending
    rule.w[i] = w;
    rule.x[k - 1 - i] = x;
    rule.w[k - 1 - i] = w;
  }
  if (k % 2 == 1) rule.x[k / 2] = 0;  // exact for odd k; kill rounding dust
  return rule;
}

}  // namespace detail

inline const GlRule& gauss_legendre(int k) {
  if (k < 1) throw InvalidArgument("gauss_legendre: need k >= 1");
  static std::map<int, GlRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, detail::make_gauss_legendre(k)).first;
  return it->second;
}

namespace detail {

template <class F>
double gl_apply(F&& f, double a, double b, const GlRule& rule, long long& evals) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(c + h * rule.x[i]);
  evals += static_cast<long long>(rule.x.size());
  return h * s;
}

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel make_panel(F&& f, double a, double b, long long& evals) {
  const GlRule& lo = gauss_legendre(15);
  const GlRule& hi = gauss_legendre(31);
  const double v_lo = gl_apply(f, a, b, lo, evals);
  const double v_hi = gl_apply(f, a, b, hi, evals);
  return Panel{a, b, v_hi, std::abs(v_hi - v_lo)};
}

// Adaptive bisection on [a, b] for an integrand finite on the closed
// interval.  Panels are split worst-error-first until the summed estimate
// meets the tolerance.
template <class F>
IntegralResult adaptive_1d(F&& f, double a, double b, const QuadSpec& spec) {
  IntegralResult res;
  if (a == b) {
    res.converged = true;
    res.error_estimate = 0;
    return res;
  }
  std::priority_queue<Panel> queue;
  queue.push(make_panel(f, a, b, res.evaluations));
  double total = queue.top().value, err = queue.top().error;
  int splits = 0;
  const double min_width = 64 * std::numeric_limits<double>::epsilon() *
                           (std::abs(a) + std::abs(b) + 1);
  while (err > spec.target(total) && splits < spec.max_subdivisions) {
    Panel worst = queue.top();
    if (worst.b - worst.a < min_width) break;  // refinement exhausted
    queue.pop();
    total -= worst.value;
    err -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = make_panel(f, worst.a, mid, res.evaluations);
    Panel right = make_panel(f, mid, worst.b, res.evaluations);
    total += left.value + right.value;
    err += left.error + right.error;
    queue.push(left);
    queue.push(right);
    ++splits;
  }
  res.value = total;
  res.error_estimate = err;
  res.converged = err <= spec.target(total);
  return res;
}

// Double-exponential (tanh-sinh) rule on [a, b].  The integrand receives,
// besides the node x, its exact distances to both endpoints: near the ends
// those distances underflow any representation through x alone, and the
// endpoint-singular kernels downstream need them directly.
//
// Node at parameter u: x = c + half*tanh(w), w = (pi/2) sinh u.  For u > 0,
//   1 - tanh(w) = 2 e^{-2w} / (1 + e^{-2w}),
// which is the relative endpoint distance, computed without cancellation.
template <class F>
IntegralResult de_endpoint_aware(F&& f, double a, double b, const QuadSpec& spec,
                                 int max_level = 9) {
  IntegralResult res;
  const double half = 0.5 * (b - a);
  if (half == 0) {
    res.converged = true;
    res.error_estimate = 0;
    return res;
  }
  const double u_max = 6.5;
  const double pi_half = 0.5 * std::numbers::pi;

  // weighted integrand value at signed parameter u; false when negligible
  auto term = [&](double u, double& out) -> bool {
    const double w = pi_half * std::sinh(std::abs(u));
    const double em = std::exp(-2 * w);
    const double near_frac = 2 * em / (1 + em);   // 1 - |tanh(w)|
    const double far_frac = 2 / (1 + em);         // 1 + |tanh(w)|
    const double d_near = half * near_frac;
    const double d_far = half * far_frac;
    if (d_near == 0) return false;  // beyond representable endpoint distance
    const double jac = half * pi_half * std::cosh(u) * near_frac * far_frac;
    if (jac == 0) return false;
    double dl, dr, x;
    if (u >= 0) {
      dl = d_far;
      dr = d_near;
      x = b - dr;
    } else {
      dl = d_near;
      dr = d_far;
      x = a + dl;
    }
    const double fv = f(x, dl, dr);
    if (!std::isfinite(fv)) return false;  // endpoint rounding artifact
    out = jac * fv;
    res.evaluations += 1;
    return true;
  };

  double h = 0.5;
  double mid_term = 0;
  term(0.0, mid_term);
  double sum = mid_term;  // running sum of weighted terms; value = h * sum
  double prev_value = std::numeric_limits<double>::quiet_NaN();
  for (int level = 0;; ++level) {
    // level 0 fills all multiples of h; each later level halves h and adds
    // the odd multiples, reusing every term already accumulated
    const double step = (level == 0) ? h : 2 * h;
    for (int side = -1; side <= 1; side += 2) {
      int tiny_streak = 0;
      for (double u = h * side;; u += step * side) {
        if (std::abs(u) > u_max) break;
        double t = 0;
        const bool ok = term(u, t);
        sum += t;
        const double scale = std::abs(sum) + 1e-300;
        // only trust a run of negligible terms once past the central region;
        // before that, terms may still be climbing toward an endpoint peak
        if ((!ok || std::abs(t) < 1e-17 * scale) && std::abs(u) >= 2.0) {
          if (++tiny_streak >= 2) break;
        } else {
          tiny_streak = 0;
        }
      }
    }
    const double value = h * sum;
    if (level > 0) {
      const double err = std::abs(value - prev_value);
      res.value = value;
      res.error_estimate = err;
      if (err <= spec.target(value) || level >= max_level) {
        res.converged = err <= spec.target(value);
        return res;
      }
    }
    prev_value = value;
    h *= 0.5;
  }
}

}  // namespace detail

// Integrate f(x, dist_to_a, dist_to_b) over [a, b] with double-exponential
// endpoint clustering.  This is the entry point for integrands singular at
// either endpoint; the distance arguments stay meaningful far below the
// resolution of x itself.
template <class F>
IntegralResult integrate_de(F&& f, double a, double b, const QuadSpec& spec = QuadSpec::outer()) {
  return detail::de_endpoint_aware(std::forward<F>(f), a, b, spec);
}

namespace detail {

// finite-interval body of integrate_1d; kept separate so the infinite-bound
// wrapper below does not recurse through an ever-deepening closure type
template <class F>
IntegralResult integrate_1d_finite(F&& f, double a, double b, const QuadSpec& spec) {
  if (!(b > a)) {
    if (a == b) return IntegralResult{0, 0, 0, true};
    IntegralResult r = integrate_1d_finite(std::forward<F>(f), b, a, spec);
    r.value = -r.value;
    return r;
  }

  const double width = b - a;
  const double snap = 1e-12 * (std::abs(a) + std::abs(b) + 1);
  std::vector<double> cuts{a};
  bool sing_left = false, sing_right = false;
  std::vector<double> interior;
  for (double t : spec.singularity_locations) {
    if (std::abs(t - a) <= snap) sing_left = true;
    else if (std::abs(t - b) <= snap) sing_right = true;
    else if (t > a && t < b) interior.push_back(t);
  }
  std::sort(interior.begin(), interior.end());
  for (double t : interior) cuts.push_back(t);
  cuts.push_back(b);

  IntegralResult total{0, 0, 0, true};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    // interior singular points lie on both neighbouring panel boundaries
    const bool de_left = (i > 0) || sing_left;
    const bool de_right = (i + 2 < cuts.size()) || sing_right;
    QuadSpec part = spec;
    part.singularity_locations.clear();
    part.abs_tol = spec.abs_tol * std::max(0.1, (hi - lo) / width);
    IntegralResult r;
    if (de_left || de_right) {
      auto g = [&](double x, double, double) { return f(x); };
      r = detail::de_endpoint_aware(g, lo, hi, part);
    } else {
      r = detail::adaptive_1d(f, lo, hi, part);
    }
    total.value += r.value;
    total.error_estimate += r.error_estimate;
    total.evaluations += r.evaluations;
    total.converged = total.converged && r.converged;
  }
  total.converged =
      total.converged && total.error_estimate <= spec.target(total.value);
  return total;
}

}  // namespace detail

// Integrate f over [a, b]; b may be +infinity.  Declared interior
// singularities split the domain; declared endpoint singularities switch the
// touching panel to the double-exponential rule.
template <class F>
IntegralResult integrate_1d(F&& f, double a, double b, const QuadSpec& spec = QuadSpec::outer()) {
  if (std::isinf(b)) {
    // map [a, inf) to (0, 1] by t = a + u/(1-u), carrying declared finite
    // singularities through the same map
    QuadSpec mapped = spec;
    mapped.singularity_locations.clear();
    for (double t : spec.singularity_locations)
      if (std::isfinite(t) && t >= a)
        mapped.singularity_locations.push_back((t - a) / (1 + (t - a)));
    auto g = [&](double u) {
      const double om = 1 - u;
      return f(a + u / om) / (om * om);
    };
    return detail::integrate_1d_finite(g, 0.0, 1.0, mapped);
  }
  return detail::integrate_1d_finite(std::forward<F>(f), a, b, spec);
}

// ---------------------------------------------------------------------------
// Two-dimensional integration.

namespace detail {

struct Rect {
  double ax, bx, ay, by, value, error;
  bool operator<(const Rect& o) const { return error < o.error; }
};

template <class F>
Rect make_rect(F&& f, double ax, double bx, double ay, double by, long long& evals) {
  const GlRule& lo = gauss_legendre(8);
  const GlRule& hi = gauss_legendre(12);
  const double cx = 0.5 * (ax + bx), hx = 0.5 * (bx - ax);
  const double cy = 0.5 * (ay + by), hy = 0.5 * (by - ay);
  auto tensor = [&](const GlRule& r) {
    double s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      const double x = cx + hx * r.x[i];
      double row = 0;
      for (std::size_t j = 0; j < r.x.size(); ++j)
        row += r.w[j] * f(x, cy + hy * r.x[j]);
      s += r.w[i] * row;
    }
    evals += static_cast<long long>(r.x.size() * r.x.size());
    return hx * hy * s;
  };
  const double v_lo = tensor(lo);
  const double v_hi = tensor(hi);
  return Rect{ax, bx, ay, by, v_hi, std::abs(v_hi - v_lo)};
}

}  // namespace detail

// Integrate f(x, y) over [ax,bx] x [ay,by] (default [0,pi]^2) by adaptive
// rectangle refinement; the worst rectangle splits into four.  Suited to
// smooth and moderately near-singular integrands; the sharply peaked
// corner kernels go through dyadic_corner_2d instead.
template <class F>
IntegralResult integrate_2d(F&& f, const QuadSpec& spec = QuadSpec::inner(),
                            double ax = 0, double bx = std::numbers::pi,
                            double ay = 0, double by = std::numbers::pi) {
  IntegralResult res;
  std::priority_queue<detail::Rect> queue;
  queue.push(detail::make_rect(f, ax, bx, ay, by, res.evaluations));
  double total = queue.top().value, err = queue.top().error;
  int splits = 0;
  const double min_width = 1e-13 * (std::abs(bx - ax) + std::abs(by - ay));
  while (err > spec.target(total) && splits < spec.max_subdivisions) {
    detail::Rect worst = queue.top();
    if (worst.bx - worst.ax < min_width && worst.by - worst.ay < min_width) break;
    queue.pop();
    total -= worst.value;
    err -= worst.error;
    const double mx = 0.5 * (worst.ax + worst.bx);
    const double my = 0.5 * (worst.ay + worst.by);
    for (int ix = 0; ix < 2; ++ix)
      for (int iy = 0; iy < 2; ++iy) {
        detail::Rect child = detail::make_rect(
            f, ix ? mx : worst.ax, ix ? worst.bx : mx,
            iy ? my : worst.ay, iy ? worst.by : my, res.evaluations);
        total += child.value;
        err += child.error;
        queue.push(child);
      }
    ++splits;
  }
  res.value = total;
  res.error_estimate = err;
  res.converged = err <= spec.target(total);
  return res;
}

// Integrate f(x, y) over [0,bx] x [0,by] when f has an integrable peak at
// the origin of width ~ scale.  The square is pre-partitioned into dyadic
// L-shells shrinking toward the corner until the innermost square is well
// inside the peak width, where the integrand is smooth again; each cell gets
// a fixed tensor rule with an embedded lower-order error estimate.
template <class F>
IntegralResult dyadic_corner_2d(F&& f, double scale,
                                const QuadSpec& spec = QuadSpec::inner(),
                                double bx = std::numbers::pi,
                                double by = std::numbers::pi,
                                int order_hi = 24, int order_lo = 12) {
  IntegralResult res;
  const GlRule& hi = gauss_legendre(order_hi);
  const GlRule& lo = gauss_legendre(order_lo);
  auto cell = [&](double x0, double x1, double y0, double y1) {
    const double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
    const double cy = 0.5 * (y0 + y1), hy = 0.5 * (y1 - y0);
    auto tensor = [&](const GlRule& r) {
      double s = 0;
      for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double x = cx + hx * r.x[i];
        double row = 0;
        for (std::size_t j = 0; j < r.x.size(); ++j)
          row += r.w[j] * f(x, cy + hy * r.x[j]);
        s += r.w[i] * row;
      }
      return hx * hy * s;
    };
    const double v = tensor(hi);
    res.evaluations += static_cast<long long>(hi.x.size() * hi.x.size() +
                                              lo.x.size() * lo.x.size());
    res.value += v;
    res.error_estimate += std::abs(v - tensor(lo));
  };

  res.error_estimate = 0;
  const double floor_scale = std::max(scale, 1e-280);
  const double b_min = std::min(bx, by);
  int levels = 6;
  if (floor_scale < b_min)
    levels = std::max(6, static_cast<int>(std::ceil(std::log2(b_min / floor_scale))) + 4);
  double x_hi = bx, y_hi = by;
  for (int j = 0; j < levels; ++j) {
    const double x_lo = 0.5 * x_hi, y_lo = 0.5 * y_hi;
    // L-shell between the square [0,hi]^2 and [0,lo]^2, as three rectangles
    cell(x_lo, x_hi, 0.0, y_lo);
    cell(0.0, x_lo, y_lo, y_hi);
    cell(x_lo, x_hi, y_lo, y_hi);
    x_hi = x_lo;
    y_hi = y_lo;
  }
  cell(0.0, x_hi, 0.0, y_hi);
  res.converged = res.error_estimate <= spec.target(res.value);
  return res;
}

// One-dimensional analogue of dyadic_corner_2d: integrate f over [0, b]
// when f has an integrable peak at 0 of width ~ scale.
template <class F>
IntegralResult dyadic_corner_1d(F&& f, double scale, double b = std::numbers::pi,
                                int order_hi = 24, int order_lo = 12) {
  IntegralResult res;
  res.error_estimate = 0;
  const GlRule& hi = gauss_legendre(order_hi);
  const GlRule& lo = gauss_legendre(order_lo);
  auto seg = [&](double t0, double t1) {
    auto line = [&](const GlRule& r) {
      const double c = 0.5 * (t0 + t1), h = 0.5 * (t1 - t0);
      double s = 0;
      for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
      return h * s;
    };
    const double v = line(hi);
    res.evaluations += static_cast<long long>(hi.x.size() + lo.x.size());
    res.value += v;
    res.error_estimate += std::abs(v - line(lo));
  };
  const double floor_scale = std::max(scale, 1e-280);
  int levels = 6;
  if (floor_scale < b)
    levels = std::max(6, static_cast<int>(std::ceil(std::log2(b / floor_scale))) + 4);
  double b_hi = b;
  for (int j = 0; j < levels; ++j) {
    seg(0.5 * b_hi, b_hi);
    b_hi *= 0.5;
  }
  seg(0.0, b_hi);
  res.converged = true;
  return res;
}

// ---------------------------------------------------------------------------
// Principal values.

namespace detail {

// integral of f over a closed strip [lo, hi] adjacent to an excised
// singularity; f is finite on the strip but steep toward the excision edge
template <class F>
IntegralResult strip_integral(F&& f, double lo, double hi, const QuadSpec& spec) {
  auto g = [&](double x, double, double) { return f(x); };
  return de_endpoint_aware(g, lo, hi, spec);
}

}  // namespace detail

// Principal value of f over (a, b) around the singular point c (taken from
// singularity_locations, default 1).  Symmetric excisions |x - c| > eps are
// evaluated over the decreasing ladder; the excision integrals converge like
// eps^p with unknown p > 0, so the limit is extrapolated with the rate
// fitted from the last three ladder entries.  b may be +infinity, in which
// case the tail beyond c + eps_0 is folded by x -> 1/x.
template <class F>
IntegralResult integrate_pv(F&& f, double a, double b, const QuadSpec& spec = QuadSpec::outer()) {
  double c = 1.0;
  if (!spec.singularity_locations.empty()) c = spec.singularity_locations.front();
  const std::vector<double> eps = spec.excision_ladder();
  if (!(a < c) || !(b > c))
    throw InvalidArgument("integrate_pv: singular point must lie inside the domain");
  if (a > c - eps.front() || b < c + eps.front())
    throw InvalidArgument("integrate_pv: domain too narrow for the excision ladder");

  IntegralResult res;
  QuadSpec part = spec;
  part.singularity_locations.clear();
  part.abs_tol = 0.02 * spec.abs_tol;
  part.rel_tol = 0.02 * spec.rel_tol;

  double quad_err = 0;
  auto accumulate = [&](IntegralResult r) {
    res.evaluations += r.evaluations;
    quad_err += r.error_estimate;
    return r.value;
  };

  // base: everything outside the widest excision
  double base = accumulate(integrate_1d(f, a, c - eps.front(), part));
  if (std::isinf(b)) {
    // fold the tail by x = 1/v; v = 0 is approached through the exact
    // endpoint distance, so 1/v stays finite at every node
    auto folded = [&](double v, double dl, double) {
      const double x = 1.0 / (v > 0 ? v : dl);
      return f(x) / (v * v);
    };
    base += accumulate(detail::de_endpoint_aware(folded, 0.0, 1.0 / (c + eps.front()), part));
  } else {
    base += accumulate(integrate_1d(f, c + eps.front(), b, part));
  }

  // ladder values F_k, built incrementally from the strips between
  // consecutive excisions
  std::vector<double> ladder{base};
  for (std::size_t k = 1; k < eps.size(); ++k) {
    double v = ladder.back();
    v += accumulate(detail::strip_integral(f, c - eps[k - 1], c - eps[k], part));
    v += accumulate(detail::strip_integral(f, c + eps[k], c + eps[k - 1], part));
    ladder.push_back(v);
  }

  // geometric-ladder extrapolation; with eps ratio rho the differences
  // D_k = F_k - F_{k-1} shrink by rho^p per rung once the expansion
  // F_k = F_inf + C eps_k^p dominates
  const std::size_t K = ladder.size() - 1;
  const double D1 = ladder[K - 1] - ladder[K - 2];
  const double D2 = ladder[K] - ladder[K - 1];
  const double scale = std::abs(ladder[K]) + 1e-300;
  // differences below the quadrature noise floor carry no rate information
  const double noise = std::max(1e-15 * scale, quad_err + 0.1 * spec.abs_tol);
  double extrapolated = ladder[K];
  double resid = std::abs(D2);
  if (std::abs(D2) > noise) {
    if (std::abs(D2) >= std::abs(D1)) {
      // no decay across the ladder: not principal-value integrable
      res.value = ladder[K];
      res.error_estimate = std::numeric_limits<double>::infinity();
      res.converged = false;
      return res;
    }
    const double q = D2 / D1;  // = rho^p, in (0, 1) up to noise
    extrapolated = ladder[K] + D2 * q / (1 - q);
    resid = std::abs(D2 * q / (1 - q)) * 0.5 + std::abs(D2) * q;
  }
  res.value = extrapolated;
  res.error_estimate = quad_err + resid;
  res.converged = res.error_estimate <= spec.target(res.value);
  return res;
}

}  // namespace nlcone
