#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "nlcone/cone.hpp"
#include "nlcone/stability.hpp"

namespace nlcone {

// Estimator variants for the solid-angle curvature oracle.  Both realize the
// same principal value; they differ in how the near-singular mass is
// handled, and tests require them to agree.
//   halfspace_subtracted: per ray, the indicator of the tangent half-space
//     is subtracted, leaving an absolutely integrable difference with a
//     closed-form ray integral.  Low variance; the default.
//   plain_excised: the textbook symmetric ball excision.  Every ray carries
//     a +-delta^{-s}/s term that only cancels statistically, so the
//     variance is large unless the excision radius stays moderate.
enum class McEstimator { halfspace_subtracted, plain_excised };

enum class McIntegrand { hardy_weight, normal_alignment };

struct McEstimate {
  double mean = 0;
  double std_error = 0;  // sample standard error of the mean
  long long samples = 0;
  std::uint64_t seed = 0;
  double cutoff_radius = std::numeric_limits<double>::infinity();
  double excision_radius = 0;
};

namespace detail {

inline constexpr long long mc_batch = 65536;

inline double uniform01(std::mt19937_64& g) { return (g() >> 11) * 0x1p-53; }

// uniform on (0, 1]: safe as a log argument
inline double uniform01p(std::mt19937_64& g) {
  return ((g() >> 11) + 1) * 0x1p-53;
}

inline void gauss_pair(std::mt19937_64& g, double& a, double& b) {
  const double r = std::sqrt(-2.0 * std::log(uniform01p(g)));
  const double t = 2.0 * std::numbers::pi * uniform01(g);
  a = r * std::cos(t);
  b = r * std::sin(t);
}

// Runs `samples` draws of per_sample in fixed-size batches, each batch with
// its own generator seeded from (seed, batch index).  Partial sums are
// merged in batch order, so the estimate is bit-identical for any `jobs`.
template <class PerSample>
McEstimate mc_run(long long samples, std::uint64_t seed, int jobs,
                  PerSample&& per_sample) {
  const long long nbatch = (samples + mc_batch - 1) / mc_batch;
  std::vector<double> sums(nbatch, 0.0), sq_sums(nbatch, 0.0);
  auto worker = [&](long long first, long long stride) {
    for (long long b = first; b < nbatch; b += stride) {
      std::seed_seq sq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                       std::uint32_t(b), std::uint32_t(b >> 32)};
      std::mt19937_64 gen(sq);
      const long long count = std::min(mc_batch, samples - b * mc_batch);
      double s = 0, s2 = 0;
      for (long long i = 0; i < count; ++i) {
        const double v = per_sample(gen);
        s += v;
        s2 += v * v;
      }
      sums[b] = s;
      sq_sums[b] = s2;
    }
  };
  if (jobs <= 1 || nbatch == 1) {
    worker(0, 1);
  } else {
    const int k = int(std::min<long long>(jobs, nbatch));
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (int j = 0; j < k; ++j) pool.emplace_back(worker, j, k);
    for (auto& t : pool) t.join();
  }
  double sum = 0, sq = 0;
  for (long long b = 0; b < nbatch; ++b) {
    sum += sums[b];
    sq += sq_sums[b];
  }
  McEstimate est;
  est.samples = samples;
  est.seed = seed;
  est.mean = sum / samples;
  const double var_num = sq - sum * sum / samples;
  est.std_error =
      samples > 1 ? std::sqrt(std::max(0.0, var_num) /
                              (double(samples) * (samples - 1)))
                  : std::numeric_limits<double>::infinity();
  return est;
}

}  // namespace detail

// Monte Carlo evaluation of the full N-dimensional principal-value integral
// defining the curvature at the unit reference point, reported in the same
// reduced normalization as mean_curvature_H so the two are directly
// comparable.
//
// One sample: a uniform direction omega on S^{N-1}.  Along the ray
// p + rho*omega the region membership is the sign of A rho + B with
//   A = |omega_z|^2 - alpha^2 |omega_y|^2,
//   B = 2 (<p_z, omega_z> - alpha^2 <p_y, omega_y>),
// so the radial integral has a closed form: no outer truncation at all
// (cutoff_radius = infinity) and the only regularization is the excision
// radius delta around the reference point.
//
// Defaults: delta = 1e-8 for the subtracted estimator (its per-ray values
// are bounded by 2 delta^{-s}/s only on an O(delta) fraction of rays;
// excision bias ~ delta^{1-s}); delta = 1e-2 for the plain estimator,
// whose per-ray values always carry delta^{-s}/s.
inline McEstimate mc_mean_curvature(const ConeParams<double>& params,
                                    long long samples, std::uint64_t seed,
                                    McEstimator estimator = McEstimator::halfspace_subtracted,
                                    double excision_radius = -1,
                                    int jobs = 1) {
  if (samples < 10000)
    throw InvalidArgument("mc_mean_curvature: need samples >= 10000");
  // the closed form carries delta^{-s}/s; below s ~ 0.01 rounding in that
  // factor dwarfs any attainable statistical precision
  if (params.s < 0.01)
    throw InvalidArgument("mc_mean_curvature: s < 0.01 not supported");
  if (excision_radius <= 0)
    excision_radius =
        estimator == McEstimator::halfspace_subtracted ? 1e-8 : 1e-2;

  const int m = params.m, n = params.n, N = params.N();
  const double alpha = params.alpha, s = params.s;
  const double delta = excision_radius;
  const double bpref = 2 * alpha / std::sqrt(1 + alpha * alpha);
  // unit-point value -> reduced normalization used by mean_curvature_H
  const double scale =
      sphere_area(N - 1) /
      (std::pow(1 + alpha * alpha, 0.5 * s) * sphere_area(m - 2) *
       (n >= 2 ? sphere_area(n - 2) : 1.0));
  const double dexc = std::pow(delta, -s) / s;
  const bool subtracted = estimator == McEstimator::halfspace_subtracted;

  auto per_sample = [=](std::mt19937_64& gen) -> double {
    double g[16];
    for (int i = 0; i < N; i += 2) detail::gauss_pair(gen, g[i], g[i + 1]);
    double sy = 0, sz = 0;
    for (int i = 0; i < m; ++i) sy += g[i] * g[i];
    for (int i = m; i < N; ++i) sz += g[i] * g[i];
    const double tot = sy + sz;
    if (tot == 0) return 0.0;
    const double A = (sz - alpha * alpha * sy) / tot;
    const double B = bpref * (g[m] - alpha * g[0]) / std::sqrt(tot);
    const bool crossing = A != 0 && B != 0 && (A > 0) != (B > 0);
    double x;
    if (subtracted) {
      if (!crossing) return 0.0;
      const double rho = std::max(-B / A, delta);
      x = std::copysign(2.0 * std::pow(rho, -s) / s, A);
    } else {
      if (crossing && -B / A > delta) {
        const double rho = -B / A;
        x = (B > 0 ? 1.0 : -1.0) * (dexc - 2.0 * std::pow(rho, -s) / s);
      } else {
        x = std::copysign(dexc, crossing ? A : (B != 0 ? B : A));
      }
    }
    return scale * x;
  };

  McEstimate est = detail::mc_run(samples, seed, jobs, per_sample);
  est.excision_radius = delta;
  return est;
}

inline McEstimate mc_mean_curvature(int m, int n, double s, double alpha,
                                    long long samples, std::uint64_t seed) {
  return mc_mean_curvature(ConeParams<double>::make(m, n, s, alpha), samples, seed);
}

// Monte Carlo evaluation of the surface integrals behind hardy_constant
// (integrand = hardy_weight, needs beta) and a0_squared (normal_alignment),
// in the raw convention, i.e. directly comparable to those functions called
// with raw = true.
//
// The integrand lives on (0,1) x angles and is singular only at the corner
// r = 1, angles = 0, where it grows like rho^{-s} (hardy weight) or
// rho^{-2-s} against a rho^2-vanishing measure (alignment).  Sampling is a
// 50/50 mixture of uniform and a corner-polar density ~ rho^{-2-s}
// (rho^{-1-s} for n = 1), which keeps the weight ratio bounded.
inline McEstimate mc_surface_integral(const ConeParams<double>& params,
                                      McIntegrand integrand, double beta,
                                      long long samples, std::uint64_t seed,
                                      int jobs = 1) {
  if (samples < 10000)
    throw InvalidArgument("mc_surface_integral: need samples >= 10000");
  const double window = params.N() - 2 - params.s;
  if (integrand == McIntegrand::hardy_weight &&
      (!(beta > 0) || !(beta < window)))
    throw InvalidArgument("mc_surface_integral: beta must lie in (0, N-2-s)");

  const int m = params.m, n = params.n, N = params.N();
  const double s = params.s;
  const double bconj = window - beta;
  const double pref = detail::published_raw_factor(params);
  const double pi = std::numbers::pi;
  const bool hardy = integrand == McIntegrand::hardy_weight;

  // radial weight of the target integral
  auto weight = [=](double r) {
    if (hardy) {
      const double lr = std::log(r);
      return std::pow(r, s) * std::expm1(beta * lr) * std::expm1(bconj * lr);
    }
    return std::pow(r, N - 2) + std::pow(r, s);
  };

  auto per_sample = [=](std::mt19937_64& gen) -> double {
    double d, th, ph = 0;
    const bool corner = detail::uniform01(gen) < 0.5;
    if (n >= 2) {
      if (corner) {
        const double rc = std::pow(detail::uniform01p(gen), 1.0 / (1.0 - s));
        double g0, g1, g2, gpad;
        detail::gauss_pair(gen, g0, g1);
        detail::gauss_pair(gen, g2, gpad);
        const double nrm = std::sqrt(g0 * g0 + g1 * g1 + g2 * g2);
        if (nrm == 0) return 0.0;
        d = rc * std::abs(g0) / nrm;
        th = rc * std::abs(g1) / nrm;
        ph = rc * std::abs(g2) / nrm;
      } else {
        d = 1.0 - detail::uniform01(gen);
        th = pi * detail::uniform01(gen);
        ph = pi * detail::uniform01(gen);
      }
    } else {
      if (corner) {
        const double rc = std::pow(detail::uniform01p(gen), 1.0 / (1.0 - s));
        double g0, g1;
        detail::gauss_pair(gen, g0, g1);
        const double nrm = std::sqrt(g0 * g0 + g1 * g1);
        if (nrm == 0) return 0.0;
        d = rc * std::abs(g0) / nrm;
        th = rc * std::abs(g1) / nrm;
      } else {
        d = 1.0 - detail::uniform01(gen);
        th = pi * detail::uniform01(gen);
      }
    }
    if (d < 1e-12 || d >= 1.0) return 0.0;
    const double r = 1.0 - d;

    // mixture density at the realized point
    const double rho = n >= 2 ? std::sqrt(d * d + th * th + ph * ph)
                              : std::sqrt(d * d + th * th);
    double q = n >= 2 ? 0.5 / (pi * pi) : 0.5 / pi;
    if (rho <= 1.0)
      q += n >= 2 ? (1.0 - s) / pi * std::pow(rho, -2.0 - s)
                  : (1.0 - s) / pi * std::pow(rho, -1.0 - s);

    const double w = weight(r);
    const double mu = detail::ipow(std::sin(th), m - 2) *
                      (n > 2 ? detail::ipow(std::sin(ph), n - 2) : 1.0);
    const double expo = -0.5 * (N + s);
    double f;
    if (n >= 2) {
      KernelPoint<double> pt{r, th, ph};
      double core = std::pow(kernel_denominator_at(params, r, d, th, ph), expo);
      if (!hardy) core *= normal_alignment(params, pt);
      f = w * mu * core;
    } else {
      KernelPoint<double> pt{r, th, 0};
      f = 0;
      for (Branch br : {Branch::interior, Branch::exterior}) {
        double core =
            std::pow(kernel_denominator_at(params, r, d, th, 0.0, br), expo);
        if (!hardy) core *= normal_alignment(params, pt, br);
        f += core;
      }
      f *= w * mu;
    }
    return pref * f / q;
  };

  McEstimate est = detail::mc_run(samples, seed, jobs, per_sample);
  est.excision_radius = 1e-12;  // float guard on 1 - r, not a p.v. excision
  return est;
}

inline McEstimate mc_surface_integral(int m, int n, double s, double alpha,
                                      McIntegrand integrand, double beta,
                                      long long samples, std::uint64_t seed) {
  return mc_surface_integral(ConeParams<double>::make(m, n, s, alpha), integrand,
                             beta, samples, seed);
}

}  // namespace nlcone
