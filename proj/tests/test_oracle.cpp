#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nlcone/curvature.hpp"
#include "nlcone/errors.hpp"
#include "nlcone/oracle.hpp"
#include "nlcone/stability.hpp"

using namespace nlcone;

// Fixed seeds make every run of this file bit-identical, so the statistical
// bounds below are deterministic once observed to hold.

TEST_CASE("curvature sampler preconditions") {
  auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
  CHECK_THROWS_AS(mc_mean_curvature(P, 9999, 1), InvalidArgument);
  CHECK_THROWS_AS(
      mc_mean_curvature(ConeParams<double>::make(4, 3, 0.005, 0.85), 10000, 1),
      InvalidArgument);
}

TEST_CASE("curvature sampler is reproducible and batch-order invariant") {
  auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
  auto a = mc_mean_curvature(P, 200000, 42);
  auto b = mc_mean_curvature(P, 200000, 42);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  // worker count must not alter the merged moments
  auto c = mc_mean_curvature(P, 200000, 42, McEstimator::halfspace_subtracted,
                             -1, 4);
  CHECK(a.mean == c.mean);
  CHECK(a.std_error == c.std_error);

  CHECK(a.samples == 200000);
  CHECK(a.seed == 42);
  CHECK(std::isinf(a.cutoff_radius));
}

TEST_CASE("independent seeds agree within their spread") {
  auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
  auto a = mc_mean_curvature(P, 100000, 1);
  auto b = mc_mean_curvature(P, 100000, 2);
  CHECK(std::abs(a.mean - b.mean) <= 6 * (a.std_error + b.std_error));
}

TEST_CASE("standard error shrinks like the square root of the sample count") {
  auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
  auto small = mc_mean_curvature(P, 100000, 7);
  auto big = mc_mean_curvature(P, 400000, 7);
  CHECK(big.std_error == doctest::Approx(0.5 * small.std_error).epsilon(0.25));
}

TEST_CASE("sampled curvature vanishes on a symmetric cone") {
  auto e = mc_mean_curvature(ConeParams<double>::make(3, 3, 0.3, 1.0), 100000, 0);
  CHECK(std::abs(e.mean) <= 3 * e.std_error);
}

TEST_CASE("sampled curvature vanishes at a solved aperture, n = 1") {
  auto sol = solve_alpha(2, 1, 0.3, 1e-3);
  auto e = mc_mean_curvature(sol.params, 100000, 0);
  CHECK(std::abs(e.mean) <= 3 * e.std_error);
}

TEST_CASE("sampled curvature matches quadrature off the root") {
  // below the zero-curvature aperture the curvature is strictly positive
  auto P = ConeParams<double>::make(4, 3, 0.2, 0.4);
  auto e = mc_mean_curvature(P, 200000, 0);
  CHECK(e.mean > 3 * e.std_error);

  QuadSpec spec;
  spec.abs_tol = 1e-5;
  spec.rel_tol = 1e-5;
  auto q = mean_curvature_H(P, spec);
  CHECK(std::abs(e.mean - q.value) <= 3 * (e.std_error + q.error_estimate));
}

TEST_CASE("the two sampling strategies agree") {
  auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
  auto sub = mc_mean_curvature(P, 200000, 5, McEstimator::halfspace_subtracted);
  auto pla = mc_mean_curvature(P, 200000, 5, McEstimator::plain_excised);
  CHECK(std::abs(sub.mean - pla.mean) <= 6 * (sub.std_error + pla.std_error));
  CHECK(sub.excision_radius == doctest::Approx(1e-8));
  CHECK(pla.excision_radius == doctest::Approx(1e-2));
}

// ---------------------------------------------------------------------------

TEST_CASE("surface sampler preconditions") {
  auto P = ConeParams<double>::make(4, 3, 0.5, 0.8);
  CHECK_THROWS_AS(
      mc_surface_integral(P, McIntegrand::hardy_weight, 0.0, 100000, 0),
      InvalidArgument);
  CHECK_THROWS_AS(
      mc_surface_integral(P, McIntegrand::hardy_weight, 99.0, 100000, 0),
      InvalidArgument);
  CHECK_THROWS_AS(
      mc_surface_integral(P, McIntegrand::hardy_weight, 1.0, 9999, 0),
      InvalidArgument);
}

TEST_CASE("surface sampler is reproducible across worker counts") {
  auto P = ConeParams<double>::make(2, 2, 0.2, 1.0);
  auto a = mc_surface_integral(P, McIntegrand::normal_alignment, 0, 100000, 9);
  auto b = mc_surface_integral(P, McIntegrand::normal_alignment, 0, 100000, 9, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("sampled alignment integral matches quadrature") {
  auto P = ConeParams<double>::make(2, 2, 0.2, 1.0);
  auto mc = mc_surface_integral(P, McIntegrand::normal_alignment, 0, 200000, 0);
  auto q = a0_squared(P, true);
  CHECK(std::abs(mc.mean - q.value) <= 3 * (mc.std_error + q.error_estimate));
}

TEST_CASE("sampled Hardy integral matches quadrature, n >= 2 and n = 1") {
  auto P = ConeParams<double>::make(4, 3, 0.5, 0.8);
  const double bmid = 0.5 * (P.N() - 2 - P.s);
  auto mc = mc_surface_integral(P, McIntegrand::hardy_weight, bmid, 200000, 0);
  auto q = hardy_constant(P, true);
  CHECK(std::abs(mc.mean - q.value) <= 3 * (mc.std_error + q.error_estimate));

  auto P1 = ConeParams<double>::make(3, 1, 0.2, 0.5);
  auto mc1 = mc_surface_integral(P1, McIntegrand::hardy_weight, 0.7, 200000, 0);
  auto q1 = C_constant(P1, 0.7, true);
  CHECK(std::abs(mc1.mean - q1.value) <= 3 * (mc1.std_error + q1.error_estimate));
}

TEST_CASE("sampled C agrees across the exponent reflection") {
  auto P = ConeParams<double>::make(4, 3, 0.2, 0.8361);
  const double window = P.N() - 2 - P.s;
  auto x = mc_surface_integral(P, McIntegrand::hardy_weight, 0.9, 100000, 3);
  auto y = mc_surface_integral(P, McIntegrand::hardy_weight, window - 0.9,
                               100000, 3);
  CHECK(std::abs(x.mean - y.mean) <= 3 * (x.std_error + y.std_error));
}
