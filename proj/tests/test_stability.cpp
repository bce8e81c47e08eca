#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "nlcone/errors.hpp"
#include "nlcone/stability.hpp"

using namespace nlcone;

// Reference values in the comparisons below were frozen from an independent
// high-precision implementation of the same surface integrals.

TEST_CASE("Hardy constant closed-form and frozen anchors") {
  // (3,3,0,1) comes out at exactly pi/8
  auto h33 = hardy_constant(3, 3, 0.0, 1.0);
  CHECK(h33.value == doctest::Approx(std::numbers::pi / 8).epsilon(1e-9));
  CHECK(h33.converged);

  auto h22 = hardy_constant(2, 2, 0.0, 1.0);
  CHECK(h22.value == doctest::Approx(1.0680719544136485).epsilon(1e-8));

  // n = 1 column, evaluated at the limiting aperture
  auto a61 = alpha0(6, 1);
  auto h61 = hardy_constant(a61.params);
  CHECK(h61.value == doctest::Approx(1.583824479297461).epsilon(1e-7));
}

TEST_CASE("alignment coefficient frozen anchors") {
  CHECK(a0_squared(2, 2, 0.0, 1.0).value ==
        doctest::Approx(2.3017725045497652).epsilon(1e-8));
  CHECK(a0_squared(3, 3, 0.0, 1.0).value ==
        doctest::Approx(0.44634954084934547).epsilon(1e-8));
  auto a71 = alpha0(7, 1);
  CHECK(a0_squared(a71.params).value ==
        doctest::Approx(1.3872025358155224).epsilon(1e-7));
}

TEST_CASE("constants at the (4,3) reference apertures") {
  // s = 0.1 and s = 0.4 rows, both at the 4-digit apertures
  CHECK(hardy_constant(4, 3, 0.1, 0.8379).value ==
        doctest::Approx(0.41154864985236655).epsilon(1e-7));
  CHECK(a0_squared(4, 3, 0.1, 0.8379).value ==
        doctest::Approx(0.4008655097580426).epsilon(1e-7));
  CHECK(hardy_constant(4, 3, 0.4, 0.8319).value ==
        doctest::Approx(0.36678481302319005).epsilon(1e-7));
  CHECK(a0_squared(4, 3, 0.4, 0.8319).value ==
        doctest::Approx(0.38133277039696767).epsilon(1e-7));
}

TEST_CASE("the weight factorizes into a positive product") {
  // r^s (1 - r^b)(1 - r^{b'}) with b' = N-2-s-b expands to
  // r^s - r^{s+b} - r^{N-2-b} + r^{N-2}; both sides positive on (0,1)
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> ur(1e-6, 1.0 - 1e-6);
  const int N = 7;
  const double s = 0.3;
  std::uniform_real_distribution<double> ub(1e-3, N - 2 - s - 1e-3);
  for (int k = 0; k < 500; ++k) {
    const double r = ur(gen), b = ub(gen);
    const double bc = N - 2 - s - b;
    const double prod =
        std::pow(r, s) * (1 - std::pow(r, b)) * (1 - std::pow(r, bc));
    const double sum = std::pow(r, s) - std::pow(r, s + b) -
                       std::pow(r, N - 2 - b) + std::pow(r, N - 2.0);
    CHECK(prod >= 0.0);
    CHECK(prod == doctest::Approx(sum).epsilon(1e-10));
  }
}

TEST_CASE("C is symmetric under the exponent reflection") {
  auto P = ConeParams<double>::make(4, 3, 0.2, 0.8361);
  const double window = P.N() - 2 - P.s;

  // frozen anchor at the 0.9 / window - 0.9 pair
  auto cb = C_constant(P, 0.9);
  auto cc = C_constant(P, window - 0.9);
  CHECK(cb.value == doctest::Approx(0.2651142652899621).epsilon(1e-7));
  CHECK(cc.value == doctest::Approx(cb.value).epsilon(1e-9));

  std::mt19937 gen(5);
  std::uniform_real_distribution<double> ub(0.05 * window, 0.95 * window);
  for (int k = 0; k < 5; ++k) {
    const double b = ub(gen);
    auto x = C_constant(P, b);
    auto y = C_constant(P, window - b);
    CAPTURE(b);
    CHECK(std::abs(x.value - y.value) <= 6 * (x.error_estimate + y.error_estimate) + 1e-12);
  }
}

TEST_CASE("C peaks at the midpoint exponent") {
  auto P = ConeParams<double>::make(3, 1, 0.3, 0.5);
  const double window = P.N() - 2 - P.s;
  auto mid = C_constant(P, 0.5 * window);
  CHECK(mid.value == doctest::Approx(hardy_constant(P).value).epsilon(1e-12));
  for (int k = 1; k <= 11; ++k) {
    const double b = window * k / 12.0;
    auto c = C_constant(P, b);
    CAPTURE(b);
    CHECK(mid.value >= c.value - 6 * (mid.error_estimate + c.error_estimate));
    if (k != 6)
      CHECK(mid.value - c.value > 6 * (mid.error_estimate + c.error_estimate));
  }
}

TEST_CASE("C vanishes linearly as the exponent closes") {
  // the window-edge limit: at beta = 1e-4 the normalized value is already
  // below 1e-6 (frozen reference 8.027e-7)
  auto c1 = C_constant(7, 7, 0.5, 1e-4, 1.0);
  CHECK(std::abs(c1.value) < 1e-6);
  CHECK(c1.value > 0.0);

  auto c2 = C_constant(7, 7, 0.5, 2e-4, 1.0);
  CHECK(c2.value / c1.value == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("C rejects exponents outside the open window") {
  auto P = ConeParams<double>::make(4, 3, 0.2, 0.8);
  const double window = P.N() - 2 - P.s;
  CHECK_THROWS_AS(C_constant(P, 0.0), InvalidArgument);
  CHECK_THROWS_AS(C_constant(P, -0.5), InvalidArgument);
  CHECK_THROWS_AS(C_constant(P, window), InvalidArgument);
  CHECK_THROWS_AS(C_constant(P, window + 1), InvalidArgument);
}

TEST_CASE("the radial integrand of C stays finite against the kernel blowup") {
  // the angular slice diverges like (1-r)^{-2-s} toward r = 1, while the
  // weight vanishes quadratically; their product must evaluate finite
  for (auto [m, n] : {std::pair{4, 3}, {3, 1}}) {
    auto P = ConeParams<double>::make(m, n, 0.3, 0.85);
    const double r = 1.0 - 1e-6;
    long long evals = 0;
    detail::AngularResult slice = detail::surface_slice(
        P, r, 1e-6, detail::SurfaceKind::plain, detail::SurfaceTuning{}, evals);
    const double beta = 0.5 * (P.N() - 2 - P.s);
    const double w = std::pow(r, P.s) * (1 - std::pow(r, beta)) *
                     (1 - std::pow(r, beta));
    CAPTURE(m);
    CAPTURE(n);
    CHECK(std::isfinite(slice.value));
    CHECK(slice.value > 0.0);
    CHECK(std::isfinite(w * slice.value));
    // the slice does blow up; only the weighted product is tame
    CHECK(slice.value > 1e6);
    CHECK(w * slice.value < 1e3);
  }
}

TEST_CASE("normalization factor links the two conventions") {
  auto P = ConeParams<double>::make(4, 3, 0.25, 0.83);
  const double pref = normalization_factor(P);
  const double direct = std::pow(1 + P.alpha * P.alpha, 0.5 * (3 + P.s)) *
                        sphere_area(P.m - 2) * sphere_area(P.n - 2);
  CHECK(pref == doctest::Approx(direct).epsilon(1e-13));

  auto norm = hardy_constant(P, false);
  auto raw = hardy_constant(P, true);
  CHECK(raw.value == doctest::Approx(norm.value * pref).epsilon(1e-12));

  // n = 1 divides out the single remaining sphere factor
  auto P1 = ConeParams<double>::make(3, 1, 0.25, 0.5);
  CHECK(normalization_factor(P1) ==
        doctest::Approx(std::pow(1.25, 0.5 * 3.25) * sphere_area(1)).epsilon(1e-13));
}

TEST_CASE("jacobi probe: the principal value route matches the direct route") {
  auto P = ConeParams<double>::make(3, 3, 0.2, 1.0);
  auto probe = jacobi_probe(P, 1.9);
  CHECK(std::abs(probe.pv_term - probe.predicted) <=
        probe.pv_error + probe.predicted_error);
  CHECK(probe.predicted ==
        doctest::Approx(-C_constant(P, 1.9, true).value).epsilon(1e-12));

  auto Q = ConeParams<double>::make(4, 3, 0.3, 0.8341);
  auto probe2 = jacobi_probe(Q, 2.0);
  CHECK(std::abs(probe2.pv_term - probe2.predicted) <=
        probe2.pv_error + probe2.predicted_error);
}

TEST_CASE("stability reports at s = 0 anchors") {
  auto r43 = stability_report(4, 3, 0.0);
  CHECK(r43.H_normalized == doctest::Approx(0.4477).epsilon(2e-3));
  CHECK(r43.A0_normalized == doctest::Approx(0.4288).epsilon(2e-3));
  CHECK(r43.stable);
  CHECK(r43.margin == doctest::Approx(r43.H_value - r43.A0_squared).epsilon(1e-15));
  CHECK(r43.margin > 0.0);

  auto r33 = stability_report(3, 3, 0.0);
  CHECK(r33.H_normalized == doctest::Approx(0.3926990816987242).epsilon(1e-8));
  CHECK(r33.A0_normalized == doctest::Approx(0.4463495408493455).epsilon(1e-8));
  CHECK_FALSE(r33.stable);
}

TEST_CASE("stability report honors a supplied aperture") {
  auto P = ConeParams<double>::make(4, 3, 0.4, 0.8319);
  auto rep = stability_report(P);
  CHECK(rep.params.alpha == 0.8319);
  CHECK(rep.diagnostics.alpha_bracket.first == rep.diagnostics.alpha_bracket.second);
  CHECK_FALSE(rep.stable);
  CHECK(rep.H_normalized < rep.A0_normalized);
}

TEST_CASE("alignment coefficient is nonnegative wherever defined") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> ua(0.3, 1.0), us(0.0, 0.8);
  for (int k = 0; k < 4; ++k) {
    const int m = 2 + int(gen() % 5);
    const int n = 1 + int(gen() % m);
    auto r = a0_squared(ConeParams<double>::make(m, n, us(gen), ua(gen)));
    CAPTURE(m);
    CAPTURE(n);
    CHECK(r.value >= 0.0);
  }
}
