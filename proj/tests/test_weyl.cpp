#include "steklov/errors.hpp"
#include "steklov/weyl.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace steklov;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;

CountingData simple(std::vector<double> e) { return counting_data(std::move(e), 0.0, 10.0); }
}  // namespace

TEST_SUITE("weyl") {
  TEST_CASE("counting function uses a strict inequality") {
    const CountingData d = simple({0, 1, 1, 2});
    CHECK(counting_function(d, 1.5) == 3);
    CHECK(counting_function(d, 1.0) == 1);
    CHECK(counting_function(d, -0.5) == 0);
    CHECK(counting_function(d, 0.0) == 0);
    CHECK(counting_function(d, 2.0001) == 4);
  }

  TEST_CASE("Riesz means") {
    CHECK(riesz_mean(simple({0, 1}), 2.0, 1.0) == Approx(3.0));
    CHECK(riesz_mean(simple({0}), 1.0, 2.0) == Approx(0.5));
    CHECK(riesz_mean(simple({1, 2}), 0.5, 3.0) == 0.0);
    CHECK_THROWS_AS(riesz_mean(simple({0}), 1.0, 0.0), DomainError);
  }

  TEST_CASE("Riesz mean of order one integrates the counting function") {
    const CountingData d = simple({0.2, 0.9, 1.4, 1.41, 3.0});
    const double lam = 3.3;
    double integral = 0.0;
    const int n = 330000;
    for (int i = 0; i < n; ++i) integral += counting_function(d, (i + 0.5) * lam / n) * (lam / n);
    CHECK(riesz_mean(d, lam, 1.0) == Approx(integral).epsilon(1e-5));
  }

  TEST_CASE("leading Weyl coefficient") {
    CHECK(kappa0(unit_square()) == Approx(4.0 / pi));
    CHECK(kappa0(2.0 * pi, 1) == Approx(2.0));
    CHECK(kappa0(1.0, 2) == Approx(1.0 / (4.0 * pi)));
    CHECK(unit_ball_volume(1) == Approx(2.0));
    CHECK(unit_ball_volume(2) == Approx(pi));
    CHECK(unit_ball_volume(3) == Approx(4.0 * pi / 3.0));
  }

  TEST_CASE("synthetic spectrum with N = 3 lambda + 2") {
    // Spacing 1/3 starting at -1/2 makes N equal 3 lambda + 2 at every
    // midpoint between consecutive eigenvalues.
    std::vector<double> e;
    for (int k = 0; k < 300; ++k) e.push_back(-0.5 + k / 3.0);
    const CountingData d = counting_data(e, e.front(), e.back());
    const WeylFit f = fit_weyl(d, 1);
    CHECK(f.kappa0 == Approx(3.0).epsilon(1e-6));
    CHECK(f.kappa1_raw == Approx(2.0).epsilon(1e-6));
    CHECK(f.residual_two < 1e-9);
    REQUIRE(f.kappa1.has_value());
    CHECK(*f.kappa1 == Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("purely linear counting does not report a second coefficient") {
    std::vector<double> e;
    for (int k = 0; k < 200; ++k) e.push_back((k + 0.5) / 4.0);
    const WeylFit f = fit_weyl(counting_data(e, 0.0, e.back()), 1);
    CHECK(f.kappa0 == Approx(4.0).epsilon(1e-6));
    CHECK_FALSE(f.kappa1.has_value());
  }

  TEST_CASE("too narrow a window is a fit error") {
    std::vector<double> e;
    for (int k = 0; k < 100; ++k) e.push_back(k);
    CHECK_THROWS_AS(fit_weyl(counting_data(e, 0, 10), 1, FitWindow{0, 10}), FitError);
    CHECK_THROWS_AS(fit_weyl(counting_data(e, 0, 99), 0), DomainError);
  }

  TEST_CASE("disk spectrum fit") {
    const Spectrum sp = steklov_spectrum(regular_polygon(256), 0.01, 100000);
    const CountingData d = counting_data(sp);
    CHECK(d.boundary_dofs == static_cast<std::size_t>(sp.eigenvectors.rows()));
    const WeylFit f = fit_weyl(d, 1, resolution_window(d, 1.0 / 30.0));
    CHECK(f.kappa0 == Approx(2.0).epsilon(0.05));
    CHECK(std::abs(f.kappa1_raw) < 0.1);
    CHECK_THROWS_AS(resolution_window(d, 0.3), DomainError);
  }

  TEST_CASE("corner sums of the edge coefficient") {
    const EdgeTable t = {{pi / 2, 0.25}, {3 * pi / 2, -0.7}};
    CHECK(kappa1_from_corners(unit_square(), t) == Approx(4 * 0.25));
    CHECK(kappa1_from_corners(l_shape(), t) == Approx(5 * 0.25 - 0.7));
    CHECK(kappa1_from_corners(PolygonalDomain{}, t) == 0.0);
    CHECK_THROWS_AS(kappa1_from_corners(regular_polygon(6), t), DomainError);
  }

  TEST_CASE("relative edge coefficient at pi vanishes") {
    EdgeParams p;
    p.lambda_max = 3.0;
    p.s_max = 2.0;
    p.radius = 8.0;
    p.h_near = 0.1;
    const EdgeCoefficientResult r = edge_coefficient(pi, p, EdgeMode::relative);
    CHECK(r.value == 0.0);
    CHECK(r.diagnostics.variants.size() == 5);
    CHECK(r.diagnostics.max_change == 0.0);
  }

  TEST_CASE("edge parameter validation") {
    EdgeParams p;
    p.s_max = 30.0;
    p.radius = 20.0;
    CHECK_THROWS_AS(edge_coefficient(pi, p), DomainError);
    CHECK_THROWS_AS(edge_mode_from_string("exact"), ConfigError);
    CHECK(edge_mode_from_string(to_string(EdgeMode::literal)) == EdgeMode::literal);
  }

  TEST_CASE("counting csv") {
    std::ostringstream os;
    write_counting_csv(os, simple({0, 1, 1, 2}), {0.5, 1.5});
    CHECK(os.str() == "lambda,N\n0.5,1\n1.5,3\n");
  }
}
