#include "steklov/errors.hpp"
#include "steklov/identities.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace steklov;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;
using S = SolutionSymmetry;

std::vector<double> symmetric_grid(double half, int n) {
  std::vector<double> g;
  for (int i = -n; i <= n; ++i) g.push_back(half * i / n);
  return g;
}
}  // namespace

TEST_SUITE("identities") {
  TEST_CASE("e^-x1 solves the equation to machine precision") {
    const ManufacturedSolution w = manufactured_solution({{1.0, Vec2(1, 0)}}, pi / 2, S::symmetric);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 50; ++i) {
      const Vec2 x(u(rng), u(rng) - 1.5);
      CHECK(std::abs(w.operator_residual(x)) <= 1e-15 * std::max(1.0, std::exp(-x.x())) * 4);
      CHECK(w.value(x) == Approx(std::exp(-x.x())));
      CHECK(w.gradient(x).x() == Approx(-std::exp(-x.x())));
    }
  }

  TEST_CASE("K0 sources solve the equation away from the source") {
    const ManufacturedSolution w = source_pair(1.5 * pi, 2.0, pi - 0.3, S::symmetric);
    for (const Vec2& x : {Vec2(1.0, 0.3), Vec2(0.2, -0.4), Vec2(-1.0, 0.1), Vec2(3.0, 2.0)}) {
      const double scale = std::abs(w.hessian(x).trace()) + std::abs(w.value(x));
      CHECK(std::abs(w.operator_residual(x)) <= 1e-10 * scale);
    }
  }

  TEST_CASE("gradient and hessian agree with finite differences") {
    const ManufacturedSolution w = source_pair(pi, 2.0, 2.2, S::antisymmetric);
    const Vec2 x(0.7, 0.4);
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      const Vec2 e = k == 0 ? Vec2(h, 0) : Vec2(0, h);
      CHECK(w.gradient(x)(k) == Approx((w.value(x + e) - w.value(x - e)) / (2 * h)).epsilon(1e-7));
      const Vec2 dg = (w.gradient(x + e) - w.gradient(x - e)) / (2 * h);
      CHECK(w.hessian(x)(0, k) == Approx(dg(0)).epsilon(1e-6));
      CHECK(w.hessian(x)(1, k) == Approx(dg(1)).epsilon(1e-6));
    }
    const FieldSample t = w.theta_sample(x);
    CHECK(t.value == Approx(x.x() * w.gradient(x).y() - x.y() * w.gradient(x).x()));
  }

  TEST_CASE("pair symmetry tags") {
    const ManufacturedSolution s = exponential_pair(pi / 2, 0.3, S::symmetric);
    CHECK(s.symmetry == S::symmetric);
    CHECK(s.value(Vec2(0.5, 0.2)) == Approx(s.value(Vec2(0.5, -0.2))));
    const ManufacturedSolution a = exponential_pair(pi / 2, 0.3, S::antisymmetric);
    CHECK(a.symmetry == S::antisymmetric);
    for (double x1 : {0.0, 0.3, 1.0, 4.0}) CHECK(std::abs(a.value(Vec2(x1, 0.0))) < 1e-15);
    CHECK_THROWS_AS(manufactured_solution({{1.0, Vec2(std::cos(0.3), std::sin(0.3))}}, pi / 2, S::symmetric),
                    ContractError);
  }

  TEST_CASE("construction errors") {
    CHECK_THROWS_AS(manufactured_solution({{1.0, Vec2(2, 0)}}, pi / 2, S::none), ContractError);
    CHECK_THROWS_AS(manufactured_solution({{1.0, Vec2(0, 1)}}, pi / 2, S::none), DomainError);
    CHECK_THROWS_AS(manufactured_solution({}, pi / 2, S::none), ContractError);
    CHECK_THROWS_AS(source_solution({{1.0, Vec2(2, 0)}}, pi / 2, S::none), DomainError);
  }

  TEST_CASE("multiplier and rotation identities on e^-x1 at pi/2") {
    const ManufacturedSolution w = manufactured_solution({{1.0, Vec2(1, 0)}}, pi / 2, S::symmetric);
    CHECK(rellich_residual(w, IdentityId::multiplier_x1).residual <= 1e-8);
    CHECK(rellich_residual(w, IdentityId::bisector_symmetric).residual <= 1e-8);
    CHECK(rellich_residual(w, IdentityId::rotation_symmetric).residual <= 1e-8);
    CHECK_THROWS_AS(rellich_residual(w, IdentityId::bisector_antisymmetric), ContractError);
  }

  TEST_CASE("antisymmetric pair at 2pi/3") {
    const ManufacturedSolution w = exponential_pair(2 * pi / 3, 0.2, S::antisymmetric);
    const IdentityResidual r = rellich_residual(w, IdentityId::bisector_antisymmetric);
    CHECK(r.residual <= 1e-8);
    CHECK(r.scale > 1e-3);
    CHECK(rellich_residual(w, IdentityId::multiplier_normal).residual <= 1e-8);
  }

  TEST_CASE("a wrong identity is detected") {
    // The multiplier identity with a non-solution field must not balance.
    const ManufacturedSolution w = exponential_pair(pi / 2, 0.3, S::symmetric);
    ManufacturedSolution broken = w;
    broken.exp_terms[1].amplitude = 1.0;
    broken.exp_terms[1].direction = Vec2(std::cos(0.31), -std::sin(0.31));
    broken.exp_terms[1].direction.normalize();
    broken.symmetry = S::none;
    CHECK(rellich_residual(broken, IdentityId::multiplier_x1).residual <= 1e-8);
    broken.exp_terms[0].direction = Vec2(1.0, 0.05);  // no longer unit: not a solution
    CHECK(rellich_residual(broken, IdentityId::multiplier_x1).residual > 1e-6);
  }

  TEST_CASE("flux of the zero solution vanishes") {
    const ManufacturedSolution w = manufactured_solution({{0.0, Vec2(1, 0)}}, pi / 2, S::symmetric);
    const FluxProfile f = theta_flux_profile(w, {-0.5, 0.0, 0.5});
    for (double v : f.values) CHECK(v == 0.0);
  }

  TEST_CASE("theta flux is constant across rays") {
    const ManufacturedSolution w = exponential_pair(pi / 2, 0.3, S::antisymmetric);
    const FluxProfile f = theta_flux_profile(w, symmetric_grid(pi / 4, 4));
    CHECK(f.scale > 0.0);
    CHECK(f.deviation <= 1e-8);
    CHECK(f.slab_deviation <= 1e-8);
    CHECK_THROWS_AS(theta_flux_profile(w, {1.0}), DomainError);
  }

  TEST_CASE("energy defect of e^-x1 is zero") {
    // e^-x1 only decays inside sectors narrower than the half-plane.
    for (double a : {pi / 6, pi / 3, pi / 2, 2 * pi / 3, 0.9 * pi}) {
      const ManufacturedSolution w = manufactured_solution({{1.0, Vec2(1, 0)}}, a, S::symmetric);
      const EnergyDefect e = energy_defect(w);
      CHECK(std::abs(e.defect) <= 1e-14 * e.norm);
    }
  }

  TEST_CASE("energy defect of an exponential pair matches the closed form") {
    // |grad w|^2 - w^2 = -+2 (1 - cos 2phi) e^{-2 cos(phi) x1}; integrating
    // e^{-c x1} over the sector gives 2 tan(alpha/2) / c^2.
    const double alpha = pi / 2, phi = 0.3;
    const double exact = 2.0 * std::pow(std::tan(phi), 2) * std::tan(alpha / 2);
    const EnergyDefect a = energy_defect(exponential_pair(alpha, phi, S::antisymmetric));
    CHECK(a.defect == Approx(exact).epsilon(1e-10));
    CHECK(a.defect > 0.0);
    const EnergyDefect s = energy_defect(exponential_pair(alpha, phi, S::symmetric));
    CHECK(s.defect == Approx(-exact).epsilon(1e-10));
  }

  TEST_CASE("symmetric source pair at 3pi/2 has positive defect") {
    const EnergyDefect e = energy_defect(source_pair(1.5 * pi, 2.0, pi - 0.3, S::symmetric));
    CHECK(e.defect > e.error_bar);
  }

  TEST_CASE("slab profile is convex with its minimum on the bisector") {
    const ManufacturedSolution w = exponential_pair(2 * pi / 3, 0.25, S::symmetric);
    const double sigma = (2 * pi / 3) / 8;
    const std::vector<double> grid = symmetric_grid(pi / 3 - sigma, 4);
    for (bool theta : {false, true}) {
      const ConvexityProfile p = beta_convexity_profile(w, sigma, grid, theta);
      CHECK(p.convex);
      CHECK(p.minimum_at_zero);
    }
    CHECK_THROWS_AS(beta_convexity_profile(w, sigma, {pi / 3}), DomainError);
    CHECK_THROWS_AS(beta_convexity_profile(w, 0.0, {0.0}), DomainError);
  }

  TEST_CASE("e^-x1 is rejected on the half-plane") {
    CHECK_THROWS_AS(manufactured_solution({{1.0, Vec2(1, 0)}}, pi, S::symmetric), DomainError);
  }

  TEST_CASE("battery has twelve cases with consistent tags") {
    const auto b = identity_battery();
    CHECK(b.size() == 12);
    for (const auto& w : b) CHECK_FALSE(w.id.empty());
  }

  TEST_CASE("identity names round trip") {
    for (IdentityId id : {IdentityId::multiplier_x1, IdentityId::multiplier_normal, IdentityId::bisector_antisymmetric,
                          IdentityId::bisector_symmetric, IdentityId::rotation_antisymmetric,
                          IdentityId::rotation_symmetric})
      CHECK(identity_from_string(to_string(id)) == id);
    CHECK_THROWS_AS(identity_from_string("nope"), ConfigError);
  }

  TEST_CASE("eigen equality is not applicable without discrete spectrum") {
    CHECK_FALSE(check_eigen_equality(pi).applicable);
    CHECK_FALSE(check_eigen_equality(1.5 * pi).applicable);
  }

  TEST_CASE("finite element energy defect of a bump is finite and refines") {
    const EnergyDefect e = energy_defect_fe(pi / 2, Symmetry::antisymmetric,
                                            [](double s) { return std::exp(-4.0 * (s - 1.0) * (s - 1.0)); }, 10.0, 0.1);
    CHECK(std::isfinite(e.defect));
    CHECK(e.norm > 0.0);
    CHECK(e.defect >= -e.error_bar);
    CHECK_THROWS_AS(energy_defect_fe(pi / 2, Symmetry::full, [](double) { return 1.0; }), ContractError);
  }

  TEST_CASE("suite json layout") {
    const std::vector<SuiteEntry> e = {{"multiplier_x1", 1.0, "w", 1e-12, 1e-8, true}};
    const Json j = suite_to_json(e);
    REQUIRE(j.is_array());
    CHECK(j[0]["identity_id"] == "multiplier_x1");
    CHECK(j[0]["pass"] == true);
    CHECK(j[0].size() == 6);
  }
}
