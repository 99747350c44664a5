#include "steklov/errors.hpp"
#include "steklov/sector.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace steklov;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_SUITE("sector") {
  TEST_CASE("right-angle sector bottom eigenvalue is sin(pi/4)") {
    const SectorSpectrumResult r = sector_spectrum(pi / 2, Symmetry::symmetric, 1e-3);
    const auto d = r.discrete();
    REQUIRE(d.size() == 1);
    CHECK(d.front() == Approx(std::sin(pi / 4)).epsilon(0.01));
    CHECK(r.radius_final >= r.radii_tried.front());
  }

  TEST_CASE("half-plane has no discrete spectrum") {
    const SectorSpectrumResult r = sector_spectrum(pi, Symmetry::symmetric, 1e-3);
    CHECK(r.discrete().empty());
    for (const auto& e : r.eigen) CHECK(e.tau >= 1.0 - 1e-3);
  }

  TEST_CASE("antisymmetric class at pi/2 stays above the threshold") {
    const SectorSpectrumResult r = sector_spectrum(pi / 2, Symmetry::antisymmetric, 1e-3);
    CHECK(r.discrete().empty());
    for (const auto& e : r.eigen) CHECK(e.tau >= 1.0 - 1e-3);
  }

  TEST_CASE("bottom eigenvalue near pi approaches the threshold") {
    CHECK(bottom_eigenvalue(0.95 * pi, 1e-4) == Approx(std::sin(0.475 * pi)).epsilon(0.01));
  }

  TEST_CASE("bottom eigenvalue at pi/3") { CHECK(bottom_eigenvalue(pi / 3, 1e-3) == Approx(0.5).epsilon(0.01)); }

  TEST_CASE("symmetric monotonicity on a small grid") {
    const auto prof = eigenvalue_monotonicity_profile({pi / 3, pi / 6, pi / 4}, Symmetry::symmetric, 1e-3);
    REQUIRE(prof.size() == 3);
    const double expect[] = {std::sin(pi / 12), std::sin(pi / 8), std::sin(pi / 6)};
    for (int i = 0; i < 3; ++i) {
      REQUIRE(prof[static_cast<std::size_t>(i)].bottom.has_value());
      CHECK(*prof[static_cast<std::size_t>(i)].bottom == Approx(expect[i]).epsilon(0.01));
    }
    CHECK(*prof[0].bottom < *prof[1].bottom);
    CHECK(*prof[1].bottom < *prof[2].bottom);
  }

  TEST_CASE("antisymmetric profile reports no discrete spectrum") {
    for (const auto& p : eigenvalue_monotonicity_profile({pi / 3, pi / 2}, Symmetry::antisymmetric, 1e-3))
      CHECK_FALSE(p.bottom.has_value());
  }

  TEST_CASE("repeated alpha gives identical output") {
    const auto a = sector_spectrum(pi / 2, Symmetry::symmetric, 1e-3);
    const auto b = sector_spectrum(pi / 2, Symmetry::symmetric, 1e-3);
    std::ostringstream x, y;
    write_sector_csv(x, a);
    write_sector_csv(y, b);
    CHECK(x.str() == y.str());
  }

  TEST_CASE("full class merges both symmetry classes") {
    const auto r = sector_spectrum(pi / 2, Symmetry::full, 1e-3);
    CHECK(r.solves.size() == 2);
    CHECK(r.discrete().size() == 1);
    for (std::size_t i = 1; i < r.eigen.size(); ++i) CHECK(r.eigen[i - 1].tau <= r.eigen[i].tau);
  }

  TEST_CASE("robin map") {
    CHECK(robin_map(1.0, 2.0) == Approx(-4.0));
    CHECK(robin_map(0.5, 1.0) == Approx(-4.0));
    const double t = std::sin(pi / 5);
    CHECK(robin_map(t, 1.0) == Approx(-1.0 / (t * t)));
    CHECK_THROWS_AS(robin_map(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(robin_map(-1.0, 1.0), DomainError);
  }

  TEST_CASE("argument validation") {
    CHECK_THROWS_AS(sector_spectrum(0.0, Symmetry::symmetric, 1e-3), DomainError);
    CHECK_THROWS_AS(sector_spectrum(1.0, Symmetry::symmetric, 0.0), DomainError);
    CHECK_THROWS_AS(bottom_eigenvalue(pi), DomainError);
    CHECK_THROWS_AS(count_discrete(1.5 * pi, 1e-3), DomainError);
  }

  TEST_CASE("relative kernel at pi vanishes") {
    const auto e = spectral_kernel(pi, {1.5, 3.0}, {-2.0, 0.5, 3.0}, KernelMode::relative, 20.0, 0.1);
    CHECK(e.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("raw half-plane kernel matches the line density of states") {
    // sqrt(D^2 + 1) on the line: e(s, s, lambda) = sqrt(lambda^2 - 1) / pi.
    const KernelBasis b = kernel_basis(pi, 40.0, 0.05);
    std::vector<double> s;
    for (double x = 5.0; x <= 15.0; x += 0.05) s.push_back(x);
    const std::vector<double> lam = {2.0, 3.0};
    const Eigen::MatrixXd e = spectral_kernel(b, b, lam, s, KernelMode::raw);
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double l = lam[static_cast<std::size_t>(i)];
      CHECK(e.row(i).mean() == Approx(std::sqrt(l * l - 1.0) / pi).epsilon(0.05));
    }
    CHECK_THROWS_AS(spectral_kernel(b, b, {0.5}, s, KernelMode::raw), DomainError);
  }

  TEST_CASE("relative kernel refuses a mismatched reference") {
    const KernelBasis a = kernel_basis(pi / 2, 10.0, 0.2);
    const KernelBasis ref = kernel_basis(pi, 12.0, 0.2);
    CHECK_THROWS_AS(spectral_kernel(a, ref, {2.0}, {1.0}, KernelMode::relative), ConfigError);
  }

  TEST_CASE("sector csv columns") {
    const auto r = sector_spectrum(pi / 2, Symmetry::symmetric, 1e-3);
    std::ostringstream os;
    write_sector_csv(os, r);
    const std::string s = os.str();
    CHECK(s.rfind("alpha,class,k,tau_k,R_final,stable_flag,label\n", 0) == 0);
    CHECK(s.find("discrete") != std::string::npos);
  }
}
