#include "steklov/errors.hpp"
#include "steklov/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace steklov;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;

double total_area(const Mesh& m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.triangle_area(t);
  return a;
}

// Every edge is shared by one (boundary) or two (interior) triangles, and the
// one-sided edges are exactly the recorded boundary edges.
void check_conforming(const Mesh& m) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : m.triangles) {
    const Vec2 &a = m.nodes[static_cast<std::size_t>(t[0])], &b = m.nodes[static_cast<std::size_t>(t[1])],
               &c = m.nodes[static_cast<std::size_t>(t[2])];
    CHECK(cross2(b - a, c - a) > 0.0);
    for (int k = 0; k < 3; ++k) {
      int i = t[static_cast<std::size_t>(k)], j = t[static_cast<std::size_t>((k + 1) % 3)];
      if (i > j) std::swap(i, j);
      ++uses[{i, j}];
    }
  }
  std::size_t once = 0;
  for (const auto& [e, n] : uses) {
    CHECK(n <= 2);
    if (n == 1) ++once;
  }
  CHECK(once == m.boundary_edges.size());
  for (const auto& e : m.boundary_edges) {
    const auto key = std::minmax(e.nodes[0], e.nodes[1]);
    CHECK(uses[{key.first, key.second}] == 1);
  }
}
}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("coarse square mesh keeps the four corners") {
    const Mesh m = triangulate(unit_square(), 0.5);
    for (const Vec2& c : unit_square().vertices) {
      bool found = false;
      for (const Vec2& p : m.nodes) found = found || (p - c).norm() < 1e-14;
      CHECK(found);
    }
    CHECK(total_area(m) == Approx(1.0).epsilon(1e-12));
    check_conforming(m);
  }

  TEST_CASE("L-shape at h = 0.1 has minimum angle at least 20 degrees") {
    const Mesh m = triangulate(l_shape(), 0.1);
    const MeshQuality q = mesh_quality(m);
    CHECK(q.min_angle_deg >= 20.0);
    CHECK(total_area(m) == Approx(3.0).epsilon(1e-12));
    check_conforming(m);
    for (const auto& e : m.boundary_edges) CHECK(e.marker == EdgeMarker::steklov);
    double longest = 0.0;
    for (const auto& e : m.boundary_edges)
      longest = std::max(longest, (m.nodes[static_cast<std::size_t>(e.nodes[0])] - m.nodes[static_cast<std::size_t>(e.nodes[1])]).norm());
    CHECK(longest <= 0.1 + 1e-12);
  }

  TEST_CASE("half sector marks bisector, ray and arc edges") {
    const double alpha = pi / 2, R = 20.0;
    const Mesh m = triangulate(build_sector(alpha, R, Symmetry::symmetric), 2.0);
    check_conforming(m);
    CHECK(total_area(m) == Approx(0.5 * (alpha / 2) * R * R).epsilon(0.01));
    int bis = 0, arc = 0, ray = 0;
    const Vec2 up(std::cos(alpha / 2), std::sin(alpha / 2));
    for (const auto& e : m.boundary_edges) {
      const Vec2 mid = 0.5 * (m.nodes[static_cast<std::size_t>(e.nodes[0])] + m.nodes[static_cast<std::size_t>(e.nodes[1])]);
      if (std::abs(mid.y()) < 1e-12) {
        CHECK(e.marker == EdgeMarker::bisector_neumann);
        ++bis;
      } else if (std::abs(cross2(up, mid)) < 1e-9) {
        CHECK(e.marker == EdgeMarker::steklov);
        ++ray;
      } else {
        // The arc is a polygon through break points on the circle.
        const double r = m.nodes[static_cast<std::size_t>(e.nodes[0])].norm();
        CHECK(r <= R + 1e-12);
        CHECK(r >= 0.99 * R);
        CHECK(e.marker == EdgeMarker::artificial_dirichlet);
        ++arc;
      }
    }
    CHECK(bis > 0);
    CHECK(arc > 0);
    CHECK(ray > 0);
  }

  TEST_CASE("antisymmetric half sector has a Dirichlet bisector") {
    const Mesh m = triangulate(build_sector(3 * pi / 2, 10.0, Symmetry::antisymmetric), 1.0);
    int bis = 0;
    for (const auto& e : m.boundary_edges)
      if (e.marker == EdgeMarker::bisector_dirichlet) ++bis;
    CHECK(bis > 0);
    check_conforming(m);
  }

  TEST_CASE("graded sector mesh refines toward the steklov rays") {
    GradedSizing g;
    g.h_near = 0.05;
    g.grading = 0.25;
    g.h_far = 2.0;
    const Mesh m = triangulate_graded(build_sector(2 * pi / 3, 20.0, Symmetry::full), g);
    check_conforming(m);
    double near_len = 0.0;
    for (const auto& e : m.boundary_edges)
      if (e.marker == EdgeMarker::steklov) {
        const Vec2& a = m.nodes[static_cast<std::size_t>(e.nodes[0])];
        const Vec2& b = m.nodes[static_cast<std::size_t>(e.nodes[1])];
        if (a.norm() < 1.0) near_len = std::max(near_len, (a - b).norm());
      }
    CHECK(near_len <= 0.05 + 1e-12);
    CHECK(mesh_quality(m).min_angle_unconstrained_deg >= 20.0);
  }

  TEST_CASE("h_max larger than the domain is a refinement error") {
    CHECK_THROWS_AS(triangulate(unit_square(), 5.0), MeshError);
    CHECK_THROWS_AS(triangulate(unit_square(), -1.0), MeshError);
  }

  TEST_CASE("node cap is enforced") {
    MeshOptions o;
    o.h_max = 0.01;
    o.max_nodes = 100;
    CHECK_THROWS_AS(triangulate(unit_square(), o), MeshError);
  }

  TEST_CASE("mesh export lists every section") {
    const Mesh m = triangulate(unit_square(), 0.5);
    std::ostringstream os;
    write_mesh(os, m);
    const std::string s = os.str();
    CHECK(s.find("nodes") != std::string::npos);
    CHECK(s.find("triangles") != std::string::npos);
    CHECK(s.find("edges") != std::string::npos);
  }
}
