#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace steklov {

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Corners with interior angle in (0, pi) are inner, (pi, 2pi) outer.
enum class CornerClass { inner, outer };

/// A simple polygon, counterclockwise, with every vertex a genuine corner.
struct PolygonalDomain {
  std::vector<Vec2> vertices;
  std::vector<double> corner_angles;
  std::vector<CornerClass> corner_classes;
  double boundary_length = 0.0;

  std::size_t corner_count() const { return vertices.size(); }
};

enum class Symmetry { symmetric, antisymmetric, full };

enum class BisectorCondition { none, neumann, dirichlet };

/// Truncated planar sector {x1 >= |x2| cot(alpha/2), |x| <= radius}.
///
/// For the symmetric and antisymmetric classes the computational domain is
/// the upper half 0 <= theta <= alpha/2 with a Neumann (symmetric) or
/// Dirichlet (antisymmetric) condition on the bisector x2 = 0.
struct SectorDomain {
  double alpha = 0.0;
  double radius = 0.0;
  Symmetry symmetry = Symmetry::symmetric;

  BisectorCondition bisector() const {
    switch (symmetry) {
      case Symmetry::symmetric: return BisectorCondition::neumann;
      case Symmetry::antisymmetric: return BisectorCondition::dirichlet;
      case Symmetry::full: return BisectorCondition::none;
    }
    return BisectorCondition::none;
  }
  double half_angle() const { return 0.5 * alpha; }
  // Unit direction of the upper boundary ray Y2.
  Vec2 upper_ray() const;
  // Unit direction of the lower boundary ray Y1.
  Vec2 lower_ray() const;
};

using Domain = std::variant<PolygonalDomain, SectorDomain>;

/// Signed arc-length coordinate on the boundary.
struct BoundaryChart {
  // Arc-length positions of the corners in traversal order.
  std::vector<double> corner_positions;
  double start = 0.0;
  double total_length = 0.0;

  bool closed = true;
  // Polygon edges, when closed (vertex i to i+1).
  std::vector<Vec2> polygon;
  // Sector data, when open.
  std::optional<SectorDomain> sector;

  /// Arc-length coordinate of a boundary point. Throws GeometryError when the
  /// point is farther than `tol` from the boundary.
  double coordinate(const Vec2& p, double tol = 1e-9) const;
  /// Boundary point at coordinate s.
  Vec2 point(double s) const;
};

constexpr double kCornerTolerance = 1e-9;

PolygonalDomain build_polygon(std::vector<Vec2> vertices);
SectorDomain build_sector(double alpha, double radius, Symmetry symmetry);

BoundaryChart boundary_chart(const PolygonalDomain& domain);
BoundaryChart boundary_chart(const SectorDomain& domain);
BoundaryChart boundary_chart(const Domain& domain);

/// Regular n-gon inscribed in a circle of the given radius, first vertex at
/// angle 0.
PolygonalDomain regular_polygon(int n, double radius = 1.0);
PolygonalDomain unit_square();
PolygonalDomain l_shape();

double signed_area(const std::vector<Vec2>& vertices);
bool point_in_polygon(const std::vector<Vec2>& vertices, const Vec2& p);
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);

std::string to_string(CornerClass c);
std::string to_string(Symmetry s);
Symmetry symmetry_from_string(const std::string& s);
std::string describe(const Domain& domain);

}  // namespace steklov
