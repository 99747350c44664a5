#include "steklov/geometry.hpp"

#include "steklov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); };
  const double scale = std::max({(p2 - p1).norm(), (q2 - q1).norm(), 1e-300});
  const double eps = 1e-14 * scale * scale;
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
      ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)))
    return true;
  auto on_segment = [&](const Vec2& a, const Vec2& b, const Vec2& c, double d) {
    if (std::abs(d) > eps) return false;
    return std::min(a.x(), b.x()) - 1e-14 <= c.x() && c.x() <= std::max(a.x(), b.x()) + 1e-14 &&
           std::min(a.y(), b.y()) - 1e-14 <= c.y() && c.y() <= std::max(a.y(), b.y()) + 1e-14;
  };
  return on_segment(q1, q2, p1, d1) || on_segment(q1, q2, p2, d2) || on_segment(p1, p2, q1, d3) ||
         on_segment(p1, p2, q2, d4);
}

}  // namespace

Vec2 SectorDomain::upper_ray() const { return {std::cos(half_angle()), std::sin(half_angle())}; }
Vec2 SectorDomain::lower_ray() const { return {std::cos(half_angle()), -std::sin(half_angle())}; }

double signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross2(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

bool point_in_polygon(const std::vector<Vec2>& v, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y() > p.y()) != (v[j].y() > p.y())) {
      const double x = v[j].x() + (p.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

PolygonalDomain build_polygon(std::vector<Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n));
  for (const auto& v : vertices)
    if (!v.allFinite()) throw GeometryError("polygon vertex is not finite");

  double scale = 0.0;
  for (const auto& v : vertices) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((vertices[i] - vertices[j]).norm() <= 1e-12 * std::max(scale, 1.0))
        throw GeometryError("polygon vertices " + std::to_string(i) + " and " + std::to_string(j) +
                            " coincide");

  // Corner angles first: collinear triples are reported as degenerate corners
  // before the simplicity check would see them as touching edges.
  if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());

  PolygonalDomain d;
  d.corner_angles.resize(n);
  d.corner_classes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = vertices[(i + n - 1) % n];
    const Vec2& cur = vertices[i];
    const Vec2& next = vertices[(i + 1) % n];
    const Vec2 e_in = cur - prev;
    const Vec2 e_out = next - cur;
    const double turn = std::atan2(cross2(e_in, e_out), e_in.dot(e_out));
    const double alpha = kPi - turn;
    if (std::abs(alpha - kPi) < kCornerTolerance || alpha < kCornerTolerance ||
        alpha > 2.0 * kPi - kCornerTolerance) {
      std::ostringstream os;
      os << "degenerate corner at vertex " << i << " (interior angle " << alpha << " rad)";
      throw DegenerateCornerError(os.str());
    }
    d.corner_angles[i] = alpha;
    d.corner_classes[i] = alpha < kPi ? CornerClass::inner : CornerClass::outer;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]))
        throw GeometryError("polygon is not simple: edges " + std::to_string(i) + " and " +
                            std::to_string(j) + " intersect");
    }
  }

  d.boundary_length = 0.0;
  for (std::size_t i = 0; i < n; ++i) d.boundary_length += (vertices[(i + 1) % n] - vertices[i]).norm();
  d.vertices = std::move(vertices);
  return d;
}

SectorDomain build_sector(double alpha, double radius, Symmetry symmetry) {
  if (!(alpha > 0.0) || alpha > 2.0 * kPi + 1e-15)
    throw GeometryError("sector opening angle must lie in (0, 2pi], got " + std::to_string(alpha));
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw GeometryError("sector truncation radius must be positive");
  return SectorDomain{std::min(alpha, 2.0 * kPi), radius, symmetry};
}

BoundaryChart boundary_chart(const PolygonalDomain& domain) {
  BoundaryChart c;
  c.closed = true;
  c.polygon = domain.vertices;
  double s = 0.0;
  const std::size_t n = domain.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    c.corner_positions.push_back(s);
    s += (domain.vertices[(i + 1) % n] - domain.vertices[i]).norm();
  }
  c.start = 0.0;
  c.total_length = s;
  return c;
}

BoundaryChart boundary_chart(const SectorDomain& domain) {
  BoundaryChart c;
  c.closed = false;
  c.sector = domain;
  c.corner_positions = {0.0};
  if (domain.symmetry == Symmetry::full) {
    c.start = -domain.radius;
    c.total_length = 2.0 * domain.radius;
  } else {
    c.start = 0.0;
    c.total_length = domain.radius;
  }
  return c;
}

BoundaryChart boundary_chart(const Domain& domain) {
  return std::visit([](const auto& d) { return boundary_chart(d); }, domain);
}

double BoundaryChart::coordinate(const Vec2& p, double tol) const {
  if (closed) {
    double best = std::numeric_limits<double>::infinity();
    double s_best = 0.0;
    double s = 0.0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = polygon[i];
      const Vec2& b = polygon[(i + 1) % n];
      const Vec2 d = b - a;
      const double len = d.norm();
      const double t = std::clamp((p - a).dot(d) / (len * len), 0.0, 1.0);
      const double dist = (p - (a + t * d)).norm();
      if (dist < best - 1e-15) {
        best = dist;
        s_best = s + t * len;
      }
      s += len;
    }
    if (best > tol) throw GeometryError("point is not on the polygon boundary");
    return s_best >= total_length ? s_best - total_length : s_best;
  }
  const SectorDomain& sd = *sector;
  const Vec2 up = sd.upper_ray();
  const Vec2 lo = sd.lower_ray();
  const double r = p.norm();
  const double du = (p - std::max(0.0, p.dot(up)) * up).norm();
  const double dl = (p - std::max(0.0, p.dot(lo)) * lo).norm();
  if (sd.symmetry != Symmetry::full) {
    if (du > tol || r > sd.radius + tol) throw GeometryError("point is not on the sector boundary ray");
    return r;
  }
  if (std::min(du, dl) > tol || r > sd.radius + tol)
    throw GeometryError("point is not on the sector boundary");
  if (r <= tol) return 0.0;
  return du <= dl ? r : -r;
}

Vec2 BoundaryChart::point(double s) const {
  if (closed) {
    double t = std::fmod(s - start, total_length);
    if (t < 0) t += total_length;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = polygon[i];
      const Vec2& b = polygon[(i + 1) % n];
      const double len = (b - a).norm();
      if (t <= len || i + 1 == n) return a + std::min(t / len, 1.0) * (b - a);
      t -= len;
    }
  }
  const SectorDomain& sd = *sector;
  return s >= 0 ? Vec2(s * sd.upper_ray()) : Vec2(-s * sd.lower_ray());
}

PolygonalDomain regular_polygon(int n, double radius) {
  std::vector<Vec2> v;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    v.emplace_back(radius * std::cos(t), radius * std::sin(t));
  }
  return build_polygon(std::move(v));
}

PolygonalDomain unit_square() { return build_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

PolygonalDomain l_shape() { return build_polygon({{0, 0}, {2, 0}, {2, 2}, {1, 2}, {1, 1}, {0, 1}}); }

std::string to_string(CornerClass c) { return c == CornerClass::inner ? "inner" : "outer"; }

std::string to_string(Symmetry s) {
  switch (s) {
    case Symmetry::symmetric: return "symmetric";
    case Symmetry::antisymmetric: return "antisymmetric";
    case Symmetry::full: return "full";
  }
  return "?";
}

Symmetry symmetry_from_string(const std::string& s) {
  if (s == "symmetric") return Symmetry::symmetric;
  if (s == "antisymmetric") return Symmetry::antisymmetric;
  if (s == "full") return Symmetry::full;
  throw GeometryError("unknown symmetry class '" + s + "'");
}

std::string describe(const Domain& domain) {
  std::ostringstream os;
  os.precision(12);
  if (const auto* p = std::get_if<PolygonalDomain>(&domain)) {
    os << "polygon(" << p->vertices.size() << " vertices, perimeter " << p->boundary_length << ")";
  } else {
    const auto& s = std::get<SectorDomain>(domain);
    os << "sector(alpha=" << s.alpha << ", R=" << s.radius << ", " << to_string(s.symmetry) << ")";
  }
  return os.str();
}

}  // namespace steklov
