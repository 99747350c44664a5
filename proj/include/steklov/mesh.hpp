#pragma once

#include "steklov/geometry.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace steklov {

enum class EdgeMarker { steklov, bisector_dirichlet, bisector_neumann, artificial_dirichlet };

std::string to_string(EdgeMarker m);

struct BoundaryEdge {
  std::array<int, 2> nodes;
  EdgeMarker marker;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  // Nodes that came from the input geometry (polygon corners, sector apex,
  // arc break points).
  std::vector<int> corner_nodes;
  // Per node: -1 interior, -2 input vertex, otherwise the input segment the
  // node was placed on.
  std::vector<int> node_segment;
  // Input segment end nodes.
  std::vector<std::array<int, 2>> segment_ends;
  double h_max = 0.0;

  std::size_t node_count() const { return nodes.size(); }
  double triangle_area(std::size_t t) const;
};

using SizingField = std::function<double(const Vec2&)>;

struct MeshOptions {
  double h_max = 0.1;
  // Optional local size; the effective size is min(h_max, sizing(x)).
  SizingField sizing;
  double min_angle_deg = 25.0;
  std::size_t max_nodes = 2'000'000;
};

/// Straight-line segment of a planar straight-line graph.
struct PslgSegment {
  int a;
  int b;
  EdgeMarker marker;
  // Interior points placed along the segment before meshing, as parameters
  // in (0,1) measured from a.
  std::vector<double> splits;
};

struct Pslg {
  std::vector<Vec2> points;
  std::vector<PslgSegment> segments;
};

/// Constrained Delaunay refinement of a closed PSLG whose segments bound a
/// single simply connected region.
Mesh refine_pslg(const Pslg& pslg, const MeshOptions& options);

/// Uniform-size triangulation of a polygon or (half-)sector.
Mesh triangulate(const Domain& domain, double h_max);
Mesh triangulate(const Domain& domain, const MeshOptions& options);

/// Boundary-graded sizing: h_near on the steklov boundary growing with slope
/// `grading` up to h_far.
struct GradedSizing {
  double h_near = 0.05;
  double grading = 0.3;
  double h_far = 1.0;
  // Growth of the boundary size with distance from the sector apex
  // (sectors only; 0 keeps the steklov boundary uniform).
  double ray_grading = 0.0;
};

Mesh triangulate_graded(const Domain& domain, const GradedSizing& sizing,
                        std::size_t max_nodes = 2'000'000);

struct MeshQuality {
  double min_angle_deg = 0.0;
  // Minimum over triangles whose smallest angle is not forced by an input
  // corner sharper than 60 degrees.
  double min_angle_unconstrained_deg = 0.0;
  double min_area = 0.0;
  std::size_t exempt_triangles = 0;
};

MeshQuality mesh_quality(const Mesh& mesh);

/// Plain-text export: a `nodes` section (index x y), a `triangles` section
/// (index i j k) and an `edges` section (index i j marker).
void write_mesh(std::ostream& os, const Mesh& mesh);

}  // namespace steklov
