#include "steklov/mesh.hpp"

#include "steklov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace steklov {

std::string to_string(EdgeMarker m) {
  switch (m) {
    case EdgeMarker::steklov: return "steklov";
    case EdgeMarker::bisector_dirichlet: return "bisector_dirichlet";
    case EdgeMarker::bisector_neumann: return "bisector_neumann";
    case EdgeMarker::artificial_dirichlet: return "artificial_dirichlet";
  }
  return "?";
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& v = triangles[t];
  return 0.5 * cross2(nodes[v[1]] - nodes[v[0]], nodes[v[2]] - nodes[v[0]]);
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSharpCornerDeg = 60.0;

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }

// Positive when d lies inside the circumcircle of the counterclockwise a, b, c.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ba = b - a, ca = c - a;
  const double d = 2.0 * cross2(ba, ca);
  const double b2 = ba.squaredNorm(), c2 = ca.squaredNorm();
  return a + Vec2(ca.y() * b2 - ba.y() * c2, ba.x() * c2 - ca.x() * b2) / d;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double angle_at(const Vec2& z, const Vec2& a, const Vec2& b) {
  const Vec2 u = (a - z).normalized(), v = (b - z).normalized();
  return std::acos(std::clamp(u.dot(v), -1.0, 1.0));
}

struct Topology {
  const std::vector<Vec2>* pts;
  const std::vector<int>* node_segment;
  const std::vector<std::array<int, 2>>* segment_ends;

  int shared_end(int s1, int s2) const {
    const auto& e1 = (*segment_ends)[s1];
    const auto& e2 = (*segment_ends)[s2];
    for (int x : e1)
      for (int y : e2)
        if (x == y) return x;
    return -1;
  }
  double segment_angle(int s1, int s2, int z) const {
    const auto& e1 = (*segment_ends)[s1];
    const auto& e2 = (*segment_ends)[s2];
    const int o1 = e1[0] == z ? e1[1] : e1[0];
    const int o2 = e2[0] == z ? e2[1] : e2[0];
    return angle_at((*pts)[z], (*pts)[o1], (*pts)[o2]) * 180.0 / kPi;
  }
  // Segment through which node n reaches input vertex z, or -1.
  int segment_towards(int n, int z) const {
    const int s = (*node_segment)[n];
    if (s >= 0) {
      const auto& e = (*segment_ends)[s];
      return (e[0] == z || e[1] == z) ? s : -1;
    }
    if (s == -2) {
      for (std::size_t k = 0; k < segment_ends->size(); ++k) {
        const auto& e = (*segment_ends)[k];
        if ((e[0] == z && e[1] == n) || (e[1] == z && e[0] == n)) return static_cast<int>(k);
      }
    }
    return -1;
  }

  // A triangle whose smallest angle is dictated by an input corner sharper
  // than 60 degrees; refinement cannot improve these.
  bool exempt(const std::array<int, 3>& v) const {
    const auto& P = *pts;
    std::array<double, 3> len;
    for (int i = 0; i < 3; ++i) len[i] = (P[v[(i + 1) % 3]] - P[v[(i + 2) % 3]]).norm();
    const int k = static_cast<int>(std::min_element(len.begin(), len.end()) - len.begin());
    const int w = v[k], a = v[(k + 1) % 3], b = v[(k + 2) % 3];
    if ((*node_segment)[w] == -2) {
      const int sa = segment_towards(a, w), sb = segment_towards(b, w);
      if (sa >= 0 && sb >= 0 && sa != sb && segment_angle(sa, sb, w) < kSharpCornerDeg) return true;
    }
    const int sa = (*node_segment)[a], sb = (*node_segment)[b];
    if (sa >= 0 && sb >= 0 && sa != sb) {
      const int z = shared_end(sa, sb);
      if (z >= 0 && segment_angle(sa, sb, z) < kSharpCornerDeg) {
        const double ra = (P[a] - P[z]).norm(), rb = (P[b] - P[z]).norm();
        if (ra <= 2.0 * rb && rb <= 2.0 * ra) return true;
      }
    }
    return false;
  }
};

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};
  std::array<bool, 3> con{false, false, false};
  bool alive = true;
};

struct SubSeg {
  int input;
  EdgeMarker marker;
};

struct Cavity {
  std::vector<int> tris;
  std::vector<std::pair<int, int>> boundary;
  bool ok = false;
};

class Refiner {
 public:
  Refiner(const Pslg& pslg, const MeshOptions& options) : opt_(options) {
    if (pslg.points.size() < 3) throw MeshError("PSLG needs at least three points");
    pts_ = pslg.points;
    n_input_ = static_cast<int>(pts_.size());
    node_segment_.assign(pts_.size(), -2);
    for (const auto& s : pslg.segments) segment_ends_.push_back({s.a, s.b});
    segments_ = pslg.segments;
    topo_ = Topology{&pts_, &node_segment_, &segment_ends_};
    const double deg = options.min_angle_deg * kPi / 180.0;
    skinny_ratio_ = 1.0 / (2.0 * std::sin(deg));
  }

  Mesh run() {
    build_super();
    for (int i = 0; i < n_input_; ++i) insert_free(i);
    std::vector<std::vector<int>> chains(segments_.size());
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      const auto& seg = segments_[s];
      chains[s].push_back(seg.a);
      std::vector<double> t = seg.splits;
      std::sort(t.begin(), t.end());
      for (double ti : t) {
        if (!(ti > 0.0 && ti < 1.0)) throw MeshError("segment split parameter outside (0,1)");
        const int id = add_point(pts_[seg.a] + ti * (pts_[seg.b] - pts_[seg.a]), static_cast<int>(s));
        insert_free(id);
        chains[s].push_back(id);
      }
      chains[s].push_back(seg.b);
    }
    for (std::size_t s = 0; s < segments_.size(); ++s)
      for (std::size_t k = 0; k + 1 < chains[s].size(); ++k)
        recover(chains[s][k], chains[s][k + 1], static_cast<int>(s));
    carve();
    refine();
    return extract();
  }

 private:
  MeshOptions opt_;
  std::vector<Vec2> pts_;
  std::vector<int> node_segment_;
  std::vector<std::array<int, 2>> segment_ends_;
  std::vector<PslgSegment> segments_;
  Topology topo_{};
  int n_input_ = 0;
  int super_ = 0;
  double skinny_ratio_ = 1.0;
  double scale_ = 1.0;

  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  std::unordered_map<std::uint64_t, SubSeg> subsegs_;
  std::vector<int> mark_;
  int stamp_ = 0;
  int hint_ = 0;
  unsigned walk_seed_ = 12345u;

  std::deque<std::pair<std::uint64_t, bool>> seg_queue_;
  std::deque<std::pair<int, std::array<int, 3>>> tri_queue_;

  int add_point(const Vec2& p, int segment) {
    if (pts_.size() >= opt_.max_nodes + 3)
      throw MeshError("mesh refinement exceeded the node cap of " + std::to_string(opt_.max_nodes));
    pts_.push_back(p);
    node_segment_.push_back(segment);
    vtri_.push_back(-1);
    return static_cast<int>(pts_.size()) - 1;
  }

  void build_super() {
    Vec2 lo = pts_[0], hi = pts_[0];
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 c = 0.5 * (lo + hi);
    const double d = std::max((hi - lo).maxCoeff(), 1e-12);
    scale_ = d;
    super_ = static_cast<int>(pts_.size());
    vtri_.assign(pts_.size(), -1);
    add_point(c + Vec2(-40 * d, -30 * d), -1);
    add_point(c + Vec2(40 * d, -30 * d), -1);
    add_point(c + Vec2(0, 40 * d), -1);
    Tri t;
    t.v = {super_, super_ + 1, super_ + 2};
    tris_.push_back(t);
    mark_.push_back(0);
    for (int i = 0; i < 3; ++i) vtri_[super_ + i] = 0;
  }

  Vec2 P(int v) const { return pts_[v]; }

  int new_tri() {
    if (!free_.empty()) {
      const int t = free_.back();
      free_.pop_back();
      tris_[t] = Tri{};
      return t;
    }
    tris_.push_back(Tri{});
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  int edge_index(int t, int a, int b) const {
    const auto& v = tris_[t].v;
    for (int i = 0; i < 3; ++i) {
      const int x = v[(i + 1) % 3], y = v[(i + 2) % 3];
      if ((x == a && y == b) || (x == b && y == a)) return i;
    }
    return -1;
  }

  // Strictly on the outer side of edge a->b, beyond rounding.
  bool outside(const Vec2& a, const Vec2& b, const Vec2& p) const {
    return orient(a, b, p) < -1e-13 * (b - a).norm() * ((p - a).norm() + (p - b).norm());
  }

  bool contains(int t, const Vec2& p) const {
    const auto& v = tris_[t].v;
    for (int i = 0; i < 3; ++i)
      if (outside(P(v[(i + 1) % 3]), P(v[(i + 2) % 3]), p)) return false;
    return true;
  }

  // Stochastic visibility walk, ignoring constraints.
  int locate(const Vec2& p, int start) {
    int t = start;
    if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
      t = -1;
      for (std::size_t k = 0; k < tris_.size(); ++k)
        if (tris_[k].alive) {
          t = static_cast<int>(k);
          break;
        }
    }
    for (std::size_t iter = 0; iter < 4 * tris_.size() + 100; ++iter) {
      walk_seed_ = walk_seed_ * 1664525u + 1013904223u;
      const int r = static_cast<int>((walk_seed_ >> 16) % 3);
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (r + k) % 3;
        const auto& v = tris_[t].v;
        if (outside(P(v[(i + 1) % 3]), P(v[(i + 2) % 3]), p)) {
          const int n = tris_[t].nb[i];
          if (n < 0) return -1;
          t = n;
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (std::size_t k = 0; k < tris_.size(); ++k)
      if (tris_[k].alive && contains(static_cast<int>(k), p)) return static_cast<int>(k);
    return -1;
  }

  struct WalkResult {
    int tri = -1;
    int blocked_tri = -1;
    int blocked_edge = -1;
  };

  // Straight walk from the centroid of t toward p; stops at constrained edges.
  WalkResult walk_to(int t, const Vec2& p) {
    const auto& v0 = tris_[t].v;
    const Vec2 c0 = (P(v0[0]) + P(v0[1]) + P(v0[2])) / 3.0;
    int prev = -1;
    for (std::size_t iter = 0; iter < tris_.size() + 10; ++iter) {
      if (contains(t, p)) return {t, -1, -1};
      const auto& tr = tris_[t];
      int exit = -1;
      for (int i = 0; i < 3; ++i) {
        const Vec2 a = P(tr.v[(i + 1) % 3]), b = P(tr.v[(i + 2) % 3]);
        if (!outside(a, b, p)) continue;
        if (tr.nb[i] == prev && prev >= 0) continue;
        const double sa = orient(c0, p, a), sb = orient(c0, p, b);
        if ((sa >= 0 && sb <= 0) || (sa <= 0 && sb >= 0)) {
          exit = i;
          break;
        }
      }
      if (exit < 0) {
        for (int i = 0; i < 3; ++i)
          if (outside(P(tr.v[(i + 1) % 3]), P(tr.v[(i + 2) % 3]), p)) {
            exit = i;
            break;
          }
      }
      if (exit < 0) return {t, -1, -1};
      if (tr.con[exit] || tr.nb[exit] < 0) return {-1, t, exit};
      prev = t;
      t = tr.nb[exit];
    }
    return {-1, -1, -1};
  }

  bool in_cavity(int t) const { return mark_[t] == stamp_; }

  Cavity build_cavity(const Vec2& p, const std::vector<int>& seeds, std::uint64_t split) {
    Cavity cav;
    ++stamp_;
    std::vector<int> stack;
    for (int s : seeds) {
      mark_[s] = stamp_;
      cav.tris.push_back(s);
      stack.push_back(s);
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n < 0 || in_cavity(n)) continue;
        if (tris_[t].con[i]) {
          const auto& v = tris_[t].v;
          if (edge_key(v[(i + 1) % 3], v[(i + 2) % 3]) != split) continue;
        }
        const auto& w = tris_[n].v;
        if (incircle(P(w[0]), P(w[1]), P(w[2]), p) > 0) {
          mark_[n] = stamp_;
          cav.tris.push_back(n);
          stack.push_back(n);
        }
      }
    }
    // Shrink until every boundary edge sees p strictly on its inner side.
    for (int pass = 0; pass < 64; ++pass) {
      cav.boundary.clear();
      int drop = -1;
      for (int t : cav.tris) {
        const auto& tr = tris_[t];
        for (int i = 0; i < 3; ++i) {
          const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
          if (edge_key(a, b) == split) continue;
          const int n = tr.nb[i];
          if (n >= 0 && in_cavity(n)) continue;
          const double o = orient(P(a), P(b), p);
          const double tol = 1e-13 * (P(b) - P(a)).norm() * ((p - P(a)).norm() + (p - P(b)).norm());
          if (o <= tol) {
            if (std::find(seeds.begin(), seeds.end(), t) != seeds.end()) return cav;
            drop = t;
            break;
          }
          cav.boundary.emplace_back(t, i);
        }
        if (drop >= 0) break;
      }
      if (drop < 0) {
        cav.ok = true;
        break;
      }
      mark_[drop] = stamp_ - 1;
      cav.tris.erase(std::find(cav.tris.begin(), cav.tris.end(), drop));
    }
    if (!cav.ok) return cav;
    // A triangulated disk has boundary edge count = triangle count + 2.
    const std::size_t expect = cav.tris.size() + (split != kNoSplit && seeds.size() == 1 ? 1 : 2);
    if (cav.boundary.size() != expect) cav.ok = false;
    return cav;
  }

  static constexpr std::uint64_t kNoSplit = std::numeric_limits<std::uint64_t>::max();

  // Replaces the cavity by a fan around vertex pi.
  std::vector<int> fill(int pi, const Cavity& cav, std::uint64_t split) {
    struct Side {
      int tri;
      int outer;
      bool con;
      int a, b;
    };
    std::vector<Side> sides;
    for (auto [t, i] : cav.boundary) {
      const auto& tr = tris_[t];
      sides.push_back({t, tr.nb[i], tr.con[i], tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]});
    }
    for (int t : cav.tris) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    int split_a = -1, split_b = -1;
    if (split != kNoSplit) {
      split_a = static_cast<int>(split >> 32);
      split_b = static_cast<int>(split & 0xffffffffu);
    }
    std::vector<int> created;
    std::unordered_map<int, std::pair<int, int>> start_at, end_at;
    for (const auto& s : sides) {
      const int t = new_tri();
      auto& tr = tris_[t];
      tr.v = {pi, s.a, s.b};
      tr.nb[0] = s.outer;
      tr.con[0] = s.con;
      if (s.outer >= 0) {
        const int j = edge_index(s.outer, s.a, s.b);
        tris_[s.outer].nb[j] = t;
      }
      start_at[s.a] = {t, 2};
      end_at[s.b] = {t, 1};
      for (int x : tr.v) vtri_[x] = t;
      created.push_back(t);
    }
    for (auto& [x, te] : start_at) {
      auto it = end_at.find(x);
      if (it == end_at.end()) continue;
      tris_[te.first].nb[te.second] = it->second.first;
      tris_[it->second.first].nb[it->second.second] = te.first;
    }
    if (split != kNoSplit) {
      for (int t : created) {
        auto& tr = tris_[t];
        for (int i = 1; i < 3; ++i) {
          const int other = tr.v[i == 1 ? 2 : 1];
          if (other == split_a || other == split_b) tr.con[i] = true;
        }
      }
    }
    hint_ = created.empty() ? hint_ : created.front();
    return created;
  }

  void insert_free(int pi) {
    const Vec2 p = P(pi);
    const int t = locate(p, hint_);
    if (t < 0) throw MeshError("point location failed while building the triangulation");
    for (int x : tris_[t].v)
      if ((P(x) - p).norm() <= 1e-14 * scale_) throw MeshError("duplicate input point");
    Cavity cav = build_cavity(p, {t}, kNoSplit);
    if (!cav.ok) throw MeshError("degenerate cavity while inserting an input point");
    fill(pi, cav, kNoSplit);
  }

  std::pair<int, int> find_edge(int a, int b) {
    const int t0 = vtri_[a];
    auto scan_from = [&](int dir) -> std::pair<int, int> {
      int t = t0;
      for (int guard = 0; guard < 10000 && t >= 0; ++guard) {
        const auto& tr = tris_[t];
        if (!tr.alive) break;
        int k = -1;
        for (int i = 0; i < 3; ++i)
          if (tr.v[i] == a) k = i;
        if (k < 0) break;
        const int i = edge_index(t, a, b);
        if (i >= 0) return {t, i};
        t = tr.nb[dir == 0 ? (k + 1) % 3 : (k + 2) % 3];
        if (t == t0) break;
      }
      return {-1, -1};
    };
    if (t0 >= 0) {
      auto r = scan_from(0);
      if (r.first >= 0) return r;
      r = scan_from(1);
      if (r.first >= 0) return r;
    }
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (tris_[t].alive) {
        const int i = edge_index(static_cast<int>(t), a, b);
        if (i >= 0) return {static_cast<int>(t), i};
      }
    return {-1, -1};
  }

  void set_constrained(int a, int b, int input) {
    auto [t, i] = find_edge(a, b);
    if (t < 0) throw MeshError("lost a segment edge");
    tris_[t].con[i] = true;
    const int n = tris_[t].nb[i];
    if (n >= 0) tris_[n].con[edge_index(n, a, b)] = true;
    subsegs_[edge_key(a, b)] = SubSeg{input, segments_[input].marker};
  }

  Vec2 split_point(int a, int b) const {
    const bool ia = node_segment_[a] == -2, ib = node_segment_[b] == -2;
    const Vec2 pa = P(a), pb = P(b);
    const double L = (pb - pa).norm();
    if (ia != ib) {
      const double d = std::exp2(std::round(std::log2(0.5 * L)));
      return ia ? Vec2(pa + (d / L) * (pb - pa)) : Vec2(pb + (d / L) * (pa - pb));
    }
    return 0.5 * (pa + pb);
  }

  void recover(int a, int b, int input) {
    std::vector<std::pair<int, int>> stack{{a, b}};
    while (!stack.empty()) {
      auto [u, v] = stack.back();
      stack.pop_back();
      if (find_edge(u, v).first >= 0) {
        set_constrained(u, v, input);
        continue;
      }
      const int m = add_point(split_point(u, v), input);
      insert_free(m);
      stack.emplace_back(u, m);
      stack.emplace_back(m, v);
    }
  }

  void carve() {
    ++stamp_;
    std::vector<int> stack;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      for (int x : tris_[t].v)
        if (x >= super_ && x < super_ + 3) {
          mark_[t] = stamp_;
          stack.push_back(static_cast<int>(t));
          break;
        }
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n < 0 || tris_[t].con[i] || mark_[n] == stamp_) continue;
        mark_[n] = stamp_;
        stack.push_back(n);
      }
    }
    bool any = false;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      if (mark_[t] == stamp_) {
        tris_[t].alive = false;
        free_.push_back(static_cast<int>(t));
      } else {
        any = true;
      }
    }
    if (!any) throw MeshError("segments do not enclose a region");
    for (auto& tr : tris_) {
      if (!tr.alive) continue;
      for (int x : tr.v)
        if (x >= super_ && x < super_ + 3) throw MeshError("boundary segments are not closed");
      for (int i = 0; i < 3; ++i)
        if (tr.nb[i] >= 0 && !tris_[tr.nb[i]].alive) tr.nb[i] = -1;
    }
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (tris_[t].alive)
        for (int x : tris_[t].v) vtri_[x] = static_cast<int>(t);
  }

  double size_at(const Vec2& x) const {
    double h = opt_.h_max;
    if (opt_.sizing) h = std::min(h, opt_.sizing(x));
    return h;
  }

  bool encroached(int a, int b, const Vec2& p) const {
    const Vec2 u = P(a) - p, v = P(b) - p;
    return u.dot(v) < -1e-12 * u.norm() * v.norm();
  }

  void check_segments_of(int t) {
    const auto& tr = tris_[t];
    for (int i = 0; i < 3; ++i) {
      if (!tr.con[i]) continue;
      const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
      if (encroached(a, b, P(tr.v[i]))) seg_queue_.emplace_back(edge_key(a, b), false);
    }
  }

  bool is_bad(int t) const {
    const auto& v = tris_[t].v;
    const Vec2 a = P(v[0]), b = P(v[1]), c = P(v[2]);
    const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    const double lmin = std::min({la, lb, lc}), lmax = std::max({la, lb, lc});
    const double area2 = orient(a, b, c);
    const double R = la * lb * lc / (2.0 * area2);
    if (lmax > size_at((a + b + c) / 3.0)) return true;
    if (R / lmin > skinny_ratio_) return !topo_.exempt(v);
    return false;
  }

  void check_tri(int t) {
    if (is_bad(t)) tri_queue_.emplace_back(t, tris_[t].v);
  }

  void after_insert(const std::vector<int>& created) {
    for (int t : created) {
      check_segments_of(t);
      check_tri(t);
    }
  }

  bool still_encroached(std::uint64_t key) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    auto [t, i] = find_edge(a, b);
    if (t < 0) return false;
    if (encroached(a, b, P(tris_[t].v[i]))) return true;
    const int n = tris_[t].nb[i];
    if (n >= 0) {
      const int j = edge_index(n, a, b);
      if (encroached(a, b, P(tris_[n].v[j]))) return true;
    }
    return false;
  }

  void split_subseg(std::uint64_t key) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    auto it = subsegs_.find(key);
    const SubSeg info = it->second;
    auto [t, i] = find_edge(a, b);
    if (t < 0) throw MeshError("subsegment vanished during refinement");
    const Vec2 p = split_point(a, b);
    std::vector<int> seeds{t};
    if (tris_[t].nb[i] >= 0) seeds.push_back(tris_[t].nb[i]);
    Cavity cav = build_cavity(p, seeds, key);
    if (!cav.ok) throw MeshError("could not split a boundary segment");
    const int m = add_point(p, info.input);
    subsegs_.erase(it);
    auto created = fill(m, cav, key);
    subsegs_[edge_key(a, m)] = info;
    subsegs_[edge_key(m, b)] = info;
    after_insert(created);
  }

  void refine() {
    for (const auto& [key, s] : subsegs_) {
      (void)s;
      seg_queue_.emplace_back(key, false);
    }
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (tris_[t].alive) check_tri(static_cast<int>(t));
    std::size_t guard = 0;
    while (true) {
      if (++guard > 50 * opt_.max_nodes)
        throw MeshError("mesh refinement did not terminate");
      if (!seg_queue_.empty()) {
        auto [key, forced] = seg_queue_.front();
        seg_queue_.pop_front();
        if (!subsegs_.count(key)) continue;
        if (!forced && !still_encroached(key)) continue;
        split_subseg(key);
        continue;
      }
      if (tri_queue_.empty()) break;
      auto [t, verts] = tri_queue_.front();
      tri_queue_.pop_front();
      if (!tris_[t].alive || tris_[t].v != verts || !is_bad(t)) continue;
      const auto& v = tris_[t].v;
      const Vec2 c = circumcenter(P(v[0]), P(v[1]), P(v[2]));
      WalkResult w = walk_to(t, c);
      if (w.tri < 0) {
        if (w.blocked_tri < 0) continue;
        const auto& bt = tris_[w.blocked_tri];
        const int ba = bt.v[(w.blocked_edge + 1) % 3], bb = bt.v[(w.blocked_edge + 2) % 3];
        if (subsegs_.count(edge_key(ba, bb))) {
          seg_queue_.emplace_back(edge_key(ba, bb), true);
          tri_queue_.emplace_back(t, verts);
        }
        continue;
      }
      Cavity cav = build_cavity(c, {w.tri}, kNoSplit);
      if (!cav.ok) continue;
      bool blocked = false;
      for (auto [ct, ci] : cav.boundary) {
        const auto& tr = tris_[ct];
        if (!tr.con[ci]) continue;
        const int a = tr.v[(ci + 1) % 3], b = tr.v[(ci + 2) % 3];
        if (encroached(a, b, c)) {
          seg_queue_.emplace_back(edge_key(a, b), true);
          blocked = true;
        }
      }
      if (blocked) {
        tri_queue_.emplace_back(t, verts);
        continue;
      }
      bool near = false;
      for (int ct : cav.tris)
        for (int x : tris_[ct].v)
          if ((P(x) - c).norm() < 1e-12 * scale_) near = true;
      if (near) continue;
      const int m = add_point(c, -1);
      after_insert(fill(m, cav, kNoSplit));
    }
  }

  Mesh extract() {
    Mesh mesh;
    mesh.h_max = opt_.h_max;
    std::vector<int> map(pts_.size(), -1);
    auto id = [&](int v) {
      if (map[v] < 0) {
        map[v] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(pts_[v]);
        mesh.node_segment.push_back(node_segment_[v]);
      }
      return map[v];
    };
    for (int i = 0; i < n_input_; ++i) id(i);
    for (const auto& tr : tris_) {
      if (!tr.alive) continue;
      mesh.triangles.push_back({id(tr.v[0]), id(tr.v[1]), id(tr.v[2])});
      for (int i = 0; i < 3; ++i) {
        if (!tr.con[i] || tr.nb[i] >= 0) continue;
        const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
        const auto it = subsegs_.find(edge_key(a, b));
        if (it == subsegs_.end()) throw MeshError("boundary edge without a segment record");
        mesh.boundary_edges.push_back({{id(a), id(b)}, it->second.marker});
      }
    }
    for (int i = 0; i < n_input_; ++i) mesh.corner_nodes.push_back(map[i]);
    for (const auto& e : segment_ends_) mesh.segment_ends.push_back({map[e[0]], map[e[1]]});
    std::sort(mesh.boundary_edges.begin(), mesh.boundary_edges.end(),
              [](const BoundaryEdge& x, const BoundaryEdge& y) { return x.nodes < y.nodes; });
    return mesh;
  }
};

// Parameters in (0,1) that equidistribute the integral of 1/h along a->b.
std::vector<double> equidistribute(const Vec2& a, const Vec2& b, const SizingField& h) {
  const int samples = 400;
  const double L = (b - a).norm();
  std::vector<double> cum(samples + 1, 0.0);
  double prev = 1.0 / h(a);
  for (int k = 1; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    const double cur = 1.0 / h(a + t * (b - a));
    cum[k] = cum[k - 1] + 0.5 * (prev + cur) * L / samples;
    prev = cur;
  }
  const int n = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
  std::vector<double> out;
  for (int j = 1; j < n; ++j) {
    const double target = cum.back() * j / n;
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    const int k = static_cast<int>(it - cum.begin());
    const double f = (target - cum[k - 1]) / (cum[k] - cum[k - 1]);
    out.push_back((k - 1 + f) / samples);
  }
  return out;
}

double domain_diameter(const Domain& domain) {
  if (const auto* p = std::get_if<PolygonalDomain>(&domain)) {
    double d = 0.0;
    for (const auto& a : p->vertices)
      for (const auto& b : p->vertices) d = std::max(d, (a - b).norm());
    return d;
  }
  const auto& s = std::get<SectorDomain>(domain);
  return s.symmetry == Symmetry::full ? 2.0 * s.radius : s.radius;
}

Pslg polygon_pslg(const PolygonalDomain& poly, const SizingField& h) {
  Pslg g;
  g.points = poly.vertices;
  const int n = static_cast<int>(poly.vertices.size());
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    g.segments.push_back({i, j, EdgeMarker::steklov, equidistribute(g.points[i], g.points[j], h)});
  }
  return g;
}

Pslg sector_pslg(const SectorDomain& s, const SizingField& h) {
  if (s.symmetry == Symmetry::full && s.alpha >= 2.0 * kPi - 1e-12)
    throw MeshError("the full sector of angle 2pi is a slit plane; mesh its symmetry classes instead");
  Pslg g;
  const double R = s.radius;
  const double th1 = s.half_angle();
  const double th0 = s.symmetry == Symmetry::full ? -th1 : 0.0;
  const double span = th1 - th0;
  // Arc pieces: chord no longer than the local size, at most pi/8 each.
  const Vec2 mid(R * std::cos(0.5 * (th0 + th1)), R * std::sin(0.5 * (th0 + th1)));
  const double h_arc = std::min(h(mid), h(Vec2(R * std::cos(th1), R * std::sin(th1))));
  const int m = std::max({static_cast<int>(std::ceil(R * span / h_arc)),
                          static_cast<int>(std::ceil(span / (kPi / 8.0))), 2});
  g.points.push_back(Vec2(0, 0));
  for (int j = 0; j <= m; ++j) {
    const double th = th0 + span * j / m;
    g.points.push_back(Vec2(R * std::cos(th), R * std::sin(th)));
  }
  const int first = 1, last = m + 1;
  const Vec2 up = s.upper_ray();
  const std::vector<double> ray = equidistribute(R * up, Vec2(0, 0), h);
  const bool share = span < kPi / 3.0 + 1e-12;
  if (s.symmetry == Symmetry::full) {
    // Lower ray first (apex -> arc start) so that traversal is counterclockwise.
    std::vector<double> lower;
    if (share) {
      for (auto it = ray.rbegin(); it != ray.rend(); ++it) lower.push_back(1.0 - *it);
    } else {
      lower = equidistribute(Vec2(0, 0), g.points[first], h);
    }
    g.segments.push_back({0, first, EdgeMarker::steklov, lower});
  } else {
    const EdgeMarker bis = s.symmetry == Symmetry::symmetric ? EdgeMarker::bisector_neumann
                                                             : EdgeMarker::bisector_dirichlet;
    std::vector<double> b;
    if (share) {
      for (auto it = ray.rbegin(); it != ray.rend(); ++it) b.push_back(1.0 - *it);
    } else {
      b = equidistribute(Vec2(0, 0), g.points[first], h);
    }
    g.segments.push_back({0, first, bis, b});
  }
  for (int j = first; j < last; ++j) g.segments.push_back({j, j + 1, EdgeMarker::artificial_dirichlet, {}});
  g.segments.push_back({last, 0, EdgeMarker::steklov, ray});
  return g;
}

Pslg domain_pslg(const Domain& domain, const SizingField& h) {
  if (const auto* p = std::get_if<PolygonalDomain>(&domain)) return polygon_pslg(*p, h);
  return sector_pslg(std::get<SectorDomain>(domain), h);
}

}  // namespace

Mesh refine_pslg(const Pslg& pslg, const MeshOptions& options) {
  if (!(options.h_max > 0.0)) throw MeshError("h_max must be positive");
  if (!(options.min_angle_deg > 0.0 && options.min_angle_deg < 34.0))
    throw MeshError("minimum angle target must lie in (0, 34) degrees");
  Refiner r(pslg, options);
  return r.run();
}

Mesh triangulate(const Domain& domain, const MeshOptions& options) {
  if (!(options.h_max > 0.0)) throw MeshError("h_max must be positive");
  const double diam = domain_diameter(domain);
  if (options.h_max >= diam) {
    std::ostringstream os;
    os << "h_max = " << options.h_max << " does not resolve a domain of diameter " << diam;
    throw MeshError(os.str());
  }
  const double hmax = options.h_max;
  const SizingField user = options.sizing;
  SizingField h = [hmax, user](const Vec2& x) { return user ? std::min(hmax, user(x)) : hmax; };
  Mesh m = refine_pslg(domain_pslg(domain, h), options);
  return m;
}

Mesh triangulate(const Domain& domain, double h_max) {
  MeshOptions o;
  o.h_max = h_max;
  return triangulate(domain, o);
}

Mesh triangulate_graded(const Domain& domain, const GradedSizing& g, std::size_t max_nodes) {
  if (!(g.h_near > 0.0) || g.h_far < g.h_near || g.grading < 0.0 || g.ray_grading < 0.0)
    throw MeshError("invalid graded sizing parameters");
  MeshOptions o;
  o.h_max = g.h_far;
  o.max_nodes = max_nodes;
  if (const auto* p = std::get_if<PolygonalDomain>(&domain)) {
    const std::vector<Vec2> v = p->vertices;
    o.sizing = [v, g](const Vec2& x) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < v.size(); ++i) d = std::min(d, distance_to_segment(x, v[i], v[(i + 1) % v.size()]));
      return std::min(g.h_far, g.h_near + g.grading * d);
    };
  } else {
    const auto& s = std::get<SectorDomain>(domain);
    const Vec2 up = s.radius * s.upper_ray();
    const Vec2 lo = s.radius * s.lower_ray();
    const bool full = s.symmetry == Symmetry::full;
    o.sizing = [up, lo, full, g](const Vec2& x) {
      double d = distance_to_segment(x, Vec2(0, 0), up);
      if (full) d = std::min(d, distance_to_segment(x, Vec2(0, 0), lo));
      const double hb = g.h_near + g.ray_grading * x.norm();
      return std::min(g.h_far, hb + g.grading * d);
    };
  }
  return triangulate(domain, o);
}

MeshQuality mesh_quality(const Mesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.min_angle_unconstrained_deg = 180.0;
  q.min_area = std::numeric_limits<double>::infinity();
  Topology topo{&mesh.nodes, &mesh.node_segment, &mesh.segment_ends};
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    double amin = 180.0;
    for (int i = 0; i < 3; ++i)
      amin = std::min(amin, angle_at(mesh.nodes[v[i]], mesh.nodes[v[(i + 1) % 3]], mesh.nodes[v[(i + 2) % 3]]) *
                                180.0 / kPi);
    q.min_angle_deg = std::min(q.min_angle_deg, amin);
    q.min_area = std::min(q.min_area, mesh.triangle_area(t));
    if (topo.exempt(v))
      ++q.exempt_triangles;
    else
      q.min_angle_unconstrained_deg = std::min(q.min_angle_unconstrained_deg, amin);
  }
  return q;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << "nodes " << mesh.nodes.size() << "\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    os << i << " " << mesh.nodes[i].x() << " " << mesh.nodes[i].y() << "\n";
  os << "triangles " << mesh.triangles.size() << "\n";
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    os << i << " " << mesh.triangles[i][0] << " " << mesh.triangles[i][1] << " " << mesh.triangles[i][2] << "\n";
  os << "edges " << mesh.boundary_edges.size() << "\n";
  for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i)
    os << i << " " << mesh.boundary_edges[i].nodes[0] << " " << mesh.boundary_edges[i].nodes[1] << " "
       << to_string(mesh.boundary_edges[i].marker) << "\n";
}

}  // namespace steklov
