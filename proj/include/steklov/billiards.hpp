#pragma once

#include "steklov/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace steklov {

enum class ProfileKind { disk, spherical_cap, cone, spline };
std::string to_string(ProfileKind k);

/// Meridian profile of a revolution piece, parametrized by arclength u from
/// the pole (u = 0, r = 0) to the edge circle (u = u_edge).
class Profile {
 public:
  static Profile disk(double radius);
  /// Cap of the sphere of radius rho reaching polar angle theta_edge.
  static Profile spherical_cap(double rho, double theta_edge);
  /// Cone with apex at the pole, half-opening angle gamma, slant length ell.
  static Profile cone(double gamma, double ell);
  /// Natural cubic spline through (u_k, r_k); u_0 = 0 and r_0 = 0.
  static Profile spline(std::vector<double> u, std::vector<double> r);

  ProfileKind kind() const { return kind_; }
  double u_edge() const { return u_edge_; }
  double r_edge() const { return r(u_edge_); }
  double r(double u) const;
  double dr(double u) const;
  bool flat() const { return kind_ == ProfileKind::disk; }
  /// Surface area 2 pi int r du.
  double area() const;
  double r_max() const;
  Json to_json() const;

 private:
  ProfileKind kind_ = ProfileKind::disk;
  double a_ = 1.0, b_ = 1.0;
  double u_edge_ = 1.0;
  std::vector<double> su_, sr_, sm_;
};

Profile profile_from_json(const Json& j);

/// Two revolution pieces glued along the common edge circle Z.
struct EdgedSurface {
  Profile piece[2];
  double r_edge = 0.0;
  bool flat = false;
};

EdgedSurface build_revolution_surface(const Profile& p1, const Profile& p2, double tol = 1e-9);
EdgedSurface surface_from_json(const Json& j);
Json surface_to_json(const EdgedSurface& s);

/// Point of the unit cosphere bundle in coordinates (u, phi) of one piece.
/// The covector is (xi_u, xi_phi); xi_phi is the Clairaut constant and
/// |xi|^2 = xi_u^2 + xi_phi^2 / r(u)^2. On Z, xi_u < 0 points into the piece.
struct PhasePoint {
  int piece = 0;
  double u = 0.0;
  double phi = 0.0;
  double xi_u = 0.0;
  double xi_phi = 0.0;
  double t = 0.0;
};

double covector_norm(const EdgedSurface& s, const PhasePoint& p);
/// Product distance: parallel arc r |dphi| + meridian gap |du| + angle
/// between the unit covectors in the orthonormal frame (e_u, e_phi / r).
/// Points on different pieces are at infinite distance.
double phase_distance(const EdgedSurface& s, const PhasePoint& a, const PhasePoint& b);

/// Inward-pointing state on Z at azimuth phi, entry angle beta to Z.
PhasePoint edge_state(const EdgedSurface& s, int piece, double phi, double beta);

struct IntegratorOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  double max_length = 1e3;
  std::size_t max_steps = 2'000'000;
};

struct SegmentResult {
  PhasePoint exit;
  double length = 0.0;
  double advance = 0.0;
  double entry_angle = 0.0;
  double exit_angle = 0.0;
  // Largest deviation of the Clairaut constant and of |xi| seen inside the
  // segment, before the state is projected back.
  double clairaut_drift = 0.0;
  double norm_drift = 0.0;
  std::size_t steps = 0;
};

/// Integrates the geodesic from `start` (interior or on Z heading inward) in
/// its piece until it reaches Z again.
SegmentResult integrate_to_edge(const EdgedSurface& s, const PhasePoint& start, const IntegratorOptions& opt = {});
/// Segment of the piece entered at azimuth phi with angle beta in (0, pi/2].
SegmentResult geodesic_segment(const EdgedSurface& s, int piece, double phi, double beta,
                               const IntegratorOptions& opt = {});
/// State after flowing for time `duration` without meeting Z; throws if Z is
/// reached first.
PhasePoint advance(const EdgedSurface& s, const PhasePoint& start, double duration, const IntegratorOptions& opt = {},
                   double* clairaut_drift = nullptr);

enum class BranchEvent { start, reflect, refract, dead_end_tangential, dead_end_reflection_cap };
std::string to_string(BranchEvent e);

struct BranchNode {
  PhasePoint state;
  int parent = -1;
  BranchEvent event = BranchEvent::start;
  int depth = 0;
  int reflections = 0;
};

/// Successors of a node sitting on Z with an outgoing (arriving) covector.
std::vector<BranchNode> step_branching(const EdgedSurface& s, const BranchNode& node, double tangential_tol = 1e-9);

struct TraceOptions {
  double time_cap = 10.0;
  std::size_t branch_cap = 100'000;
  int reflection_cap = 1000;
  double epsilon = 1e-3;
  // Reuse one integrated segment per (piece, Clairaut constant); off forces
  // every event to be integrated afresh.
  bool reuse_segments = true;
  IntegratorOptions integrator;
};

struct BranchTree {
  std::vector<BranchNode> nodes;
  bool truncated = false;
  bool dead_end = false;
  std::size_t events = 0;
  std::optional<double> periodic_time;
  double max_clairaut_drift = 0.0;
  double max_norm_drift = 0.0;
  // Tangential momentum mismatch against the parent, over all branchings.
  double max_tangential_mismatch = 0.0;
  double max_norm_error = 0.0;
  bool times_increasing = true;
};

BranchTree trace(const EdgedSurface& s, const PhasePoint& start, const TraceOptions& opt = {});

/// Flows from the node to the midpoint of its next segment, reverses the
/// covector and flows back to Z; returns the distance to the node.
double time_reversal_error(const EdgedSurface& s, const BranchNode& node, const IntegratorOptions& opt = {});

/// Liouville-uniform sampler on the unit cosphere bundle over Y minus Z.
class LiouvilleSampler {
 public:
  LiouvilleSampler(const EdgedSurface& s, std::uint64_t seed);
  PhasePoint operator()();

 private:
  const EdgedSurface* s_;
  std::mt19937_64 rng_;
  double uniform();
};

struct SampleFlags {
  bool partially_periodic = false;
  bool completely_periodic = false;
  bool dead_end = false;
  bool escaped_cap = false;
  std::optional<double> return_time;
};

struct PeriodicityOptions {
  double time_cap = 100.0;
  double epsilon = 1e-3;
  std::size_t lattice_cap = 4'000'000;
  IntegratorOptions integrator;
};

SampleFlags classify_sample(const EdgedSurface& s, const PhasePoint& z, const PeriodicityOptions& opt = {});

struct PeriodicityReport {
  std::size_t samples = 0;
  std::size_t periodic = 0;
  std::size_t completely_periodic = 0;
  std::size_t dead_ends = 0;
  std::size_t escaped = 0;
  std::optional<double> estimate;
  double ci_low = 0.0, ci_high = 0.0;
  std::vector<SampleFlags> flags;
};

/// Samples are drawn sequentially and classified on `threads` workers, so the
/// report does not depend on the thread count.
PeriodicityReport periodicity_measure(const EdgedSurface& s, LiouvilleSampler& sampler, std::size_t n_samples,
                                      const PeriodicityOptions& opt = {}, unsigned threads = 1);

Json report_to_json(const PeriodicityReport& r);
void write_trace_csv(std::ostream& os, const BranchTree& tree);

}  // namespace steklov
