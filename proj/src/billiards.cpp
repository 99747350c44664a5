#include "steklov/billiards.hpp"

#include "steklov/errors.hpp"
#include "steklov/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <exception>
#include <ostream>
#include <thread>

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;
// Below this Clairaut constant (relative to r_Z) a geodesic is treated as a
// meridian through the pole, where the azimuth chart is singular.
constexpr double kMeridian = 1e-12;

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

double number(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("profile is missing '") + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(std::string("profile field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + what);
  }
}

}  // namespace

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::disk: return "disk";
    case ProfileKind::spherical_cap: return "spherical_cap";
    case ProfileKind::cone: return "cone";
    case ProfileKind::spline: return "spline";
  }
  return "?";
}

Profile Profile::disk(double radius) {
  if (!(radius > 0.0)) throw GeometryError("disk radius must be positive");
  Profile p;
  p.kind_ = ProfileKind::disk;
  p.a_ = radius;
  p.u_edge_ = radius;
  return p;
}

Profile Profile::spherical_cap(double rho, double theta_edge) {
  if (!(rho > 0.0) || !(theta_edge > 0.0 && theta_edge < kPi))
    throw GeometryError("spherical cap needs rho > 0 and polar angle in (0, pi)");
  Profile p;
  p.kind_ = ProfileKind::spherical_cap;
  p.a_ = rho;
  p.b_ = theta_edge;
  p.u_edge_ = rho * theta_edge;
  return p;
}

Profile Profile::cone(double gamma, double ell) {
  if (!(gamma > 0.0 && gamma <= 0.5 * kPi) || !(ell > 0.0))
    throw GeometryError("cone needs half-angle in (0, pi/2] and positive slant length");
  Profile p;
  p.kind_ = ProfileKind::cone;
  p.a_ = gamma;
  p.b_ = ell;
  p.u_edge_ = ell;
  return p;
}

Profile Profile::spline(std::vector<double> u, std::vector<double> r) {
  const std::size_t n = u.size();
  if (n < 3 || r.size() != n) throw GeometryError("spline profile needs at least 3 matching samples");
  if (u[0] != 0.0 || r[0] != 0.0) throw GeometryError("spline profile must start at the pole (u = 0, r = 0)");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(u[i] > u[i - 1])) throw GeometryError("spline abscissae must increase strictly");
    if (!(r[i] > 0.0)) throw GeometryError("spline radii must be positive away from the pole");
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  A(0, 0) = 1.0;
  A(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n - 1)) = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double h0 = u[i] - u[i - 1], h1 = u[i + 1] - u[i];
    A(k, k - 1) = h0;
    A(k, k) = 2.0 * (h0 + h1);
    A(k, k + 1) = h1;
    b(k) = 6.0 * ((r[i + 1] - r[i]) / h1 - (r[i] - r[i - 1]) / h0);
  }
  const Eigen::VectorXd m = A.partialPivLu().solve(b);
  Profile p;
  p.kind_ = ProfileKind::spline;
  p.u_edge_ = u.back();
  p.su_ = std::move(u);
  p.sr_ = std::move(r);
  p.sm_.assign(m.data(), m.data() + m.size());
  for (int k = 0; k <= 4000; ++k) {
    const double x = p.u_edge_ * k / 4000.0;
    if (std::abs(p.dr(x)) > 1.0 + 1e-6)
      throw GeometryError("spline profile is not a unit-speed meridian (|dr/du| > 1)");
  }
  return p;
}

double Profile::r(double u) const {
  switch (kind_) {
    case ProfileKind::disk: return u;
    case ProfileKind::spherical_cap: return a_ * std::sin(u / a_);
    case ProfileKind::cone: return u * std::sin(a_);
    case ProfileKind::spline: {
      const std::size_t n = su_.size();
      std::size_t i = static_cast<std::size_t>(std::upper_bound(su_.begin(), su_.end(), u) - su_.begin());
      i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
      const double h = su_[i + 1] - su_[i], p = su_[i + 1] - u, q = u - su_[i];
      return sm_[i] * p * p * p / (6 * h) + sm_[i + 1] * q * q * q / (6 * h) + (sr_[i] / h - sm_[i] * h / 6) * p +
             (sr_[i + 1] / h - sm_[i + 1] * h / 6) * q;
    }
  }
  return 0.0;
}

double Profile::dr(double u) const {
  switch (kind_) {
    case ProfileKind::disk: return 1.0;
    case ProfileKind::spherical_cap: return std::cos(u / a_);
    case ProfileKind::cone: return std::sin(a_);
    case ProfileKind::spline: {
      const std::size_t n = su_.size();
      std::size_t i = static_cast<std::size_t>(std::upper_bound(su_.begin(), su_.end(), u) - su_.begin());
      i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
      const double h = su_[i + 1] - su_[i], p = su_[i + 1] - u, q = u - su_[i];
      return -sm_[i] * p * p / (2 * h) + sm_[i + 1] * q * q / (2 * h) - (sr_[i] / h - sm_[i] * h / 6) +
             (sr_[i + 1] / h - sm_[i + 1] * h / 6);
    }
  }
  return 0.0;
}

double Profile::area() const {
  static const GaussRule<double> g = gauss_legendre<double>(10);
  return 2.0 * kPi * integrate([this](double u) { return r(u); }, 0.0, u_edge_, g, 64);
}

double Profile::r_max() const {
  switch (kind_) {
    case ProfileKind::disk:
    case ProfileKind::cone: return r_edge();
    case ProfileKind::spherical_cap: return b_ >= 0.5 * kPi ? a_ : r_edge();
    case ProfileKind::spline: {
      double m = 0.0;
      for (int k = 0; k <= 4000; ++k) m = std::max(m, r(u_edge_ * k / 4000.0));
      return m;
    }
  }
  return 0.0;
}

Json Profile::to_json() const {
  switch (kind_) {
    case ProfileKind::disk: return {{"type", "disk"}, {"radius", a_}};
    case ProfileKind::spherical_cap: return {{"type", "spherical_cap"}, {"rho", a_}, {"theta_edge", b_}};
    case ProfileKind::cone: return {{"type", "cone"}, {"gamma", a_}, {"slant", b_}};
    case ProfileKind::spline: return {{"type", "spline"}, {"u", su_}, {"r", sr_}};
  }
  return {};
}

Profile profile_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("profile must be an object");
  if (!j.contains("type") || !j.at("type").is_string()) throw ConfigError("profile needs a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "disk") {
    only_keys(j, {"type", "radius"}, "disk profile");
    return Profile::disk(j.contains("radius") ? number(j, "radius") : 1.0);
  }
  if (type == "spherical_cap") {
    only_keys(j, {"type", "rho", "theta_edge"}, "spherical_cap profile");
    return Profile::spherical_cap(number(j, "rho"), number(j, "theta_edge"));
  }
  if (type == "cone") {
    only_keys(j, {"type", "gamma", "slant"}, "cone profile");
    return Profile::cone(number(j, "gamma"), number(j, "slant"));
  }
  if (type == "spline") {
    only_keys(j, {"type", "u", "r"}, "spline profile");
    if (!j.contains("u") || !j.contains("r") || !j.at("u").is_array() || !j.at("r").is_array())
      throw ConfigError("spline profile needs arrays 'u' and 'r'");
    std::vector<double> u, r;
    for (const auto& x : j.at("u")) {
      if (!x.is_number()) throw ConfigError("spline 'u' entries must be numbers");
      u.push_back(x.get<double>());
    }
    for (const auto& x : j.at("r")) {
      if (!x.is_number()) throw ConfigError("spline 'r' entries must be numbers");
      r.push_back(x.get<double>());
    }
    return Profile::spline(std::move(u), std::move(r));
  }
  throw ConfigError("unknown profile type '" + type + "'");
}

EdgedSurface build_revolution_surface(const Profile& p1, const Profile& p2, double tol) {
  const double r1 = p1.r_edge(), r2 = p2.r_edge();
  if (std::abs(r1 - r2) > tol * std::max(r1, r2))
    throw GeometryError("edge radii do not match: " + format_double(r1) + " vs " + format_double(r2));
  for (const Profile* p : {&p1, &p2})
    if (p->r_max() > r1 * (1.0 + 1e-9))
      throw DomainError("billiards",
                        "a piece is wider than the edge circle; its geodesics with large Clairaut constant never reach Z");
  EdgedSurface s;
  s.piece[0] = p1;
  s.piece[1] = p2;
  s.r_edge = r1;
  s.flat = p1.flat() && p2.flat();
  return s;
}

EdgedSurface surface_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("surface must be an object");
  only_keys(j, {"piece1", "piece2"}, "surface");
  if (!j.contains("piece1") || !j.contains("piece2")) throw ConfigError("surface needs 'piece1' and 'piece2'");
  return build_revolution_surface(profile_from_json(j.at("piece1")), profile_from_json(j.at("piece2")));
}

Json surface_to_json(const EdgedSurface& s) {
  return {{"piece1", s.piece[0].to_json()}, {"piece2", s.piece[1].to_json()}};
}

double covector_norm(const EdgedSurface& s, const PhasePoint& p) {
  const double r = s.piece[p.piece].r(p.u);
  return std::sqrt(p.xi_u * p.xi_u + p.xi_phi * p.xi_phi / (r * r));
}

double phase_distance(const EdgedSurface& s, const PhasePoint& a, const PhasePoint& b) {
  if (a.piece != b.piece) return INFINITY;
  const Profile& P = s.piece[a.piece];
  const double ra = P.r(a.u), rb = P.r(b.u);
  const double angle_a = std::atan2(a.xi_phi / ra, a.xi_u), angle_b = std::atan2(b.xi_phi / rb, b.xi_u);
  return 0.5 * (ra + rb) * std::abs(wrap_angle(a.phi - b.phi)) + std::abs(a.u - b.u) +
         std::abs(wrap_angle(angle_a - angle_b));
}

PhasePoint edge_state(const EdgedSurface& s, int piece, double phi, double beta) {
  if (piece < 0 || piece > 1) throw ContractError("billiards", "piece must be 0 or 1");
  PhasePoint p;
  p.piece = piece;
  p.u = s.piece[piece].u_edge();
  p.phi = phi;
  p.xi_u = -std::sin(beta);
  p.xi_phi = s.r_edge * std::cos(beta);
  return p;
}

namespace {

using State = std::array<double, 4>;  // u, phi, u', phi'

State rhs(const Profile& P, const State& y) {
  const double r = P.r(y[0]), dr = P.dr(y[0]);
  return {y[2], y[3], r * dr * y[3] * y[3], -2.0 * dr * y[2] * y[3] / r};
}

// One Dormand-Prince 5(4) step; returns the fifth-order state and the
// embedded error estimate.
State dp_step(const Profile& P, const State& y, double h, State* err) {
  auto axpy = [&](std::initializer_list<std::pair<double, const State*>> terms) {
    State out = y;
    for (const auto& [c, k] : terms)
      for (int i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
    return out;
  };
  const State k1 = rhs(P, y);
  const State k2 = rhs(P, axpy({{1.0 / 5, &k1}}));
  const State k3 = rhs(P, axpy({{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
  const State k4 = rhs(P, axpy({{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
  const State k5 =
      rhs(P, axpy({{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}}));
  const State k6 = rhs(P, axpy({{9017.0 / 3168, &k1},
                                {-355.0 / 33, &k2},
                                {46732.0 / 5247, &k3},
                                {49.0 / 176, &k4},
                                {-5103.0 / 18656, &k5}}));
  const State y5 = axpy(
      {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4}, {-2187.0 / 6784, &k5}, {11.0 / 84, &k6}});
  if (err) {
    const State k7 = rhs(P, y5);
    const double e[7] = {35.0 / 384 - 5179.0 / 57600, 0.0, 500.0 / 1113 - 7571.0 / 16695,
                         125.0 / 192 - 393.0 / 640, -2187.0 / 6784 + 92097.0 / 339200, 11.0 / 84 - 187.0 / 2100,
                         -1.0 / 40};
    const State* ks[7] = {&k1, &k2, &k3, &k4, &k5, &k6, &k7};
    for (int i = 0; i < 4; ++i) {
      double s = 0.0;
      for (int j = 0; j < 7; ++j) s += e[j] * (*ks[j])[i];
      (*err)[i] = h * s;
    }
  }
  return y5;
}

struct FlowResult {
  State y;
  double t = 0.0;
  bool hit_edge = false;
  double clairaut_drift = 0.0;
  double norm_drift = 0.0;
  std::size_t steps = 0;
};

// Integrates from y0 until u reaches u_edge from below, or until t_end.
FlowResult flow(const Profile& P, const State& y0, std::optional<double> t_end, const IntegratorOptions& opt) {
  const double uZ = P.u_edge();
  const double c0 = P.r(y0[0]) * P.r(y0[0]) * y0[3];
  auto monitor = [&](const State& y, FlowResult& fr) {
    const double r = P.r(y[0]);
    fr.clairaut_drift = std::max(fr.clairaut_drift, std::abs(r * r * y[3] - c0));
    fr.norm_drift = std::max(fr.norm_drift, std::abs(std::sqrt(y[2] * y[2] + r * r * y[3] * y[3]) - 1.0));
  };
  FlowResult fr;
  fr.y = y0;
  double h = 1e-3 * std::max(uZ, 1e-3);
  const double cap = t_end ? *t_end : opt.max_length;
  while (fr.t < cap) {
    if (++fr.steps > opt.max_steps) throw DomainError("billiards", "geodesic integration exceeded the step budget");
    bool last = false;
    if (fr.t + h >= cap) {
      h = cap - fr.t;
      last = true;
    }
    State err;
    const State y1 = dp_step(P, fr.y, h, &err);
    double en = 0.0;
    for (int i = 0; i < 4; ++i)
      en = std::max(en, std::abs(err[i]) / (opt.atol + opt.rtol * std::max(std::abs(fr.y[i]), std::abs(y1[i]))));
    if (!(en <= 1.0)) {
      h *= std::max(0.2, 0.9 * std::pow(std::max(en, 1e-300), -0.2));
      if (!(h > 1e-300)) throw DomainError("billiards", "geodesic step size underflow");
      continue;
    }
    const double g0 = fr.y[0] - uZ, g1 = y1[0] - uZ;
    if (g0 < 0.0 && g1 >= 0.0) {
      // Hermite location of the crossing, then Newton on the step length.
      const double d0 = fr.y[2] * h, d1 = y1[2] * h;
      auto herm = [&](double s) {
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * g0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * g1 + (s3 - s2) * d1;
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (herm(mid) < 0.0 ? lo : hi) = mid;
      }
      double hs = hi * h;
      State yc = dp_step(P, fr.y, hs, nullptr);
      for (int it = 0; it < 4 && std::abs(yc[0] - uZ) > 1e-15 * std::max(1.0, uZ); ++it) {
        hs -= (yc[0] - uZ) / yc[2];
        yc = dp_step(P, fr.y, hs, nullptr);
      }
      fr.t += hs;
      fr.y = yc;
      monitor(yc, fr);
      fr.hit_edge = true;
      if (t_end && fr.t < *t_end - 1e-12)
        throw ContractError("billiards", "the flow met Z before the requested time");
      return fr;
    }
    fr.t += h;
    fr.y = y1;
    monitor(y1, fr);
    if (last) break;
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-300), -0.2)));
  }
  if (!t_end) throw DomainError("billiards", "geodesic did not return to Z within the length cap (trapped geodesic)");
  return fr;
}

State to_state(const Profile& P, const PhasePoint& p) {
  const double r = P.r(p.u);
  return {p.u, p.phi, p.xi_u, p.xi_phi / (r * r)};
}

bool on_edge(const EdgedSurface& s, const PhasePoint& p) {
  const double uZ = s.piece[p.piece].u_edge();
  return std::abs(p.u - uZ) <= 1e-12 * std::max(1.0, uZ);
}

}  // namespace

SegmentResult integrate_to_edge(const EdgedSurface& s, const PhasePoint& start, const IntegratorOptions& opt) {
  if (start.piece < 0 || start.piece > 1) throw ContractError("billiards", "piece must be 0 or 1");
  const Profile& P = s.piece[start.piece];
  const double uZ = P.u_edge(), rZ = s.r_edge;
  if (start.u > uZ * (1.0 + 1e-12) || start.u < 0.0) throw ContractError("billiards", "state lies outside its piece");
  if (on_edge(s, start) && start.xi_u >= 0.0) throw ContractError("billiards", "state on Z must point into the piece");
  const double c = start.xi_phi;
  const double r0 = P.r(start.u);
  SegmentResult out;
  out.entry_angle = std::atan2(std::abs(start.xi_u), std::abs(c) / std::max(r0, 1e-300));
  if (std::abs(c) <= kMeridian * rZ) {
    const bool inward = start.xi_u < 0.0;
    out.length = inward ? start.u + uZ : uZ - start.u;
    out.advance = inward ? kPi : 0.0;
  } else {
    if (r0 <= 0.0) throw ContractError("billiards", "nonzero Clairaut constant at the pole");
    const FlowResult fr = flow(P, to_state(P, start), std::nullopt, opt);
    out.length = fr.t;
    out.advance = fr.y[1] - start.phi;
    out.clairaut_drift = fr.clairaut_drift;
    out.norm_drift = fr.norm_drift;
    out.steps = fr.steps;
    const double r = P.r(fr.y[0]);
    out.exit_angle = std::atan2(std::abs(fr.y[2]), r * std::abs(fr.y[3]));
  }
  out.exit = start;
  out.exit.u = uZ;
  out.exit.phi = start.phi + out.advance;
  out.exit.xi_phi = c;
  out.exit.xi_u = std::sqrt(std::max(0.0, 1.0 - c * c / (rZ * rZ)));
  out.exit.t = start.t + out.length;
  if (std::abs(c) <= kMeridian * rZ) out.exit_angle = std::atan2(out.exit.xi_u, std::abs(c) / rZ);
  return out;
}

SegmentResult geodesic_segment(const EdgedSurface& s, int piece, double phi, double beta,
                               const IntegratorOptions& opt) {
  if (!(beta > 0.0 && beta <= 0.5 * kPi))
    throw DomainError("billiards", "entry angle must lie in (0, pi/2]; beta = 0 is a tangential dead end");
  return integrate_to_edge(s, edge_state(s, piece, phi, beta), opt);
}

PhasePoint advance(const EdgedSurface& s, const PhasePoint& start, double duration, const IntegratorOptions& opt,
                   double* clairaut_drift) {
  const Profile& P = s.piece[start.piece];
  PhasePoint out = start;
  out.t = start.t + duration;
  if (std::abs(start.xi_phi) <= kMeridian * s.r_edge) {
    double u = start.u + start.xi_u * duration;
    if (u < 0.0) {
      u = -u;
      out.phi += kPi;
      out.xi_u = -start.xi_u;
    }
    if (u > P.u_edge()) throw ContractError("billiards", "the flow met Z before the requested time");
    out.u = u;
    if (clairaut_drift) *clairaut_drift = 0.0;
    return out;
  }
  const FlowResult fr = flow(P, to_state(P, start), duration, opt);
  const double r = P.r(fr.y[0]);
  out.u = fr.y[0];
  out.phi = fr.y[1];
  out.xi_u = fr.y[2];
  out.xi_phi = r * r * fr.y[3];
  if (clairaut_drift) *clairaut_drift = fr.clairaut_drift;
  return out;
}

std::string to_string(BranchEvent e) {
  switch (e) {
    case BranchEvent::start: return "start";
    case BranchEvent::reflect: return "reflect";
    case BranchEvent::refract: return "refract";
    case BranchEvent::dead_end_tangential: return "dead_end_tangential";
    case BranchEvent::dead_end_reflection_cap: return "dead_end_reflection_cap";
  }
  return "?";
}

std::vector<BranchNode> step_branching(const EdgedSurface& s, const BranchNode& node, double tangential_tol) {
  const PhasePoint& a = node.state;
  if (!on_edge(s, a)) throw ContractError("billiards", "branching happens on Z only");
  const double tang = a.xi_phi / s.r_edge;
  BranchNode base;
  base.state = a;
  base.depth = node.depth + 1;
  base.reflections = node.reflections;
  if (std::abs(tang) >= 1.0 - tangential_tol) {
    base.event = BranchEvent::dead_end_tangential;
    return {base};
  }
  const double normal = std::sqrt(1.0 - tang * tang);
  BranchNode reflect = base, refract = base;
  reflect.event = BranchEvent::reflect;
  reflect.state.xi_u = -normal;
  reflect.reflections = node.reflections + 1;
  refract.event = BranchEvent::refract;
  refract.state.piece = 1 - a.piece;
  refract.state.u = s.piece[refract.state.piece].u_edge();
  refract.state.xi_u = -normal;
  return {reflect, refract};
}

BranchTree trace(const EdgedSurface& s, const PhasePoint& start, const TraceOptions& opt) {
  BranchTree tree;
  BranchNode root;
  root.state = start;
  const double rZ = s.r_edge;
  const bool start_on_edge = on_edge(s, start);
  if (start_on_edge && std::abs(start.xi_phi) / rZ >= 1.0 - 1e-9) {
    root.event = BranchEvent::dead_end_tangential;
    tree.dead_end = true;
    tree.nodes.push_back(root);
    return tree;
  }
  // Entry of the start's own segment, to recognize rotated copies of it.
  PhasePoint entry = start;
  double offset = 0.0;
  if (!start_on_edge) {
    PhasePoint rev = start;
    rev.xi_u = -rev.xi_u;
    rev.xi_phi = -rev.xi_phi;
    rev.t = 0.0;
    const SegmentResult back = integrate_to_edge(s, rev, opt.integrator);
    entry = back.exit;
    entry.xi_u = -entry.xi_u;
    entry.xi_phi = -entry.xi_phi;
    offset = back.length;
  }
  const double r0 = s.piece[start.piece].r(start.u);

  std::map<std::pair<int, double>, SegmentResult> cache;
  tree.nodes.push_back(root);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const BranchNode node = tree.nodes[i];
    if (node.event == BranchEvent::dead_end_tangential || node.event == BranchEvent::dead_end_reflection_cap) continue;
    SegmentResult seg;
    if (opt.reuse_segments && on_edge(s, node.state)) {
      const auto key = std::make_pair(node.state.piece, node.state.xi_phi);
      auto it = cache.find(key);
      if (it == cache.end()) {
        PhasePoint probe = node.state;
        probe.phi = 0.0;
        probe.t = 0.0;
        it = cache.emplace(key, integrate_to_edge(s, probe, opt.integrator)).first;
      }
      seg = it->second;
      seg.exit.phi += node.state.phi;
      seg.exit.t += node.state.t;
    } else {
      seg = integrate_to_edge(s, node.state, opt.integrator);
    }
    tree.max_clairaut_drift = std::max(tree.max_clairaut_drift, seg.clairaut_drift);
    tree.max_norm_drift = std::max(tree.max_norm_drift, seg.norm_drift);
    if (!(seg.length > 0.0)) tree.times_increasing = false;
    const double t_arr = node.state.t + seg.length;
    if (t_arr > opt.time_cap) continue;
    ++tree.events;
    BranchNode arrival = node;
    arrival.state = seg.exit;
    arrival.state.t = t_arr;
    std::vector<BranchNode> succ = step_branching(s, arrival);
    if (tree.nodes.size() + succ.size() > opt.branch_cap) {
      tree.truncated = true;
      break;
    }
    for (BranchNode& b : succ) {
      b.parent = static_cast<int>(i);
      tree.max_tangential_mismatch =
          std::max(tree.max_tangential_mismatch, std::abs(b.state.xi_phi - arrival.state.xi_phi) / rZ);
      tree.max_norm_error = std::max(tree.max_norm_error, std::abs(covector_norm(s, b.state) - 1.0));
      if (b.state.t <= node.state.t) tree.times_increasing = false;
      if (b.event == BranchEvent::reflect && b.reflections > opt.reflection_cap)
        b.event = BranchEvent::dead_end_reflection_cap;
      if (b.event == BranchEvent::dead_end_tangential || b.event == BranchEvent::dead_end_reflection_cap)
        tree.dead_end = true;
      if (b.event != BranchEvent::dead_end_tangential && b.state.piece == start.piece &&
          std::abs(b.state.xi_phi - entry.xi_phi) <= 1e-12 * rZ) {
        const double d = r0 * std::abs(wrap_angle(b.state.phi - entry.phi));
        const double t_ret = b.state.t + offset;
        if (d < opt.epsilon && t_ret <= opt.time_cap && (!tree.periodic_time || t_ret < *tree.periodic_time))
          tree.periodic_time = t_ret;
      }
      tree.nodes.push_back(b);
    }
  }
  return tree;
}

double time_reversal_error(const EdgedSurface& s, const BranchNode& node, const IntegratorOptions& opt) {
  const SegmentResult seg = integrate_to_edge(s, node.state, opt);
  PhasePoint mid = advance(s, node.state, 0.5 * seg.length, opt);
  mid.xi_u = -mid.xi_u;
  mid.xi_phi = -mid.xi_phi;
  PhasePoint target = node.state;
  target.xi_u = -target.xi_u;
  target.xi_phi = -target.xi_phi;
  if (on_edge(s, node.state)) return phase_distance(s, integrate_to_edge(s, mid, opt).exit, target);
  return phase_distance(s, advance(s, mid, 0.5 * seg.length, opt), target);
}

LiouvilleSampler::LiouvilleSampler(const EdgedSurface& s, std::uint64_t seed) : s_(&s), rng_(seed) {}

double LiouvilleSampler::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

PhasePoint LiouvilleSampler::operator()() {
  const double a0 = s_->piece[0].area(), a1 = s_->piece[1].area();
  PhasePoint p;
  p.piece = uniform() * (a0 + a1) < a0 ? 0 : 1;
  const Profile& P = s_->piece[p.piece];
  const double rmax = P.r_max();
  for (;;) {
    const double u = uniform() * P.u_edge();
    if (u <= 0.0 || u >= P.u_edge()) continue;
    if (uniform() * rmax < P.r(u)) {
      p.u = u;
      break;
    }
  }
  p.phi = 2.0 * kPi * uniform();
  const double psi = 2.0 * kPi * uniform();
  p.xi_u = std::cos(psi);
  p.xi_phi = P.r(p.u) * std::sin(psi);
  return p;
}

SampleFlags classify_sample(const EdgedSurface& s, const PhasePoint& z, const PeriodicityOptions& opt) {
  SampleFlags f;
  const double rZ = s.r_edge, c = z.xi_phi;
  if (std::abs(c) / rZ >= 1.0 - 1e-9) {
    f.dead_end = true;
    return f;
  }
  // Every segment of every branch carries the same Clairaut constant, so the
  // branches are rotated copies of two segments. A branch is back at the
  // start after n_p >= 1 segments in the start piece and n_o >= 0 in the
  // other one, rotated by n_1 advance_1 + n_2 advance_2.
  SegmentResult seg[2];
  for (int j = 0; j < 2; ++j) {
    PhasePoint e;
    e.piece = j;
    e.u = s.piece[j].u_edge();
    e.xi_phi = c;
    e.xi_u = -std::sqrt(1.0 - c * c / (rZ * rZ));
    seg[j] = integrate_to_edge(s, e, opt.integrator);
  }
  const int p = z.piece, o = 1 - p;
  const double r0 = s.piece[p].r(z.u);
  const double T = opt.time_cap;
  auto hit = [&](double t, double rot) {
    if (t > T) return;
    if (r0 * std::abs(wrap_angle(rot)) < opt.epsilon && (!f.return_time || t < *f.return_time)) f.return_time = t;
  };
  const double Lp = seg[p].length, Lo = seg[o].length, Dp = seg[p].advance, Do = seg[o].advance;
  std::size_t evaluations = 0;
  if (std::abs(Lp - Lo) <= 1e-12 * Lp && std::abs(Dp - Do) <= 1e-12) {
    for (long n = 1; n * Lp <= T; ++n) {
      if (++evaluations > opt.lattice_cap) {
        f.escaped_cap = true;
        break;
      }
      hit(n * Lp, n * Dp);
    }
  } else {
    for (long np = 1; np * Lp <= T && !f.escaped_cap; ++np)
      for (long no = 0; np * Lp + no * Lo <= T; ++no) {
        if (++evaluations > opt.lattice_cap) {
          f.escaped_cap = true;
          break;
        }
        hit(np * Lp + no * Lo, np * Dp + no * Do);
      }
  }
  f.partially_periodic = f.return_time.has_value();
  // The branch that refracts at the first visit of Z and only reflects
  // afterwards never leaves the other piece, so for a start off Z the branch
  // set never returns as a whole.
  f.completely_periodic = false;
  return f;
}

PeriodicityReport periodicity_measure(const EdgedSurface& s, LiouvilleSampler& sampler, std::size_t n_samples,
                                      const PeriodicityOptions& opt, unsigned threads) {
  PeriodicityReport r;
  r.samples = n_samples;
  std::vector<PhasePoint> pts;
  for (std::size_t i = 0; i < n_samples; ++i) pts.push_back(sampler());
  r.flags.resize(n_samples);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n_samples, 1))));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n_samples; i += threads) r.flags[i] = classify_sample(s, pts[i], opt);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const SampleFlags& f : r.flags) {
    r.periodic += f.partially_periodic;
    r.completely_periodic += f.completely_periodic;
    r.dead_ends += f.dead_end;
    r.escaped += f.escaped_cap;
  }
  if (n_samples > 0) {
    const double n = static_cast<double>(n_samples), ph = static_cast<double>(r.periodic) / n, z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (ph + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom;
    r.estimate = ph;
    r.ci_low = std::max(0.0, centre - half);
    r.ci_high = std::min(1.0, centre + half);
  }
  return r;
}

Json report_to_json(const PeriodicityReport& r) {
  Json j;
  j["samples"] = r.samples;
  j["partially_periodic"] = r.periodic;
  j["completely_periodic"] = r.completely_periodic;
  j["dead_ends"] = r.dead_ends;
  j["escaped_cap"] = r.escaped;
  j["estimate"] = r.estimate ? Json(*r.estimate) : Json(nullptr);
  j["estimate_defined"] = r.estimate.has_value();
  j["ci95"] = {r.ci_low, r.ci_high};
  return j;
}

void write_trace_csv(std::ostream& os, const BranchTree& tree) {
  os << "node,parent,event,piece,t,u,phi,xi_u,xi_phi,depth\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const BranchNode& n = tree.nodes[i];
    os << i << ',' << n.parent << ',' << to_string(n.event) << ',' << n.state.piece + 1 << ','
       << format_double(n.state.t) << ',' << format_double(n.state.u) << ',' << format_double(n.state.phi) << ','
       << format_double(n.state.xi_u) << ',' << format_double(n.state.xi_phi) << ',' << n.depth << '\n';
  }
}

}  // namespace steklov
