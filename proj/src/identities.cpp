#include "steklov/identities.hpp"

#include "steklov/errors.hpp"
#include "steklov/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 polar(double r, double theta) { return Vec2(r * std::cos(theta), r * std::sin(theta)); }

const GaussRule<double>& rule(int n) {
  static thread_local std::vector<GaussRule<double>> cache(64);
  if (n < 1 || n >= 64) throw DomainError("identities", "quadrature point count must lie in [1, 63]");
  auto& g = cache[static_cast<std::size_t>(n)];
  if (g.size() == 0) g = gauss_legendre<double>(n);
  return g;
}

// Radial nodes on [0, R]: half-unit panels up to 10, unit panels beyond.
GaussRule<double> radial_rule(double R, int points) {
  GaussRule<double> out;
  const GaussRule<double>& g = rule(points);
  double a = 0.0;
  while (a < R) {
    const double w = a < 10.0 ? 0.5 : 1.0;
    const double b = std::min(R, a + w);
    const GaussRule<double> p = composite_rule(a, b, g, 1);
    out.nodes.insert(out.nodes.end(), p.nodes.begin(), p.nodes.end());
    out.weights.insert(out.weights.end(), p.weights.begin(), p.weights.end());
    a = b;
  }
  return out;
}

GaussRule<double> angular_rule(double lo, double hi, const QuadratureSpec& spec) {
  return composite_rule(lo, hi, rule(spec.points), spec.theta_panels);
}

// Integral over the ray at angle theta of f(r, sample) dr.
template <typename F>
double ray_integral(const Field& w, double theta, const GaussRule<double>& rr, F&& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rr.size(); ++i) {
    const double r = rr.nodes[i];
    sum += rr.weights[i] * f(r, w(polar(r, theta)));
  }
  return sum;
}

// Integral over the slab lo <= theta <= hi of f(r, theta, sample) r dr dtheta.
template <typename F>
double slab_integral(const Field& w, double lo, double hi, const GaussRule<double>& rr, const QuadratureSpec& spec,
                     F&& f) {
  const GaussRule<double> tt = angular_rule(lo, hi, spec);
  double sum = 0.0;
  for (std::size_t j = 0; j < tt.size(); ++j) {
    double part = 0.0;
    for (std::size_t i = 0; i < rr.size(); ++i) {
      const double r = rr.nodes[i];
      part += rr.weights[i] * r * f(r, tt.nodes[j], w(polar(r, tt.nodes[j])));
    }
    sum += tt.weights[j] * part;
  }
  return sum;
}

void check_symmetry(const ManufacturedSolution& w) {
  if (w.symmetry == SolutionSymmetry::none) return;
  const double sign = w.symmetry == SolutionSymmetry::symmetric ? 1.0 : -1.0;
  double scale = 0.0, worst = 0.0;
  for (double r : {0.2, 0.7, 1.5, 3.0})
    for (double f : {0.1, 0.35, 0.6, 0.9}) {
      const double t = f * 0.5 * w.alpha;
      const double a = w.value(polar(r, t)), b = w.value(polar(r, -t));
      scale = std::max(scale, std::abs(a));
      worst = std::max(worst, std::abs(b - sign * a));
    }
  if (worst > 1e-12 * std::max(scale, 1e-300))
    throw ContractError("identities", "solution '" + w.id + "' does not carry its declared symmetry");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0 * kPi)) throw DomainError("identities", "alpha must lie in (0, 2pi]");
}

}  // namespace

std::string to_string(SolutionSymmetry s) {
  switch (s) {
    case SolutionSymmetry::symmetric: return "symmetric";
    case SolutionSymmetry::antisymmetric: return "antisymmetric";
    case SolutionSymmetry::none: return "none";
  }
  return "?";
}

double ManufacturedSolution::value(const Vec2& x) const {
  double v = 0.0;
  for (const auto& t : exp_terms) v += t.amplitude * std::exp(-t.direction.dot(x));
  for (const auto& s : sources) v += s.amplitude * std::cyl_bessel_k(0.0, (x - s.source).norm());
  return v;
}

Vec2 ManufacturedSolution::gradient(const Vec2& x) const {
  Vec2 g = Vec2::Zero();
  for (const auto& t : exp_terms) g -= t.amplitude * std::exp(-t.direction.dot(x)) * t.direction;
  for (const auto& s : sources) {
    const Vec2 d = x - s.source;
    const double rho = d.norm();
    g -= s.amplitude * std::cyl_bessel_k(1.0, rho) / rho * d;
  }
  return g;
}

Eigen::Matrix2d ManufacturedSolution::hessian(const Vec2& x) const {
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  for (const auto& t : exp_terms)
    H += t.amplitude * std::exp(-t.direction.dot(x)) * (t.direction * t.direction.transpose());
  for (const auto& s : sources) {
    const Vec2 d = x - s.source;
    const double rho = d.norm();
    const double k0 = std::cyl_bessel_k(0.0, rho), k1 = std::cyl_bessel_k(1.0, rho);
    const Eigen::Matrix2d dd = d * d.transpose() / (rho * rho);
    H += s.amplitude * ((k0 + 2.0 * k1 / rho) * dd - (k1 / rho) * Eigen::Matrix2d::Identity());
  }
  return H;
}

FieldSample ManufacturedSolution::sample(const Vec2& x) const { return {value(x), gradient(x)}; }

FieldSample ManufacturedSolution::theta_sample(const Vec2& x) const {
  const Vec2 g = gradient(x);
  const Eigen::Matrix2d H = hessian(x);
  FieldSample s;
  s.value = x.x() * g.y() - x.y() * g.x();
  s.grad = Vec2(g.y() + x.x() * H(1, 0) - x.y() * H(0, 0), -g.x() + x.x() * H(1, 1) - x.y() * H(0, 1));
  return s;
}

double ManufacturedSolution::operator_residual(const Vec2& x) const { return -hessian(x).trace() + value(x); }

Field ManufacturedSolution::field() const {
  return [self = *this](const Vec2& x) { return self.sample(x); };
}

Field ManufacturedSolution::theta_field() const {
  return [self = *this](const Vec2& x) { return self.theta_sample(x); };
}

ManufacturedSolution manufactured_solution(std::vector<ExpTerm> terms, double alpha, SolutionSymmetry tag,
                                           std::string id) {
  check_alpha(alpha);
  if (terms.empty()) throw ContractError("identities", "a manufactured solution needs at least one term");
  double decay = INFINITY;
  for (const auto& t : terms) {
    if (std::abs(t.direction.norm() - 1.0) > 1e-14)
      throw ContractError("identities", "term direction must have unit length");
    const double phi = std::atan2(t.direction.y(), t.direction.x());
    const double worst = 0.5 * alpha + std::abs(phi);
    const double margin = worst < kPi ? std::cos(worst) : -1.0;
    if (!(margin > 1e-3))
      throw DomainError("identities", "term direction lies outside the dual cone of the sector; integrals diverge");
    decay = std::min(decay, margin);
  }
  ManufacturedSolution w;
  w.id = std::move(id);
  w.alpha = alpha;
  w.symmetry = tag;
  w.exp_terms = std::move(terms);
  w.decay = decay;
  check_symmetry(w);
  return w;
}

ManufacturedSolution source_solution(std::vector<SourceTerm> sources, double alpha, SolutionSymmetry tag,
                                     std::string id) {
  check_alpha(alpha);
  if (sources.empty()) throw ContractError("identities", "a source solution needs at least one source");
  double reach = 0.0;
  for (const auto& s : sources) {
    const double rho = s.source.norm();
    const double gap = std::abs(std::atan2(s.source.y(), s.source.x())) - 0.5 * alpha;
    const double dist = gap >= 0.5 * kPi ? rho : rho * std::sin(gap);
    if (!(gap > 0.0) || dist < 0.25)
      throw DomainError("identities", "source must lie outside the closed sector at distance at least 1/4");
    reach = std::max(reach, rho);
  }
  ManufacturedSolution w;
  w.id = std::move(id);
  w.alpha = alpha;
  w.symmetry = tag;
  w.sources = std::move(sources);
  w.decay = 1.0;
  w.reach = reach;
  check_symmetry(w);
  return w;
}

ManufacturedSolution exponential_pair(double alpha, double phi, SolutionSymmetry tag, std::string id) {
  const Vec2 a(std::cos(phi), std::sin(phi)), b(std::cos(phi), -std::sin(phi));
  if (tag == SolutionSymmetry::none) return manufactured_solution({{1.0, a}}, alpha, tag, std::move(id));
  const double sign = tag == SolutionSymmetry::symmetric ? 1.0 : -1.0;
  return manufactured_solution({{1.0, a}, {sign, b}}, alpha, tag, std::move(id));
}

ManufacturedSolution source_pair(double alpha, double radius, double angle, SolutionSymmetry tag, std::string id) {
  const Vec2 a = polar(radius, angle), b = polar(radius, -angle);
  if (tag == SolutionSymmetry::none) return source_solution({{1.0, a}}, alpha, tag, std::move(id));
  const double sign = tag == SolutionSymmetry::symmetric ? 1.0 : -1.0;
  return source_solution({{1.0, a}, {sign, b}}, alpha, tag, std::move(id));
}

double quadrature_radius(const ManufacturedSolution& w, const QuadratureSpec& spec) {
  if (spec.radius > 0.0) return spec.radius;
  return w.reach + (std::log(1.0 / spec.tail_target) + 10.0) / (2.0 * w.decay);
}

std::string to_string(IdentityId id) {
  switch (id) {
    case IdentityId::multiplier_x1: return "multiplier_x1";
    case IdentityId::multiplier_normal: return "multiplier_normal";
    case IdentityId::bisector_antisymmetric: return "bisector_antisymmetric";
    case IdentityId::bisector_symmetric: return "bisector_symmetric";
    case IdentityId::rotation_antisymmetric: return "rotation_antisymmetric";
    case IdentityId::rotation_symmetric: return "rotation_symmetric";
  }
  return "?";
}

IdentityId identity_from_string(const std::string& s) {
  for (IdentityId id : {IdentityId::multiplier_x1, IdentityId::multiplier_normal, IdentityId::bisector_antisymmetric,
                        IdentityId::bisector_symmetric, IdentityId::rotation_antisymmetric,
                        IdentityId::rotation_symmetric})
    if (to_string(id) == s) return id;
  throw ConfigError("unknown identity '" + s + "'");
}

IdentityResidual rellich_residual(const ManufacturedSolution& w, IdentityId id, const QuadratureSpec& spec,
                                  std::optional<Vec2> ell) {
  const double half = 0.5 * w.alpha;
  const double c = std::cos(half), s = std::sin(half);
  const Vec2 t2(c, s), nu2(s, -c);
  const Vec2 t1(c, -s), nu1(s, c);
  const GaussRule<double> rr = radial_rule(quadrature_radius(w, spec), spec.points);
  const Field f = w.field();

  IdentityResidual out;
  out.id = id;
  switch (id) {
    case IdentityId::multiplier_x1:
    case IdentityId::multiplier_normal: {
      const Vec2 l = ell.value_or(id == IdentityId::multiplier_x1 ? Vec2(1.0, 0.0) : nu2);
      // Three constituents per ray: gradient quadratic part, product part, mass part.
      for (const auto& [theta, nu] : {std::pair{half, nu2}, std::pair{-half, nu1}}) {
        const double a = nu.x() * l.x() - nu.y() * l.y(), b = nu.y() * l.x() + nu.x() * l.y();
        const double m = nu.dot(l);
        out.terms.push_back(ray_integral(f, theta, rr, [&](double, const FieldSample& q) {
          return (q.grad.x() * q.grad.x() - q.grad.y() * q.grad.y()) * a;
        }));
        out.terms.push_back(
            ray_integral(f, theta, rr, [&](double, const FieldSample& q) { return 2.0 * q.grad.x() * q.grad.y() * b; }));
        out.terms.push_back(ray_integral(f, theta, rr, [&](double, const FieldSample& q) { return -q.value * q.value * m; }));
      }
      break;
    }
    case IdentityId::bisector_antisymmetric:
    case IdentityId::bisector_symmetric:
    case IdentityId::rotation_antisymmetric:
    case IdentityId::rotation_symmetric: {
      const bool anti = id == IdentityId::bisector_antisymmetric || id == IdentityId::rotation_antisymmetric;
      const bool rot = id == IdentityId::rotation_antisymmetric || id == IdentityId::rotation_symmetric;
      if (anti != (w.symmetry == SolutionSymmetry::antisymmetric) ||
          (!anti && w.symmetry != SolutionSymmetry::symmetric))
        throw ContractError("identities", to_string(id) + " requires a " +
                                              (anti ? std::string("antisymmetric") : std::string("symmetric")) +
                                              " solution, got " + to_string(w.symmetry));
      auto weight = [&](double r) { return rot ? r : 1.0; };
      out.terms.push_back(ray_integral(f, half, rr, [&](double r, const FieldSample& q) {
        const double wn = q.grad.dot(nu2);
        return wn * wn * weight(r);
      }));
      out.terms.push_back(ray_integral(f, half, rr, [&](double r, const FieldSample& q) {
        const double wr = q.grad.dot(t2);
        return -wr * wr * weight(r);
      }));
      out.terms.push_back(ray_integral(f, half, rr, [&](double r, const FieldSample& q) {
        return -q.value * q.value * weight(r);
      }));
      const double bis = ray_integral(f, 0.0, rr, [&](double r, const FieldSample& q) {
        return (anti ? q.grad.y() * q.grad.y() : q.grad.x() * q.grad.x() + q.value * q.value) * weight(r);
      });
      if (rot)
        out.terms.push_back(anti ? -bis : bis);
      else
        out.terms.push_back(anti ? -c * bis : c * bis);
      break;
    }
  }
  double sum = 0.0;
  for (double t : out.terms) {
    sum += t;
    out.scale = std::max(out.scale, std::abs(t));
  }
  out.residual = out.scale > 0.0 ? std::abs(sum) / out.scale : 0.0;
  return out;
}

FluxProfile theta_flux_profile(const ManufacturedSolution& w, const std::vector<double>& beta_grid,
                               const QuadratureSpec& spec) {
  const double half = 0.5 * w.alpha;
  for (double b : beta_grid)
    if (b < -half || b > half) throw DomainError("identities", "flux ray outside the sector");
  const GaussRule<double> rr = radial_rule(quadrature_radius(w, spec), spec.points);
  const Field f = w.field();
  auto flux = [&](double beta, double* mag) {
    const Vec2 t(std::cos(beta), std::sin(beta)), tp(-std::sin(beta), std::cos(beta));
    if (mag)
      *mag = ray_integral(f, beta, rr, [&](double r, const FieldSample& q) {
        const double a = q.grad.dot(tp), b = q.grad.dot(t);
        return r * (a * a + b * b + q.value * q.value);
      });
    return ray_integral(f, beta, rr, [&](double r, const FieldSample& q) {
      const double a = q.grad.dot(tp), b = q.grad.dot(t);
      return r * (a * a - b * b - q.value * q.value);
    });
  };
  FluxProfile out;
  out.beta = beta_grid;
  double m0 = 0.0;
  const double i0 = flux(0.0, &m0);
  out.scale = m0;
  for (double b : beta_grid) {
    double m = 0.0;
    out.values.push_back(flux(b, &m));
    out.scale = std::max(out.scale, m);
  }
  for (double v : out.values) out.deviation = std::max(out.deviation, std::abs(v - i0));
  out.deviation = out.scale > 0.0 ? out.deviation / out.scale : 0.0;

  out.slabs = {{-0.4 * w.alpha, 0.1 * w.alpha}, {-0.2 * w.alpha, 0.3 * w.alpha}, {0.0, 0.45 * w.alpha}};
  double worst = 0.0;
  for (const auto& [b1, b2] : out.slabs) {
    const double J = slab_integral(f, b1, b2, rr, spec, [&](double r, double theta, const FieldSample& q) {
      const Vec2 t(std::cos(theta), std::sin(theta)), tp(-std::sin(theta), std::cos(theta));
      const double a = q.grad.dot(tp), b = q.grad.dot(t);
      (void)r;
      return a * a - b * b - q.value * q.value;
    });
    out.slab_ratios.push_back(J / (b2 - b1));
    worst = std::max(worst, std::abs(J / (b2 - b1) - i0));
  }
  out.slab_deviation = out.scale > 0.0 ? worst / out.scale : 0.0;
  return out;
}

EnergyDefect energy_defect(const ManufacturedSolution& w, const QuadratureSpec& spec) {
  const double half = 0.5 * w.alpha;
  const double R = quadrature_radius(w, spec);
  const Field f = w.field();
  auto run = [&](const QuadratureSpec& q, double* norm) {
    const GaussRule<double> rr = radial_rule(R, q.points);
    *norm = slab_integral(f, -half, half, rr, q, [](double, double, const FieldSample& s) { return s.value * s.value; });
    return slab_integral(f, -half, half, rr, q, [](double, double, const FieldSample& s) {
      return s.grad.squaredNorm() - s.value * s.value;
    });
  };
  EnergyDefect out;
  out.defect = run(spec, &out.norm);
  QuadratureSpec finer = spec;
  finer.points = spec.points + 8;
  finer.theta_panels = spec.theta_panels + 4;
  double n2 = 0.0;
  const double d2 = run(finer, &n2);
  // Tail beyond R bounded by the decay of |grad w|^2 + w^2.
  double edge = 0.0;
  for (int k = 0; k <= 16; ++k) {
    const FieldSample s = f(polar(R, -half + w.alpha * k / 16.0));
    edge = std::max(edge, s.grad.squaredNorm() + s.value * s.value);
  }
  out.error_bar = std::abs(out.defect - d2) + edge * w.alpha * (R + 1.0) / (2.0 * w.decay) +
                  1e-14 * std::max(out.norm, 1e-300);
  return out;
}

EnergyDefect energy_defect_fe(double alpha, Symmetry cls, const std::function<double(double)>& data, double radius,
                              double h_near) {
  if (cls == Symmetry::full) throw ContractError("identities", "finite element energy defects need a symmetry class");
  auto level = [&](double h, double* norm) {
    SectorMeshParams p;
    p.h_near = h;
    p.ray_grading = 0.0;
    const auto sys = sector_system(alpha, cls, radius, p);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(sys->s.size()), 1);
    for (std::size_t i = 0; i < sys->s.size(); ++i) v(static_cast<Eigen::Index>(i), 0) = data(sys->s[i]);
    const Eigen::VectorXd w = sys->dtn.extend(v).col(0);
    const double grad = w.dot(sys->forms.stiffness * w);
    const double mass = w.dot(sys->forms.domain_mass * w);
    // The class solution lives on one half; the full sector doubles both.
    *norm = 2.0 * mass;
    return 2.0 * (grad - mass);
  };
  EnergyDefect out;
  out.defect = level(h_near, &out.norm);
  double n2 = 0.0;
  const double d2 = level(0.5 * h_near, &n2);
  out.error_bar = std::abs(out.defect - d2) + std::abs(out.norm - n2) * 1e-3;
  out.defect = d2;
  out.norm = n2;
  return out;
}

ConvexityProfile beta_convexity_profile(const ManufacturedSolution& w, double sigma,
                                        const std::vector<double>& beta_grid, bool use_theta_derivative,
                                        const QuadratureSpec& spec) {
  const double half = 0.5 * w.alpha;
  if (!(sigma > 0.0)) throw DomainError("identities", "sigma must be positive");
  for (double b : beta_grid)
    if (b - sigma < -half - 1e-14 || b + sigma > half + 1e-14)
      throw DomainError("identities", "slab leaves the sector");
  const Field f = use_theta_derivative ? w.theta_field() : w.field();
  const double f0 = f(Vec2::Zero()).value;
  const GaussRule<double> rr = radial_rule(quadrature_radius(w, spec), spec.points);
  ConvexityProfile out;
  out.beta = beta_grid;
  for (double b : beta_grid) {
    const double J = slab_integral(f, b - sigma, b + sigma, rr, spec, [&](double r, double, const FieldSample& q) {
      return (q.value * q.value - f0 * f0 * std::exp(-r)) / (r * r);
    });
    out.values.push_back(J);
    out.scale = std::max(out.scale, std::abs(J));
  }
  out.min_second_difference = INFINITY;
  for (std::size_t i = 1; i + 1 < out.values.size(); ++i) {
    const double d = out.values[i - 1] - 2.0 * out.values[i] + out.values[i + 1];
    out.second_differences.push_back(d);
    out.min_second_difference = std::min(out.min_second_difference, d);
  }
  if (out.second_differences.empty()) out.min_second_difference = 0.0;
  out.convex = out.min_second_difference >= -1e-8 * out.scale;
  out.argmin = static_cast<std::size_t>(std::min_element(out.values.begin(), out.values.end()) - out.values.begin());
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < beta_grid.size(); ++i)
    if (std::abs(beta_grid[i]) < std::abs(beta_grid[nearest])) nearest = i;
  // Symmetric grids tie at +-beta; compare values rather than indices.
  out.minimum_at_zero = !out.values.empty() && out.values[out.argmin] >= out.values[nearest] - 1e-12 * out.scale;
  return out;
}

EigenEquality check_eigen_equality(double alpha, double tol, const SectorSpectrumOptions& options) {
  EigenEquality out;
  out.alpha = alpha;
  if (!(alpha > 0.0 && alpha < kPi)) return out;
  const SectorSpectrumResult res = sector_spectrum(alpha, Symmetry::symmetric, tol, options);
  if (res.discrete().empty() || res.solves.empty()) return out;
  const SectorSolve& sol = res.solves.front();
  const auto& forms = sol.system->forms;
  std::vector<Eigen::VectorXd> ws;
  for (Eigen::Index k = 0; k < sol.tau.size() && sol.tau(k) < 1.0 - tol; ++k) {
    const Eigen::VectorXd w = sol.extension(k);
    const double grad = w.dot(forms.stiffness * w), mass = w.dot(forms.domain_mass * w);
    out.tau.push_back(sol.tau(k));
    out.ratios.push_back(std::abs(grad - mass) / mass);
    ws.push_back(w);
  }
  for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
    if (std::abs(out.tau[i + 1] - out.tau[i]) > tol) continue;
    const Eigen::VectorXd& a = ws[i];
    const Eigen::VectorXd& b = ws[i + 1];
    const double cross = a.dot(forms.stiffness * b) - a.dot(forms.domain_mass * b);
    out.cross_ratios.push_back(std::abs(cross) / std::sqrt(a.dot(forms.domain_mass * a) * b.dot(forms.domain_mass * b)));
  }
  out.applicable = !out.ratios.empty();
  out.ratio = out.applicable ? out.ratios.front() : 0.0;
  return out;
}

std::vector<std::pair<double, double>> antisymmetric_defects(double alpha, double radius, Eigen::Index count) {
  const SectorSolve sol = solve_sector(alpha, Symmetry::antisymmetric, radius);
  const auto& forms = sol.system->forms;
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index k = 0; k < std::min(count, sol.tau.size()); ++k) {
    const Eigen::VectorXd w = sol.extension(k);
    const double grad = w.dot(forms.stiffness * w), mass = w.dot(forms.domain_mass * w);
    out.emplace_back(sol.tau(k), (grad - mass) / mass);
  }
  return out;
}

std::vector<ManufacturedSolution> identity_battery() {
  using S = SolutionSymmetry;
  std::vector<ManufacturedSolution> b;
  b.push_back(manufactured_solution({{1.0, Vec2(1.0, 0.0)}}, kPi / 2, S::symmetric, "exp_x1"));
  b.push_back(exponential_pair(kPi / 2, 0.3, S::symmetric, "exp_pair_sym"));
  b.push_back(exponential_pair(kPi / 2, 0.3, S::antisymmetric, "exp_pair_anti"));
  b.push_back(exponential_pair(kPi / 3, 0.3, S::none, "exp_single_tilted"));
  b.push_back(exponential_pair(kPi / 3, 0.4, S::symmetric, "exp_pair_sym"));
  b.push_back(exponential_pair(kPi / 3, 0.5, S::antisymmetric, "exp_pair_anti"));
  b.push_back(exponential_pair(2 * kPi / 3, 0.2, S::antisymmetric, "exp_pair_anti"));
  b.push_back(manufactured_solution(
      {{1.0, Vec2(1.0, 0.0)}, {0.5, Vec2(std::cos(0.25), std::sin(0.25))}, {0.5, Vec2(std::cos(0.25), -std::sin(0.25))}},
      2 * kPi / 3, S::symmetric, "exp_triple_sym"));
  b.push_back(source_pair(kPi, 2.0, 2.2, S::symmetric, "k0_pair_sym"));
  b.push_back(source_pair(kPi, 2.0, 2.2, S::antisymmetric, "k0_pair_anti"));
  b.push_back(source_pair(1.5 * kPi, 2.0, kPi - 0.3, S::symmetric, "k0_pair_sym"));
  b.push_back(source_pair(1.25 * kPi, 2.0, kPi - 0.3, S::antisymmetric, "k0_pair_anti"));
  return b;
}

std::vector<SuiteEntry> verify_identities(const QuadratureSpec& spec, double tol) {
  std::vector<SuiteEntry> out;
  auto add = [&](const std::string& id, const ManufacturedSolution& w, double residual) {
    out.push_back({id, w.alpha, w.id, residual, tol, residual <= tol});
  };
  for (const ManufacturedSolution& w : identity_battery()) {
    add(to_string(IdentityId::multiplier_x1), w, rellich_residual(w, IdentityId::multiplier_x1, spec).residual);
    add(to_string(IdentityId::multiplier_normal), w, rellich_residual(w, IdentityId::multiplier_normal, spec).residual);
    if (w.symmetry == SolutionSymmetry::antisymmetric) {
      for (IdentityId id : {IdentityId::bisector_antisymmetric, IdentityId::rotation_antisymmetric})
        add(to_string(id), w, rellich_residual(w, id, spec).residual);
    } else if (w.symmetry == SolutionSymmetry::symmetric) {
      for (IdentityId id : {IdentityId::bisector_symmetric, IdentityId::rotation_symmetric})
        add(to_string(id), w, rellich_residual(w, id, spec).residual);
    }
    std::vector<double> rays;
    for (int k = -3; k <= 3; ++k) rays.push_back(0.15 * k * w.alpha);
    const FluxProfile fp = theta_flux_profile(w, rays, spec);
    add("ray_flux_constancy", w, fp.deviation);
    add("slab_flux_proportionality", w, fp.slab_deviation);

    const double sigma = w.alpha / 8.0;
    std::vector<double> grid;
    for (int k = -4; k <= 4; ++k) grid.push_back(k * w.alpha / 16.0);
    for (bool theta : {false, true}) {
      const ConvexityProfile cp = beta_convexity_profile(w, sigma, grid, theta, spec);
      const std::string suffix = theta ? "_theta" : "";
      add("slab_convexity" + suffix, w, cp.scale > 0 ? std::max(0.0, -cp.min_second_difference) / cp.scale : 0.0);
      if (w.symmetry != SolutionSymmetry::none)
        add("slab_minimum" + suffix, w, cp.minimum_at_zero ? 0.0 : 1.0);
    }
  }
  return out;
}

std::vector<EnergyCase> energy_battery(const std::vector<double>& alphas, const QuadratureSpec& spec) {
  using S = SolutionSymmetry;
  std::vector<EnergyCase> out;
  for (double alpha : alphas) {
    for (S sym : {S::symmetric, S::antisymmetric}) {
      const bool proven = (alpha <= kPi + 1e-12 && sym == S::antisymmetric) || alpha > kPi + 1e-12;
      const bool anti = sym == S::antisymmetric;
      if (alpha >= 2 * kPi - 1e-12) {
        const Symmetry cls = anti ? Symmetry::antisymmetric : Symmetry::symmetric;
        for (double center : {1.0, 3.0}) {
          auto bump = [center](double s) { return std::exp(-(s - center) * (s - center)); };
          EnergyCase c;
          c.alpha = alpha;
          c.symmetry = sym;
          c.solution_id = "fe_bump_" + format_double(center) + (anti ? "_anti" : "_sym");
          c.defect = energy_defect_fe(alpha, cls, bump);
          c.sign_asserted = proven;
          out.push_back(c);
        }
        continue;
      }
      std::vector<ManufacturedSolution> ws;
      if (alpha < kPi - 1e-12) {
        const double room = 0.5 * kPi - 0.5 * alpha;
        ws.push_back(exponential_pair(alpha, 0.4 * room, sym, anti ? "exp_pair_anti" : "exp_pair_sym"));
        ws.push_back(exponential_pair(alpha, 0.8 * room, sym, anti ? "exp_pair_anti_wide" : "exp_pair_sym_wide"));
      } else {
        const double gap = kPi - 0.5 * alpha;
        ws.push_back(source_pair(alpha, 2.0, 0.5 * alpha + 0.5 * gap, sym, anti ? "k0_pair_anti" : "k0_pair_sym"));
        ws.push_back(source_pair(alpha, 4.0, 0.5 * alpha + 0.5 * gap, sym, anti ? "k0_far_anti" : "k0_far_sym"));
      }
      for (const auto& w : ws) {
        EnergyCase c;
        c.alpha = alpha;
        c.symmetry = sym;
        c.solution_id = w.id;
        c.defect = energy_defect(w, spec);
        c.sign_asserted = proven;
        out.push_back(c);
      }
    }
  }
  return out;
}

Json suite_to_json(const std::vector<SuiteEntry>& entries) {
  Json arr = Json::array();
  for (const auto& e : entries)
    arr.push_back({{"identity_id", e.identity_id},
                   {"alpha", e.alpha},
                   {"solution_id", e.solution_id},
                   {"residual", e.residual},
                   {"tolerance", e.tolerance},
                   {"pass", e.pass}});
  return arr;
}

}  // namespace steklov
