#include "steklov/weyl.hpp"

#include "steklov/errors.hpp"
#include "steklov/io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;

// Integral of lambda^-d over [max(1, tau), lambda_max].
double lambda_weight(double tau, double lambda_max, int d) {
  const double lo = std::max(1.0, tau);
  if (lo >= lambda_max) return 0.0;
  if (d == 1) return std::log(lambda_max / lo);
  return (std::pow(lo, 1 - d) - std::pow(lambda_max, 1 - d)) / (d - 1);
}

// Integral of lambda^-d (lambda - 1) over [1, lambda_max].
double literal_weight(double lambda_max, int d) {
  if (d == 1) return lambda_max - 1.0 - std::log(lambda_max);
  if (d == 2) return std::log(lambda_max) + 1.0 / lambda_max - 1.0;
  return (std::pow(lambda_max, 2 - d) - 1.0) / (2 - d) - (1.0 - std::pow(lambda_max, 1 - d)) / (d - 1);
}

double class_sum(const SectorSolve& sol, double lambda_max, double s_max, int d) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < sol.tau.size(); ++k) {
    const double g = lambda_weight(sol.tau(k), lambda_max, d);
    if (g > 0.0) sum += g * sol.trace_mass(k, 0.0, s_max);
  }
  return sum;
}

bool resolved(const SectorSolve& sol, double lambda_max) {
  const Eigen::Index n = (sol.tau.array() <= lambda_max).count();
  return 5 * n <= sol.tau.size();
}

}  // namespace

CountingData counting_data(const Spectrum& spectrum) {
  CountingData c;
  c.eigenvalues.assign(spectrum.eigenvalues.data(), spectrum.eigenvalues.data() + spectrum.eigenvalues.size());
  std::sort(c.eigenvalues.begin(), c.eigenvalues.end());
  c.domain = spectrum.domain;
  const std::size_t nb = static_cast<std::size_t>(spectrum.eigenvectors.rows());
  const std::size_t top = std::min(c.eigenvalues.size(), nb / 5 + 1);
  c.lambda_lo = c.eigenvalues.empty() ? 0.0 : c.eigenvalues.front();
  c.lambda_hi = top == 0 ? 0.0 : c.eigenvalues[top - 1];
  c.boundary_dofs = nb;
  return c;
}

CountingData counting_data(std::vector<double> eigenvalues, double lambda_lo, double lambda_hi, std::string domain) {
  std::sort(eigenvalues.begin(), eigenvalues.end());
  return CountingData{std::move(eigenvalues), std::move(domain), lambda_lo, lambda_hi, 0};
}

FitWindow resolution_window(const CountingData& data, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.2)) throw DomainError("weyl", "window fraction must lie in (0, 1/5]");
  if (data.eigenvalues.empty() || data.boundary_dofs == 0) throw FitError("no resolved spectrum to window");
  const auto k = std::min(static_cast<std::size_t>(std::floor(static_cast<double>(data.boundary_dofs) * fraction)),
                          data.eigenvalues.size() - 1);
  return FitWindow{data.eigenvalues.front(), data.eigenvalues[k]};
}

long counting_function(const CountingData& data, double lambda) {
  return static_cast<long>(std::lower_bound(data.eigenvalues.begin(), data.eigenvalues.end(), lambda) -
                           data.eigenvalues.begin());
}

double riesz_mean(const CountingData& data, double lambda, double r) {
  if (!(r > 0.0)) throw DomainError("weyl", "Riesz exponent must be positive");
  double sum = 0.0;
  for (double l : data.eigenvalues) {
    if (l >= lambda) break;
    sum += std::pow(lambda - l, r);
  }
  return sum / r;
}

double unit_ball_volume(int d) {
  if (d < 0) throw DomainError("weyl", "dimension must be nonnegative");
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double kappa0(double boundary_measure, int d) {
  return std::pow(2.0 * kPi, -d) * unit_ball_volume(d) * boundary_measure;
}

double kappa0(const PolygonalDomain& domain, int d) { return kappa0(domain.boundary_length, d); }

WeylFit fit_weyl(const CountingData& data, int d, std::optional<FitWindow> window) {
  if (d < 1) throw DomainError("weyl", "dimension must be at least 1");
  const FitWindow w = window.value_or(FitWindow{data.lambda_lo, data.lambda_hi});
  std::vector<double> in;
  for (double l : data.eigenvalues)
    if (l >= w.lo && l <= w.hi) in.push_back(l);
  if (in.size() < 20)
    throw FitError("fit window holds " + std::to_string(in.size()) + " eigenvalues, at least 20 are needed");

  std::vector<double> mids;
  const double scale = std::max(std::abs(in.back()), 1.0);
  for (std::size_t k = 0; k + 1 < in.size(); ++k)
    if (in[k + 1] - in[k] > 1e-12 * scale) mids.push_back(0.5 * (in[k] + in[k + 1]));
  if (mids.size() < 3) throw FitError("fit window has too few distinct eigenvalues");

  const Eigen::Index m = static_cast<Eigen::Index>(mids.size());
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = mids[static_cast<std::size_t>(i)];
    X(i, 0) = std::pow(x, d);
    X(i, 1) = std::pow(x, d - 1);
    y(i) = static_cast<double>(counting_function(data, x));
  }
  Eigen::VectorXd colscale = X.colwise().norm().transpose();
  Eigen::MatrixXd Xs = X * colscale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(cond < 1e8)) throw FitError("ill-conditioned Weyl design matrix (condition " + format_double(cond) + ")");
  Eigen::VectorXd coef = svd.solve(y).cwiseQuotient(colscale);

  WeylFit fit;
  fit.d = d;
  fit.kappa0 = coef(0);
  fit.kappa1_raw = coef(1);
  fit.residual_two = std::sqrt((X * coef - y).squaredNorm() / static_cast<double>(m));
  const double k0 = X.col(0).dot(y) / X.col(0).squaredNorm();
  fit.residual_one = std::sqrt((k0 * X.col(0) - y).squaredNorm() / static_cast<double>(m));
  if (fit.residual_one > 3.0 * fit.residual_two) fit.kappa1 = fit.kappa1_raw;
  fit.window = w;
  fit.samples = mids.size();
  fit.condition = cond;
  return fit;
}

std::string to_string(EdgeMode m) { return m == EdgeMode::relative ? "relative" : "literal"; }

EdgeMode edge_mode_from_string(const std::string& s) {
  if (s == "relative") return EdgeMode::relative;
  if (s == "literal") return EdgeMode::literal;
  throw ConfigError("unknown edge coefficient mode '" + s + "'");
}

double edge_integral(const KernelBasis& basis, const KernelBasis* reference, double lambda_max, double s_max, int d,
                     EdgeMode mode) {
  if (!(lambda_max > 1.0)) throw DomainError("weyl", "lambda_max must exceed 1");
  if (!(s_max > 0.0) || s_max > basis.radius) throw DomainError("weyl", "s_max must lie in (0, R]");
  const double sym = class_sum(basis.sym, lambda_max, s_max, d), asym = class_sum(basis.asym, lambda_max, s_max, d);
  if (mode == EdgeMode::literal) return sym + asym - (2.0 * s_max / kPi) * literal_weight(lambda_max, d);
  if (reference == nullptr || std::abs(reference->alpha - kPi) > 1e-12 || reference->radius != basis.radius ||
      reference->h_near != basis.h_near)
    throw ConfigError("relative edge coefficient needs an alpha = pi reference with identical radius and mesh density");
  return (sym - class_sum(reference->sym, lambda_max, s_max, d)) + (asym - class_sum(reference->asym, lambda_max, s_max, d));
}

EdgeCoefficientResult edge_coefficient(double alpha, const EdgeParams& params, EdgeMode mode) {
  if (!(alpha > 0.0 && alpha <= 2.0 * kPi)) throw DomainError("weyl", "alpha must lie in (0, 2pi]");
  if (!(params.s_max < params.radius)) throw DomainError("weyl", "s_max must be smaller than the radius");
  const bool self = std::abs(alpha - kPi) < 1e-12;

  struct Bases {
    KernelBasis own;
    std::optional<KernelBasis> ref;
  };
  auto make = [&](double R) {
    Bases b{kernel_basis(alpha, R, params.h_near), std::nullopt};
    if (mode == EdgeMode::relative && !self) b.ref = kernel_basis(kPi, R, params.h_near);
    return b;
  };
  auto eval = [&](const Bases& b, double L, double s) {
    const KernelBasis* ref = mode == EdgeMode::literal ? nullptr : (b.ref ? &*b.ref : &b.own);
    return edge_integral(b.own, ref, L, s, params.d, mode);
  };
  auto ok = [&](const Bases& b, double L) {
    bool r = resolved(b.own.sym, L) && resolved(b.own.asym, L);
    if (b.ref) r = r && resolved(b.ref->sym, L) && resolved(b.ref->asym, L);
    return r;
  };

  const Bases base = make(params.radius);
  const Bases wide = make(2.0 * params.radius);

  EdgeCoefficientResult res;
  res.alpha = alpha;
  res.mode = mode;
  res.params = params;
  EdgeDiagnostics& dg = res.diagnostics;

  auto add = [&](const std::string& name, const Bases& b, double L, double s, double R) {
    EdgeVariant v;
    v.name = name;
    v.params = params;
    v.params.lambda_max = L;
    v.params.s_max = s;
    v.params.radius = R;
    v.value = eval(b, L, s);
    v.resolved = ok(b, L);
    dg.variants.push_back(v);
  };
  const double L = params.lambda_max, s = params.s_max, R = params.radius;
  add("base", base, L, s, R);
  add("lambda_max x2", base, 2 * L, s, R);
  add("s_max x2", base, L, 2 * s, R);
  add("radius x2", wide, L, s, 2 * R);
  add("all x2", wide, 2 * L, 2 * s, 2 * R);

  res.value = dg.variants.front().value;
  const double ref_scale = std::abs(res.value);
  dg.resolved = true;
  for (auto& v : dg.variants) {
    const double diff = std::abs(v.value - res.value);
    // Values that vanish to rounding have nothing to compare against.
    v.change = ref_scale > 1e-10 ? diff / ref_scale : (diff > 1e-10 ? INFINITY : 0.0);
    dg.max_change = std::max(dg.max_change, v.change);
    dg.resolved = dg.resolved && v.resolved;
  }
  dg.converged = dg.max_change <= 0.10 && dg.resolved;

  if (mode == EdgeMode::literal) {
    const double inner = dg.variants[0].value;
    const double outer = dg.variants[2].value - inner;
    dg.s_growth = std::abs(inner) > 0 ? std::abs(outer) / std::abs(inner) : INFINITY;
    dg.s_integrand_nondecaying = dg.s_growth > 0.25;
    if (dg.s_integrand_nondecaying) dg.converged = false;
  }
  res.converged = dg.converged;
  return res;
}

double kappa1_from_corners(const PolygonalDomain& domain, const EdgeTable& table) {
  double sum = 0.0;
  for (double a : domain.corner_angles) {
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const auto& e) { return std::abs(e.first - a) <= 1e-9; });
    if (it == table.end()) throw DomainError("weyl", "no edge coefficient for corner angle " + format_double(a));
    sum += it->second;
  }
  return sum;
}

void write_counting_csv(std::ostream& os, const CountingData& data, const std::vector<double>& grid) {
  os << "lambda,N\n";
  for (double l : grid) os << format_double(l) << "," << counting_function(data, l) << "\n";
}

}  // namespace steklov
