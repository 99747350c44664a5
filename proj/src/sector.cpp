#include "steklov/sector.hpp"

#include "steklov/errors.hpp"
#include "steklov/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace steklov {

namespace {

constexpr double kPi = std::numbers::pi;

double lower_end(const SectorSolve& s) { return s.symmetry == Symmetry::full ? -s.radius : 0.0; }

// Trace samples with the Dirichlet zeros at the chart ends made explicit.
void augmented(const SectorSolve& sol, Eigen::Index k, std::vector<double>& x, std::vector<double>& v) {
  x.clear();
  v.clear();
  const double lo = lower_end(sol), hi = sol.radius;
  const double eps = 1e-12 * std::max(1.0, hi);
  if (sol.s.empty() || sol.s.front() > lo + eps) {
    x.push_back(lo);
    v.push_back(0.0);
  }
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    x.push_back(sol.s[i]);
    v.push_back(sol.traces(static_cast<Eigen::Index>(i), k));
  }
  if (sol.s.empty() || sol.s.back() < hi - eps) {
    x.push_back(hi);
    v.push_back(0.0);
  }
}

}  // namespace

std::string to_string(SectorLabel l) {
  switch (l) {
    case SectorLabel::discrete: return "discrete";
    case SectorLabel::continuum: return "continuum";
    case SectorLabel::unverified_embedded: return "unverified_embedded";
  }
  return "?";
}

double SectorSolve::trace_at(Eigen::Index k, double x) const {
  std::vector<double> xs, vs;
  augmented(*this, k, xs, vs);
  if (x < xs.front() || x > xs.back()) return 0.0;
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return vs.back();
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  if (j == 0) return vs.front();
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return (1.0 - t) * vs[j - 1] + t * vs[j];
}

double SectorSolve::trace_mass(Eigen::Index k, double a, double b) const {
  std::vector<double> xs, vs;
  augmented(*this, k, xs, vs);
  a = std::max(a, xs.front());
  b = std::min(b, xs.back());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = std::max(a, xs[i]), x1 = std::min(b, xs[i + 1]);
    if (x1 <= x0) continue;
    const double h = xs[i + 1] - xs[i];
    const double f0 = vs[i] + (vs[i + 1] - vs[i]) * (x0 - xs[i]) / h;
    const double f1 = vs[i] + (vs[i + 1] - vs[i]) * (x1 - xs[i]) / h;
    total += (x1 - x0) * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0;
  }
  return total;
}

Eigen::VectorXd SectorSolve::extension(Eigen::Index k) const {
  if (!system) throw ContractError("sector", "solve carries no finite-element system");
  const Eigen::Index n = traces.rows();
  Eigen::MatrixXd bv(n, 1);
  // traces are sorted; undo the permutation to the DtN dof order
  for (Eigen::Index i = 0; i < n; ++i) bv(system->order[static_cast<std::size_t>(i)], 0) = traces(i, k);
  return system->dtn.extend(bv).col(0);
}

std::shared_ptr<SectorSystem> sector_system(double alpha, Symmetry symmetry, double radius,
                                            const SectorMeshParams& params) {
  const SectorDomain dom = build_sector(alpha, radius, symmetry);
  GradedSizing g;
  g.h_near = params.h_near;
  g.grading = params.grading;
  g.h_far = params.h_far > 0 ? params.h_far : std::max(params.h_near, 0.25 * radius);
  g.ray_grading = params.ray_grading;
  auto sys = std::make_shared<SectorSystem>();
  sys->mesh = triangulate_graded(dom, g, params.max_nodes);
  sys->forms = assemble(sys->mesh, true);
  sys->dtn = schur_dtn(sys->forms);
  const BoundaryChart chart = boundary_chart(dom);
  for (const Vec2& p : sys->dtn.points) sys->s.push_back(chart.coordinate(p, 1e-9 * std::max(1.0, radius)));
  sys->order.resize(sys->s.size());
  std::iota(sys->order.begin(), sys->order.end(), 0);
  std::stable_sort(sys->order.begin(), sys->order.end(), [&](int a, int b) { return sys->s[a] < sys->s[b]; });
  return sys;
}

SectorSolve solve_sector(double alpha, Symmetry symmetry, double radius, const SectorMeshParams& params) {
  auto sys = sector_system(alpha, symmetry, radius, params);
  const std::vector<double>& s = sys->s;
  const std::vector<int>& perm = sys->order;
  const auto n = static_cast<Eigen::Index>(sys->dtn.nodes.size());
  Eigen::MatrixXd S(n, n), M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      S(i, j) = sys->dtn.S(perm[i], perm[j]);
      M(i, j) = sys->dtn.Mb(perm[i], perm[j]);
    }
  }
  const Spectrum sp = solve_gevp(S, M, n);
  SectorSolve out;
  out.alpha = alpha;
  out.symmetry = symmetry;
  out.radius = radius;
  out.params = params;
  out.tau = sp.eigenvalues;
  out.traces = sp.eigenvectors;
  for (Eigen::Index i = 0; i < n; ++i) out.s.push_back(s[perm[i]]);
  out.Mb = std::move(M);
  out.system = sys;
  return out;
}

std::vector<double> SectorSpectrumResult::discrete() const {
  std::vector<double> d;
  for (const auto& e : eigen)
    if (e.label == SectorLabel::discrete) d.push_back(e.tau);
  std::sort(d.begin(), d.end());
  return d;
}

double initial_truncation_radius(double alpha) {
  if (alpha >= kPi) return 20.0;
  return 10.0 / std::cos(0.5 * alpha);
}

namespace {

std::vector<double> below(const SectorSolve& s, double cut) {
  std::vector<double> out;
  for (Eigen::Index k = 0; k < s.tau.size(); ++k)
    if (s.tau(k) < cut) out.push_back(s.tau(k));
  return out;
}

void run_class(double alpha, Symmetry cls, double tol, const SectorSpectrumOptions& opt,
               SectorSpectrumResult& res) {
  double R = opt.initial_radius ? *opt.initial_radius : initial_truncation_radius(alpha);
  SectorSolve prev = solve_sector(alpha, cls, R, opt.mesh);
  res.radii_tried.push_back(R);
  const double cut = kEssentialThreshold - tol;
  while (true) {
    if (2.0 * R > opt.radius_cap) {
      std::ostringstream os;
      os << "discrete eigenvalues did not stabilize before the truncation cap R = " << opt.radius_cap
         << " (alpha = " << alpha << ", class " << to_string(cls) << ")";
      throw TruncationError(os.str());
    }
    SectorSolve cur = solve_sector(alpha, cls, 2.0 * R, opt.mesh);
    res.radii_tried.push_back(2.0 * R);
    const auto a = below(prev, cut), b = below(cur, cut);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = std::abs(a[i] - b[i]) < tol;
    if (same) {
      for (Eigen::Index k = 0; k < cur.tau.size(); ++k) {
        const double t = cur.tau(k);
        if (t > opt.export_max) break;
        SectorEigen e;
        e.k = k;
        e.cls = cls;
        e.tau = t;
        e.radius = cur.radius;
        if (t < cut) {
          e.label = SectorLabel::discrete;
          e.stable = true;
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (Eigen::Index j = 0; j < prev.tau.size(); ++j) best = std::min(best, std::abs(prev.tau(j) - t));
          e.stable = best < tol;
          const double inner = cur.trace_mass(k, 0.0, 0.5 * cur.radius);
          e.label = (e.stable && t > kEssentialThreshold && inner > 0.99) ? SectorLabel::unverified_embedded
                                                                          : SectorLabel::continuum;
        }
        res.eigen.push_back(e);
      }
      res.radius_final = std::max(res.radius_final, cur.radius);
      res.solves.push_back(std::move(cur));
      return;
    }
    prev = std::move(cur);
    R *= 2.0;
  }
}

}  // namespace

SectorSpectrumResult sector_spectrum(double alpha, Symmetry symmetry, double tol,
                                     const SectorSpectrumOptions& options) {
  if (!(alpha > 0.0 && alpha <= 2.0 * kPi)) throw DomainError("sector", "alpha must lie in (0, 2pi]");
  if (!(tol > 0.0)) throw DomainError("sector", "tolerance must be positive");
  SectorSpectrumResult res;
  res.alpha = alpha;
  res.symmetry = symmetry;
  res.tol = tol;
  if (symmetry == Symmetry::full) {
    run_class(alpha, Symmetry::symmetric, tol, options, res);
    run_class(alpha, Symmetry::antisymmetric, tol, options, res);
    std::stable_sort(res.eigen.begin(), res.eigen.end(),
                     [](const SectorEigen& a, const SectorEigen& b) { return a.tau < b.tau; });
  } else {
    run_class(alpha, symmetry, tol, options, res);
  }
  return res;
}

double bottom_eigenvalue(double alpha, double tol, const SectorSpectrumOptions& options) {
  if (!(alpha > 0.0 && alpha < kPi)) throw DomainError("sector", "bottom eigenvalue needs alpha in (0, pi)");
  const auto res = sector_spectrum(alpha, Symmetry::symmetric, tol, options);
  const auto d = res.discrete();
  if (d.empty()) throw TruncationError("no discrete eigenvalue found below the threshold");
  return d.front();
}

int count_discrete(double alpha, double tol, const SectorSpectrumOptions& options) {
  if (!(alpha > 0.0 && alpha < kPi)) throw DomainError("sector", "discrete count needs alpha in (0, pi)");
  return static_cast<int>(sector_spectrum(alpha, Symmetry::symmetric, tol, options).discrete().size());
}

std::vector<MonotonicityPoint> eigenvalue_monotonicity_profile(const std::vector<double>& grid, Symmetry symmetry,
                                                               double tol, const SectorSpectrumOptions& options) {
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  std::vector<MonotonicityPoint> out;
  for (double a : sorted) {
    MonotonicityPoint p;
    p.alpha = a;
    if (symmetry == Symmetry::symmetric) {
      if (!(a > 0.0 && a < kPi)) throw DomainError("sector", "symmetric profile grid must lie in (0, pi)");
      p.bottom = bottom_eigenvalue(a, tol, options);
    } else {
      const auto d = sector_spectrum(a, symmetry, tol, options).discrete();
      if (!d.empty()) p.bottom = d.front();
    }
    out.push_back(p);
  }
  return out;
}

double robin_map(double tau, double gamma) {
  if (!(tau > 0.0)) throw DomainError("sector", "robin map needs tau > 0");
  if (!(gamma > 0.0)) throw DomainError("sector", "robin map needs gamma > 0");
  return -gamma * gamma / (tau * tau);
}

KernelBasis kernel_basis(double alpha, double radius, double h_near) {
  KernelBasis b;
  b.alpha = alpha;
  b.radius = radius;
  b.h_near = h_near;
  SectorMeshParams p;
  p.h_near = h_near;
  p.ray_grading = 0.0;
  b.sym = solve_sector(alpha, Symmetry::symmetric, radius, p);
  b.asym = solve_sector(alpha, Symmetry::antisymmetric, radius, p);
  return b;
}

Eigen::MatrixXd spectral_kernel(const KernelBasis& basis, const std::vector<double>& lambda_grid,
                                const std::vector<double>& s_grid) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lambda_grid.size()),
                                            static_cast<Eigen::Index>(s_grid.size()));
  for (const SectorSolve* sol : {&basis.sym, &basis.asym}) {
    for (Eigen::Index k = 0; k < sol->tau.size(); ++k) {
      const double t = sol->tau(k);
      for (std::size_t j = 0; j < s_grid.size(); ++j) {
        const double v = sol->trace_at(k, std::abs(s_grid[j]));
        for (std::size_t i = 0; i < lambda_grid.size(); ++i)
          if (t <= lambda_grid[i]) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 0.5 * v * v;
      }
    }
  }
  return e;
}

Eigen::MatrixXd spectral_kernel(const KernelBasis& basis, const KernelBasis& reference,
                                const std::vector<double>& lambda_grid, const std::vector<double>& s_grid,
                                KernelMode mode) {
  for (double l : lambda_grid)
    if (!(l > kEssentialThreshold)) throw DomainError("sector", "kernel lambda grid must lie above 1");
  Eigen::MatrixXd e = spectral_kernel(basis, lambda_grid, s_grid);
  if (mode == KernelMode::raw) return e;
  if (std::abs(reference.alpha - kPi) > 1e-12 || reference.radius != basis.radius ||
      reference.h_near != basis.h_near)
    throw ConfigError("relative kernel needs an alpha = pi reference with identical radius and mesh density");
  return e - spectral_kernel(reference, lambda_grid, s_grid);
}

Eigen::MatrixXd spectral_kernel(double alpha, const std::vector<double>& lambda_grid,
                                const std::vector<double>& s_grid, KernelMode mode, double radius,
                                double h_near) {
  const KernelBasis b = kernel_basis(alpha, radius, h_near);
  if (mode == KernelMode::raw) return spectral_kernel(b, b, lambda_grid, s_grid, mode);
  const KernelBasis ref = std::abs(alpha - kPi) < 1e-12 ? b : kernel_basis(kPi, radius, h_near);
  return spectral_kernel(b, ref, lambda_grid, s_grid, mode);
}

void write_sector_csv(std::ostream& os, const SectorSpectrumResult& r) {
  os << "alpha,class,k,tau_k,R_final,stable_flag,label\n";
  std::vector<SectorEigen> sorted = r.eigen;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SectorEigen& a, const SectorEigen& b) { return a.tau < b.tau; });
  for (const auto& e : sorted)
    os << format_double(r.alpha) << "," << to_string(e.cls) << "," << e.k << "," << format_double(e.tau) << ","
       << format_double(e.radius) << "," << (e.stable ? 1 : 0) << "," << to_string(e.label) << "\n";
}

}  // namespace steklov
