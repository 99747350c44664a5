#include "steklov/billiards.hpp"
#include "steklov/cli.hpp"
#include "steklov/fem.hpp"
#include "steklov/identities.hpp"
#include "steklov/io.hpp"
#include "steklov/sector.hpp"
#include "steklov/weyl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace steklov;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
  double budget = 0.0;  // seconds, 0 for none
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned worker_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

// Separation of variables on the unit disk: r^k cos(k theta), r^k sin(k theta)
// are harmonic with normal derivative k on r = 1.
std::vector<double> disk_oracle(std::size_t n) {
  std::vector<double> v{0.0};
  for (int k = 1; v.size() < n; ++k) {
    v.push_back(k);
    if (v.size() < n) v.push_back(k);
  }
  return v;
}

Outcome criterion1() {
  Outcome o{true, "", 120.0};
  const PolygonalDomain disk = regular_polygon(256);
  const Spectrum a = steklov_spectrum(disk, 0.1, 10);
  const Spectrum b = steklov_spectrum(disk, 0.05, 10);
  const std::vector<double> exact = disk_oracle(10);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double x = richardson(a.eigenvalues(k), b.eigenvalues(k), 2.0);
    const double e = exact[static_cast<std::size_t>(k)];
    const double err = e == 0.0 ? std::abs(x) : std::abs(x - e) / e;
    worst = std::max(worst, err);
  }
  o.pass = worst <= 0.02;
  o.detail = "max relative error " + fmt("%.2e", worst) + " (limit 2e-2)";
  return o;
}

Outcome weyl_case(const PolygonalDomain& dom, double perimeter, double limit) {
  Outcome o{true, "", 300.0};
  const Spectrum sp = steklov_spectrum(dom, 0.005, std::numeric_limits<Eigen::Index>::max() / 4);
  const CountingData data = counting_data(sp);
  const WeylFit fit = fit_weyl(data, 1, resolution_window(data, 0.05));
  const double expect = perimeter / pi;  // (2 pi)^-1 * |B_1| * |boundary|
  const double rel = std::abs(fit.kappa0 / expect - 1.0);
  o.pass = rel <= limit;
  o.detail = "kappa0 " + fmt("%.5f", fit.kappa0) + " vs " + fmt("%.5f", expect) + ", rel " + fmt("%.2e", rel) +
             " (limit " + fmt("%g", limit) + "), window [0, " + fmt("%.1f", fit.window.hi) + "]";
  return o;
}

Outcome criterion2a() { return weyl_case(unit_square(), 4.0, 0.05); }
Outcome criterion2b() { return weyl_case(l_shape(), 8.0, 0.07); }

Outcome criterion3() {
  Outcome o{true, "", 180.0};
  std::ostringstream d;
  for (double a : {pi / 3, pi / 2, 2 * pi / 3}) {
    const double b = bottom_eigenvalue(a, 1e-4);
    const double rel = std::abs(b / std::sin(a / 2) - 1.0);
    o.pass = o.pass && rel <= 0.01;
    d << fmt("%.4f", a) << ": " << fmt("%.6f", b) << " rel " << fmt("%.1e", rel) << "; ";
  }
  o.detail = d.str();
  return o;
}

// Thin-sector reduction: w ~ w(r) across the sector turns the quotient into
// (alpha/2) * int r (w'^2 + w^2) / int w^2, a Laguerre operator with
// eigenvalues 2n + 1.
int thin_sector_count(double alpha) {
  int n = 0;
  while (0.5 * alpha * (2 * n + 1) < 1.0) ++n;
  return n;
}

Outcome criterion4() {
  Outcome o{true, "", 0.0};
  const double tol = 1e-3;
  const int c16 = count_discrete(pi / 16, tol), c32 = count_discrete(pi / 32, tol);
  const int c3 = count_discrete(pi / 3, tol), c2 = count_discrete(pi / 2, tol);
  const double ratio = static_cast<double>(c32) / c16;
  o.pass = ratio >= 2.8 && ratio <= 5.7 && c3 == 1 && c2 == 1;
  o.detail = "count(pi/16) " + std::to_string(c16) + ", count(pi/32) " + std::to_string(c32) + ", ratio " +
             fmt("%.3f", ratio) + " (band [2.8, 5.7]); thin-sector oracle ratio " +
             fmt("%.3f", static_cast<double>(thin_sector_count(pi / 32)) / thin_sector_count(pi / 16)) +
             "; count(pi/3) " + std::to_string(c3) + ", count(pi/2) " + std::to_string(c2);
  return o;
}

Outcome criterion5() {
  Outcome o{true, "", 0.0};
  std::vector<double> grid;
  for (int i = 1; i <= 8; ++i) grid.push_back(i * pi / 9);
  const double tol = 1e-4;
  const auto prof = eigenvalue_monotonicity_profile(grid, Symmetry::symmetric, tol);
  double worst = 0.0;
  std::ostringstream d;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    d << fmt("%.4f", *prof[i].bottom) << (i + 1 < prof.size() ? " " : "");
    if (i > 0) worst = std::max(worst, *prof[i - 1].bottom - *prof[i].bottom);
  }
  o.pass = worst <= tol;
  o.detail = "values " + d.str() + "; largest decrease " + fmt("%.1e", std::max(worst, 0.0));
  return o;
}

Outcome criterion6() {
  Outcome o{true, "", 60.0};
  const auto battery = identity_battery();
  const auto suite = verify_identities({}, 1e-8);
  double worst = 0.0;
  std::set<std::string> ids;
  for (const auto& e : suite) {
    worst = std::max(worst, e.residual);
    ids.insert(e.identity_id);
  }
  o.pass = battery.size() == 12 && worst <= 1e-8 &&
           std::all_of(suite.begin(), suite.end(), [](const SuiteEntry& e) { return e.pass; });
  o.detail = std::to_string(suite.size()) + " checks, " + std::to_string(ids.size()) + " identity kinds, " +
             std::to_string(battery.size()) + " solutions, max residual " + fmt("%.2e", worst);
  return o;
}

Outcome criterion7() {
  Outcome o{true, "", 0.0};
  const std::vector<double> alphas = {pi / 3, pi / 2, pi, 1.25 * pi, 1.5 * pi, 2 * pi};
  const auto cases = energy_battery(alphas);
  int checked = 0;
  double worst = INFINITY;
  for (const auto& c : cases) {
    const bool outer = c.alpha > pi + 1e-12;
    if (!outer && c.symmetry != SolutionSymmetry::antisymmetric) continue;
    ++checked;
    o.pass = o.pass && c.defect.defect >= -c.defect.error_bar;
    worst = std::min(worst, (c.defect.defect + c.defect.error_bar) / std::max(c.defect.norm, 1e-300));
  }
  const ManufacturedSolution single = manufactured_solution({{1.0, Vec2(1, 0)}}, pi / 2, SolutionSymmetry::symmetric);
  const EnergyDefect e = energy_defect(single);
  const double rel = std::abs(e.defect) / e.norm;
  o.pass = o.pass && checked >= 12 && rel <= 1e-14;
  o.detail = std::to_string(checked) + " sign-asserted cases, min (defect + bar)/norm " + fmt("%.2e", worst) +
             "; e^-x1 defect/norm " + fmt("%.1e", rel);
  return o;
}

Outcome criterion8() {
  Outcome o{true, "", 0.0};
  std::ostringstream d;
  for (double a : {pi / 3, pi / 2}) {
    const EigenEquality q = check_eigen_equality(a, 1e-4);
    o.pass = o.pass && q.applicable && q.ratio <= 5e-2;
    d << fmt("%.4f", a) << ": ratio " << fmt("%.2e", q.ratio) << "; ";
  }
  o.detail = d.str() + "limit 5e-2";
  return o;
}

Outcome criterion9() {
  Outcome o{true, "", 0.0};
  const EdgeCoefficientResult flat = edge_coefficient(pi, {}, EdgeMode::relative);
  const EdgeCoefficientResult outer = edge_coefficient(1.5 * pi, {}, EdgeMode::relative);
  const EdgeCoefficientResult literal = edge_coefficient(pi, {}, EdgeMode::literal);
  double all_change = 0.0;
  for (const auto& v : outer.diagnostics.variants)
    if (v.name == "all x2") all_change = v.change;
  const bool zero = std::abs(flat.value) <= 1e-12 && flat.diagnostics.max_change == 0.0;
  o.pass = zero && all_change <= 0.10 && outer.diagnostics.resolved && literal.diagnostics.s_integrand_nondecaying;
  o.detail = "relative kappa(pi) " + fmt("%.1e", flat.value) + "; kappa(3pi/2) " + fmt("%.4f", outer.value) +
             ", change under doubling all cutoffs " + fmt("%.2e", all_change) + " (max single " +
             fmt("%.2e", outer.diagnostics.max_change) + "); literal s-growth " +
             fmt("%.2f", literal.diagnostics.s_growth) +
             (literal.diagnostics.s_integrand_nondecaying ? " flagged" : " NOT flagged");
  return o;
}

Outcome criterion10() {
  Outcome o{true, "", 180.0};
  const EdgedSurface cap = build_revolution_surface(Profile::spherical_cap(2.0, pi / 6), Profile::disk(1.0));
  TraceOptions to;
  to.time_cap = 40.0;
  to.branch_cap = 40'000;
  to.reuse_segments = false;
  const BranchTree tree = trace(cap, edge_state(cap, 0, 0.1, 0.83), to);
  double reversal = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, tree.nodes.size() / 300);
  for (std::size_t i = 0; i < tree.nodes.size(); i += stride)
    reversal = std::max(reversal, time_reversal_error(cap, tree.nodes[i]));
  const bool conserved = tree.events >= 10'000 && tree.max_clairaut_drift <= 1e-9 && tree.max_norm_drift <= 1e-9 &&
                         tree.max_norm_error <= 1e-9 && tree.max_tangential_mismatch <= 1e-9 && tree.times_increasing;

  PeriodicityOptions po;
  po.time_cap = 100.0;
  po.epsilon = 1e-3;
  const EdgedSurface flat = build_revolution_surface(Profile::disk(1.0), Profile::disk(1.0));
  const EdgedSurface sphere =
      build_revolution_surface(Profile::spherical_cap(1.0, pi / 2), Profile::spherical_cap(1.0, pi / 2));
  LiouvilleSampler sf(flat, 20240611), ss(sphere, 20240611);
  const PeriodicityReport rf = periodicity_measure(flat, sf, 1000, po, worker_count());
  const PeriodicityReport rs = periodicity_measure(sphere, ss, 1000, po, worker_count());
  o.pass = conserved && reversal <= 1e-6 && *rf.estimate < 0.05 && *rs.estimate > 0.95;
  o.detail = std::to_string(tree.events) + " events, Clairaut drift " + fmt("%.1e", tree.max_clairaut_drift) +
             ", norm drift " + fmt("%.1e", std::max(tree.max_norm_drift, tree.max_norm_error)) + ", reversal " +
             fmt("%.1e", reversal) + "; flat " + fmt("%.3f", *rf.estimate) + ", sphere " + fmt("%.3f", *rs.estimate);
  return o;
}

Outcome criterion11() {
  Outcome o{true, "", 0.0};
  const fs::path configs = STEKLAB_CONFIG_DIR;
  const fs::path scratch = fs::temp_directory_path() / "steklab_acceptance_repro";
  fs::remove_all(scratch);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(configs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int compared = 0;
  std::ostringstream bad;
  for (const auto& cfg : files) {
    const std::string sub = Json::parse(read_text_file(cfg))["subcommand"].get<std::string>();
    std::vector<std::string> dirs;
    for (const char* run : {"a", "b"}) {
      const fs::path out = scratch / cfg.stem() / run;
      std::vector<std::string> args = {sub, "--config", cfg.string(), "--out", out.string()};
      if (std::string(run) == "b") args.insert(args.end(), {"--threads", std::to_string(worker_count())});
      std::ostringstream sink, err;
      const int code = cli::run(args, sink, err);
      if (code != cli::ok && code != cli::check_failed) {
        o.pass = false;
        bad << cfg.stem().string() << " exit " << code << "; ";
      }
      dirs.push_back(out.string());
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const fs::path twin = fs::path(dirs[1]) / e.path().filename();
      ++compared;
      if (!fs::exists(twin) || read_text_file(e.path()) != read_text_file(twin)) {
        o.pass = false;
        bad << cfg.stem().string() << "/" << e.path().filename().string() << " differs; ";
      }
    }
  }
  fs::remove_all(scratch);
  o.pass = o.pass && compared > 0;
  o.detail = std::to_string(files.size()) + " configs, " + std::to_string(compared) + " artifacts byte-identical" +
             (bad.str().empty() ? "" : "; " + bad.str());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1", criterion1},   {"2a", criterion2a}, {"2b", criterion2b}, {"3", criterion3},
      {"4", criterion4},   {"5", criterion5},   {"6", criterion6},   {"7", criterion7},
      {"8", criterion8},   {"9", criterion9},   {"10", criterion10}, {"11", criterion11}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    const std::string base = id.substr(0, id.find_first_not_of("0123456789"));
    if (!only.empty() && !only.count(id) && !only.count(base)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double t = seconds_since(t0);
    bool within = r.budget <= 0.0 || t <= r.budget;
    const bool ok = r.pass && within;
    if (!ok) ++failed;
    std::printf("criterion %-3s %s  %8.1fs%s  %s\n", id.c_str(), ok ? "PASS" : "FAIL", t,
                r.budget > 0.0 ? (within ? " (budget " + fmt("%.0f", r.budget) + "s)" : " (OVER budget " + fmt("%.0f", r.budget) + "s)").c_str() : "",
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criterion line(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
