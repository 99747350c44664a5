#include "steklov/cli.hpp"

#include "steklov/billiards.hpp"
#include "steklov/errors.hpp"
#include "steklov/fem.hpp"
#include "steklov/identities.hpp"
#include "steklov/io.hpp"
#include "steklov/sector.hpp"
#include "steklov/weyl.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace steklov::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

const std::vector<std::string> kSubcommands = {"polygon-spectrum", "sector-spectrum",    "weyl-fit", "edge-coefficient",
                                               "billiards",        "verify-identities", "report"};

int line_at(const std::string& text, std::size_t pos) {
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(pos, text.size())), '\n'));
}

// Typed, validating view of the config object. Every value read is copied
// into `resolved` with its default filled in.
class Reader {
 public:
  Reader(const Json& j, const std::string& text) : j_(j), text_(text) {}

  Json resolved = Json::object();

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + msg);
  }

  std::string where(const std::string& key) const {
    if (text_.empty()) return "";
    const std::size_t pos = text_.find("\"" + key + "\"");
    return pos == std::string::npos ? std::string("config: ") : "config line " + std::to_string(line_at(text_, pos)) + ": ";
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def, double lo, double hi, bool open_lo = false) {
    seen_.insert(key);
    double v;
    if (!j_.contains(key)) {
      if (!def) fail(key, "missing required number '" + key + "'");
      v = *def;
    } else {
      if (!j_.at(key).is_number()) fail(key, "'" + key + "' must be a number");
      v = j_.at(key).get<double>();
    }
    if (!std::isfinite(v) || v < lo || v > hi || (open_lo && v == lo))
      fail(key, "'" + key + "' = " + format_double(v) + " is outside " + (open_lo ? "(" : "[") + format_double(lo) +
                    ", " + format_double(hi) + "]");
    resolved[key] = v;
    return v;
  }

  long integer(const std::string& key, long def, long lo, long hi) {
    seen_.insert(key);
    long v = def;
    if (j_.contains(key)) {
      if (!j_.at(key).is_number_integer()) fail(key, "'" + key + "' must be an integer");
      v = j_.at(key).get<long>();
    }
    if (v < lo || v > hi)
      fail(key, "'" + key + "' = " + std::to_string(v) + " is outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    resolved[key] = v;
    return v;
  }

  bool boolean(const std::string& key, bool def) {
    seen_.insert(key);
    bool v = def;
    if (j_.contains(key)) {
      if (!j_.at(key).is_boolean()) fail(key, "'" + key + "' must be true or false");
      v = j_.at(key).get<bool>();
    }
    resolved[key] = v;
    return v;
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& options) {
    seen_.insert(key);
    std::string v = def;
    if (j_.contains(key)) {
      if (!j_.at(key).is_string()) fail(key, "'" + key + "' must be a string");
      v = j_.at(key).get<std::string>();
    }
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      fail(key, "'" + key + "' must be one of: " + all);
    }
    resolved[key] = v;
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key '" + it.key() + "'");
  }

 private:
  const Json& j_;
  const std::string& text_;
  std::set<std::string> seen_;
};

struct Artifact {
  std::string name;
  std::string text;
};

struct Context {
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

using Compute = std::function<int(const Json& resolved, std::vector<Artifact>& out, std::ostream& log)>;

PolygonalDomain read_polygon(Reader& rd, const std::string& key) {
  if (!rd.has(key)) rd.fail(key, "missing required '" + key + "'");
  const Json& j = rd.raw(key);
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    rd.resolved[key] = name;
    if (name == "unit_square") return unit_square();
    if (name == "l_shape") return l_shape();
    if (name == "unit_disk") return regular_polygon(static_cast<int>(rd.integer("disk_sides", 256, 3, 1 << 16)));
    rd.fail(key, "unknown domain preset '" + name + "' (unit_square, l_shape, unit_disk)");
  }
  Domain d;
  try {
    d = parse_domain(j);
  } catch (const Error& e) {
    rd.fail(key, e.what());
  }
  if (!std::holds_alternative<PolygonalDomain>(d)) rd.fail(key, "this subcommand needs a polygonal domain");
  rd.resolved[key] = domain_to_json(d);
  return std::get<PolygonalDomain>(d);
}

Compute plan_polygon_spectrum(Reader& rd) {
  const PolygonalDomain dom = read_polygon(rd, "domain");
  const double h = rd.number("h_max", 0.05, 0.0, 10.0, true);
  const long count = rd.integer("count", 20, 1, 1'000'000);
  const bool rich = rd.boolean("richardson", false);
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    std::ostringstream body;
    const Spectrum a = steklov_spectrum(dom, h, count);
    if (!rich) {
      body << "k,lambda\n";
      for (Eigen::Index k = 0; k < a.size(); ++k) body << k << ',' << format_double(a.eigenvalues(k)) << '\n';
    } else {
      const Spectrum b = steklov_spectrum(dom, 0.5 * h, count);
      body << "k,lambda_h,lambda_h2,lambda_extrapolated\n";
      for (Eigen::Index k = 0; k < std::min(a.size(), b.size()); ++k)
        body << k << ',' << format_double(a.eigenvalues(k)) << ',' << format_double(b.eigenvalues(k)) << ','
             << format_double(richardson(a.eigenvalues(k), b.eigenvalues(k), 2.0)) << '\n';
    }
    out.push_back({"spectrum.csv", csv_artifact(cfg, body.str())});
    log << "polygon-spectrum: " << a.size() << " eigenvalues\n";
    return static_cast<int>(ok);
  };
}

Compute plan_sector_spectrum(Reader& rd) {
  const double alpha = rd.number("alpha", std::nullopt, 0.0, 2.0 * std::numbers::pi, true);
  const std::string sym = rd.choice("symmetry", "symmetric", {"symmetric", "antisymmetric", "full"});
  const double tol = rd.number("tol", 1e-4, 0.0, 0.5, true);
  SectorSpectrumOptions opt;
  opt.mesh.h_near = rd.number("h_near", opt.mesh.h_near, 0.0, 1.0, true);
  opt.export_max = rd.number("export_max", opt.export_max, 1.0, 100.0);
  if (rd.has("radius")) opt.initial_radius = rd.number("radius", std::nullopt, 0.0, 1e4, true);
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    const SectorSpectrumResult r = sector_spectrum(alpha, symmetry_from_string(sym), tol, opt);
    std::ostringstream body;
    write_sector_csv(body, r);
    out.push_back({"sector.csv", csv_artifact(cfg, body.str())});
    log << "sector-spectrum: " << r.discrete().size() << " discrete eigenvalue(s), R = " << format_double(r.radius_final)
        << "\n";
    return static_cast<int>(ok);
  };
}

Compute plan_weyl_fit(Reader& rd) {
  const PolygonalDomain dom = read_polygon(rd, "domain");
  const double h = rd.number("h_max", 0.01, 0.0, 10.0, true);
  const double fraction = rd.number("fraction", 0.05, 0.0, 0.2, true);
  const long samples = rd.integer("samples", 200, 2, 1'000'000);
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    const Spectrum sp = steklov_spectrum(dom, h, std::numeric_limits<Eigen::Index>::max() / 4);
    const CountingData data = counting_data(sp);
    const FitWindow w = resolution_window(data, fraction);
    const WeylFit fit = fit_weyl(data, 1, w);
    std::vector<double> grid;
    for (long i = 0; i < samples; ++i) grid.push_back(data.lambda_hi * static_cast<double>(i) / (samples - 1));
    std::ostringstream body;
    write_counting_csv(body, data, grid);
    out.push_back({"counting.csv", csv_artifact(cfg, body.str())});
    Json rep;
    rep["kappa0_analytic"] = kappa0(dom, 1);
    rep["kappa0_fit"] = fit.kappa0;
    rep["kappa0_relative_error"] = fit.kappa0 / kappa0(dom, 1) - 1.0;
    rep["kappa1_fit"] = fit.kappa1 ? Json(*fit.kappa1) : Json(nullptr);
    rep["kappa1_raw"] = fit.kappa1_raw;
    rep["window"] = {w.lo, w.hi};
    rep["trust_window"] = {data.lambda_lo, data.lambda_hi};
    rep["residuals"] = {{"one_term", fit.residual_one}, {"two_term", fit.residual_two}};
    rep["samples"] = fit.samples;
    rep["condition"] = fit.condition;
    out.push_back({"fit.json", json_artifact(cfg, rep)});
    log << "weyl-fit: kappa0 " << format_double(fit.kappa0) << " (analytic " << format_double(kappa0(dom, 1)) << ")\n";
    return static_cast<int>(ok);
  };
}

Json edge_json(const EdgeCoefficientResult& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["mode"] = to_string(r.mode);
  j["value"] = r.value;
  j["converged"] = r.converged;
  j["params"] = {{"lambda_max", r.params.lambda_max},
                 {"s_max", r.params.s_max},
                 {"radius", r.params.radius},
                 {"h_near", r.params.h_near},
                 {"d", r.params.d}};
  Json vars = Json::array();
  for (const auto& v : r.diagnostics.variants)
    vars.push_back({{"name", v.name}, {"value", v.value}, {"change", v.change}, {"resolved", v.resolved}});
  j["diagnostics"] = {{"variants", vars},
                      {"max_change", r.diagnostics.max_change},
                      {"resolved", r.diagnostics.resolved},
                      {"s_growth", r.diagnostics.s_growth},
                      {"s_integrand_nondecaying", r.diagnostics.s_integrand_nondecaying}};
  return j;
}

Compute plan_edge(Reader& rd) {
  const double alpha = rd.number("alpha", std::nullopt, 0.0, 2.0 * std::numbers::pi, true);
  const EdgeMode mode = edge_mode_from_string(rd.choice("mode", "relative", {"relative", "literal"}));
  EdgeParams p;
  p.lambda_max = rd.number("lambda_max", p.lambda_max, 1.0, 100.0, true);
  p.s_max = rd.number("s_max", p.s_max, 0.0, 1e3, true);
  p.radius = rd.number("radius", p.radius, 0.0, 1e3, true);
  p.h_near = rd.number("h_near", p.h_near, 0.0, 1.0, true);
  p.d = static_cast<int>(rd.integer("d", p.d, 1, 3));
  if (2.0 * p.s_max > p.radius) rd.fail("s_max", "'s_max' doubled must stay inside the truncation radius");
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    const EdgeCoefficientResult r = edge_coefficient(alpha, p, mode);
    out.push_back({"edge.json", json_artifact(cfg, edge_json(r))});
    log << "edge-coefficient: " << format_double(r.value) << (r.converged ? " (converged)" : " (UNCONVERGED)") << "\n";
    return static_cast<int>(ok);
  };
}

EdgedSurface read_surface(Reader& rd) {
  if (!rd.has("surface")) rd.fail("surface", "missing required 'surface'");
  const Json& j = rd.raw("surface");
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    rd.resolved["surface"] = name;
    constexpr double half = 0.5 * std::numbers::pi;
    if (name == "flat_double_disk") return build_revolution_surface(Profile::disk(1.0), Profile::disk(1.0));
    if (name == "round_sphere")
      return build_revolution_surface(Profile::spherical_cap(1.0, half), Profile::spherical_cap(1.0, half));
    rd.fail("surface", "unknown surface preset '" + name + "' (flat_double_disk, round_sphere)");
  }
  EdgedSurface s;
  try {
    s = surface_from_json(j);
  } catch (const Error& e) {
    rd.fail("surface", e.what());
  }
  rd.resolved["surface"] = surface_to_json(s);
  return s;
}

Compute plan_billiards(Reader& rd, const Context& ctx) {
  const EdgedSurface surf = read_surface(rd);
  PeriodicityOptions po;
  po.time_cap = rd.number("time_cap", po.time_cap, 0.0, 1e6, true);
  po.epsilon = rd.number("epsilon", po.epsilon, 0.0, 1.0, true);
  po.lattice_cap = static_cast<std::size_t>(rd.integer("lattice_cap", static_cast<long>(po.lattice_cap), 1, 1L << 40));
  const long samples = rd.integer("samples", 1000, 0, 100'000'000);
  std::optional<std::pair<PhasePoint, TraceOptions>> tr;
  if (rd.has("trace")) {
    const Json& t = rd.raw("trace");
    if (!t.is_object()) rd.fail("trace", "'trace' must be an object");
    Reader sub(t, std::string());
    try {
      const long piece = sub.integer("piece", 1, 1, 2);
      const double phi = sub.number("phi", 0.0, -1e3, 1e3);
      const double beta = sub.number("beta", 0.5 * std::numbers::pi, 0.0, 0.5 * std::numbers::pi);
      TraceOptions to;
      to.time_cap = sub.number("time_cap", 10.0, 0.0, 1e6, true);
      to.branch_cap = static_cast<std::size_t>(sub.integer("branch_cap", 100'000, 1, 100'000'000));
      to.reflection_cap = static_cast<int>(sub.integer("reflection_cap", 1000, 1, 1'000'000'000));
      to.epsilon = po.epsilon;
      sub.finish();
      tr.emplace(edge_state(surf, static_cast<int>(piece) - 1, phi, beta), to);
    } catch (const ConfigError& e) {
      rd.fail("trace", e.what());
    }
    rd.resolved["trace"] = sub.resolved;
  }
  const std::uint64_t seed = ctx.seed;
  const unsigned threads = ctx.threads;
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    LiouvilleSampler sampler(surf, seed);
    const PeriodicityReport rep = periodicity_measure(surf, sampler, static_cast<std::size_t>(samples), po, threads);
    Json data = report_to_json(rep);
    if (tr) {
      const BranchTree tree = trace(surf, tr->first, tr->second);
      std::ostringstream body;
      write_trace_csv(body, tree);
      out.push_back({"trace.csv", csv_artifact(cfg, body.str())});
      data["trace"] = {{"nodes", tree.nodes.size()},
                       {"events", tree.events},
                       {"truncated", tree.truncated},
                       {"dead_end", tree.dead_end},
                       {"periodic_time", tree.periodic_time ? Json(*tree.periodic_time) : Json(nullptr)},
                       {"max_clairaut_drift", tree.max_clairaut_drift},
                       {"max_tangential_mismatch", tree.max_tangential_mismatch}};
    }
    out.push_back({"periodicity.json", json_artifact(cfg, data)});
    log << "billiards: estimate "
        << (rep.estimate ? format_double(*rep.estimate) : std::string("undefined (no samples)")) << "\n";
    return static_cast<int>(ok);
  };
}

Compute plan_identities(Reader& rd) {
  const double tol = rd.number("tolerance", 1e-8, 0.0, 1.0, true);
  QuadratureSpec q;
  q.points = static_cast<int>(rd.integer("points", q.points, 4, 63));
  q.theta_panels = static_cast<int>(rd.integer("theta_panels", q.theta_panels, 1, 256));
  const bool energy = rd.boolean("energy", false);
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    const std::vector<SuiteEntry> suite = verify_identities(q, tol);
    const bool all = std::all_of(suite.begin(), suite.end(), [](const SuiteEntry& e) { return e.pass; });
    Json data;
    data["suite"] = suite_to_json(suite);
    data["all_pass"] = all;
    if (energy) {
      constexpr double pi = std::numbers::pi;
      Json arr = Json::array();
      for (const EnergyCase& c : energy_battery({pi / 3, pi / 2, pi, 1.25 * pi, 1.5 * pi, 2 * pi}, q))
        arr.push_back({{"alpha", c.alpha},
                       {"solution_id", c.solution_id},
                       {"symmetry", to_string(c.symmetry)},
                       {"defect", c.defect.defect},
                       {"norm", c.defect.norm},
                       {"error_bar", c.defect.error_bar},
                       {"sign_asserted", c.sign_asserted}});
      data["energy"] = arr;
    }
    out.push_back({"identities.json", json_artifact(cfg, data)});
    const auto fails = std::count_if(suite.begin(), suite.end(), [](const SuiteEntry& e) { return !e.pass; });
    log << "verify-identities: " << suite.size() - static_cast<std::size_t>(fails) << "/" << suite.size()
        << " pass\n";
    return static_cast<int>(all ? ok : check_failed);
  };
}

Json inspect_artifact(const fs::path& p) {
  Json j;
  j["path"] = p.generic_string();
  const std::string text = read_text_file(p);
  if (p.extension() == ".csv") {
    const std::size_t a = text.find('\n'), b = a == std::string::npos ? a : text.find('\n', a + 1);
    const std::string l1 = text.substr(0, a), l2 = b == std::string::npos ? "" : text.substr(a + 1, b - a - 1);
    const std::string pre1 = "# config: ", pre2 = "# content_hash: ";
    if (l1.rfind(pre1, 0) != 0 || l2.rfind(pre2, 0) != 0) {
      j["valid"] = false;
      return j;
    }
    const Json cfg = Json::parse(l1.substr(pre1.size()), nullptr, false);
    const std::string hash = l2.substr(pre2.size());
    j["subcommand"] = cfg.is_object() && cfg.contains("subcommand") ? cfg["subcommand"] : Json(nullptr);
    j["content_hash"] = hash;
    j["valid"] = hash == hex64(fnv1a64(std::string_view(text).substr(b + 1)));
    j["rows"] = std::max<long>(0, static_cast<long>(std::count(text.begin() + static_cast<long>(b + 1), text.end(), '\n')) - 1);
    return j;
  }
  const Json doc = Json::parse(text, nullptr, false);
  if (!doc.is_object() || !doc.contains("data") || !doc.contains("content_hash") || !doc.contains("config")) {
    j["valid"] = false;
    return j;
  }
  j["subcommand"] = doc["config"].contains("subcommand") ? doc["config"]["subcommand"] : Json(nullptr);
  j["content_hash"] = doc["content_hash"];
  j["valid"] = doc["content_hash"].get<std::string>() == hex64(fnv1a64(doc["data"].dump()));
  if (doc["data"].contains("all_pass")) j["all_pass"] = doc["data"]["all_pass"];
  if (doc["data"].contains("estimate")) j["estimate"] = doc["data"]["estimate"];
  if (doc["data"].contains("kappa0_fit")) j["kappa0_fit"] = doc["data"]["kappa0_fit"];
  if (doc["data"].contains("value")) j["value"] = doc["data"]["value"];
  return j;
}

Compute plan_report(Reader& rd) {
  if (!rd.has("inputs")) rd.fail("inputs", "missing required 'inputs' (list of artifact files or directories)");
  const Json& in = rd.raw("inputs");
  if (!in.is_array()) rd.fail("inputs", "'inputs' must be an array of paths");
  std::vector<fs::path> files;
  for (const auto& x : in) {
    if (!x.is_string()) rd.fail("inputs", "'inputs' entries must be strings");
    const fs::path p = x.get<std::string>();
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && (e.path().extension() == ".csv" || e.path().extension() == ".json"))
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      rd.fail("inputs", "input '" + p.string() + "' does not exist");
    }
  }
  rd.resolved["inputs"] = in;
  return [=](const Json& cfg, std::vector<Artifact>& out, std::ostream& log) {
    Json arts = Json::array();
    bool all = true;
    for (const auto& f : files) {
      Json a = inspect_artifact(f);
      all = all && a["valid"].get<bool>();
      arts.push_back(a);
    }
    Json data;
    data["artifacts"] = arts;
    data["all_valid"] = all;
    out.push_back({"report.json", json_artifact(cfg, data)});
    log << "report: " << files.size() << " artifact(s), " << (all ? "all hashes valid" : "HASH MISMATCH") << "\n";
    return static_cast<int>(all ? ok : check_failed);
  };
}

std::string describe_parse_error(const std::string& text, const Json::parse_error& e) {
  const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
  const int line = line_at(text, byte);
  const std::size_t bol = text.rfind('\n', byte == 0 ? 0 : byte - 1);
  const std::size_t col = bol == std::string::npos ? byte + 1 : byte - bol;
  std::string msg = e.what();
  const std::size_t cut = msg.find(": ");
  return "config line " + std::to_string(line) + ", column " + std::to_string(col) +
         ": malformed JSON (" + (cut == std::string::npos ? msg : msg.substr(cut + 2)) + ")";
}

int execute(const std::string& sub, const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_flag, unsigned threads, std::ostream& out, std::ostream& err) {
  std::string text;
  Json cfg = Json::object();
  if (!config_path.empty()) {
    try {
      text = read_text_file(config_path);
    } catch (const Error& e) {
      err << "steklab: " << e.what() << "\n";
      return config_error;
    }
    try {
      cfg = Json::parse(text);
    } catch (const Json::parse_error& e) {
      err << "steklab: " << config_path << ": " << describe_parse_error(text, e) << "\n";
      return config_error;
    }
  }

  Context ctx;
  ctx.threads = threads;
  Compute compute;
  Json resolved;
  try {
    if (!cfg.is_object()) throw ConfigError("config line 1: the config must be a JSON object");
    Reader rd(cfg, text);
    if (!config_path.empty()) {
      if (!cfg.contains("schema_version")) rd.fail("schema_version", "missing 'schema_version'");
      const long v = rd.integer("schema_version", kSchemaVersion, 0, 1 << 20);
      if (v != kSchemaVersion)
        rd.fail("schema_version", "unsupported schema_version " + std::to_string(v) + " (expected " +
                                      std::to_string(kSchemaVersion) + ")");
    }
    rd.resolved["schema_version"] = kSchemaVersion;
    if (rd.has("subcommand")) {
      if (rd.choice("subcommand", sub, kSubcommands) != sub)
        rd.fail("subcommand", "config is for '" + cfg["subcommand"].get<std::string>() + "', not '" + sub + "'");
    }
    rd.resolved["subcommand"] = sub;
    std::uint64_t seed = 0;
    if (rd.has("seed")) {
      const Json& s = rd.raw("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        rd.fail("seed", "'seed' must be a nonnegative integer");
      seed = s.get<std::uint64_t>();
    }
    if (seed_flag) seed = *seed_flag;
    ctx.seed = seed;
    rd.resolved["seed"] = seed;

    if (sub == "polygon-spectrum") compute = plan_polygon_spectrum(rd);
    else if (sub == "sector-spectrum") compute = plan_sector_spectrum(rd);
    else if (sub == "weyl-fit") compute = plan_weyl_fit(rd);
    else if (sub == "edge-coefficient") compute = plan_edge(rd);
    else if (sub == "billiards") compute = plan_billiards(rd, ctx);
    else if (sub == "verify-identities") compute = plan_identities(rd);
    else compute = plan_report(rd);
    rd.finish();
    resolved = rd.resolved;
  } catch (const ConfigError& e) {
    err << "steklab: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << "\n";
    return config_error;
  }

  std::vector<Artifact> artifacts;
  int status = ok;
  try {
    status = compute(resolved, artifacts, out);
  } catch (const Error& e) {
    err << "steklab: " << sub << " failed in module '" << e.module() << "': " << e.what() << "\n";
    return numeric_error;
  } catch (const std::exception& e) {
    err << "steklab: " << sub << " failed: " << e.what() << "\n";
    return numeric_error;
  }
  try {
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    for (const Artifact& a : artifacts) {
      write_text_file(dir / a.name, a.text);
      out << "wrote " << (dir / a.name).generic_string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "steklab: " << e.what() << "\n";
    return numeric_error;
  }
  return status;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"steklab: Steklov spectra, sector models, Weyl fits, edge billiards and identity checks"};
  app.require_subcommand(1);
  std::string config, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> help = {
      {"polygon-spectrum", "Steklov eigenvalues of a polygon"},
      {"sector-spectrum", "discrete spectrum of the planar sector model"},
      {"weyl-fit", "counting function and Weyl coefficient fit"},
      {"edge-coefficient", "corner coefficient of the two-term Weyl law"},
      {"billiards", "branching billiards and periodicity measure"},
      {"verify-identities", "integral identity suite on manufactured solutions"},
      {"report", "aggregate and verify previously written artifacts"}};
  for (const auto& [name, desc] : help) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--out", out_dir, "output directory");
    s->add_option("--seed", seed, "64-bit seed for all randomness");
    s->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    subs.push_back(s);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return config_error;
  }
  for (CLI::App* s : subs)
    if (s->parsed()) {
      std::optional<std::uint64_t> sf;
      if (s->count("--seed") > 0) sf = seed;
      return execute(s->get_name(), config, out_dir, sf, threads, out, err);
    }
  return config_error;
}

}  // namespace steklov::cli
