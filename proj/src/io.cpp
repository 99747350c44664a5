#include "steklov/io.hpp"

#include "steklov/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace steklov {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Domain parse_domain(const Json& j) {
  if (!j.is_object()) throw ConfigError("domain must be a JSON object");
  const bool has_v = j.contains("vertices"), has_s = j.contains("sector");
  if (has_v == has_s) throw ConfigError("domain needs exactly one of 'vertices' or 'sector'");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (k != "vertices" && k != "sector") throw ConfigError("unknown domain key '" + k + "'");
  }
  if (has_v) {
    std::vector<Vec2> pts;
    for (const auto& p : j.at("vertices")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ConfigError("each vertex must be a [x, y] pair of numbers");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return build_polygon(std::move(pts));
  }
  const Json& s = j.at("sector");
  for (const auto& [k, v] : s.items()) {
    (void)v;
    if (k != "alpha" && k != "radius" && k != "symmetry") throw ConfigError("unknown sector key '" + k + "'");
  }
  if (!s.contains("alpha") || !s.at("alpha").is_number()) throw ConfigError("sector.alpha must be a number");
  const double R = s.contains("radius") ? s.at("radius").get<double>() : 20.0;
  const Symmetry sym = s.contains("symmetry") ? symmetry_from_string(s.at("symmetry").get<std::string>())
                                              : Symmetry::symmetric;
  return build_sector(s.at("alpha").get<double>(), R, sym);
}

Json domain_to_json(const Domain& d) {
  Json j;
  if (const auto* p = std::get_if<PolygonalDomain>(&d)) {
    Json v = Json::array();
    for (const auto& x : p->vertices) v.push_back({x.x(), x.y()});
    j["vertices"] = v;
  } else {
    const auto& s = std::get<SectorDomain>(d);
    j["sector"] = {{"alpha", s.alpha}, {"radius", s.radius}, {"symmetry", to_string(s.symmetry)}};
  }
  return j;
}

std::string csv_artifact(const Json& config, const std::string& body) {
  std::ostringstream os;
  os << "# config: " << config.dump() << "\n";
  os << "# content_hash: " << hex64(fnv1a64(body)) << "\n";
  os << body;
  return os.str();
}

std::string json_artifact(const Json& config, const Json& data) {
  Json out;
  out["config"] = config;
  out["content_hash"] = hex64(fnv1a64(data.dump()));
  out["data"] = data;
  return out.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("io", "failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace steklov
