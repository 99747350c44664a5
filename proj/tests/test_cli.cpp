#include "steklov/cli.hpp"
#include "steklov/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

using namespace steklov;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("steklab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& text) const {
    write_text_file(dir / file, text);
    return dir / file;
  }
};

struct Run {
  int code;
  std::string out, err;
};

Run steklab(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

std::size_t file_count(const fs::path& p) {
  if (!fs::exists(p)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(p), fs::directory_iterator()));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sector-spectrum first row is sin(pi/4)") {
    Scratch s("sector");
    const auto out = s.dir / "out";
    const Run r = steklab({"sector-spectrum", "--config", std::string(STEKLAB_CONFIG_DIR) + "/sector_right_angle.json",
                           "--out", out.string()});
    REQUIRE(r.code == cli::ok);
    const std::string text = read_text_file(out / "sector.csv");
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# config: ", 0) == 0);
    std::getline(is, line);
    CHECK(line.rfind("# content_hash: ", 0) == 0);
    std::getline(is, line);
    CHECK(line == "alpha,class,k,tau_k,R_final,stable_flag,label");
    std::getline(is, line);
    // fourth column is the eigenvalue
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i < 4; ++i) std::getline(row, cell, ',');
    CHECK(std::stod(cell) == doctest::Approx(0.70711).epsilon(0.01));
  }

  TEST_CASE("verify-identities default suite passes") {
    Scratch s("identities");
    const Run r = steklab({"verify-identities", "--out", s.dir.string()});
    CHECK(r.code == cli::ok);
    const Json doc = Json::parse(read_text_file(s.dir / "identities.json"));
    CHECK(doc["data"]["all_pass"] == true);
    CHECK(doc["content_hash"] == hex64(fnv1a64(doc["data"].dump())));
    for (const auto& e : doc["data"]["suite"]) {
      CHECK(e.contains("identity_id"));
      CHECK(e["pass"] == true);
    }
  }

  TEST_CASE("malformed JSON exits 2 and writes nothing") {
    Scratch s("malformed");
    const auto cfg = s.write("bad.json", "{\n  \"schema_version\": 1,\n  \"alpha\": 1.0,,\n}\n");
    const auto out = s.dir / "out";
    const Run r = steklab({"sector-spectrum", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code == cli::config_error);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(file_count(out) == 0);
  }

  TEST_CASE("unknown key is rejected with its line") {
    Scratch s("unknown");
    const auto cfg = s.write("c.json", "{\n  \"schema_version\": 1,\n  \"alpha\": 1.0,\n  \"tolerance\": 0.1\n}\n");
    const Run r = steklab({"sector-spectrum", "--config", cfg.string(), "--out", (s.dir / "o").string()});
    CHECK(r.code == cli::config_error);
    CHECK(r.err.find("config line 4") != std::string::npos);
    CHECK(r.err.find("tolerance") != std::string::npos);
    CHECK(file_count(s.dir / "o") == 0);
  }

  TEST_CASE("validation happens before computing") {
    Scratch s("validate");
    const auto a = s.write("a.json", R"({"schema_version": 1, "alpha": -1})");
    CHECK(steklab({"sector-spectrum", "--config", a.string()}).code == cli::config_error);
    const auto b = s.write("b.json", R"({"alpha": 1})");
    CHECK(steklab({"sector-spectrum", "--config", b.string()}).code == cli::config_error);
    const auto c = s.write("c.json", R"({"schema_version": 2, "alpha": 1})");
    CHECK(steklab({"sector-spectrum", "--config", c.string()}).code == cli::config_error);
    const auto d = s.write("d.json", R"({"schema_version": 1, "subcommand": "billiards", "alpha": 1})");
    CHECK(steklab({"sector-spectrum", "--config", d.string()}).code == cli::config_error);
    const auto e = s.write("e.json", R"({"schema_version": 1, "surface": {"piece1": {"type": "disk", "radius": 1},
      "piece2": {"type": "disk", "radius": 1.1}}})");
    const Run re = steklab({"billiards", "--config", e.string(), "--out", (s.dir / "o").string()});
    CHECK(re.code == cli::config_error);
    CHECK(file_count(s.dir / "o") == 0);
    CHECK(steklab({"no-such-command"}).code == cli::config_error);
    CHECK(steklab({"sector-spectrum", "--config", (s.dir / "missing.json").string()}).code == cli::config_error);
  }

  TEST_CASE("numeric failures report the module") {
    Scratch s("numeric");
    const auto cfg = s.write("c.json", R"({"schema_version": 1, "domain": "unit_square", "h_max": 5.0})");
    const Run r = steklab({"polygon-spectrum", "--config", cfg.string(), "--out", (s.dir / "o").string()});
    CHECK(r.code == cli::numeric_error);
    CHECK(r.err.find("mesh") != std::string::npos);
    CHECK(file_count(s.dir / "o") == 0);
  }

  TEST_CASE("billiards outputs are seed deterministic and report validates them") {
    Scratch s("billiards");
    const auto cfg = s.write("c.json", R"({"schema_version": 1, "surface": "round_sphere", "samples": 40,
      "time_cap": 20, "trace": {"beta": 0.8, "time_cap": 4}})");
    const auto o1 = s.dir / "o1", o2 = s.dir / "o2", o3 = s.dir / "o3";
    REQUIRE(steklab({"billiards", "--config", cfg.string(), "--seed", "9", "--out", o1.string()}).code == cli::ok);
    REQUIRE(steklab({"billiards", "--config", cfg.string(), "--seed", "9", "--threads", "3", "--out", o2.string()})
                .code == cli::ok);
    REQUIRE(steklab({"billiards", "--config", cfg.string(), "--seed", "10", "--out", o3.string()}).code == cli::ok);
    for (const char* f : {"periodicity.json", "trace.csv"})
      CHECK(read_text_file(o1 / f) == read_text_file(o2 / f));
    const Json a = Json::parse(read_text_file(o1 / "periodicity.json"));
    const Json c = Json::parse(read_text_file(o3 / "periodicity.json"));
    CHECK(a["config"]["seed"] == 9);
    CHECK(c["config"]["seed"] == 10);
    CHECK_FALSE(a["config"].contains("threads"));

    const auto rc = s.write("r.json", "{\"schema_version\": 1, \"inputs\": [\"" + o1.generic_string() + "\"]}");
    const Run rr = steklab({"report", "--config", rc.string(), "--out", (s.dir / "rep").string()});
    CHECK(rr.code == cli::ok);
    const Json rep = Json::parse(read_text_file(s.dir / "rep" / "report.json"));
    CHECK(rep["data"]["all_valid"] == true);
    CHECK(rep["data"]["artifacts"].size() == 2);

    // A tampered artifact fails the report.
    std::string text = read_text_file(o1 / "trace.csv");
    text.back() = text.back() == '\n' ? ' ' : '\n';
    write_text_file(o1 / "trace.csv", text);
    CHECK(steklab({"report", "--config", rc.string(), "--out", (s.dir / "rep2").string()}).code == cli::check_failed);
  }

  TEST_CASE("polygon spectrum with an explicit polygon") {
    Scratch s("polygon");
    const auto cfg = s.write("c.json", R"({"schema_version": 1, "domain": {"vertices": [[0,0],[2,0],[2,1],[0,1]]},
      "h_max": 0.1, "count": 4})");
    REQUIRE(steklab({"polygon-spectrum", "--config", cfg.string(), "--out", s.dir.string()}).code == cli::ok);
    const std::string text = read_text_file(s.dir / "spectrum.csv");
    CHECK(text.find("k,lambda\n0,") != std::string::npos);
  }

  TEST_CASE("help exits cleanly") { CHECK(steklab({"--help"}).code == 0); }
}
