#include "steklov/errors.hpp"
#include "steklov/io.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace steklov;

TEST_SUITE("io") {
  TEST_CASE("float formatting rule") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numbers::pi) == "3.14159265358979");
    CHECK(format_double(1e-20) == "1e-20");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  TEST_CASE("FNV-1a reference vectors") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
  }

  TEST_CASE("artifacts carry config and body hash") {
    const Json cfg = {{"subcommand", "x"}, {"seed", 3}};
    const std::string csv = csv_artifact(cfg, "a,b\n1,2\n");
    CHECK(csv == "# config: {\"subcommand\":\"x\",\"seed\":3}\n# content_hash: " + hex64(fnv1a64("a,b\n1,2\n")) +
                     "\na,b\n1,2\n");
    const Json doc = Json::parse(json_artifact(cfg, Json{{"v", 1.5}}));
    CHECK(doc["config"] == cfg);
    CHECK(doc["content_hash"] == hex64(fnv1a64(doc["data"].dump())));
  }

  TEST_CASE("domain parsing") {
    const Domain d = parse_domain(Json::parse(R"({"vertices": [[0,0],[1,0],[1,1],[0,1]]})"));
    REQUIRE(std::holds_alternative<PolygonalDomain>(d));
    CHECK(std::get<PolygonalDomain>(d).corner_count() == 4);
    const Domain s = parse_domain(Json::parse(R"({"sector": {"alpha": 1.0, "symmetry": "antisymmetric"}})"));
    REQUIRE(std::holds_alternative<SectorDomain>(s));
    CHECK(std::get<SectorDomain>(s).symmetry == Symmetry::antisymmetric);
    CHECK(parse_domain(domain_to_json(s)).index() == 1);
    CHECK_THROWS_AS(parse_domain(Json::parse(R"({"vertices": [[0,0]], "sector": {}})")), ConfigError);
    CHECK_THROWS_AS(parse_domain(Json::parse(R"({"polygon": []})")), ConfigError);
    CHECK_THROWS_AS(parse_domain(Json::parse(R"({"vertices": [[0,0],[1],[1,1]]})")), ConfigError);
    CHECK_THROWS_AS(parse_domain(Json::parse(R"({"sector": {"alpha": 1.0, "R": 3}})")), ConfigError);
  }
}
