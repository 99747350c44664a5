#pragma once

#include "steklov/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace steklov {

using Json = nlohmann::ordered_json;

/// Shortest round-trip-safe decimal form used in every artifact: printf
/// "%.15g", with "nan", "inf" and "-inf" spelled out.
std::string format_double(double x);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t h);

/// Domain description: {"vertices": [[x, y], ...]} or
/// {"sector": {"alpha": a, "radius": R, "symmetry": "symmetric"}}.
Domain parse_domain(const Json& j);
Json domain_to_json(const Domain& d);

/// CSV artifact whose first lines are `# config: <json>` and
/// `# content_hash: <hex>`; the hash covers the body only.
std::string csv_artifact(const Json& config, const std::string& body);
/// JSON artifact {"config", "content_hash", "data"}; the hash covers the
/// compact dump of data.
std::string json_artifact(const Json& config, const Json& data);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace steklov
