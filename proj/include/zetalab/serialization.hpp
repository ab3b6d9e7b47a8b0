#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "zetalab/dynamics.hpp"

namespace zetalab {

using json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

json to_json(const MapSpec& spec);
MapSpec map_spec_from_json(const json& j);
json to_json(const WeightSpec& weight);
WeightSpec weight_spec_from_json(const json& j);

/// Content hashes over the canonical JSON form (keys sorted, shortest
/// round-trip floats).
std::string map_digest(const MapSpec& spec);
std::string weight_digest(const WeightSpec& weight);
std::string digest_of(const json& j);

/// Minimal CSV helpers; every numeric cell goes through format_double.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

}  // namespace zetalab
