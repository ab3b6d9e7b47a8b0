#include "zetalab/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "zetalab/error.hpp"

namespace zetalab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

namespace {

json real_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double parse_real_or_inf(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity") return INFINITY;
    throw Error(ErrorKind::Config, "expected a number or \"inf\"");
  }
  return j.get<double>();
}

json complex_json(cplx c) { return json{{"re", c.real()}, {"im", c.imag()}}; }

cplx parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_object()) return {j.value("re", 0.0), j.value("im", 0.0)};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::Config, "expected a complex value (number, {re,im} or [re,im])");
}

Frequency parse_frequency(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Config, "frequency must be an integer array");
  if (j.size() != 2) throw Error(ErrorKind::Config, "only d = 2 is supported (frequency of length " +
                                                      std::to_string(j.size()) + ")");
  return {j[0].get<int>(), j[1].get<int>()};
}

json terms_json(const TrigPolynomial& p) {
  json arr = json::array();
  for (const auto& t : p.terms())
    arr.push_back({{"frequency", {t.frequency[0], t.frequency[1]}},
                   {"re", t.coefficient.real()},
                   {"im", t.coefficient.imag()}});
  return arr;
}

TrigPolynomial parse_terms(const json& arr) {
  std::vector<TrigTerm> terms;
  for (const auto& t : arr)
    terms.push_back(TrigTerm{parse_frequency(t.at("frequency")), {t.value("re", 0.0), t.value("im", 0.0)}});
  return TrigPolynomial(std::move(terms));
}

}  // namespace

json to_json(const MapSpec& spec) {
  json pert = json::array();
  for (const auto& t : spec.perturbation)
    pert.push_back({{"component", t.component},
                    {"amplitude", t.amplitude},
                    {"frequency", {t.frequency[0], t.frequency[1]}},
                    {"phase", t.phase == Phase::Sin ? "sin" : "cos"}});
  const auto& a = spec.matrix;
  return json{{"matrix", {{a(0, 0), a(0, 1)}, {a(1, 0), a(1, 1)}}},
              {"epsilon", spec.epsilon},
              {"perturbation", pert},
              {"smoothness_r", real_or_inf(spec.smoothness_r)}};
}

MapSpec map_spec_from_json(const json& j) {
  try {
    MapSpec spec;
    const json& m = j.at("matrix");
    if (!m.is_array() || m.size() != 2)
      throw Error(ErrorKind::Config, "map.matrix must be 2x2 (only d = 2 is supported, got " +
                                         std::to_string(m.is_array() ? m.size() : 0) + " rows)");
    for (int i = 0; i < 2; ++i) {
      if (!m[i].is_array() || m[i].size() != 2) throw Error(ErrorKind::Config, "map.matrix must be 2x2");
      for (int k = 0; k < 2; ++k) spec.matrix(i, k) = m[i][k].get<std::int64_t>();
    }
    spec.epsilon = j.value("epsilon", 0.0);
    // absent key: the standard field (sin 2 pi x_2, 0); an explicit [] means none
    if (!j.contains("perturbation")) spec.perturbation = MapSpec::cat().perturbation;
    if (j.contains("perturbation")) {
      for (const auto& t : j.at("perturbation")) {
        PerturbationTerm term;
        term.component = t.at("component").get<int>();
        term.amplitude = t.value("amplitude", 1.0);
        term.frequency = parse_frequency(t.at("frequency"));
        const std::string phase = t.value("phase", "sin");
        if (phase == "sin")
          term.phase = Phase::Sin;
        else if (phase == "cos")
          term.phase = Phase::Cos;
        else
          throw Error(ErrorKind::Config, "perturbation phase must be sin or cos");
        spec.perturbation.push_back(term);
      }
    }
    if (j.contains("smoothness_r")) spec.smoothness_r = parse_real_or_inf(j.at("smoothness_r"));
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("map block: ") + e.what());
  }
}

json to_json(const WeightSpec& weight) {
  json j{{"kind", to_string(weight.kind())}};
  if (weight.kind() == WeightKind::Constant)
    j["value"] = complex_json(weight.constant_value());
  else
    j["terms"] = terms_json(weight.polynomial());
  return j;
}

WeightSpec weight_spec_from_json(const json& j) {
  try {
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") return WeightSpec::constant(parse_complex(j.value("value", json(1.0))));
    if (kind == "trig") return WeightSpec::trig(parse_terms(j.at("terms")));
    if (kind == "exp-trig") return WeightSpec::exp_trig(parse_terms(j.at("terms")));
    throw Error(ErrorKind::Config, "weight.kind must be constant, trig or exp-trig");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("weight block: ") + e.what());
  }
}

std::string digest_of(const json& j) { return hex64(fnv1a64(j.dump())); }
std::string map_digest(const MapSpec& spec) { return digest_of(to_json(spec)); }
std::string weight_digest(const WeightSpec& weight) { return digest_of(to_json(weight)); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifacts, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw Error(ErrorKind::SchemaMismatch, "empty CSV");
  return t;
}

}  // namespace zetalab
