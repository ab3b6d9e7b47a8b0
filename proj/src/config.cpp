#include "zetalab/config.hpp"

#include <cmath>

#include "zetalab/error.hpp"
#include "zetalab/serialization.hpp"

namespace zetalab {

namespace {

json real_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double parse_real_or_inf(const json& j) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity")) return INFINITY;
  return j.get<double>();
}

json poly_json(const TrigPolynomial& p) {
  json arr = json::array();
  for (const auto& t : p.terms())
    arr.push_back({{"frequency", {t.frequency[0], t.frequency[1]}},
                   {"re", t.coefficient.real()},
                   {"im", t.coefficient.imag()}});
  return arr;
}

TrigPolynomial parse_poly(const json& arr) {
  std::vector<TrigTerm> terms;
  for (const auto& t : arr) {
    const json& f = t.at("frequency");
    if (!f.is_array() || f.size() != 2) throw Error(ErrorKind::Config, "only d = 2 is supported");
    terms.push_back(TrigTerm{{f[0].get<int>(), f[1].get<int>()}, {t.value("re", 0.0), t.value("im", 0.0)}});
  }
  return TrigPolynomial(std::move(terms));
}

json tolerances_json(const Tolerances& t) {
  return json{{"orbit", t.orbit},
              {"trace", t.trace},
              {"identity", t.identity},
              {"mollifier", t.mollifier},
              {"extrapolation", t.extrapolation},
              {"zero_stability", t.zero_stability},
              {"match", t.match},
              {"k_convergence", t.k_convergence},
              {"sigma_gap", t.sigma_gap},
              {"fit_slack", t.fit_slack}};
}

Tolerances parse_tolerances(const json& j) {
  Tolerances t;
  t.orbit = j.value("orbit", t.orbit);
  t.trace = j.value("trace", t.trace);
  t.identity = j.value("identity", t.identity);
  t.mollifier = j.value("mollifier", t.mollifier);
  t.extrapolation = j.value("extrapolation", t.extrapolation);
  t.zero_stability = j.value("zero_stability", t.zero_stability);
  t.match = j.value("match", t.match);
  t.k_convergence = j.value("k_convergence", t.k_convergence);
  t.sigma_gap = j.value("sigma_gap", t.sigma_gap);
  t.fit_slack = j.value("fit_slack", t.fit_slack);
  return t;
}

}  // namespace

json to_json(const RunConfig& c) {
  const RunParams& r = c.run;
  json run{{"n_max", r.n_max},
           {"galerkin_K", r.galerkin_K},
           {"grid_m", r.grid_m},
           {"epsilon_ladder", r.epsilon_ladder},
           {"sigma", r.sigma ? json(*r.sigma) : json("auto")},
           {"r", real_or_inf(r.r)},
           {"seed", r.seed},
           {"N_list", r.N_list},
           {"K_list", r.K_list},
           {"eig_count", r.eig_count},
           {"n_lo", r.n_lo},
           {"zero_radius", real_or_inf(r.zero_radius)},
           {"eig_modulus_floor", r.eig_modulus_floor},
           {"allow_large", r.allow_large},
           {"tolerances", tolerances_json(r.tolerances)}};
  json probe{{"h", poly_json(c.probe.h)}, {"f", poly_json(c.probe.f)}, {"powers", c.probe.powers}};
  return json{{"map", to_json(c.map)},
              {"weight", to_json(c.weight)},
              {"run", run},
              {"identity_probe", probe},
              {"output_dir", c.output_dir},
              {"cache_dir", c.cache_dir}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  RunConfig c;
  if (j.contains("map")) c.map = map_spec_from_json(j.at("map"));
  if (j.contains("weight")) c.weight = weight_spec_from_json(j.at("weight"));
  try {
    if (j.contains("run")) {
      const json& r = j.at("run");
      RunParams& p = c.run;
      p.n_max = r.value("n_max", p.n_max);
      p.galerkin_K = r.value("galerkin_K", p.galerkin_K);
      p.grid_m = r.value("grid_m", p.grid_m);
      if (r.contains("epsilon_ladder")) p.epsilon_ladder = r.at("epsilon_ladder").get<std::vector<double>>();
      if (r.contains("sigma")) {
        const json& s = r.at("sigma");
        if (s.is_string()) {
          if (s.get<std::string>() != "auto") throw Error(ErrorKind::Config, "run.sigma must be a number or \"auto\"");
          p.sigma.reset();
        } else {
          p.sigma = s.get<double>();
        }
      }
      if (r.contains("r")) p.r = parse_real_or_inf(r.at("r"));
      p.seed = r.value("seed", p.seed);
      if (r.contains("N_list")) p.N_list = r.at("N_list").get<std::vector<int>>();
      if (r.contains("K_list")) p.K_list = r.at("K_list").get<std::vector<int>>();
      p.eig_count = r.value("eig_count", p.eig_count);
      p.n_lo = r.value("n_lo", p.n_lo);
      if (r.contains("zero_radius")) p.zero_radius = parse_real_or_inf(r.at("zero_radius"));
      p.eig_modulus_floor = r.value("eig_modulus_floor", p.eig_modulus_floor);
      p.allow_large = r.value("allow_large", p.allow_large);
      if (r.contains("tolerances")) p.tolerances = parse_tolerances(r.at("tolerances"));
    }
    if (j.contains("identity_probe")) {
      const json& pr = j.at("identity_probe");
      if (pr.contains("h")) c.probe.h = parse_poly(pr.at("h"));
      if (pr.contains("f")) c.probe.f = parse_poly(pr.at("f"));
      if (pr.contains("powers")) c.probe.powers = pr.at("powers").get<std::vector<int>>();
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("run block: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::Config, "cannot read config " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "config is not valid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

void validate(const RunConfig& c) {
  const RunParams& p = c.run;
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  (void)TorusMap(c.map);  // matrix and perturbation checks, Config on failure
  const Tolerances& t = p.tolerances;
  for (double v : {t.orbit, t.trace, t.identity, t.mollifier, t.extrapolation, t.zero_stability, t.match,
                   t.k_convergence, t.sigma_gap, t.fit_slack})
    if (!(v > 0.0)) fail("all tolerances must be positive");
  if (p.n_max < 1) fail("run.n_max must be >= 1");
  if (p.n_max > 16 && !p.allow_large) fail("run.n_max > 16 requires --allow-large");
  if (p.N_list.empty()) fail("run.N_list must not be empty");
  for (int N : p.N_list)
    if (N < 1 || N > p.n_max) fail("run.N_list entries must lie in [1, n_max]");
  if (p.K_list.empty()) fail("run.K_list must not be empty");
  for (int K : p.K_list)
    if (K < 1) fail("run.K_list entries must be >= 1");
  if (p.galerkin_K < 1) fail("run.galerkin_K must be >= 1");
  if (p.grid_m < 8) fail("run.grid_m must be >= 8");
  if (p.eig_count < 1) fail("run.eig_count must be >= 1");
  if (p.n_lo < 0) fail("run.n_lo must be >= 0");
  if (!(p.r > 0.0)) fail("run.r must be positive");
  if (p.r > c.map.smoothness_r) fail("run.r exceeds map.smoothness_r");
  if (p.sigma && !(*p.sigma > 0.0)) fail("run.sigma must be positive");
  if (!(p.zero_radius > 0.0)) fail("run.zero_radius must be positive");
  if (p.epsilon_ladder.size() < 3) fail("run.epsilon_ladder needs at least three values");
  for (double e : p.epsilon_ladder)
    if (!(e > 0.0 && e < 0.25)) fail("run.epsilon_ladder values must lie in (0, 1/4)");
  if (c.probe.powers.empty()) fail("identity_probe.powers must not be empty");
  for (int n : c.probe.powers)
    if (n < 1) fail("identity_probe.powers must be >= 1");
}

std::string orbit_cache_key(const RunConfig& c) {
  return digest_of(json{{"map", to_json(c.map)},
                        {"weight", to_json(c.weight)},
                        {"tolerances", tolerances_json(c.run.tolerances)}});
}

}  // namespace zetalab
