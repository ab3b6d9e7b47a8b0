#include "zetalab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <variant>

#include "zetalab/error.hpp"
#include "zetalab/serialization.hpp"

namespace zetalab {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

/// JSON cannot carry non-finite doubles; those become strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json complex_pair(cplx c) { return json::array({num(c.real()), num(c.imag())}); }

double json_real(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
  }
  return j.get<double>();
}

json tolerances_of(const RunConfig& config) { return to_json(config).at("run").at("tolerances"); }

std::vector<int> galerkin_cutoffs(const RunConfig& config) {
  std::vector<int> ks = config.run.K_list;
  ks.push_back(config.run.galerkin_K);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

std::string galerkin_digest(const RunConfig& config) {
  return digest_of(json{{"map", to_json(config.map)},
                        {"weight", to_json(config.weight)},
                        {"K", galerkin_cutoffs(config)},
                        {"grid_m", config.run.grid_m},
                        {"eig_count", config.run.eig_count},
                        {"k_convergence", config.run.tolerances.k_convergence}});
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

Workspace resolve_workspace(const RunConfig& config, const std::optional<std::string>& out_flag,
                            const std::optional<std::string>& cache_flag) {
  Workspace ws;
  ws.out = out_flag ? fs::path(*out_flag) : fs::path(config.output_dir);
  if (cache_flag) {
    ws.cache = *cache_flag;
  } else if (const char* env = std::getenv("ZETALAB_CACHE"); env && *env) {
    ws.cache = env;
  } else {
    ws.cache = config.cache_dir;
  }
  return ws;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingArtifacts:
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Config:
    case ErrorKind::AmbiguousRounding:
    case ErrorKind::InvalidArgument:
      return 4;
    default:
      return 3;
  }
}

// ---------------------------------------------------------------------------
// orbits

fs::path orbit_cache_path(const RunConfig& config, const Workspace& ws, int n) {
  std::ostringstream name;
  name << "orbits-" << orbit_cache_key(config) << "-n" << std::setw(2) << std::setfill('0') << n << ".ndjson";
  return ws.cache / name.str();
}

OrbitSet load_or_compute_orbits(const RunConfig& config, const Workspace& ws, int n, std::ostream& log,
                                bool* cache_hit) {
  const std::string key = orbit_cache_key(config);
  const fs::path path = orbit_cache_path(config, ws, n);
  Stopwatch clock;
  if (fs::exists(path)) {
    try {
      OrbitSet set = orbit_cache_load(path, key, n);
      if (cache_hit) *cache_hit = true;
      log << "orbits n=" << n << ": " << set.points.size() << " points, cache=hit (" << fixed(clock.seconds(), 3)
          << " s)\n";
      return set;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DigestMismatch && e.kind() != ErrorKind::SchemaMismatch) throw;
      log << "orbits n=" << n << ": discarding cache (" << e.what() << ")\n";
    }
  }
  const TorusMap map(config.map);
  ContinuationOptions options;
  options.tol = config.run.tolerances.orbit;
  OrbitSet set = periodic_points(map, n, options);
  const ValidationReport report = validate_orbit_set(set, map, options.tol);
  if (!report.ok()) {
    std::ostringstream os;
    os << "Fix T^" << n << " failed validation: " << report.failures.front();
    if (report.failures.size() > 1) os << " (+" << report.failures.size() - 1 << " more)";
    throw Error(ErrorKind::ValidationFailure, os.str());
  }
  set.map_digest = key;
  orbit_cache_store(set, path);
  if (cache_hit) *cache_hit = false;
  log << "orbits n=" << n << ": " << set.points.size() << " points, cache=miss (" << fixed(clock.seconds(), 3)
      << " s)\n";
  return set;
}

std::vector<OrbitSummaryRow> stage_orbits(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  std::vector<OrbitSummaryRow> rows;
  CsvTable csv{{"n", "count", "expected_count", "cache_hit"}, {}};
  for (int n = 1; n <= config.run.n_max; ++n) {
    OrbitSummaryRow row;
    row.n = n;
    const OrbitSet set = load_or_compute_orbits(config, ws, n, log, &row.cache_hit);
    row.count = set.points.size();
    row.expected = set.expected_count;
    if (static_cast<std::int64_t>(row.count) != row.expected) {
      std::ostringstream os;
      os << "Fix T^" << n << " has " << row.count << " points, expected " << row.expected;
      throw Error(ErrorKind::ValidationFailure, os.str());
    }
    rows.push_back(row);
    csv.rows.push_back({std::to_string(n), std::to_string(row.count), std::to_string(row.expected),
                        row.cache_hit ? "true" : "false"});
  }
  write_text_file(ws.out / "orbits_summary.csv", to_csv(csv));
  return rows;
}

// ---------------------------------------------------------------------------
// traces

TraceTable stage_traces(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  const TorusMap map(config.map);
  Stopwatch clock;
  const TraceTable table = trace_table(map, config.weight, config.run.n_max,
                                       [&](int n) { return load_or_compute_orbits(config, ws, n, log); });
  write_text_file(ws.out / "traces.csv", trace_table_csv(table));
  write_text_file(ws.out / "traces.json", trace_table_sidecar(table, tolerances_of(config)).dump(2) + "\n");
  log << "traces: n_max=" << table.n_max() << " (" << fixed(clock.seconds()) << " s)\n";
  return table;
}

TraceTable load_or_compute_traces(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  const fs::path csv = ws.out / "traces.csv", side = ws.out / "traces.json";
  if (fs::exists(csv) && fs::exists(side)) {
    try {
      const json sidecar = read_json_file(side);
      if (sidecar.value("map_digest", "") == map_digest(config.map) &&
          sidecar.value("weight_digest", "") == weight_digest(config.weight) &&
          sidecar.value("tolerances", json()) == tolerances_of(config)) {
        TraceTable t = trace_table_from_csv(read_text_file(csv), sidecar);
        if (t.n_max() >= config.run.n_max) {
          t.entries.resize(static_cast<std::size_t>(config.run.n_max));
          log << "traces: reusing " << csv.string() << "\n";
          return t;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SchemaMismatch) throw;
    }
  }
  return stage_traces(config, ws, log);
}

// ---------------------------------------------------------------------------
// galerkin

namespace {

GalerkinOutcome compute_galerkin(const RunConfig& config, std::ostream& log) {
  const TorusMap map(config.map);
  GalerkinOutcome out;
  out.K_values = galerkin_cutoffs(config);
  std::vector<SpectrumEstimate> spectra;
  for (int K : out.K_values) {
    Stopwatch clock;
    const GalerkinOperator op = build_galerkin(map, config.weight, K, config.run.grid_m);
    out.max_tail_ratio = std::max(out.max_tail_ratio, op.max_tail_ratio);
    out.aliasing_risk = out.aliasing_risk || op.aliasing_risk;
    const int count = std::min<int>(config.run.eig_count, static_cast<int>(op.matrix.rows()));
    spectra.push_back(eigen_solve(op, count));
    log << "galerkin K=" << K << ": dimension " << op.matrix.rows() << (op.exact ? " (exact)" : "") << ", "
        << count << " eigenvalues (" << fixed(clock.seconds()) << " s)\n";
    if (op.aliasing_risk) log << "galerkin K=" << K << ": AliasingRisk, tail ratio " << op.max_tail_ratio << "\n";
  }
  out.spectrum = spectra.back();
  if (spectra.size() >= 2) {
    out.tracks = convergence_scan(spectra, config.run.tolerances.k_convergence);
    for (std::size_t i = 0; i < out.tracks.size(); ++i) out.spectrum.k_spread[i] = out.tracks[i].spread;
  }
  return out;
}

std::optional<SpectrumEstimate> current_spectrum(const RunConfig& config, const Workspace& ws) {
  const fs::path side = ws.out / "galerkin.json", csv = ws.out / "spectrum.csv";
  if (!fs::exists(side) || !fs::exists(csv)) return std::nullopt;
  try {
    if (read_json_file(side).value("config_digest", "") != galerkin_digest(config)) return std::nullopt;
    return read_spectrum_csv(csv);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SchemaMismatch) return std::nullopt;
    throw;
  }
}

SpectrumEstimate spectrum_for(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  if (auto s = current_spectrum(config, ws)) {
    log << "galerkin: reusing " << (ws.out / "spectrum.csv").string() << "\n";
    return *s;
  }
  return compute_galerkin(config, log).spectrum;
}

}  // namespace

GalerkinOutcome stage_galerkin(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  GalerkinOutcome out = compute_galerkin(config, log);
  write_text_file(ws.out / "spectrum.csv", spectrum_csv(out.spectrum));
  const json side{{"config_digest", galerkin_digest(config)},
                  {"map_digest", map_digest(config.map)},
                  {"weight_digest", weight_digest(config.weight)},
                  {"K_values", out.K_values},
                  {"grid_m", config.run.grid_m},
                  {"ordering", "maxnorm-lex"},
                  {"max_tail_ratio", num(out.max_tail_ratio)},
                  {"aliasing_risk", out.aliasing_risk}};
  write_text_file(ws.out / "galerkin.json", side.dump(2) + "\n");
  return out;
}

SpectrumEstimate read_spectrum_csv(const fs::path& path) {
  const CsvTable csv = parse_csv(read_text_file(path));
  if (csv.header != std::vector<std::string>{"rank", "re_lambda", "im_lambda", "modulus", "residual", "k_spread"})
    throw Error(ErrorKind::SchemaMismatch, path.string() + " has an unexpected header");
  SpectrumEstimate s;
  for (const auto& r : csv.rows) {
    if (r.size() != 6) throw Error(ErrorKind::SchemaMismatch, path.string() + " has a malformed row");
    s.eigenvalues.emplace_back(std::stod(r[1]), std::stod(r[2]));
    s.residuals.push_back(std::stod(r[4]));
    s.k_spread.push_back(std::stod(r[5]));
  }
  return s;
}

std::vector<cplx> converged_eigenvalues(const RunConfig& config, const SpectrumEstimate& spectrum) {
  std::vector<cplx> out;
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i)
    if (spectrum.k_spread[i] <= config.run.tolerances.k_convergence) out.push_back(spectrum.eigenvalues[i]);
  return out;
}

// ---------------------------------------------------------------------------
// determinant

double resolve_sigma(const RunConfig& config, const SpectralBoundParams& params, const std::vector<cplx>& eigs) {
  if (config.run.sigma) {
    if (!(*config.run.sigma > params.sigma_floor())) {
      std::ostringstream os;
      os << "run.sigma=" << *config.run.sigma << " must exceed max{rho, rho~}=" << params.sigma_floor();
      throw Error(ErrorKind::Config, os.str());
    }
    return *config.run.sigma;
  }
  return choose_sigma(params, eigs);
}

namespace {

DeterminantOutcome compute_determinant(const RunConfig& config, const TraceTable& traces,
                                       const std::optional<std::vector<cplx>>& eigs) {
  const TorusMap map(config.map);
  DeterminantOutcome out;
  out.hyperbolicity = estimate_hyperbolicity(map);
  out.params = SpectralBoundParams::make(config.run.r, out.hyperbolicity.lambda, config.weight.sup_norm_bound());
  out.certified_radius = certified_radius(out.params);
  out.search_radius = std::min(out.certified_radius, config.run.zero_radius);
  StabilityOptions so;
  so.threshold = config.run.tolerances.zero_stability;
  so.seed = config.run.seed;
  out.zeros = zero_stability(traces, config.run.N_list, out.search_radius, so);
  for (auto& z : out.zeros) z.inside_certified = std::abs(z.z) < out.certified_radius;
  out.reported = reported_zeros(out.zeros);
  const int N = *std::max_element(config.run.N_list.begin(), config.run.N_list.end());
  out.series = coefficients_from_traces(traces, N);

  if (eigs) {
    out.params.sigma = resolve_sigma(config, out.params, *eigs);
    std::vector<cplx> zs;
    for (const auto& z : out.reported) zs.push_back(z.z);
    out.report.matching = match_resonances(zs, *eigs, config.run.tolerances.match);
    out.report.eigenvalues = *eigs;
  } else if (config.run.sigma) {
    out.params.sigma = resolve_sigma(config, out.params, {});
  }
  out.report.zeros = out.reported;
  out.report.certified_radius = out.certified_radius;
  out.report.params = out.params;
  return out;
}

json zero_json(const StableZero& z, bool reported) {
  return json{{"re", num(z.z.real())},
              {"im", num(z.z.imag())},
              {"spread", num(z.spread)},
              {"present_everywhere", z.present_everywhere},
              {"stable", z.stable},
              {"inside_certified", z.inside_certified},
              {"reported", reported}};
}

}  // namespace

DeterminantOutcome stage_determinant(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  const TraceTable traces = load_or_compute_traces(config, ws, log);
  std::optional<std::vector<cplx>> eigs;
  if (auto s = current_spectrum(config, ws)) eigs = converged_eigenvalues(config, *s);
  DeterminantOutcome out = compute_determinant(config, traces, eigs);

  write_text_file(ws.out / "series.csv", series_csv(out.series));
  write_text_file(ws.out / "resonances.csv", resonance_report_csv(out.report));
  json zeros = json::array();
  for (const auto& z : out.zeros) {
    const bool rep = std::any_of(out.reported.begin(), out.reported.end(),
                                 [&](const StableZero& r) { return r.z == z.z; });
    zeros.push_back(zero_json(z, rep));
  }
  const auto& h = out.hyperbolicity;
  const json side{{"map_digest", traces.map_digest},
                  {"weight_digest", traces.weight_digest},
                  {"N_list", config.run.N_list},
                  {"params", spectral_bound_json(out.params)},
                  {"hyperbolicity",
                   {{"lambda", num(h.lambda)},
                    {"C", num(h.C)},
                    {"cone_aperture", num(h.cone_aperture)},
                    {"margin", num(h.margin)},
                    {"certified", h.certified}}},
                  {"certified_radius", num(out.certified_radius)},
                  {"search_radius", num(out.search_radius)},
                  {"zeros", zeros}};
  write_text_file(ws.out / "resonances.json", side.dump(2) + "\n");
  log << "determinant: N=" << out.series.degree() << ", certified radius " << out.certified_radius << ", "
      << out.reported.size() << " stable zero(s)\n";
  return out;
}

// ---------------------------------------------------------------------------
// mollifier

std::vector<MollifierCase> mollifier_cases(const RunConfig& config) {
  const Tolerances& t = config.run.tolerances;
  return {{"trace_n1", MollifiedFunctional::Trace, 1, 1, t.extrapolation},
          {"trace_n2", MollifiedFunctional::Trace, 2, 2, t.extrapolation},
          {"tensor_even_n1", MollifiedFunctional::TensorEven, 1, 2, t.mollifier},
          {"tensor_odd_n0", MollifiedFunctional::TensorOdd, 0, 1, t.mollifier},
          {"tensor_odd_n1", MollifiedFunctional::TensorOdd, 1, 3, t.mollifier}};
}

namespace {

TraceTable traces_up_to(const RunConfig& config, const Workspace& ws, int n, std::ostream& log) {
  if (config.run.n_max >= n) return load_or_compute_traces(config, ws, log);
  const TorusMap map(config.map);
  return trace_table(map, config.weight, n, [&](int k) { return load_or_compute_orbits(config, ws, k, log); });
}

MollifierOutcome run_case(const RunConfig& config, const TorusMap& map, const MollifierCase& c, cplx reference,
                          std::ostream& log) {
  Stopwatch clock;
  MollifierOutcome out;
  out.spec = c;
  out.rows = mollifier_ladder(c.kind, map, config.weight, c.n, config.run.epsilon_ladder, reference);
  std::vector<std::pair<double, cplx>> pts;
  for (const auto& r : out.rows) pts.emplace_back(r.epsilon, r.value);
  out.extrapolated = epsilon_extrapolate(pts);
  out.decreasing = ladder_errors_decrease(out.rows);
  log << "mollifier " << c.name << ": extrapolated " << out.extrapolated.value << " vs " << reference << " ("
      << fixed(clock.seconds()) << " s)\n";
  return out;
}

json outcome_json(const MollifierOutcome& o) {
  return json{{"name", o.spec.name},
              {"n", o.spec.n},
              {"target_n", o.spec.target_n},
              {"extrapolated", complex_pair(o.extrapolated.value)},
              {"extrapolation_error", num(o.extrapolated.error)},
              {"exponent", num(o.extrapolated.exponent)},
              {"reference", complex_pair(o.rows.front().reference)},
              {"abs_error", num(std::abs(o.extrapolated.value - o.rows.front().reference))},
              {"ladder_decreasing", o.decreasing}};
}

}  // namespace

std::vector<MollifierOutcome> stage_mollifier(const RunConfig& config, const Workspace& ws, std::ostream& log) {
  const TorusMap map(config.map);
  const TraceTable traces = traces_up_to(config, ws, 3, log);
  std::vector<MollifierOutcome> outs;
  json summary = json::array();
  for (const auto& c : mollifier_cases(config)) {
    outs.push_back(run_case(config, map, c, traces.at(c.target_n), log));
    write_text_file(ws.out / ("mollifier_" + c.name + ".csv"), ladder_csv(outs.back().rows));
    summary.push_back(outcome_json(outs.back()));
  }
  write_text_file(ws.out / "mollifier.json", summary.dump(2) + "\n");
  return outs;
}

// ---------------------------------------------------------------------------
// verify

bool Verdict::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json to_json(const Verdict& v) {
  json checks = json::array();
  for (const auto& c : v.checks)
    checks.push_back({{"check_name", c.name},
                      {"lhs", complex_pair(c.lhs)},
                      {"rhs", complex_pair(c.rhs)},
                      {"abs_err", num(c.abs_err)},
                      {"tol", num(c.tol)},
                      {"pass", c.pass}});
  return json{{"suite", v.suite}, {"pass", v.pass()}, {"checks", checks}};
}

namespace {

Check make_check(std::string name, cplx lhs, cplx rhs, double tol) {
  Check c{std::move(name), lhs, rhs, std::abs(lhs - rhs), tol, false};
  c.pass = c.abs_err <= tol;
  return c;
}

Check failed_check(std::string name, double tol, const std::string& why, std::ostream& log) {
  log << "verify " << name << ": " << why << "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return Check{std::move(name), cplx(nan, nan), cplx(nan, nan), std::numeric_limits<double>::infinity(), tol, false};
}

void identity_checks(const RunConfig& config, std::vector<Check>& out, std::ostream& log) {
  const TorusMap map(config.map);
  const double tol = config.run.tolerances.identity;
  Stopwatch clock;
  const IdentityResidual d = duality_check(map, config.weight, config.probe.h, config.probe.f, config.run.grid_m);
  out.push_back(make_check("duality", d.lhs, d.rhs, tol));
  for (int n : config.probe.powers) {
    const IdentityResidual p =
        powers_identity_check(map, config.weight, config.probe.h, config.probe.f, n, config.run.grid_m);
    out.push_back(make_check("powers_n" + std::to_string(n), p.lhs, p.rhs, tol));
  }
  log << "verify identities: " << fixed(clock.seconds()) << " s\n";
}

void lemma2_checks(const RunConfig& config, const Workspace& ws, std::vector<Check>& out, std::ostream& log) {
  const TorusMap map(config.map);
  const TraceTable traces = traces_up_to(config, ws, 3, log);
  for (const auto& c : mollifier_cases(config)) {
    const cplx ref = traces.at(c.target_n);
    try {
      const MollifierOutcome o = run_case(config, map, c, ref, log);
      out.push_back(make_check("mollified_" + c.name, o.extrapolated.value, ref, c.tolerance));
      if (c.kind == MollifiedFunctional::Trace) {
        // worst step ratio of the ladder errors above the noise floor
        double worst = 0.0;
        for (std::size_t i = 1; i < o.rows.size(); ++i)
          if (o.rows[i].abs_error > 1e-12) worst = std::max(worst, o.rows[i].abs_error / o.rows[i - 1].abs_error);
        Check mono{"mollified_" + c.name + "_ladder_decreasing", worst, 1.2, std::max(0.0, worst - 1.2), 0.0,
                   o.decreasing};
        out.push_back(mono);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonMonotone) throw;
      out.push_back(failed_check("mollified_" + c.name, c.tolerance, e.what(), log));
    }
  }
}

void crosscheck_checks(const RunConfig& config, const Workspace& ws, std::vector<Check>& out, std::ostream& log) {
  const Tolerances& tol = config.run.tolerances;
  const TraceTable traces = load_or_compute_traces(config, ws, log);
  const SpectrumEstimate spectrum = spectrum_for(config, ws, log);
  const std::vector<cplx> eigs = converged_eigenvalues(config, spectrum);
  const DeterminantOutcome det = compute_determinant(config, traces, eigs);

  if (config.weight.kind() == WeightKind::Constant && config.weight.constant_value() != cplx(0.0)) {
    // a constant weight c keeps the eigenvalue c of the constant function
    const cplx target = 1.0 / config.weight.constant_value();
    if (!det.reported.empty()) {
      const auto it = std::min_element(det.reported.begin(), det.reported.end(), [&](const auto& a, const auto& b) {
        return std::abs(a.z - target) < std::abs(b.z - target);
      });
      out.push_back(make_check("constant_weight_zero", it->z, target, tol.zero_stability));
    } else {
      out.push_back(failed_check("constant_weight_zero", tol.zero_stability, "no stable zero", log));
    }
  }

  const ResonanceMatching& m = det.report.matching;
  for (std::size_t i = 0; i < det.reported.size(); ++i) {
    const std::string name = "zero_matched_" + std::to_string(i);
    const auto it = std::find_if(m.pairs.begin(), m.pairs.end(), [&](const ResonancePair& p) { return p.zero == i; });
    if (it == m.pairs.end()) {
      out.push_back(failed_check(name, tol.match, "no eigenvalue within tolerance", log));
      continue;
    }
    const cplx e = eigs[it->eigenvalue];
    out.push_back(Check{name, det.reported[i].z, 1.0 / e, it->residual, tol.match, it->residual <= tol.match});
  }
  for (std::size_t j = 0; j < eigs.size(); ++j) {
    if (!(std::abs(eigs[j]) > config.run.eig_modulus_floor)) continue;
    const std::string name = "eigenvalue_matched_" + std::to_string(j);
    const auto it =
        std::find_if(m.pairs.begin(), m.pairs.end(), [&](const ResonancePair& p) { return p.eigenvalue == j; });
    if (it == m.pairs.end()) {
      out.push_back(failed_check(name, tol.match, "no stable zero within tolerance", log));
      continue;
    }
    out.push_back(
        Check{name, eigs[j], 1.0 / det.reported[it->zero].z, it->residual, tol.match, it->residual <= tol.match});
  }

  try {
    const double sigma = det.params.sigma;
    (void)projector_traces(eigs, sigma, 1, tol.sigma_gap);
    const FitReport fit = factorization_check(traces.entries, eigs, sigma, config.run.n_lo);
    const double bound = std::sqrt(sigma);
    out.push_back(
        Check{"factorization_rate", fit.rate, bound, std::max(0.0, fit.rate - bound), tol.fit_slack,
              fit.rate <= bound + tol.fit_slack});
    log << "verify factorization: sigma=" << sigma << " rate=" << fit.rate << " over " << fit.used.size()
        << " points\n";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateFit && e.kind() != ErrorKind::SigmaOnEigenvalue) throw;
    out.push_back(failed_check("factorization_rate", tol.fit_slack, e.what(), log));
  }
}

}  // namespace

Verdict stage_verify(const RunConfig& config, const Workspace& ws, const std::string& suite, std::ostream& log) {
  if (suite != "identities" && suite != "lemma2" && suite != "crosscheck" && suite != "all")
    throw Error(ErrorKind::Config, "suite must be identities, lemma2, crosscheck or all");
  Verdict v;
  v.suite = suite;
  if (suite == "identities" || suite == "all") identity_checks(config, v.checks, log);
  if (suite == "lemma2" || suite == "all") lemma2_checks(config, ws, v.checks, log);
  if (suite == "crosscheck" || suite == "all") crosscheck_checks(config, ws, v.checks, log);
  write_text_file(ws.out / ("verify_" + suite + ".json"), to_json(v).dump(2) + "\n");
  return v;
}

// ---------------------------------------------------------------------------
// report

namespace {

using Cell = std::variant<std::string, long long, double>;

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return format_double(std::get<double>(c));
}

json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return num(std::get<double>(c));
}

}  // namespace

void stage_report(const RunConfig& config, const Workspace& ws, const std::string& format, std::ostream& log) {
  if (format != "csv" && format != "json") throw Error(ErrorKind::Config, "report format must be csv or json");
  const fs::path res_path = ws.out / "resonances.json", spec_path = ws.out / "spectrum.csv";
  for (const auto& p : {res_path, spec_path})
    if (!fs::exists(p)) throw Error(ErrorKind::MissingArtifacts, p.string() + " not found; run the pipeline first");

  const json res = read_json_file(res_path);
  std::vector<cplx> zeros;
  std::vector<double> spreads;
  for (const auto& z : res.at("zeros"))
    if (z.value("reported", false)) {
      zeros.emplace_back(json_real(z.at("re")), json_real(z.at("im")));
      spreads.push_back(json_real(z.at("spread")));
    }
  const SpectrumEstimate spectrum = read_spectrum_csv(spec_path);
  std::vector<cplx> eigs;
  std::vector<double> eig_spread;
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i)
    if (spectrum.k_spread[i] <= config.run.tolerances.k_convergence) {
      eigs.push_back(spectrum.eigenvalues[i]);
      eig_spread.push_back(spectrum.k_spread[i]);
    }
  const ResonanceMatching m = match_resonances(zeros, eigs, config.run.tolerances.match);

  const std::vector<std::string> columns{"kind",       "index",       "re",     "im",
                                         "modulus",    "re_inverse",  "im_inverse",
                                         "spread",     "matched_index", "pairing_residual"};
  std::vector<std::vector<Cell>> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto add = [&](const std::string& kind, std::size_t idx, cplx v, double spread, long long partner, double resid) {
    const cplx inv = v == cplx(0.0) ? cplx(INFINITY, 0.0) : 1.0 / v;
    rows.push_back({kind, static_cast<long long>(idx), v.real(), v.imag(), std::abs(v), inv.real(), inv.imag(), spread,
                    partner, resid});
  };
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const auto it = std::find_if(m.pairs.begin(), m.pairs.end(), [&](const ResonancePair& p) { return p.zero == i; });
    add("zero", i, zeros[i], spreads[i], it == m.pairs.end() ? -1 : static_cast<long long>(it->eigenvalue),
        it == m.pairs.end() ? nan : it->residual);
  }
  for (std::size_t j = 0; j < eigs.size(); ++j) {
    const auto it =
        std::find_if(m.pairs.begin(), m.pairs.end(), [&](const ResonancePair& p) { return p.eigenvalue == j; });
    add("eigenvalue", j, eigs[j], eig_spread[j], it == m.pairs.end() ? -1 : static_cast<long long>(it->zero),
        it == m.pairs.end() ? nan : it->residual);
  }

  if (format == "csv") {
    CsvTable csv{columns, {}};
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(cell_text(c));
      csv.rows.push_back(cells);
    }
    write_text_file(ws.out / "report.csv", to_csv(csv));
  } else {
    json jrows = json::array();
    for (const auto& r : rows) {
      json jr = json::array();
      for (const auto& c : r) jr.push_back(cell_json(c));
      jrows.push_back(jr);
    }
    write_text_file(ws.out / "report.json", json{{"columns", columns}, {"rows", jrows}}.dump(2) + "\n");
  }
  log << "report: " << zeros.size() << " zero(s), " << eigs.size() << " converged eigenvalue(s), " << m.pairs.size()
      << " matched pair(s)\n";
}

}  // namespace zetalab
