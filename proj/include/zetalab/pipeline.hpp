#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zetalab/config.hpp"
#include "zetalab/determinant.hpp"
#include "zetalab/error.hpp"
#include "zetalab/mollifier.hpp"
#include "zetalab/orbits.hpp"
#include "zetalab/spectral.hpp"
#include "zetalab/traces.hpp"

namespace zetalab {

struct Workspace {
  std::filesystem::path out;
  std::filesystem::path cache;
};

/// Output dir: flag over config. Cache dir: flag over ZETALAB_CACHE over
/// config.
Workspace resolve_workspace(const RunConfig& config, const std::optional<std::string>& out_flag,
                            const std::optional<std::string>& cache_flag);

/// 0 ok, 2 missing inputs, 3 numerical failure, 4 configuration error.
int exit_code(ErrorKind kind);

// --- orbits ---------------------------------------------------------------

struct OrbitSummaryRow {
  int n = 0;
  std::size_t count = 0;
  std::int64_t expected = 0;
  bool cache_hit = false;
};

std::filesystem::path orbit_cache_path(const RunConfig& config, const Workspace& ws, int n);

/// Cached Fix T^n; a missing, foreign or malformed cache file is rebuilt.
OrbitSet load_or_compute_orbits(const RunConfig& config, const Workspace& ws, int n, std::ostream& log,
                                bool* cache_hit = nullptr);

/// Validated orbit sets for 1..n_max; writes orbits_summary.csv. Throws
/// ValidationFailure when a set fails validation.
std::vector<OrbitSummaryRow> stage_orbits(const RunConfig& config, const Workspace& ws, std::ostream& log);

// --- traces ---------------------------------------------------------------

/// Writes traces.csv and traces.json.
TraceTable stage_traces(const RunConfig& config, const Workspace& ws, std::ostream& log);
/// traces.csv when it matches the config digests and covers n_max, else
/// stage_traces.
TraceTable load_or_compute_traces(const RunConfig& config, const Workspace& ws, std::ostream& log);

// --- galerkin -------------------------------------------------------------

struct GalerkinOutcome {
  std::vector<int> K_values;
  SpectrumEstimate spectrum;  // at the largest K, k_spread filled in
  std::vector<TrackedEigenvalue> tracks;
  double max_tail_ratio = 0.0;
  bool aliasing_risk = false;
};

/// Cutoffs K_list plus galerkin_K; writes spectrum.csv and galerkin.json.
GalerkinOutcome stage_galerkin(const RunConfig& config, const Workspace& ws, std::ostream& log);

/// Eigenvalues of spectrum.csv whose k_spread is within tolerance.
std::vector<cplx> converged_eigenvalues(const RunConfig& config, const SpectrumEstimate& spectrum);
SpectrumEstimate read_spectrum_csv(const std::filesystem::path& path);

// --- determinant ----------------------------------------------------------

struct DeterminantOutcome {
  DeterminantSeries series;  // longest truncation
  HyperbolicityEstimate hyperbolicity;
  SpectralBoundParams params;
  double certified_radius = 0.0;
  double search_radius = 0.0;  // min(certified, zero_radius)
  std::vector<StableZero> zeros;     // all tracked zeros inside search_radius
  std::vector<StableZero> reported;  // stable zeros inside the empirical radius
  ResonanceReport report;
};

/// sigma from the config, or chosen from the eigenvalues when "auto".
double resolve_sigma(const RunConfig& config, const SpectralBoundParams& params, const std::vector<cplx>& eigs);

/// Writes series.csv, resonances.csv and resonances.json. Pairs zeros with
/// spectrum.csv when that file exists.
DeterminantOutcome stage_determinant(const RunConfig& config, const Workspace& ws, std::ostream& log);

// --- mollifier ------------------------------------------------------------

struct MollifierCase {
  std::string name;
  MollifiedFunctional kind;
  int n = 0;
  int target_n = 0;  // orbit trace it approximates
  double tolerance = 0.0;
};

/// Mollified trace n = 1, 2; tensor even n = 1; tensor odd n = 0, 1.
std::vector<MollifierCase> mollifier_cases(const RunConfig& config);

struct MollifierOutcome {
  MollifierCase spec;
  std::vector<LadderRow> rows;
  Extrapolation extrapolated;
  bool decreasing = false;
};

/// Writes mollifier_<name>.csv per case and mollifier.json.
std::vector<MollifierOutcome> stage_mollifier(const RunConfig& config, const Workspace& ws, std::ostream& log);

// --- verify ---------------------------------------------------------------

struct Check {
  std::string name;
  cplx lhs;
  cplx rhs;
  double abs_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct Verdict {
  std::string suite;
  std::vector<Check> checks;
  bool pass() const;
};

nlohmann::json to_json(const Verdict& verdict);

/// Suites: identities, lemma2, crosscheck, all. Writes verify_<suite>.json.
Verdict stage_verify(const RunConfig& config, const Workspace& ws, const std::string& suite, std::ostream& log);

// --- report ---------------------------------------------------------------

/// Merges resonances.json and spectrum.csv into report.csv or report.json.
/// Throws MissingArtifacts when either input is absent.
void stage_report(const RunConfig& config, const Workspace& ws, const std::string& format, std::ostream& log);

}  // namespace zetalab
