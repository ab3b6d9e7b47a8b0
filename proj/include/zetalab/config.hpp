#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "zetalab/dynamics.hpp"

namespace zetalab {

struct Tolerances {
  double orbit = 1e-11;
  double trace = 1e-10;
  double identity = 1e-8;
  double mollifier = 2e-2;       // tensor pairings vs orbit traces
  double extrapolation = 1e-3;   // mollified traces vs orbit traces
  double zero_stability = 1e-6;
  double match = 1e-3;           // |z l - 1|
  double k_convergence = 1e-6;
  double sigma_gap = 1e-2;       // relative distance of sigma from any |l|
  double fit_slack = 0.05;       // fitted rate <= sigma^(1/2) + slack

  bool operator==(const Tolerances&) const = default;
};

struct RunParams {
  int n_max = 12;
  int galerkin_K = 32;
  int grid_m = 256;
  std::vector<double> epsilon_ladder{0.1, 0.05, 0.025};
  std::optional<double> sigma;  // nullopt means "auto"
  double r = 4.0;
  std::uint64_t seed = 0;
  std::vector<int> N_list{8, 10, 12};
  std::vector<int> K_list{24, 32};
  int eig_count = 40;
  int n_lo = 4;
  /// Zeros are compared inside min(certified radius, zero_radius).
  double zero_radius = std::numeric_limits<double>::infinity();
  /// Converged eigenvalues above this modulus must have a matching zero.
  double eig_modulus_floor = 0.5;
  bool allow_large = false;
  Tolerances tolerances;

  bool operator==(const RunParams&) const = default;
};

/// Test functions for the operator identities.
struct IdentityProbe {
  TrigPolynomial h = TrigPolynomial::character({1, 0});
  TrigPolynomial f = TrigPolynomial::character({-2, -1}) + TrigPolynomial::constant(0.5);
  std::vector<int> powers{1, 2};

  bool operator==(const IdentityProbe&) const = default;
};

struct RunConfig {
  MapSpec map = MapSpec::cat(0.0);
  WeightSpec weight = WeightSpec::constant(1.0);
  RunParams run;
  IdentityProbe probe;
  std::string output_dir = "zetalab-out";
  std::string cache_dir = ".zetalab-cache";

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys take defaults; malformed values throw Config.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws Config on: non-positive tolerances, n_max > 16 without
/// allow_large, truncations beyond n_max, r above the map smoothness,
/// an explicit sigma that is not positive.
void validate(const RunConfig& config);

/// Digest of everything an orbit cache depends on.
std::string orbit_cache_key(const RunConfig& config);

}  // namespace zetalab
