#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "zetalab/traces.hpp"
#include "zetalab/types.hpp"

namespace zetalab {

/// Taylor coefficients of exp(-sum_n z^n tr_n / n), c_0 = 1.
struct DeterminantSeries {
  std::vector<cplx> coefficients;
  std::string map_digest;
  std::string weight_digest;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  cplx operator()(cplx z) const;
};

/// c_m = -(1/m) sum_{k=1..m} tr_k c_{m-k}. Throws InsufficientTraces when N
/// exceeds the table.
DeterminantSeries coefficients_from_traces(const TraceTable& traces, int N);
DeterminantSeries coefficients_from_traces(const std::vector<cplx>& traces, int N);

/// Newton identities in the other direction: tr_m = -m c_m - sum_{k<m} tr_k c_{m-k}.
std::vector<cplx> traces_from_coefficients(const std::vector<cplx>& coefficients);

/// max_m |m c_m + sum_k tr_k c_{m-k}| over 1 <= m <= N.
double recursion_residual(const std::vector<cplx>& coefficients, const std::vector<cplx>& traces);

/// Nearest integer; throws AmbiguousRounding at exact half-integers.
int nearest_integer(double a);

struct SpectralBoundParams {
  double r = 4.0;
  double lambda = 0.0;
  double g_sup = 1.0;
  int p = 0;        // [r/2]
  double q = 0.0;   // r - [r/2]
  double alpha = 0.0;
  double rho = 0.0;
  double rho_tilde = 0.0;
  double rho_star = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();

  /// Throws InvalidArgument unless 0 < lambda < 1, g_sup > 0, r > 0.
  static SpectralBoundParams make(double r, double lambda, double g_sup);

  /// max{rho, rho_tilde}; sigma must lie strictly above.
  double sigma_floor() const { return std::max(rho, rho_tilde); }
  /// max{rho, rho_tilde^(1/2)}, the cut used for the certified disk.
  double certified_cut() const;
};

/// 1 / rho_star (infinite for r = inf).
double certified_radius(const SpectralBoundParams& params);

/// Log-midpoint of the widest gap among eigenvalue moduli above
/// max{rho, rho_tilde} (that floor included as a gap end), preferring gaps
/// that close at or below 1.
double choose_sigma(const SpectralBoundParams& params, const std::vector<cplx>& eigenvalues);

struct PolynomialRoot {
  cplx z;
  double residual = 0.0;  // |p(z)| / sum |c_m| |z|^m
};

/// All roots of sum c_m z^m (trailing coefficients below 1e-15 max|c| are
/// dropped) by Aberth-Ehrlich iteration from a seeded perturbed circle, then
/// Newton polish. Throws RootIterationStall when some backward error stays
/// above 1e-10. Sorted by modulus, then argument.
std::vector<PolynomialRoot> polynomial_roots(const std::vector<cplx>& coefficients, std::uint64_t seed = 0);

/// Roots of the series with |z| < radius.
std::vector<PolynomialRoot> find_zeros(const DeterminantSeries& series, double radius, std::uint64_t seed = 0);

struct StableZero {
  cplx z;
  double spread = 0.0;  // max pairwise distance across truncations
  bool present_everywhere = false;
  bool stable = false;
  bool inside_certified = false;
};

struct StabilityOptions {
  double threshold = 1e-6;
  std::uint64_t seed = 0;
};

/// Zeros of the longest truncation inside `radius`, each tracked through the
/// other truncations by greedy nearest pairing.
std::vector<StableZero> zero_stability(const std::vector<DeterminantSeries>& truncations, double radius,
                                       const StabilityOptions& options = {});
std::vector<StableZero> zero_stability(const TraceTable& traces, const std::vector<int>& N_list, double radius,
                                       const StabilityOptions& options = {});

/// Stable zeros inside min(radius, smallest |z| of an unstable zero).
std::vector<StableZero> reported_zeros(const std::vector<StableZero>& zeros);

struct FitReport {
  double rate = 0.0;
  double prefactor = 0.0;
  double sigma = 0.0;
  double bound = 0.0;  // sigma^(1/2)
  int n_lo = 4;
  std::vector<int> used;
  std::vector<cplx> remainders;  // index n-1
};

/// rem_n = tr_n - sum_{|l|>sigma} l^n; fits |rem_n| ~ C s^n over the leading
/// run of n > n_lo with |rem_n| above 1e-13 (1 + |tr_n|). Rate 0 when no
/// remainder clears that floor; DegenerateFit when fewer than 4 points do.
FitReport factorization_check(const std::vector<cplx>& traces, const std::vector<cplx>& eigenvalues, double sigma,
                              int n_lo = 4);
FitReport factorization_check(const DeterminantSeries& series, const std::vector<cplx>& eigenvalues, double sigma,
                              int n_lo = 4);

struct ResonancePair {
  std::size_t zero = 0;
  std::size_t eigenvalue = 0;
  double residual = 0.0;  // |z l - 1|
};

struct ResonanceMatching {
  std::vector<ResonancePair> pairs;
  std::vector<std::size_t> unmatched_zeros;
  std::vector<std::size_t> unmatched_eigenvalues;
};

struct ResonanceReport {
  std::vector<StableZero> zeros;
  double certified_radius = 0.0;
  SpectralBoundParams params;
  std::vector<cplx> eigenvalues;
  ResonanceMatching matching;
};

/// CSV: re_z,im_z,modulus,stability_spread,inside_certified,matched_eig_re,
/// matched_eig_im,pairing_residual. Unmatched cells are empty.
std::string resonance_report_csv(const ResonanceReport& report);
nlohmann::json spectral_bound_json(const SpectralBoundParams& params);
/// CSV: m,re_c,im_c.
std::string series_csv(const DeterminantSeries& series);

}  // namespace zetalab
