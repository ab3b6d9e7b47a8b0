#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zetalab/dynamics.hpp"

namespace zetalab {

inline constexpr double kDefaultOrbitTolerance = 1e-11;

struct PeriodicPoint {
  int n = 1;
  IVec2 k{0, 0};  // T̃^n(x) - x = k
  Vec2 x{0.0, 0.0};
  double residual = 0.0;
  Mat2 monodromy = Mat2::Identity();
  int primitive_period = 1;
};

/// Fix T^n, one entry per point, ordered by the lift class of the seed.
struct OrbitSet {
  std::string map_digest;
  int n = 1;
  std::vector<PeriodicPoint> points;
  std::int64_t expected_count = 0;
};

/// |det(A^n - Id)|.
std::int64_t expected_fixed_point_count(const IMat2& a, int n);

/// Residual budget for a periodic point: the configured tolerance, widened to
/// a few ulps of |DT^n|_inf because a double-precision x carries that much
/// error after n expanding steps.
double residual_tolerance(double tol, const Mat2& monodromy);

/// ||T̃^n(x) - x - k||_inf evaluated with carry tracking.
double periodic_residual(const TorusMap& map, const Vec2& x, const IVec2& k, int n);

/// All of Fix T^n for the linear automorphism A, by exact lattice solve.
/// Throws Degenerate if det(A^n - Id) = 0.
OrbitSet enumerate_linear(const IMat2& a, int n);
OrbitSet enumerate_linear(const TorusMap& map, int n);

struct ContinuationOptions {
  double tol = kDefaultOrbitTolerance;
  int max_iterations = 25;
  /// Fall back to an adaptive homotopy 0 -> eps when the direct solve stalls.
  bool epsilon_ladder = true;
};

/// Newton continuation of every seed (lift class k kept fixed) to the
/// perturbed map. Throws ContinuationFailure naming the first failing k, or
/// CollisionDetected if two continued points coincide within 10 tol.
OrbitSet continue_orbits(const TorusMap& map, int n, const OrbitSet& seeds,
                         const ContinuationOptions& options = {});

/// Fix T^n for any map in scope: exact enumeration, continued if perturbed.
OrbitSet periodic_points(const TorusMap& map, int n, const ContinuationOptions& options = {});

struct ValidationReport {
  std::vector<std::string> failures;
  std::size_t residual_failures = 0;
  std::size_t collision_failures = 0;
  std::size_t period_failures = 0;
  bool ok() const { return failures.empty(); }
};

ValidationReport validate_orbit_set(const OrbitSet& set, const TorusMap& map, double tol = kDefaultOrbitTolerance);

/// Smallest divisor m of n with dist(T^m x, x) within tolerance.
int primitive_period(const TorusMap& map, const Vec2& x, int n, double tol = kDefaultOrbitTolerance);

/// Index pairs of points closer than `threshold` on the torus.
std::vector<std::pair<std::size_t, std::size_t>> find_collisions(const std::vector<Vec2>& points,
                                                                 double threshold);

void orbit_cache_store(const OrbitSet& set, const std::filesystem::path& path);
/// Throws DigestMismatch when the file belongs to another map and
/// SchemaMismatch on malformed or empty files.
OrbitSet orbit_cache_load(const std::filesystem::path& path, const std::string& map_digest, int n);

}  // namespace zetalab
