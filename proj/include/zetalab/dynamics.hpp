#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "zetalab/trig.hpp"
#include "zetalab/types.hpp"

namespace zetalab {

// ---------------------------------------------------------------------------
// Torus geometry

/// Reduce each coordinate into [0, 1).
Vec2 reduce_mod1(const Vec2& x);

/// Shortest displacement from `from` to `to` on the torus, each component in
/// [-1/2, 1/2).
Vec2 torus_displacement(const Vec2& from, const Vec2& to);

double torus_distance(const Vec2& a, const Vec2& b);

/// A point of the 2-torus. Construction always reduces, so coordinates are in
/// [0, 1) and reduce(reduce(x)) == reduce(x).
class TorusPoint {
 public:
  TorusPoint() : coords_(0.0, 0.0) {}
  explicit TorusPoint(const Vec2& x) : coords_(reduce_mod1(x)) {}
  TorusPoint(double x0, double x1) : TorusPoint(Vec2(x0, x1)) {}

  const Vec2& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

 private:
  Vec2 coords_;
};

/// A point of the torus with rational coordinates num / den, 0 <= num < den.
struct RationalPoint {
  IVec2 num{0, 0};
  std::int64_t den = 1;
};

// ---------------------------------------------------------------------------
// Integer matrices

std::int64_t det(const IMat2& a);
std::int64_t trace(const IMat2& a);
/// Product with overflow detection (throws InvalidArgument on overflow).
IMat2 checked_multiply(const IMat2& a, const IMat2& b);
IMat2 checked_power(const IMat2& a, int n);
/// Inverse of a unimodular matrix, exact.
IMat2 unimodular_inverse(const IMat2& a);
inline Mat2 to_real(const IMat2& a) { return a.cast<double>(); }

// ---------------------------------------------------------------------------
// Maps

enum class Phase { Sin, Cos };

/// One real term amplitude * {sin,cos}(2 pi k.x) of the component-th
/// coordinate of the perturbing vector field.
struct PerturbationTerm {
  int component = 0;
  double amplitude = 0.0;
  Frequency frequency{0, 0};
  Phase phase = Phase::Sin;

  bool operator==(const PerturbationTerm&) const = default;
};

/// T(x) = A x + epsilon * v(x) mod Z^2.
struct MapSpec {
  IMat2 matrix = IMat2::Identity();
  double epsilon = 0.0;
  std::vector<PerturbationTerm> perturbation;
  double smoothness_r = std::numeric_limits<double>::infinity();

  /// Arnold's cat map [[2,1],[1,1]] with v = (sin 2 pi x_2, 0).
  static MapSpec cat(double epsilon = 0.0);

  bool operator==(const MapSpec&) const = default;
};

class TorusMap {
 public:
  /// Throws Config unless |det A| = 1 and every perturbation term is
  /// well-formed.
  explicit TorusMap(MapSpec spec);

  const MapSpec& spec() const { return spec_; }
  const IMat2& matrix() const { return spec_.matrix; }
  double epsilon() const { return spec_.epsilon; }
  bool is_linear() const { return linear_; }

  /// T̃(x) = A x + eps v(x), no reduction.
  Vec2 lift(const Vec2& x) const;
  TorusPoint eval(const TorusPoint& x) const;
  /// Exact integer path; requires epsilon == 0.
  RationalPoint eval(const RationalPoint& x) const;

  Mat2 jacobian(const Vec2& x) const;
  double jacobian_det(const Vec2& x) const { return jacobian(x).determinant(); }

  /// Solves T(x) = y. Newton iteration on the lift seeded at A^{-1} y.
  /// Throws NonConvergence when the contraction precheck fails or the
  /// residual stays above tol.
  TorusPoint inverse(const TorusPoint& y, double tol = 1e-13) const;

  /// eps * sup|Dv| * |A^{-1}|_2; the inverse iteration is admissible when
  /// this is below one.
  double contraction_constant() const { return contraction_; }

  /// Perturbing vector field and its derivative.
  Vec2 field(const Vec2& x) const;
  Mat2 field_jacobian(const Vec2& x) const;

 private:
  MapSpec spec_;
  Mat2 a_;
  Mat2 a_inv_;
  IMat2 a_inv_int_;
  bool linear_;
  double contraction_;
};

/// Iterate of the lift tracked as (reduced point, integer carry) so that the
/// lift value y + carry is never formed in floating point.
struct LiftedIterate {
  Vec2 point;       // reduced T^n(x)
  IVec2 carry;      // T̃^n(x_lift) = point + carry
  Mat2 derivative;  // DT^n(x)
};

/// n-step iterate starting from an arbitrary lift x; carry starts at floor(x).
LiftedIterate iterate_lift(const TorusMap& map, const Vec2& x, int n, bool with_derivative = true);

// ---------------------------------------------------------------------------
// Weights

enum class WeightKind { Constant, Trig, ExpTrig };

const char* to_string(WeightKind kind);

/// The weight g of the transfer operator.
class WeightSpec {
 public:
  WeightSpec() = default;
  static WeightSpec constant(cplx value);
  static WeightSpec trig(TrigPolynomial p);
  /// g = exp(p).
  static WeightSpec exp_trig(TrigPolynomial p);

  WeightKind kind() const { return kind_; }
  cplx constant_value() const { return value_; }
  const TrigPolynomial& polynomial() const { return poly_; }

  cplx operator()(const Vec2& x) const;

  /// Rigorous bound for the sup norm: |c| for constants, the coefficient sum
  /// for trig weights and exp(coefficient sum) for exp-trig weights.
  double sup_norm_bound() const;
  /// max |g| over an m x m grid.
  double grid_sup_estimate(int m = 512) const;

  bool is_real_valued() const;
  bool is_zero() const;

  /// The weight c*g.
  WeightSpec scaled(cplx c) const;

  bool operator==(const WeightSpec&) const = default;

 private:
  WeightKind kind_ = WeightKind::Constant;
  cplx value_{1.0, 0.0};
  TrigPolynomial poly_;
};

/// g̃(x,y) = g(T^{-1}x) |det D_x T^{-1}| g(y), the weight of the transfer
/// operator of T^{-1} x T.
cplx tensor_weight(const TorusMap& map, const WeightSpec& weight, const TorusPoint& x, const TorusPoint& y);

// ---------------------------------------------------------------------------
// Hyperbolicity

struct HyperbolicityEstimate {
  double lambda = 1.0;
  double C = 1.0;
  double cone_aperture = 1.0;
  /// Smallest relative slack of the cone inclusion over the grid; negative
  /// when some grid point failed.
  double margin = 0.0;
  /// Grid heuristic only: cones were preserved at every sample, not a proof.
  bool certified = false;
};

/// Eigen-data of the linear part; throws NotHyperbolic if |tr A| <= 2.
struct LinearSplitting {
  double unstable_eigenvalue;
  double stable_eigenvalue;
  Vec2 unstable_direction;
  Vec2 stable_direction;
};
LinearSplitting linear_splitting(const IMat2& a);

HyperbolicityEstimate estimate_hyperbolicity(const TorusMap& map, int grid_m = 64, int iterates = 8,
                                             double cone_aperture = 1.0);

}  // namespace zetalab
