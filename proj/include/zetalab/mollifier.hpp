#pragma once

#include <string>
#include <vector>

#include "zetalab/dynamics.hpp"

namespace zetalab {

/// Uniform m x m grid on [0,1)^2 with cell weight 1/m^2.
struct QuadratureGrid {
  int m = 256;

  Vec2 node(int i, int j) const { return Vec2(double(i) / m, double(j) / m); }
  double cell_weight() const { return 1.0 / (double(m) * double(m)); }
};

enum class MollifierShape { TruncatedGaussian, Bump };

/// Radial kernel j_eps on the torus, normalized so its grid sum times the
/// cell weight is one. Support radius is eps for both shapes.
class MollifierSpec {
 public:
  /// Throws InvalidArgument unless 0 < eps and 2 eps < 1/2, GridTooCoarse
  /// when m eps < 8.
  static MollifierSpec for_grid(double epsilon, const QuadratureGrid& grid,
                                MollifierShape shape = MollifierShape::TruncatedGaussian);

  double epsilon() const { return epsilon_; }
  MollifierShape shape() const { return shape_; }
  double normalization() const { return normalization_; }

  /// j_eps at a displacement with components in [-1/2, 1/2).
  double operator()(const Vec2& displacement) const;
  bool in_support(const Vec2& displacement) const { return displacement.squaredNorm() < radius2_; }

  /// Grid sum of j_eps over all displacements i/m, times 1/m^2.
  double grid_mass(const QuadratureGrid& grid) const;

 private:
  double raw(double r2) const;
  double epsilon_ = 0.0;
  double radius2_ = 0.0;
  MollifierShape shape_ = MollifierShape::TruncatedGaussian;
  double normalization_ = 1.0;
};

/// Integral of g_n(x) j_eps(T^n x - x).
cplx mollified_trace(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                     const QuadratureGrid& grid);

/// Integral of g~_n(x,x) j_eps(T^n x - T^{-n} x), with
/// g~_n(x,y) = prod_{i<n} g~(T^{-i} x, T^i y).
cplx mollified_tensor_trace_even(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                                 const QuadratureGrid& grid);

/// Integral of g~_n(x,x) g(T^{-n-1}x) / |det DT(T^{-n-1}x)| j_eps(T^n x - T^{-n-1} x).
cplx mollified_tensor_trace_odd(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                                const QuadratureGrid& grid);

enum class MollifiedFunctional { Trace, TensorEven, TensorOdd };

cplx mollified_value(MollifiedFunctional kind, const TorusMap& map, const WeightSpec& weight, int n,
                     const MollifierSpec& moll, const QuadratureGrid& grid);

/// Smallest power of two m with m eps >= 51.2 (so 512 at eps = 0.1).
int grid_for_epsilon(double epsilon);

struct Extrapolation {
  cplx value;
  double error = 0.0;
  double exponent = 0.0;  // 0 when the ladder sits on the noise floor
};

/// Richardson extrapolation of value(eps) = a + b eps^p over a halving ladder,
/// p from the last two difference ratios, clamped to [1, 3]. Throws
/// NonMonotone when successive differences grow above the noise floor.
Extrapolation epsilon_extrapolate(const std::vector<std::pair<double, cplx>>& values);

struct LadderRow {
  double epsilon = 0.0;
  int grid_m = 0;
  cplx value;
  cplx reference;
  double abs_error = 0.0;
};

std::vector<LadderRow> mollifier_ladder(MollifiedFunctional kind, const TorusMap& map, const WeightSpec& weight,
                                        int n, const std::vector<double>& epsilons, cplx reference,
                                        MollifierShape shape = MollifierShape::TruncatedGaussian);

/// Errors shrink step to step, up to a factor `allowance`, ignoring steps
/// where both errors sit below `floor`.
bool ladder_errors_decrease(const std::vector<LadderRow>& rows, double allowance = 1.2, double floor = 1e-12);

/// CSV: epsilon,grid_m,re_value,im_value,reference_re,reference_im,abs_error.
std::string ladder_csv(const std::vector<LadderRow>& rows);

}  // namespace zetalab
