#include "zetalab/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zetalab/error.hpp"
#include "zetalab/numeric.hpp"
#include "zetalab/serialization.hpp"
#include "zetalab/traces.hpp"

namespace zetalab {

namespace {

constexpr double kGaussianWidth = 0.25;  // sigma / eps; the cut sits at 4 sigma = eps

/// Row-tiled grid integral of f(x); f returns 0 off the kernel support.
template <class F>
cplx grid_integral(const QuadratureGrid& grid, F&& f) {
  const int m = grid.m;
  std::vector<cplx> rows(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < m; ++i) {
    CompensatedSum<cplx> row;
    for (int j = 0; j < m; ++j) row.add(f(grid.node(i, j)));
    rows[static_cast<std::size_t>(i)] = row.value();
  }
  CompensatedSum<cplx> total;
  for (const auto& r : rows) total.add(r);
  return total.value() * grid.cell_weight();
}

void check_inputs(const WeightSpec&, int n, int n_min) {
  if (n < n_min) throw Error(ErrorKind::InvalidArgument, "iterate count out of range");
}

Vec2 forward(const TorusMap& map, Vec2 x, int n) {
  for (int i = 0; i < n; ++i) x = reduce_mod1(map.lift(x));
  return x;
}

/// x, T^{-1}x, ..., T^{-n}x.
std::vector<Vec2> backward_orbit(const TorusMap& map, const Vec2& x, int n) {
  std::vector<Vec2> out(static_cast<std::size_t>(n) + 1);
  out[0] = x;
  for (int i = 1; i <= n; ++i) out[i] = map.inverse(TorusPoint(out[i - 1])).coords();
  return out;
}

/// g~(u, y) = g(T^{-1}u) g(y) / |det DT(T^{-1}u)| given u_pre = T^{-1}u.
cplx tensor_factor(const TorusMap& map, const WeightSpec& weight, const Vec2& u_pre, const Vec2& y) {
  return weight(u_pre) * weight(y) / std::abs(map.jacobian_det(u_pre));
}

}  // namespace

MollifierSpec MollifierSpec::for_grid(double epsilon, const QuadratureGrid& grid, MollifierShape shape) {
  if (!(epsilon > 0.0) || !(2.0 * epsilon < 0.5))
    throw Error(ErrorKind::InvalidArgument, "mollifier width must satisfy 0 < eps < 1/4");
  if (grid.m * epsilon < 8.0) {
    std::ostringstream os;
    os << "grid m=" << grid.m << " does not resolve eps=" << epsilon << " (need m*eps >= 8)";
    throw Error(ErrorKind::GridTooCoarse, os.str());
  }
  MollifierSpec s;
  s.epsilon_ = epsilon;
  s.radius2_ = epsilon * epsilon;
  s.shape_ = shape;
  s.normalization_ = 1.0;
  s.normalization_ = 1.0 / s.grid_mass(grid);
  return s;
}

double MollifierSpec::raw(double r2) const {
  if (!(r2 < radius2_)) return 0.0;
  if (shape_ == MollifierShape::TruncatedGaussian) {
    const double sigma = kGaussianWidth * epsilon_;
    return std::exp(-0.5 * r2 / (sigma * sigma));
  }
  return std::exp(-1.0 / (1.0 - r2 / radius2_));
}

double MollifierSpec::operator()(const Vec2& d) const { return normalization_ * raw(d.squaredNorm()); }

double MollifierSpec::grid_mass(const QuadratureGrid& grid) const {
  const int reach = static_cast<int>(std::ceil(epsilon_ * grid.m));
  CompensatedSum<double> sum;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j) sum.add((*this)(Vec2(double(i) / grid.m, double(j) / grid.m)));
  return sum.value() * grid.cell_weight();
}

cplx mollified_trace(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                     const QuadratureGrid& grid) {
  check_inputs(weight, n, 1);
  if (weight.is_zero()) return 0.0;
  return grid_integral(grid, [&](const Vec2& x) -> cplx {
    const Vec2 d = torus_displacement(x, forward(map, x, n));
    if (!moll.in_support(d)) return 0.0;
    return weight_along_orbit(map, weight, x, n) * moll(d);
  });
}

cplx mollified_tensor_trace_even(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                                 const QuadratureGrid& grid) {
  check_inputs(weight, n, 1);
  if (weight.is_zero()) return 0.0;
  return grid_integral(grid, [&](const Vec2& x) -> cplx {
    const std::vector<Vec2> back = backward_orbit(map, x, n);
    Vec2 y = x;
    std::vector<Vec2> fwd{x};
    for (int i = 0; i < n; ++i) fwd.push_back(y = reduce_mod1(map.lift(y)));
    const Vec2 d = torus_displacement(back[n], fwd[n]);
    if (!moll.in_support(d)) return 0.0;
    cplx w = 1.0;
    for (int i = 0; i < n; ++i) w *= tensor_factor(map, weight, back[i + 1], fwd[i]);
    return w * moll(d);
  });
}

cplx mollified_tensor_trace_odd(const TorusMap& map, const WeightSpec& weight, int n, const MollifierSpec& moll,
                                const QuadratureGrid& grid) {
  check_inputs(weight, n, 0);
  if (weight.is_zero()) return 0.0;
  return grid_integral(grid, [&](const Vec2& x) -> cplx {
    const std::vector<Vec2> back = backward_orbit(map, x, n + 1);
    Vec2 y = x;
    std::vector<Vec2> fwd{x};
    for (int i = 0; i < n; ++i) fwd.push_back(y = reduce_mod1(map.lift(y)));
    const Vec2 d = torus_displacement(back[n + 1], fwd[n]);
    if (!moll.in_support(d)) return 0.0;
    cplx w = 1.0;
    for (int i = 0; i < n; ++i) w *= tensor_factor(map, weight, back[i + 1], fwd[i]);
    w *= weight(back[n + 1]) / std::abs(map.jacobian_det(back[n + 1]));
    return w * moll(d);
  });
}

cplx mollified_value(MollifiedFunctional kind, const TorusMap& map, const WeightSpec& weight, int n,
                     const MollifierSpec& moll, const QuadratureGrid& grid) {
  switch (kind) {
    case MollifiedFunctional::Trace:
      return mollified_trace(map, weight, n, moll, grid);
    case MollifiedFunctional::TensorEven:
      return mollified_tensor_trace_even(map, weight, n, moll, grid);
    case MollifiedFunctional::TensorOdd:
      return mollified_tensor_trace_odd(map, weight, n, moll, grid);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown mollified functional");
}

int grid_for_epsilon(double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  int m = 8;
  while (m * epsilon < 51.2 - 1e-9) m *= 2;
  return m;
}

Extrapolation epsilon_extrapolate(const std::vector<std::pair<double, cplx>>& values) {
  if (values.size() < 3) throw Error(ErrorKind::InvalidArgument, "extrapolation needs at least 3 ladder values");
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double ratio = values[i - 1].first / values[i].first;
    if (!(std::abs(ratio - 2.0) <= 1e-9)) throw Error(ErrorKind::InvalidArgument, "eps ladder must halve");
  }
  std::vector<double> diffs;
  for (std::size_t i = 1; i < values.size(); ++i) diffs.push_back(std::abs(values[i].second - values[i - 1].second));

  const cplx last = values.back().second;
  const double floor = 1e-13 * std::max(1.0, std::abs(last));
  for (std::size_t i = 1; i < diffs.size(); ++i) {
    if (diffs[i] > floor && diffs[i] > diffs[i - 1]) {
      std::ostringstream os;
      os << "ladder differences grow: |d" << i << "|=" << diffs[i - 1] << " -> |d" << i + 1 << "|=" << diffs[i];
      throw Error(ErrorKind::NonMonotone, os.str());
    }
  }

  Extrapolation out;
  const double d1 = diffs[diffs.size() - 2];
  const double d2 = diffs.back();
  if (d2 <= floor) {
    out.value = last;
    out.error = std::max(d1, d2);
    return out;
  }
  const double p = std::clamp(std::log2(d1 / d2), 1.0, 3.0);
  const cplx step = values.back().second - values[values.size() - 2].second;
  const double denom = std::exp2(p) - 1.0;
  out.value = last + step / denom;
  out.error = d2 / denom;
  out.exponent = p;
  return out;
}

std::vector<LadderRow> mollifier_ladder(MollifiedFunctional kind, const TorusMap& map, const WeightSpec& weight,
                                        int n, const std::vector<double>& epsilons, cplx reference,
                                        MollifierShape shape) {
  std::vector<LadderRow> rows;
  for (double eps : epsilons) {
    const QuadratureGrid grid{grid_for_epsilon(eps)};
    const MollifierSpec moll = MollifierSpec::for_grid(eps, grid, shape);
    LadderRow row;
    row.epsilon = eps;
    row.grid_m = grid.m;
    row.value = mollified_value(kind, map, weight, n, moll, grid);
    row.reference = reference;
    row.abs_error = std::abs(row.value - reference);
    rows.push_back(row);
  }
  return rows;
}

bool ladder_errors_decrease(const std::vector<LadderRow>& rows, double allowance, double floor) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = rows[i - 1].abs_error, cur = rows[i].abs_error;
    if (cur <= floor) continue;
    if (cur > allowance * prev) return false;
  }
  return true;
}

std::string ladder_csv(const std::vector<LadderRow>& rows) {
  CsvTable csv{{"epsilon", "grid_m", "re_value", "im_value", "reference_re", "reference_im", "abs_error"}, {}};
  for (const auto& r : rows)
    csv.rows.push_back({format_double(r.epsilon), std::to_string(r.grid_m), format_double(r.value.real()),
                        format_double(r.value.imag()), format_double(r.reference.real()),
                        format_double(r.reference.imag()), format_double(r.abs_error)});
  return to_csv(csv);
}

}  // namespace zetalab
