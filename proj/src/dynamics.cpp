#include "zetalab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zetalab/error.hpp"

namespace zetalab {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorKind::InvalidArgument, "integer overflow in matrix product");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorKind::InvalidArgument, "integer overflow in matrix sum");
  return out;
}

std::int64_t positive_mod(__int128 a, std::int64_t m) {
  __int128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

double smallest_singular_value(const Mat2& m) {
  const double d = std::abs(m.determinant());
  const double s = m.squaredNorm();
  const double big = std::sqrt(0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * d * d))));
  return big > 0.0 ? d / big : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

Vec2 reduce_mod1(const Vec2& x) {
  Vec2 r;
  for (int i = 0; i < 2; ++i) {
    double v = x[i] - std::floor(x[i]);
    if (v >= 1.0) v = 0.0;
    r[i] = v;
  }
  return r;
}

Vec2 torus_displacement(const Vec2& from, const Vec2& to) {
  Vec2 d = to - from;
  for (int i = 0; i < 2; ++i) d[i] -= std::floor(d[i] + 0.5);
  return d;
}

double torus_distance(const Vec2& a, const Vec2& b) { return torus_displacement(a, b).norm(); }

// ---------------------------------------------------------------------------

std::int64_t det(const IMat2& a) {
  return checked_add(checked_mul(a(0, 0), a(1, 1)), -checked_mul(a(0, 1), a(1, 0)));
}

std::int64_t trace(const IMat2& a) { return checked_add(a(0, 0), a(1, 1)); }

IMat2 checked_multiply(const IMat2& a, const IMat2& b) {
  IMat2 c;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      c(i, j) = checked_add(checked_mul(a(i, 0), b(0, j)), checked_mul(a(i, 1), b(1, j)));
  return c;
}

IMat2 checked_power(const IMat2& a, int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative matrix power");
  IMat2 result = IMat2::Identity();
  for (int i = 0; i < n; ++i) result = checked_multiply(result, a);
  return result;
}

IMat2 unimodular_inverse(const IMat2& a) {
  const std::int64_t d = det(a);
  if (d != 1 && d != -1) throw Error(ErrorKind::InvalidArgument, "matrix is not unimodular");
  IMat2 inv;
  inv << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
  return inv * d;
}

// ---------------------------------------------------------------------------

MapSpec MapSpec::cat(double epsilon) {
  MapSpec spec;
  spec.matrix << 2, 1, 1, 1;
  spec.epsilon = epsilon;
  spec.perturbation.push_back(PerturbationTerm{0, 1.0, {0, 1}, Phase::Sin});
  return spec;
}

TorusMap::TorusMap(MapSpec spec) : spec_(std::move(spec)) {
  const std::int64_t d = det(spec_.matrix);
  if (d != 1 && d != -1) {
    std::ostringstream os;
    os << "matrix determinant is " << d << ", a torus diffeomorphism needs |det A| = 1";
    throw Error(ErrorKind::Config, os.str());
  }
  if (!std::isfinite(spec_.epsilon) || spec_.epsilon < 0.0)
    throw Error(ErrorKind::Config, "epsilon must be finite and non-negative");
  if (!(spec_.smoothness_r > 0.0)) throw Error(ErrorKind::Config, "smoothness_r must be positive");
  double col_bound[2] = {0.0, 0.0};
  for (const auto& t : spec_.perturbation) {
    if (t.component < 0 || t.component > 1)
      throw Error(ErrorKind::Config, "perturbation component must be 0 or 1 (only d = 2 is supported)");
    if (!std::isfinite(t.amplitude)) throw Error(ErrorKind::Config, "perturbation amplitude must be finite");
    col_bound[t.component] +=
        std::abs(t.amplitude) * kTwoPi * std::hypot(double(t.frequency[0]), double(t.frequency[1]));
  }
  a_ = to_real(spec_.matrix);
  a_inv_int_ = unimodular_inverse(spec_.matrix);
  a_inv_ = to_real(a_inv_int_);
  linear_ = spec_.epsilon == 0.0 || spec_.perturbation.empty();
  // Frobenius bound on |Dv|_2 from the term-wise gradient bounds.
  const double dv_bound = std::hypot(col_bound[0], col_bound[1]);
  const double a_inv_norm = Eigen::JacobiSVD<Mat2>(a_inv_).singularValues()(0);
  contraction_ = linear_ ? 0.0 : spec_.epsilon * dv_bound * a_inv_norm;
}

Vec2 TorusMap::field(const Vec2& x) const {
  Vec2 v(0.0, 0.0);
  for (const auto& t : spec_.perturbation) {
    const double phase = kTwoPi * (t.frequency[0] * x[0] + t.frequency[1] * x[1]);
    v[t.component] += t.amplitude * (t.phase == Phase::Sin ? std::sin(phase) : std::cos(phase));
  }
  return v;
}

Mat2 TorusMap::field_jacobian(const Vec2& x) const {
  Mat2 dv = Mat2::Zero();
  for (const auto& t : spec_.perturbation) {
    const double phase = kTwoPi * (t.frequency[0] * x[0] + t.frequency[1] * x[1]);
    const double deriv = t.phase == Phase::Sin ? std::cos(phase) : -std::sin(phase);
    const double s = t.amplitude * kTwoPi * deriv;
    dv(t.component, 0) += s * t.frequency[0];
    dv(t.component, 1) += s * t.frequency[1];
  }
  return dv;
}

Vec2 TorusMap::lift(const Vec2& x) const {
  if (linear_) return a_ * x;
  return a_ * x + spec_.epsilon * field(x);
}

TorusPoint TorusMap::eval(const TorusPoint& x) const { return TorusPoint(lift(x.coords())); }

RationalPoint TorusMap::eval(const RationalPoint& x) const {
  if (!linear_) throw Error(ErrorKind::InvalidArgument, "rational evaluation requires epsilon = 0");
  RationalPoint y;
  y.den = x.den;
  const auto& a = spec_.matrix;
  for (int i = 0; i < 2; ++i) {
    const __int128 v = static_cast<__int128>(a(i, 0)) * x.num[0] + static_cast<__int128>(a(i, 1)) * x.num[1];
    y.num[i] = positive_mod(v, x.den);
  }
  return y;
}

Mat2 TorusMap::jacobian(const Vec2& x) const {
  if (linear_) return a_;
  return a_ + spec_.epsilon * field_jacobian(x);
}

TorusPoint TorusMap::inverse(const TorusPoint& y, double tol) const {
  const Vec2& target = y.coords();
  Vec2 x = a_inv_ * target;
  if (linear_) return TorusPoint(x);
  if (!(contraction_ < 1.0)) {
    std::ostringstream os;
    os << "inverse iteration outside the contraction regime (eps*|Dv|*|A^-1| = " << contraction_ << ")";
    throw Error(ErrorKind::NonConvergence, os.str());
  }
  constexpr int kMaxIterations = 50;
  for (int it = 0; it < kMaxIterations; ++it) {
    const Vec2 r = lift(x) - target;
    if (r.cwiseAbs().maxCoeff() <= 0.25 * tol) break;
    x -= jacobian(x).inverse() * r;
  }
  TorusPoint result(x);
  const double residual = torus_distance(lift(result.coords()), target);
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "inverse map residual " << residual << " above tolerance " << tol;
    throw Error(ErrorKind::NonConvergence, os.str());
  }
  return result;
}

LiftedIterate iterate_lift(const TorusMap& map, const Vec2& x, int n, bool with_derivative) {
  LiftedIterate out;
  const Vec2 fl(std::floor(x[0]), std::floor(x[1]));
  out.carry = fl.cast<std::int64_t>();
  out.point = x - fl;
  for (int i = 0; i < 2; ++i)
    if (out.point[i] >= 1.0) {
      out.point[i] = 0.0;
      out.carry[i] += 1;
    }
  out.derivative = Mat2::Identity();
  const IMat2& a = map.matrix();
  for (int step = 0; step < n; ++step) {
    if (with_derivative) out.derivative = map.jacobian(out.point) * out.derivative;
    const Vec2 z = map.lift(out.point);
    Vec2 zf(std::floor(z[0]), std::floor(z[1]));
    Vec2 y = z - zf;
    for (int i = 0; i < 2; ++i)
      if (y[i] >= 1.0) {
        y[i] = 0.0;
        zf[i] += 1.0;
      }
    out.carry = a * out.carry + zf.cast<std::int64_t>();
    out.point = y;
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Constant: return "constant";
    case WeightKind::Trig: return "trig";
    case WeightKind::ExpTrig: return "exp-trig";
  }
  return "?";
}

WeightSpec WeightSpec::constant(cplx value) {
  WeightSpec w;
  w.kind_ = WeightKind::Constant;
  w.value_ = value;
  return w;
}

WeightSpec WeightSpec::trig(TrigPolynomial p) {
  WeightSpec w;
  w.kind_ = WeightKind::Trig;
  w.value_ = 0.0;
  w.poly_ = std::move(p);
  return w;
}

WeightSpec WeightSpec::exp_trig(TrigPolynomial p) {
  WeightSpec w;
  w.kind_ = WeightKind::ExpTrig;
  w.value_ = 0.0;
  w.poly_ = std::move(p);
  return w;
}

cplx WeightSpec::operator()(const Vec2& x) const {
  switch (kind_) {
    case WeightKind::Constant: return value_;
    case WeightKind::Trig: return poly_(x);
    case WeightKind::ExpTrig: return std::exp(poly_(x));
  }
  return 0.0;
}

double WeightSpec::sup_norm_bound() const {
  switch (kind_) {
    case WeightKind::Constant: return std::abs(value_);
    case WeightKind::Trig: return poly_.coefficient_sum();
    case WeightKind::ExpTrig: return std::exp(poly_.coefficient_sum());
  }
  return 0.0;
}

double WeightSpec::grid_sup_estimate(int m) const {
  if (kind_ == WeightKind::Constant) return std::abs(value_);
  double best = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) best = std::max(best, std::abs((*this)(Vec2(double(i) / m, double(j) / m))));
  return best;
}

bool WeightSpec::is_real_valued() const {
  if (kind_ == WeightKind::Constant) return value_.imag() == 0.0;
  return poly_.is_conjugate_symmetric(0.0);
}

bool WeightSpec::is_zero() const {
  if (kind_ == WeightKind::Constant) return value_ == cplx(0.0, 0.0);
  if (kind_ == WeightKind::Trig) return poly_.empty();
  return false;
}

WeightSpec WeightSpec::scaled(cplx c) const {
  switch (kind_) {
    case WeightKind::Constant: return constant(c * value_);
    case WeightKind::Trig: return trig(poly_.scaled(c));
    case WeightKind::ExpTrig:
      if (c == cplx(0.0, 0.0)) return constant(0.0);
      return exp_trig(poly_ + TrigPolynomial::constant(std::log(c)));
  }
  return *this;
}

cplx tensor_weight(const TorusMap& map, const WeightSpec& weight, const TorusPoint& x, const TorusPoint& y) {
  const TorusPoint pre = map.inverse(x);
  return weight(pre.coords()) * weight(y.coords()) / std::abs(map.jacobian_det(pre.coords()));
}

// ---------------------------------------------------------------------------

LinearSplitting linear_splitting(const IMat2& a) {
  const double tr = double(trace(a));
  const double d = double(det(a));
  const bool hyperbolic = d > 0 ? std::abs(tr) > 2.0 : tr != 0.0;
  if (!hyperbolic) {
    std::ostringstream os;
    os << "linear part has an eigenvalue on the unit circle (trace " << tr << ", det " << d << ")";
    throw Error(ErrorKind::NotHyperbolic, os.str());
  }
  const double disc = std::sqrt(tr * tr - 4.0 * d);
  const double mu_u = 0.5 * (tr + std::copysign(disc, tr));
  const double mu_s = d / mu_u;
  auto eigvec = [&](double mu) {
    Vec2 v;
    if (a(0, 1) != 0)
      v = Vec2(double(a(0, 1)), mu - double(a(0, 0)));
    else
      v = Vec2(mu - double(a(1, 1)), double(a(1, 0)));
    return Vec2(v.normalized());
  };
  return LinearSplitting{mu_u, mu_s, eigvec(mu_u), eigvec(mu_s)};
}

HyperbolicityEstimate estimate_hyperbolicity(const TorusMap& map, int grid_m, int iterates, double cone_aperture) {
  if (grid_m < 32) throw Error(ErrorKind::InvalidArgument, "hyperbolicity grid needs grid_m >= 32");
  if (iterates < 1) throw Error(ErrorKind::InvalidArgument, "hyperbolicity estimate needs iterates >= 1");
  const LinearSplitting split = linear_splitting(map.matrix());

  Mat2 basis;
  basis.col(0) = split.unstable_direction;
  basis.col(1) = split.stable_direction;
  const Mat2 to_eigen = basis.inverse();
  const double k = cone_aperture;

  HyperbolicityEstimate est;
  est.cone_aperture = k;
  est.margin = std::numeric_limits<double>::infinity();

  // slack of "|minor| < k |major|" relative to k |major|
  auto slack = [&](const Vec2& w, int major) {
    const Vec2 c = to_eigen * w;
    const double big = std::abs(c[major]);
    if (big == 0.0) return -1.0;
    return (k * big - std::abs(c[1 - major])) / (k * big);
  };
  const Vec2 unstable_edges[3] = {basis * Vec2(1.0, k), basis * Vec2(1.0, -k), basis * Vec2(1.0, 0.0)};
  const Vec2 stable_edges[3] = {basis * Vec2(k, 1.0), basis * Vec2(-k, 1.0), basis * Vec2(0.0, 1.0)};

  std::vector<double> contraction(static_cast<std::size_t>(grid_m) * grid_m * iterates);
  double lambda = 0.0;
  for (int i = 0; i < grid_m; ++i) {
    for (int j = 0; j < grid_m; ++j) {
      const Vec2 x(double(i) / grid_m, double(j) / grid_m);
      const Mat2 jac = map.jacobian(x);
      const Mat2 jac_inv = jac.inverse();
      for (const auto& e : unstable_edges) est.margin = std::min(est.margin, slack(jac * e, 0));
      for (const auto& e : stable_edges) est.margin = std::min(est.margin, slack(jac_inv * e, 1));

      Mat2 d = Mat2::Identity();
      Vec2 y = x;
      double* s = &contraction[(static_cast<std::size_t>(i) * grid_m + j) * iterates];
      for (int step = 0; step < iterates; ++step) {
        d = map.jacobian(y) * d;
        y = reduce_mod1(map.lift(y));
        s[step] = smallest_singular_value(d);
      }
      lambda = std::max(lambda, std::pow(s[iterates - 1], 1.0 / iterates));
    }
  }
  est.certified = est.margin > 0.0;

  if (map.is_linear()) {
    est.lambda = std::abs(split.stable_eigenvalue);
    est.C = 1.0;
  } else {
    est.lambda = lambda;
    double c = 1.0;
    for (std::size_t idx = 0; idx < contraction.size(); ++idx) {
      const int step = static_cast<int>(idx % iterates) + 1;
      c = std::max(c, contraction[idx] / std::pow(lambda, step));
    }
    est.C = c;
  }
  if (!(est.lambda < 1.0)) est.certified = false;
  return est;
}

}  // namespace zetalab
