#include "zetalab/traces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "zetalab/error.hpp"
#include "zetalab/numeric.hpp"

namespace zetalab {

cplx weight_along_orbit(const TorusMap& map, const WeightSpec& weight, const Vec2& x, int n) {
  if (weight.kind() == WeightKind::Constant) {
    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= weight.constant_value();
    return prod;
  }
  cplx prod = weight(x);
  Vec2 y = x;
  for (int i = 1; i < n; ++i) {
    y = reduce_mod1(map.lift(y));
    prod *= weight(y);
  }
  return prod;
}

cplx trace_from_orbits(const OrbitSet& set, const TorusMap& map, const WeightSpec& weight) {
  const std::size_t count = set.points.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ka = set.points[a].k;
    const auto& kb = set.points[b].k;
    return std::pair(ka[0], ka[1]) < std::pair(kb[0], kb[1]);
  });

  std::vector<cplx> terms(count);
  std::vector<char> singular(count, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) {
    const PeriodicPoint& p = set.points[order[i]];
    const double denom = std::abs((Mat2::Identity() - p.monodromy).determinant());
    if (!(denom >= 1e-14)) {
      singular[i] = 1;
      continue;
    }
    terms[i] = weight_along_orbit(map, weight, p.x, set.n) / denom;
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (singular[i]) {
      const auto& p = set.points[order[i]];
      std::ostringstream os;
      os << "|det(Id - DT^" << set.n << ")| below 1e-14 at x=(" << p.x[0] << "," << p.x[1] << ")";
      throw Error(ErrorKind::SingularMonodromy, os.str());
    }
  }
  CompensatedSum<cplx> sum;
  for (const auto& t : terms) sum.add(t);
  return sum.value();
}

TraceTable trace_table(const TorusMap& map, const WeightSpec& weight, int n_max, const OrbitSource& orbits) {
  if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");
  TraceTable table;
  table.map_digest = map_digest(map.spec());
  table.weight_digest = weight_digest(weight);
  table.entries.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    if (weight.is_zero()) {
      table.entries.emplace_back(0.0);
      continue;
    }
    table.entries.push_back(trace_from_orbits(orbits(n), map, weight));
  }
  return table;
}

TraceTable trace_table(const TorusMap& map, const WeightSpec& weight, int n_max) {
  return trace_table(map, weight, n_max, [&](int n) { return periodic_points(map, n); });
}

namespace {

/// Grid sum of integrand(x) / m^2, compensated per row and across rows.
template <class F>
cplx grid_mean(int m, F&& integrand) {
  std::vector<cplx> rows(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    CompensatedSum<cplx> row;
    for (int j = 0; j < m; ++j) row.add(integrand(Vec2(double(i) / m, double(j) / m)));
    rows[static_cast<std::size_t>(i)] = row.value();
  }
  CompensatedSum<cplx> total;
  for (const auto& r : rows) total.add(r);
  return total.value() / (double(m) * double(m));
}

/// (T_g^{*n} f)(x) = prod_{i=1..n} g(T^{-i}x)/|det DT(T^{-i}x)| * f(T^{-n}x).
cplx adjoint_power(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& f, const Vec2& x, int n) {
  cplx factor = 1.0;
  TorusPoint y(x);
  for (int i = 0; i < n; ++i) {
    y = map.inverse(y);
    factor *= weight(y.coords()) / std::abs(map.jacobian_det(y.coords()));
  }
  return factor * f(y.coords());
}

/// (T_g^n h)(x) = g_n(x) h(T^n x).
cplx forward_power(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& h, const Vec2& x, int n) {
  cplx factor = 1.0;
  Vec2 y = x;
  for (int i = 0; i < n; ++i) {
    factor *= weight(y);
    y = reduce_mod1(map.lift(y));
  }
  return factor * h(y);
}

void check_grid(int m) {
  if (m < 4) throw Error(ErrorKind::InvalidArgument, "quadrature grid too small");
}

}  // namespace

IdentityResidual duality_check(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& h,
                               const TrigPolynomial& f, int grid_m) {
  check_grid(grid_m);
  IdentityResidual r;
  // <conj(T_g h), f> = integral (T_g h) f
  r.lhs = grid_mean(grid_m, [&](const Vec2& x) { return forward_power(map, weight, h, x, 1) * f(x); });
  // <conj(h), T_g^* f> = integral h (T_g^* f)
  r.rhs = grid_mean(grid_m, [&](const Vec2& x) { return h(x) * adjoint_power(map, weight, f, x, 1); });
  r.abs_err = std::abs(r.lhs - r.rhs);
  return r;
}

IdentityResidual powers_identity_check(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& h,
                                       const TrigPolynomial& f, int n, int grid_m) {
  check_grid(grid_m);
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "power must be >= 1");
  IdentityResidual r;
  r.lhs = grid_mean(grid_m, [&](const Vec2& x) {
    return forward_power(map, weight, h, x, n) * adjoint_power(map, weight, f, x, n);
  });
  r.rhs = grid_mean(grid_m, [&](const Vec2& x) { return forward_power(map, weight, h, x, 2 * n) * f(x); });
  r.abs_err = std::abs(r.lhs - r.rhs);
  return r;
}

std::string trace_table_csv(const TraceTable& table) {
  CsvTable csv{{"n", "re_tr", "im_tr"}, {}};
  for (int n = 1; n <= table.n_max(); ++n)
    csv.rows.push_back({std::to_string(n), format_double(table.at(n).real()), format_double(table.at(n).imag())});
  return to_csv(csv);
}

json trace_table_sidecar(const TraceTable& table, const json& tolerances) {
  return json{{"map_digest", table.map_digest},
              {"weight_digest", table.weight_digest},
              {"n_max", table.n_max()},
              {"tolerances", tolerances}};
}

TraceTable trace_table_from_csv(const std::string& text, const json& sidecar) {
  const CsvTable csv = parse_csv(text);
  if (csv.header != std::vector<std::string>{"n", "re_tr", "im_tr"})
    throw Error(ErrorKind::SchemaMismatch, "trace CSV header must be n,re_tr,im_tr");
  TraceTable t;
  t.map_digest = sidecar.value("map_digest", "");
  t.weight_digest = sidecar.value("weight_digest", "");
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    if (r.size() != 3 || std::stoi(r[0]) != static_cast<int>(i) + 1)
      throw Error(ErrorKind::SchemaMismatch, "trace CSV rows must be n = 1..n_max without gaps");
    t.entries.emplace_back(std::stod(r[1]), std::stod(r[2]));
  }
  return t;
}

}  // namespace zetalab
