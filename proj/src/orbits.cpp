#include "zetalab/orbits.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "zetalab/error.hpp"
#include "zetalab/serialization.hpp"

namespace zetalab {

namespace {

std::int64_t floor_div(__int128 a, __int128 b) {
  __int128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return static_cast<std::int64_t>(q);
}

std::int64_t ceil_div(__int128 a, __int128 b) { return -floor_div(-a, b); }

IMat2 shifted_power(const IMat2& a, int n) { return checked_power(a, n) - IMat2::Identity(); }

MapSpec linear_spec(const IMat2& a) {
  MapSpec spec;
  spec.matrix = a;
  return spec;
}

struct NewtonOutcome {
  bool converged = false;
  Vec2 x{0.0, 0.0};
  double residual = INFINITY;
  Mat2 derivative = Mat2::Identity();
};

double lifted_residual(const TorusMap& map, const Vec2& x, const IVec2& k, int n, Mat2* derivative) {
  const LiftedIterate it = iterate_lift(map, x, n, derivative != nullptr);
  if (derivative) *derivative = it.derivative;
  const Vec2 fx(std::floor(x[0]), std::floor(x[1]));
  const IVec2 shift = it.carry - fx.cast<std::int64_t>() - k;
  const Vec2 f = (it.point - (x - fx)) + shift.cast<double>();
  return f.cwiseAbs().maxCoeff();
}

Vec2 lifted_defect(const TorusMap& map, const Vec2& x, const IVec2& k, int n, Mat2& derivative) {
  const LiftedIterate it = iterate_lift(map, x, n, true);
  derivative = it.derivative;
  const Vec2 fx(std::floor(x[0]), std::floor(x[1]));
  const IVec2 shift = it.carry - fx.cast<std::int64_t>() - k;
  return (it.point - (x - fx)) + shift.cast<double>();
}

NewtonOutcome newton_periodic(const TorusMap& map, int n, Vec2 x, const IVec2& k, double tol, int max_iterations) {
  NewtonOutcome out;
  for (int it = 0; it <= max_iterations; ++it) {
    Mat2 d;
    const Vec2 f = lifted_defect(map, x, k, n, d);
    const double res = f.cwiseAbs().maxCoeff();
    out.x = x;
    out.residual = res;
    out.derivative = d;
    if (res <= residual_tolerance(tol, d)) {
      out.converged = true;
      return out;
    }
    if (it == max_iterations) break;
    const Mat2 jac = d - Mat2::Identity();
    if (std::abs(jac.determinant()) < 1e-14) break;
    const Vec2 step = jac.inverse() * f;
    // damp on overshoot
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 12; ++h, t *= 0.5) {
      const Vec2 trial = x - t * step;
      if (lifted_residual(map, trial, k, n, nullptr) < res) {
        x = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return out;
}

MapSpec with_epsilon(const MapSpec& spec, double eps) {
  MapSpec s = spec;
  s.epsilon = eps;
  return s;
}

// Fixed-point index sign(det(DT^n - Id)): constant along a branch, flips at a fold.
int fixed_point_index(const Mat2& monodromy) {
  const double d = (monodromy - Mat2::Identity()).determinant();
  return d > 0.0 ? 1 : d < 0.0 ? -1 : 0;
}

// Saddle like A^n: real eigenvalues with |l-| < 1 < |l+|.
bool is_saddle(const Mat2& m) {
  const double tr = m.trace(), dt = m.determinant();
  const double disc = tr * tr - 4.0 * dt;
  if (disc <= 0.0) return false;
  const double root = std::sqrt(disc);
  const double a = std::abs(0.5 * (tr + root)), b = std::abs(0.5 * (tr - root));
  return std::min(a, b) < 1.0 && std::max(a, b) > 1.0;
}

bool on_branch(const NewtonOutcome& sol, int index) {
  return sol.converged && fixed_point_index(sol.derivative) == index && is_saddle(sol.derivative);
}

// Homotopy from 0 to eps: secant predictor, step halved on failure or when
// the solution leaves the saddle branch.
NewtonOutcome continue_in_epsilon(const TorusMap& map, int n, const PeriodicPoint& seed, int index,
                                  const ContinuationOptions& options) {
  const double target = map.epsilon();
  const double min_step = target / 1024.0;
  double eps = 0.0, step = target / 4.0;
  Vec2 x = seed.x, prev_x = seed.x;
  double prev_eps = 0.0;
  NewtonOutcome sol;
  while (eps < target) {
    const double next = std::min(target, eps + step);
    Vec2 guess = x;
    if (eps > prev_eps) guess += (x - prev_x) * ((next - eps) / (eps - prev_eps));
    sol = newton_periodic(TorusMap(with_epsilon(map.spec(), next)), n, guess, seed.k, options.tol,
                          options.max_iterations);
    if (!on_branch(sol, index)) {
      step *= 0.5;
      if (step < min_step) {
        sol.converged = false;
        return sol;
      }
      continue;
    }
    prev_x = x;
    prev_eps = eps;
    x = sol.x;
    eps = next;
    step *= 1.5;
  }
  return sol;
}

}  // namespace

std::int64_t expected_fixed_point_count(const IMat2& a, int n) {
  const std::int64_t d = det(shifted_power(a, n));
  return d < 0 ? -d : d;
}

double residual_tolerance(double tol, const Mat2& monodromy) {
  const double scale = monodromy.cwiseAbs().rowwise().sum().maxCoeff();
  return std::max(tol, 8.0 * DBL_EPSILON * scale);
}

double periodic_residual(const TorusMap& map, const Vec2& x, const IVec2& k, int n) {
  return lifted_residual(map, x, k, n, nullptr);
}

OrbitSet enumerate_linear(const TorusMap& map, int n) {
  if (!map.is_linear()) throw Error(ErrorKind::InvalidArgument, "enumerate_linear needs epsilon = 0");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "period must be >= 1");
  const IMat2& a = map.matrix();
  const IMat2 m = shifted_power(a, n);
  const std::int64_t d = det(m);
  if (d == 0) {
    std::ostringstream os;
    os << "det(A^" << n << " - Id) = 0; the linear part is not hyperbolic";
    throw Error(ErrorKind::Degenerate, os.str());
  }
  const std::int64_t sign = d > 0 ? 1 : -1;
  const std::int64_t count = d * sign;
  IMat2 adj;
  adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);

  std::int64_t lo[2], hi[2];
  for (int i = 0; i < 2; ++i) {
    lo[i] = std::min<std::int64_t>(0, m(i, 0)) + std::min<std::int64_t>(0, m(i, 1));
    hi[i] = std::max<std::int64_t>(0, m(i, 0)) + std::max<std::int64_t>(0, m(i, 1));
  }

  // divisors of n with their matrix powers, for exact primitive periods
  std::vector<std::pair<int, IMat2>> divisors;
  for (int q = 1; q < n; ++q)
    if (n % q == 0) divisors.emplace_back(q, checked_power(a, q));

  OrbitSet set;
  set.map_digest = map_digest(map.spec());
  set.n = n;
  set.expected_count = count;
  set.points.reserve(static_cast<std::size_t>(count));
  const Mat2 monodromy = to_real(checked_power(a, n));

  for (std::int64_t k0 = lo[0]; k0 <= hi[0]; ++k0) {
    std::int64_t k1_lo = lo[1], k1_hi = hi[1];
    for (int i = 0; i < 2 && k1_lo <= k1_hi; ++i) {
      const __int128 coef = static_cast<__int128>(sign) * adj(i, 1);
      const __int128 offset = static_cast<__int128>(sign) * adj(i, 0) * k0;
      // 0 <= coef * k1 + offset <= count - 1
      if (coef == 0) {
        if (offset < 0 || offset > count - 1) k1_hi = k1_lo - 1;
      } else if (coef > 0) {
        k1_lo = std::max(k1_lo, ceil_div(-offset, coef));
        k1_hi = std::min(k1_hi, floor_div(count - 1 - offset, coef));
      } else {
        k1_lo = std::max(k1_lo, ceil_div(count - 1 - offset, coef));
        k1_hi = std::min(k1_hi, floor_div(-offset, coef));
      }
    }
    for (std::int64_t k1 = k1_lo; k1 <= k1_hi; ++k1) {
      RationalPoint rp;
      rp.den = count;
      for (int i = 0; i < 2; ++i) {
        const __int128 v = static_cast<__int128>(sign) * (static_cast<__int128>(adj(i, 0)) * k0 +
                                                          static_cast<__int128>(adj(i, 1)) * k1);
        rp.num[i] = static_cast<std::int64_t>(v);
      }
      PeriodicPoint p;
      p.n = n;
      p.k = IVec2(k0, k1);
      p.x = Vec2(double(rp.num[0]) / double(count), double(rp.num[1]) / double(count));
      p.monodromy = monodromy;
      p.primitive_period = n;
      for (const auto& [q, aq] : divisors) {
        bool fixed = true;
        for (int i = 0; i < 2 && fixed; ++i) {
          const __int128 v = static_cast<__int128>(aq(i, 0)) * rp.num[0] +
                             static_cast<__int128>(aq(i, 1)) * rp.num[1] - rp.num[i];
          fixed = v % count == 0;
        }
        if (fixed) {
          p.primitive_period = q;
          break;
        }
      }
      p.residual = periodic_residual(map, p.x, p.k, n);
      set.points.push_back(p);
    }
  }
  if (static_cast<std::int64_t>(set.points.size()) != count) {
    std::ostringstream os;
    os << "lattice scan found " << set.points.size() << " points, expected " << count;
    throw Error(ErrorKind::Degenerate, os.str());
  }
  return set;
}

OrbitSet enumerate_linear(const IMat2& a, int n) { return enumerate_linear(TorusMap(linear_spec(a)), n); }

OrbitSet continue_orbits(const TorusMap& map, int n, const OrbitSet& seeds, const ContinuationOptions& options) {
  if (seeds.n != n) throw Error(ErrorKind::InvalidArgument, "seed period does not match");
  OrbitSet out;
  out.map_digest = map_digest(map.spec());
  out.n = n;
  out.expected_count = seeds.expected_count;
  out.points.resize(seeds.points.size());

  const bool homotopy = options.epsilon_ladder && !map.is_linear();
  const int index = det(shifted_power(map.matrix(), n)) > 0 ? 1 : -1;
  const IMat2 shift = shifted_power(map.matrix(), n);
  std::vector<char> failed(seeds.points.size(), 0);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < seeds.points.size(); ++i) {
    const PeriodicPoint& seed = seeds.points[i];
    NewtonOutcome sol = newton_periodic(map, n, seed.x, seed.k, options.tol, options.max_iterations);
    if (!on_branch(sol, index)) sol.converged = false;
    if (!sol.converged && homotopy) sol = continue_in_epsilon(map, n, seed, index, options);
    if (!sol.converged) {
      failed[i] = 1;
      continue;
    }
    if (sol.x == seed.x) {
      out.points[i] = seed;
      if (!map.is_linear()) {
        out.points[i].monodromy = iterate_lift(map, seed.x, n).derivative;
        out.points[i].primitive_period = primitive_period(map, seed.x, n, options.tol);
      }
      continue;
    }
    Vec2 fx(std::floor(sol.x[0]), std::floor(sol.x[1]));
    Vec2 xr = sol.x - fx;
    for (int c = 0; c < 2; ++c)
      if (xr[c] >= 1.0) {
        xr[c] = 0.0;
        fx[c] += 1.0;
      }
    PeriodicPoint p;
    p.n = n;
    p.k = seed.k - shift * fx.cast<std::int64_t>();
    p.x = xr;
    Mat2 d;
    p.residual = lifted_residual(map, xr, p.k, n, &d);
    p.monodromy = d;
    p.primitive_period = primitive_period(map, xr, n, options.tol);
    out.points[i] = p;
  }

  for (std::size_t i = 0; i < failed.size(); ++i) {
    if (failed[i]) {
      const auto& k = seeds.points[i].k;
      std::ostringstream os;
      os << "k=(" << k[0] << "," << k[1] << "), n=" << n << ", eps=" << map.epsilon()
         << ": Newton did not reach a hyperbolic solution within the residual tolerance";
      throw Error(ErrorKind::ContinuationFailure, os.str());
    }
  }

  double threshold = options.tol;
  std::vector<Vec2> xs;
  xs.reserve(out.points.size());
  for (const auto& p : out.points) {
    threshold = std::max(threshold, residual_tolerance(options.tol, p.monodromy));
    xs.push_back(p.x);
  }
  const auto collisions = find_collisions(xs, 10.0 * threshold);
  if (!collisions.empty()) {
    const auto& [i, j] = collisions.front();
    std::ostringstream os;
    os << collisions.size() << " coincident pairs after continuation, first between k=(" << seeds.points[i].k[0]
       << "," << seeds.points[i].k[1] << ") and k=(" << seeds.points[j].k[0] << "," << seeds.points[j].k[1] << ")";
    throw Error(ErrorKind::CollisionDetected, os.str());
  }
  return out;
}

OrbitSet periodic_points(const TorusMap& map, int n, const ContinuationOptions& options) {
  if (map.is_linear()) return enumerate_linear(map, n);
  const OrbitSet seeds = enumerate_linear(map.matrix(), n);
  return continue_orbits(map, n, seeds, options);
}

int primitive_period(const TorusMap& map, const Vec2& x, int n, double tol) {
  for (int q = 1; q < n; ++q) {
    if (n % q) continue;
    const LiftedIterate it = iterate_lift(map, x, q, true);
    if (torus_distance(it.point, x) <= residual_tolerance(tol, it.derivative)) return q;
  }
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> find_collisions(const std::vector<Vec2>& points, double threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (points.size() < 2) return out;
  const double by_threshold = threshold > 0.0 ? std::floor(1.0 / threshold) : 4096.0;
  const auto g = static_cast<std::int64_t>(
      std::max(1.0, std::min({by_threshold, 4096.0, std::ceil(std::sqrt(double(points.size())))})));
  auto cell_of = [&](const Vec2& p) {
    const Vec2 r = reduce_mod1(p);
    const std::int64_t cx = std::min<std::int64_t>(g - 1, static_cast<std::int64_t>(r[0] * g));
    const std::int64_t cy = std::min<std::int64_t>(g - 1, static_cast<std::int64_t>(r[1] * g));
    return std::pair{cx, cy};
  };
  std::vector<std::pair<std::int64_t, std::size_t>> keyed(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [cx, cy] = cell_of(points[i]);
    keyed[i] = {cx * g + cy, i};
  }
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [cx, cy] = cell_of(points[i]);
    std::vector<std::int64_t> cells;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) cells.push_back(((cx + dx + g) % g) * g + ((cy + dy + g) % g));
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (const auto cell : cells) {
      auto lo = std::lower_bound(keyed.begin(), keyed.end(), std::pair<std::int64_t, std::size_t>{cell, 0});
      for (auto it = lo; it != keyed.end() && it->first == cell; ++it) {
        const std::size_t j = it->second;
        if (j <= i) continue;
        if (torus_distance(points[i], points[j]) <= threshold) out.emplace_back(i, j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ValidationReport validate_orbit_set(const OrbitSet& set, const TorusMap& map, double tol) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.failures.push_back(std::move(msg)); };

  const std::int64_t expected = expected_fixed_point_count(map.matrix(), set.n);
  if (set.expected_count != expected) {
    std::ostringstream os;
    os << "expected_count " << set.expected_count << " differs from |det(A^n - Id)| = " << expected;
    fail(os.str());
  }
  if (static_cast<std::int64_t>(set.points.size()) != expected) {
    std::ostringstream os;
    os << "point count " << set.points.size() << " differs from |det(A^n - Id)| = " << expected;
    fail(os.str());
  }
  if (!set.map_digest.empty() && set.map_digest != map_digest(map.spec()))
    fail("map digest " + set.map_digest + " does not match the map");

  double threshold = tol;
  std::vector<Vec2> xs;
  xs.reserve(set.points.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const PeriodicPoint& p = set.points[i];
    Mat2 d;
    const double res = lifted_residual(map, p.x, p.k, set.n, &d);
    const double budget = residual_tolerance(tol, d);
    threshold = std::max(threshold, budget);
    if (!(res <= budget)) {
      ++report.residual_failures;
      std::ostringstream os;
      os << "point " << i << " k=(" << p.k[0] << "," << p.k[1] << "): residual " << res << " > " << budget;
      fail(os.str());
    }
    if (!(std::abs((Mat2::Identity() - p.monodromy).determinant()) > 1e-14)) {
      std::ostringstream os;
      os << "point " << i << ": non-hyperbolic monodromy";
      fail(os.str());
    }
    if (p.primitive_period < 1 || set.n % p.primitive_period != 0 ||
        primitive_period(map, p.x, set.n, tol) != p.primitive_period) {
      ++report.period_failures;
      std::ostringstream os;
      os << "point " << i << ": primitive period " << p.primitive_period << " inconsistent";
      fail(os.str());
    }
    xs.push_back(p.x);
  }
  const auto collisions = find_collisions(xs, 10.0 * threshold);
  report.collision_failures = collisions.size();
  for (const auto& [i, j] : collisions) {
    std::ostringstream os;
    os << "points " << i << " and " << j << " closer than " << 10.0 * threshold;
    fail(os.str());
  }
  return report;
}

// ---------------------------------------------------------------------------

void orbit_cache_store(const OrbitSet& set, const std::filesystem::path& path) {
  std::string text;
  json header{{"schema", "orbitset-v1"}, {"map_digest", set.map_digest}, {"n", set.n},
              {"expected_count", set.expected_count}};
  text += header.dump();
  text += '\n';
  for (const auto& p : set.points) {
    json rec{{"k", {p.k[0], p.k[1]}},
             {"x", {p.x[0], p.x[1]}},
             {"residual", p.residual},
             {"monodromy", {{p.monodromy(0, 0), p.monodromy(0, 1)}, {p.monodromy(1, 0), p.monodromy(1, 1)}}},
             {"primitive_period", p.primitive_period}};
    text += rec.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

OrbitSet orbit_cache_load(const std::filesystem::path& path, const std::string& digest, int n) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifacts, "no orbit cache at " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error(ErrorKind::SchemaMismatch, "empty orbit cache " + path.string());
  OrbitSet set;
  try {
    const json header = json::parse(line);
    if (header.value("schema", "") != "orbitset-v1")
      throw Error(ErrorKind::SchemaMismatch, "unknown orbit cache schema in " + path.string());
    set.map_digest = header.at("map_digest").get<std::string>();
    set.n = header.at("n").get<int>();
    set.expected_count = header.at("expected_count").get<std::int64_t>();
    if (set.map_digest != digest)
      throw Error(ErrorKind::DigestMismatch, "cache " + path.string() + " built for map " + set.map_digest +
                                                 ", requested " + digest);
    if (set.n != n) throw Error(ErrorKind::SchemaMismatch, "cache period does not match the request");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      PeriodicPoint p;
      p.n = set.n;
      p.k = IVec2(rec.at("k")[0].get<std::int64_t>(), rec.at("k")[1].get<std::int64_t>());
      p.x = Vec2(rec.at("x")[0].get<double>(), rec.at("x")[1].get<double>());
      p.residual = rec.at("residual").get<double>();
      const auto& m = rec.at("monodromy");
      p.monodromy << m[0][0].get<double>(), m[0][1].get<double>(), m[1][0].get<double>(), m[1][1].get<double>();
      p.primitive_period = rec.at("primitive_period").get<int>();
      set.points.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed orbit cache: ") + e.what());
  }
  if (static_cast<std::int64_t>(set.points.size()) != set.expected_count)
    throw Error(ErrorKind::SchemaMismatch, "orbit cache truncated: " + path.string());
  return set;
}

}  // namespace zetalab
