#include "zetalab/determinant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "zetalab/error.hpp"
#include "zetalab/numeric.hpp"
#include "zetalab/serialization.hpp"

namespace zetalab {

cplx DeterminantSeries::operator()(cplx z) const {
  cplx acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * z + *it;
  return acc;
}

DeterminantSeries coefficients_from_traces(const std::vector<cplx>& traces, int N) {
  if (N < 0) throw Error(ErrorKind::InvalidArgument, "truncation order must be >= 0");
  if (N > static_cast<int>(traces.size())) {
    std::ostringstream os;
    os << "need traces up to n=" << N << ", have " << traces.size();
    throw Error(ErrorKind::InsufficientTraces, os.str());
  }
  DeterminantSeries s;
  s.coefficients.assign(static_cast<std::size_t>(N) + 1, 0.0);
  s.coefficients[0] = 1.0;
  for (int m = 1; m <= N; ++m) {
    CompensatedSum<cplx> acc;
    for (int k = 1; k <= m; ++k) acc.add(traces[k - 1] * s.coefficients[m - k]);
    s.coefficients[m] = -acc.value() / double(m);
  }
  return s;
}

DeterminantSeries coefficients_from_traces(const TraceTable& traces, int N) {
  DeterminantSeries s = coefficients_from_traces(traces.entries, N);
  s.map_digest = traces.map_digest;
  s.weight_digest = traces.weight_digest;
  return s;
}

std::vector<cplx> traces_from_coefficients(const std::vector<cplx>& c) {
  if (c.empty() || c[0] != cplx(1.0)) throw Error(ErrorKind::InvalidArgument, "series must start with c_0 = 1");
  std::vector<cplx> tr;
  for (std::size_t m = 1; m < c.size(); ++m) {
    CompensatedSum<cplx> acc;
    acc.add(-double(m) * c[m]);
    for (std::size_t k = 1; k < m; ++k) acc.add(-tr[k - 1] * c[m - k]);
    tr.push_back(acc.value());
  }
  return tr;
}

double recursion_residual(const std::vector<cplx>& c, const std::vector<cplx>& tr) {
  double worst = 0.0;
  for (std::size_t m = 1; m < c.size(); ++m) {
    cplx acc = double(m) * c[m];
    for (std::size_t k = 1; k <= m; ++k) acc += tr.at(k - 1) * c[m - k];
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

// ---------------------------------------------------------------------------

int nearest_integer(double a) {
  const double f = std::floor(a);
  if (a - f == 0.5) {
    std::ostringstream os;
    os << "closest integer to " << a << " is ambiguous";
    throw Error(ErrorKind::AmbiguousRounding, os.str());
  }
  return static_cast<int>(std::llround(a));
}

SpectralBoundParams SpectralBoundParams::make(double r, double lambda, double g_sup) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  if (!(g_sup > 0.0)) throw Error(ErrorKind::InvalidArgument, "sup-norm bound must be positive");
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "smoothness r must be positive");
  SpectralBoundParams s;
  s.r = r;
  s.lambda = lambda;
  s.g_sup = g_sup;
  if (std::isinf(r)) {
    s.p = std::numeric_limits<int>::max();
    s.q = r;
    s.alpha = r;
    return s;  // rho, rho_tilde, rho_star all vanish
  }
  s.p = nearest_integer(r / 2.0);
  s.q = r - s.p;
  s.alpha = std::min<double>(s.p, s.q);
  s.rho = std::pow(lambda, s.alpha) * g_sup;
  s.rho_tilde = s.rho * g_sup;
  s.rho_star = g_sup * std::pow(lambda, s.alpha / 2.0);
  return s;
}

double SpectralBoundParams::certified_cut() const { return std::max(rho, std::sqrt(rho_tilde)); }

double certified_radius(const SpectralBoundParams& params) {
  if (params.rho_star == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / params.rho_star;
}

double choose_sigma(const SpectralBoundParams& params, const std::vector<cplx>& eigenvalues) {
  const double lo = params.sigma_floor();
  std::vector<double> pts;
  for (const auto& e : eigenvalues)
    if (std::abs(e) > lo) pts.push_back(std::abs(e));
  if (lo > 0.0) pts.push_back(lo);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) return 0.5;
  if (pts.size() == 1) {
    // lone eigenvalue over a zero floor: halve it; lone floor: log-midpoint to 1
    if (lo == 0.0) return pts.front() / 2.0;
    return lo < 1.0 ? std::sqrt(lo) : 2.0 * lo;
  }
  double best = -1.0, sigma = 0.0;
  for (int pass = 0; pass < 2 && best < 0.0; ++pass) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pass == 0 && pts[i] > 1.0 + 1e-12) continue;
      const double gap = std::log(pts[i] / pts[i - 1]);
      if (gap > best + 1e-12) {
        best = gap;
        sigma = std::sqrt(pts[i] * pts[i - 1]);
      }
    }
  }
  return sigma;
}

// ---------------------------------------------------------------------------

namespace {

double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct Poly {
  std::vector<cplx> c;  // ascending
  std::vector<double> abs_c;

  void eval(cplx z, cplx& p, cplx& dp) const {
    p = 0.0;
    dp = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
      dp = dp * z + p;
      p = p * z + c[i];
    }
  }
  double scale(double r) const {
    double acc = 0.0;
    for (std::size_t i = abs_c.size(); i-- > 0;) acc = acc * r + abs_c[i];
    return acc;
  }
  double backward_error(cplx z) const {
    cplx p, dp;
    eval(z, p, dp);
    const double s = scale(std::abs(z));
    return s > 0.0 ? std::abs(p) / s : 0.0;
  }
};

constexpr double kRootTolerance = 1e-10;

}  // namespace

std::vector<PolynomialRoot> polynomial_roots(const std::vector<cplx>& coefficients, std::uint64_t seed) {
  Poly poly;
  poly.c = coefficients;
  double cmax = 0.0;
  for (const auto& v : poly.c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) throw Error(ErrorKind::InvalidArgument, "zero polynomial");
  while (!poly.c.empty() && std::abs(poly.c.back()) <= 1e-15 * cmax) poly.c.pop_back();
  // leading zero coefficients contribute roots at the origin
  std::size_t zero_roots = 0;
  while (zero_roots < poly.c.size() && poly.c[zero_roots] == cplx(0.0)) ++zero_roots;
  poly.c.erase(poly.c.begin(), poly.c.begin() + static_cast<std::ptrdiff_t>(zero_roots));
  for (const auto& v : poly.c) poly.abs_c.push_back(std::abs(v));

  const int d = static_cast<int>(poly.c.size()) - 1;
  std::vector<cplx> z(static_cast<std::size_t>(std::max(d, 0)));
  if (d >= 1) {
    std::mt19937_64 rng(seed);
    const double radius = std::pow(std::abs(poly.c.front()) / std::abs(poly.c.back()), 1.0 / d);
    const double phase0 = kTwoPi * unit_uniform(rng);
    for (int k = 0; k < d; ++k) {
      const double jitter = 0.25 * (unit_uniform(rng) - 0.5);
      const double rk = radius * (1.0 + 0.1 * (unit_uniform(rng) - 0.5));
      z[k] = std::polar(rk, phase0 + kTwoPi * (k + jitter) / d);
    }

    constexpr int kMaxIterations = 2000;
    std::vector<char> done(z.size(), 0);
    for (int it = 0; it < kMaxIterations; ++it) {
      bool all_done = true;
      for (int k = 0; k < d; ++k) {
        if (done[k]) continue;
        cplx p, dp;
        poly.eval(z[k], p, dp);
        const double s = poly.scale(std::abs(z[k]));
        if (std::abs(p) <= 1e-15 * s) {
          done[k] = 1;
          continue;
        }
        all_done = false;
        const cplx w = p / dp;
        cplx sum = 0.0;
        for (int j = 0; j < d; ++j)
          if (j != k) sum += 1.0 / (z[k] - z[j]);
        const cplx step = w / (1.0 - w * sum);
        z[k] -= step;
        if (std::abs(step) <= 1e-15 * std::abs(z[k])) done[k] = 1;
      }
      if (all_done) break;
    }
    // Newton polish, accepted only when it does not worsen the backward error
    for (int k = 0; k < d; ++k) {
      for (int it = 0; it < 3; ++it) {
        cplx p, dp;
        poly.eval(z[k], p, dp);
        if (dp == cplx(0.0)) break;
        const cplx cand = z[k] - p / dp;
        if (poly.backward_error(cand) < poly.backward_error(z[k]))
          z[k] = cand;
        else
          break;
      }
    }
  }

  std::vector<PolynomialRoot> roots;
  for (std::size_t i = 0; i < zero_roots; ++i) roots.push_back({cplx(0.0), 0.0});
  for (const auto& zk : z) {
    const double be = poly.backward_error(zk);
    if (!(be <= kRootTolerance)) {
      std::ostringstream os;
      os << "root iteration stalled at z=" << zk << " with backward error " << be;
      throw Error(ErrorKind::RootIterationStall, os.str());
    }
    roots.push_back({zk, be});
  }
  std::sort(roots.begin(), roots.end(), [](const PolynomialRoot& a, const PolynomialRoot& b) {
    const double ma = std::abs(a.z), mb = std::abs(b.z);
    if (ma != mb) return ma < mb;
    return std::arg(a.z) < std::arg(b.z);
  });
  return roots;
}

std::vector<PolynomialRoot> find_zeros(const DeterminantSeries& series, double radius, std::uint64_t seed) {
  if (series.coefficients.empty() || series.coefficients[0] != cplx(1.0))
    throw Error(ErrorKind::InvalidArgument, "series must start with c_0 = 1");
  std::vector<PolynomialRoot> out;
  if (series.degree() < 1) return out;
  for (const auto& r : polynomial_roots(series.coefficients, seed))
    if (std::abs(r.z) < radius) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<StableZero> zero_stability(const std::vector<DeterminantSeries>& truncations, double radius,
                                       const StabilityOptions& options) {
  if (truncations.empty()) return {};
  std::vector<std::size_t> order(truncations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return truncations[a].degree() > truncations[b].degree(); });

  auto roots_of = [&](const DeterminantSeries& s) {
    std::vector<cplx> out;
    if (s.degree() < 1) return out;
    for (const auto& r : polynomial_roots(s.coefficients, options.seed)) out.push_back(r.z);
    return out;
  };

  std::vector<StableZero> zeros;
  std::vector<std::vector<cplx>> tracks;
  for (const cplx& z : roots_of(truncations[order[0]])) {
    if (!(std::abs(z) < radius)) continue;
    zeros.push_back({z, 0.0, true, false, true});
    tracks.push_back({z});
  }

  for (std::size_t t = 1; t < order.size(); ++t) {
    const std::vector<cplx> other = roots_of(truncations[order[t]]);
    struct Cand {
      double dist;
      std::size_t i, j;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < zeros.size(); ++i)
      for (std::size_t j = 0; j < other.size(); ++j) cands.push_back({std::abs(zeros[i].z - other[j]), i, j});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.dist < b.dist; });
    std::vector<char> used_i(zeros.size(), 0), used_j(other.size(), 0);
    for (const auto& c : cands) {
      if (used_i[c.i] || used_j[c.j]) continue;
      used_i[c.i] = used_j[c.j] = 1;
      tracks[c.i].push_back(other[c.j]);
    }
    for (std::size_t i = 0; i < zeros.size(); ++i)
      if (!used_i[i]) zeros[i].present_everywhere = false;
  }

  for (std::size_t i = 0; i < zeros.size(); ++i) {
    double spread = 0.0;
    for (std::size_t a = 0; a < tracks[i].size(); ++a)
      for (std::size_t b = a + 1; b < tracks[i].size(); ++b)
        spread = std::max(spread, std::abs(tracks[i][a] - tracks[i][b]));
    zeros[i].spread = zeros[i].present_everywhere ? spread : std::numeric_limits<double>::infinity();
    zeros[i].stable = zeros[i].present_everywhere && spread <= options.threshold;
  }
  return zeros;
}

std::vector<StableZero> zero_stability(const TraceTable& traces, const std::vector<int>& N_list, double radius,
                                       const StabilityOptions& options) {
  std::vector<DeterminantSeries> truncations;
  for (int N : N_list) truncations.push_back(coefficients_from_traces(traces, N));
  return zero_stability(truncations, radius, options);
}

std::vector<StableZero> reported_zeros(const std::vector<StableZero>& zeros) {
  double empirical = std::numeric_limits<double>::infinity();
  for (const auto& z : zeros)
    if (!z.stable) empirical = std::min(empirical, std::abs(z.z));
  std::vector<StableZero> out;
  for (const auto& z : zeros)
    if (z.stable && std::abs(z.z) < empirical) out.push_back(z);
  return out;
}

// ---------------------------------------------------------------------------

FitReport factorization_check(const std::vector<cplx>& traces, const std::vector<cplx>& eigenvalues, double sigma,
                              int n_lo) {
  FitReport rep;
  rep.sigma = sigma;
  rep.bound = std::sqrt(sigma);
  rep.n_lo = n_lo;
  const int N = static_cast<int>(traces.size());
  std::vector<cplx> kept;
  for (const auto& e : eigenvalues)
    if (std::abs(e) > sigma) kept.push_back(e);
  std::vector<double> floors;
  for (int n = 1; n <= N; ++n) {
    CompensatedSum<cplx> power_sum;
    for (const auto& e : kept) power_sum.add(std::pow(e, n));
    rep.remainders.push_back(traces[n - 1] - power_sum.value());
    floors.push_back(1e-13 * (1.0 + std::abs(traces[n - 1])));
  }

  bool any_above = false;
  for (int n = n_lo + 1; n <= N; ++n) {
    const bool above = std::abs(rep.remainders[n - 1]) > floors[n - 1];
    any_above = any_above || above;
    if (above && (rep.used.empty() || rep.used.back() == n - 1))
      rep.used.push_back(n);
    else if (!rep.used.empty())
      break;
  }
  if (!any_above) {
    rep.rate = 0.0;
    return rep;
  }
  if (rep.used.size() < 4) {
    std::ostringstream os;
    os << "only " << rep.used.size() << " remainder points above the noise floor for n > " << n_lo;
    throw Error(ErrorKind::DegenerateFit, os.str());
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = double(rep.used.size());
  for (int n : rep.used) {
    const double y = std::log(std::abs(rep.remainders[n - 1]));
    sx += n;
    sy += y;
    sxx += double(n) * n;
    sxy += n * y;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double icept = (sy - slope * sx) / k;
  rep.rate = std::exp(slope);
  rep.prefactor = std::exp(icept);
  return rep;
}

FitReport factorization_check(const DeterminantSeries& series, const std::vector<cplx>& eigenvalues, double sigma,
                              int n_lo) {
  return factorization_check(traces_from_coefficients(series.coefficients), eigenvalues, sigma, n_lo);
}

// ---------------------------------------------------------------------------

std::string resonance_report_csv(const ResonanceReport& report) {
  CsvTable csv{{"re_z", "im_z", "modulus", "stability_spread", "inside_certified", "matched_eig_re",
                "matched_eig_im", "pairing_residual"},
               {}};
  for (std::size_t i = 0; i < report.zeros.size(); ++i) {
    const auto& z = report.zeros[i];
    std::vector<std::string> row{format_double(z.z.real()), format_double(z.z.imag()), format_double(std::abs(z.z)),
                                 format_double(z.spread), z.inside_certified ? "true" : "false"};
    const ResonancePair* pair = nullptr;
    for (const auto& p : report.matching.pairs)
      if (p.zero == i) pair = &p;
    if (pair) {
      const cplx e = report.eigenvalues.at(pair->eigenvalue);
      row.push_back(format_double(e.real()));
      row.push_back(format_double(e.imag()));
      row.push_back(format_double(pair->residual));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    csv.rows.push_back(row);
  }
  return to_csv(csv);
}

nlohmann::json spectral_bound_json(const SpectralBoundParams& p) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  return nlohmann::json{{"r", num(p.r)},
                        {"lambda", num(p.lambda)},
                        {"g_sup", num(p.g_sup)},
                        {"p", std::isinf(p.r) ? nlohmann::json("inf") : nlohmann::json(p.p)},
                        {"q", num(p.q)},
                        {"alpha_r", num(p.alpha)},
                        {"rho", num(p.rho)},
                        {"rho_tilde", num(p.rho_tilde)},
                        {"rho_star", num(p.rho_star)},
                        {"certified_cut", num(p.certified_cut())},
                        {"certified_radius", num(certified_radius(p))},
                        {"sigma", num(p.sigma)}};
}

std::string series_csv(const DeterminantSeries& series) {
  CsvTable csv{{"m", "re_c", "im_c"}, {}};
  for (std::size_t m = 0; m < series.coefficients.size(); ++m)
    csv.rows.push_back({std::to_string(m), format_double(series.coefficients[m].real()),
                        format_double(series.coefficients[m].imag())});
  return to_csv(csv);
}

}  // namespace zetalab
