#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "generators.hpp"
#include "zetalab/determinant.hpp"
#include "zetalab/error.hpp"

using namespace zetalab;

namespace {

std::vector<cplx> power_sums(const std::vector<cplx>& lambdas, int N) {
  std::vector<cplx> t(N, 0.0);
  for (int n = 1; n <= N; ++n)
    for (const cplx& l : lambdas) t[n - 1] += std::pow(l, n);
  return t;
}

/// prod (1 - l z), expanded directly.
std::vector<cplx> product_coefficients(const std::vector<cplx>& lambdas, int N) {
  std::vector<cplx> c(N + 1, 0.0);
  c[0] = 1.0;
  for (const cplx& l : lambdas)
    for (int m = N; m >= 1; --m) c[m] -= l * c[m - 1];
  return c;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

constexpr double kCatLambda = 0.3819660113;

}  // namespace

TEST(Coefficients, Examples) {
  const DeterminantSeries ones = coefficients_from_traces(std::vector<cplx>(10, 1.0), 10);
  ASSERT_EQ(ones.degree(), 10);
  EXPECT_EQ(ones.coefficients[0], cplx(1.0));
  EXPECT_NEAR(std::abs(ones.coefficients[1] + 1.0), 0.0, 1e-15);
  for (int m = 2; m <= 10; ++m) EXPECT_LE(std::abs(ones.coefficients[m]), 1e-15);

  const DeterminantSeries zero = coefficients_from_traces(std::vector<cplx>(6, 0.0), 6);
  for (int m = 1; m <= 6; ++m) EXPECT_EQ(zero.coefficients[m], cplx(0.0));

  std::vector<cplx> t;
  for (int n = 1; n <= 8; ++n) t.push_back(1.0 + std::pow(0.5, n));
  const DeterminantSeries two = coefficients_from_traces(t, 8);
  EXPECT_NEAR(std::abs(two.coefficients[1] + 1.5), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(two.coefficients[2] - 0.5), 0.0, 1e-14);
  for (int m = 3; m <= 8; ++m) EXPECT_LE(std::abs(two.coefficients[m]), 1e-14);
}

TEST(Coefficients, InsufficientTraces) {
  TraceTable t;
  t.entries = {1.0, 1.0, 1.0};
  EXPECT_EQ(kind_of([&] { (void)coefficients_from_traces(t, 4); }), ErrorKind::InsufficientTraces);
  EXPECT_NO_THROW((void)coefficients_from_traces(t, 3));
}

TEST(Coefficients, MatchesProductOverSpectrum) {
  zetalab::testing::Gen gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<cplx> lambdas(gen.integer(1, 6));
    for (auto& l : lambdas) l = std::polar(gen.uniform(0.05, 1.0), gen.uniform(-3.14159, 3.14159));
    const int N = 14;
    const DeterminantSeries s = coefficients_from_traces(power_sums(lambdas, N), N);
    const auto oracle = product_coefficients(lambdas, N);
    for (int m = 0; m <= N; ++m) EXPECT_LE(std::abs(s.coefficients[m] - oracle[m]), 1e-12) << trial << " m=" << m;
    EXPECT_LE(recursion_residual(s.coefficients, power_sums(lambdas, N)), 1e-10);
  }
}

TEST(Coefficients, RecursionResidualRecheck) {
  zetalab::testing::Gen gen(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int N = gen.integer(1, 16);
    const auto tr = gen.complex_vector(N, 1.0);
    const DeterminantSeries s = coefficients_from_traces(tr, N);
    double max_c = 0.0;
    for (const auto& c : s.coefficients) max_c = std::max(max_c, std::abs(c));
    for (int m = 1; m <= N; ++m) {
      long double re = m * s.coefficients[m].real(), im = m * s.coefficients[m].imag();
      for (int k = 1; k <= m; ++k) {
        const cplx p = tr[k - 1] * s.coefficients[m - k];
        re += p.real();
        im += p.imag();
      }
      EXPECT_LE(std::hypot(double(re), double(im)), 1e-10 * (1.0 + max_c));
    }
  }
}

TEST(Coefficients, NewtonInversionRoundTrip) {
  zetalab::testing::Gen gen(9);
  for (int trial = 0; trial < 40; ++trial) {
    const int N = gen.integer(1, 14);
    const auto tr = gen.complex_vector(N, 1.0);
    const auto back = traces_from_coefficients(coefficients_from_traces(tr, N).coefficients);
    ASSERT_EQ(back.size(), tr.size());
    for (int n = 0; n < N; ++n) EXPECT_LE(std::abs(back[n] - tr[n]), 1e-9);
  }
}

TEST(Rounding, NearestInteger) {
  EXPECT_EQ(nearest_integer(1.4), 1);
  EXPECT_EQ(nearest_integer(1.6), 2);
  EXPECT_EQ(nearest_integer(2.0), 2);
  EXPECT_EQ(kind_of([] { (void)nearest_integer(1.5); }), ErrorKind::AmbiguousRounding);
  EXPECT_EQ(kind_of([] { (void)nearest_integer(2.5); }), ErrorKind::AmbiguousRounding);
}

TEST(SpectralBound, CertifiedRadiusExamples) {
  const auto r4 = SpectralBoundParams::make(4.0, kCatLambda, 1.0);
  EXPECT_EQ(r4.p, 2);
  EXPECT_EQ(r4.alpha, 2.0);
  EXPECT_NEAR(certified_radius(r4), 2.6180340, 1e-7);
  const auto r2 = SpectralBoundParams::make(2.0, kCatLambda, 1.0);
  EXPECT_EQ(r2.alpha, 1.0);
  EXPECT_NEAR(certified_radius(r2), 1.6180340, 1e-7);
  EXPECT_EQ(certified_radius(SpectralBoundParams::make(4.0, kCatLambda, 2.0)), certified_radius(r4) / 2.0);
  EXPECT_TRUE(std::isinf(certified_radius(SpectralBoundParams::make(INFINITY, kCatLambda, 1.0))));
}

TEST(SpectralBound, Errors) {
  EXPECT_EQ(kind_of([] { (void)SpectralBoundParams::make(3.0, kCatLambda, 1.0); }), ErrorKind::AmbiguousRounding);
  EXPECT_EQ(kind_of([] { (void)SpectralBoundParams::make(4.0, 1.0, 1.0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { (void)SpectralBoundParams::make(4.0, kCatLambda, 0.0); }), ErrorKind::InvalidArgument);
}

TEST(SpectralBound, RhoStarSquaredIsRhoTilde) {
  zetalab::testing::Gen gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    double r = gen.uniform(0.6, 12.0);
    if (std::abs(r / 2.0 - std::floor(r / 2.0) - 0.5) < 1e-6) continue;
    const auto s = SpectralBoundParams::make(r, gen.uniform(0.05, 0.95), gen.uniform(0.2, 3.0));
    EXPECT_EQ(s.p, static_cast<int>(std::lround(r / 2.0)));
    EXPECT_NEAR(s.q, r - s.p, 1e-15);
    if (std::min<double>(s.p, s.q) == s.alpha)
      EXPECT_NEAR(s.rho_star * s.rho_star, s.rho_tilde, 1e-12 * s.rho_tilde);
    EXPECT_NEAR(s.certified_cut(), s.rho_star, 1e-12 * s.rho_star);
  }
}

TEST(SpectralBound, ChooseSigma) {
  const auto inf = SpectralBoundParams::make(INFINITY, kCatLambda, 1.0);
  EXPECT_EQ(choose_sigma(inf, {1.0}), 0.5);
  EXPECT_NEAR(choose_sigma(inf, {1.0, -0.0625, -0.0625}), 0.25, 1e-15);
  const auto r4 = SpectralBoundParams::make(4.0, kCatLambda, 1.0);
  const double s = choose_sigma(r4, {1.0, 0.01});
  EXPECT_NEAR(s, std::sqrt(r4.sigma_floor()), 1e-15);
  EXPECT_GT(s, r4.sigma_floor());
  // the gap below 1 wins over a wider one above it
  EXPECT_NEAR(choose_sigma(inf, {8.0, 1.0, 0.5}), std::sqrt(0.5), 1e-15);
}

TEST(Roots, Examples) {
  const auto one = find_zeros(DeterminantSeries{{1.0, -1.0}, "", ""}, 2.0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(std::abs(one[0].z - 1.0), 0.0, 1e-14);
  const auto two = find_zeros(DeterminantSeries{{1.0, -1.5, 0.5}, "", ""}, 3.0);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(std::abs(two[0].z - 1.0), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(two[1].z - 2.0), 0.0, 1e-13);

  std::vector<cplx> e(21);
  double f = 1.0;
  for (int m = 0; m <= 20; ++m) {
    if (m > 0) f *= m;
    e[m] = (m % 2 ? -1.0 : 1.0) / f;
  }
  EXPECT_TRUE(find_zeros(DeterminantSeries{e, "", ""}, 1.0).empty());
  for (const auto& r : polynomial_roots(e)) EXPECT_GT(std::abs(r.z), 1.0);
}

TEST(Roots, RecoverPlantedRootsWithSmallBackwardError) {
  zetalab::testing::Gen gen(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int deg = gen.integer(1, 12);
    std::vector<cplx> roots(deg);
    for (auto& z : roots) z = std::polar(gen.uniform(0.5, 3.0), gen.uniform(-3.14159, 3.14159));
    std::vector<cplx> inv;
    for (const auto& z : roots) inv.push_back(1.0 / z);
    const auto c = product_coefficients(inv, deg);
    const auto found = polynomial_roots(c, trial);
    ASSERT_EQ(found.size(), static_cast<std::size_t>(deg));
    for (const auto& r : found) {
      double scale = 0.0;
      for (int m = 0; m <= deg; ++m) scale += std::abs(c[m]) * std::pow(std::abs(r.z), m);
      cplx p = 0.0;
      for (int m = deg; m >= 0; --m) p = p * r.z + c[m];
      EXPECT_LE(std::abs(p), 1e-8 * scale);
    }
    // planted roots are found when well separated
    double sep = INFINITY;
    for (int i = 0; i < deg; ++i)
      for (int j = i + 1; j < deg; ++j) sep = std::min(sep, std::abs(roots[i] - roots[j]));
    if (sep > 0.1)
      for (const auto& z : roots) {
        double best = INFINITY;
        for (const auto& r : found) best = std::min(best, std::abs(r.z - z));
        EXPECT_LE(best, 1e-8 * std::abs(z)) << trial;
      }
  }
}

TEST(Roots, AgreeWithCompanionEigenvalues) {
  zetalab::testing::Gen gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int deg = gen.integer(2, 10);
    auto c = gen.complex_vector(deg + 1, 1.0);
    c[0] = 1.0;
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(comp).eigenvalues();
    const auto found = polynomial_roots(c, 1);
    for (int i = 0; i < deg; ++i) {
      double best = INFINITY;
      for (const auto& r : found) best = std::min(best, std::abs(r.z - ev[i]));
      EXPECT_LE(best, 1e-7 * (1.0 + std::abs(ev[i])));
    }
  }
}

TEST(Roots, DeterministicForSeed) {
  const std::vector<cplx> c{1.0, 0.3, -0.7, 0.2, 0.05, -0.01};
  const auto a = polynomial_roots(c, 42), b = polynomial_roots(c, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].z, b[i].z);
}

TEST(Stability, ConstantWeightSeries) {
  for (double c : {1.0, 0.7}) {
    TraceTable t;
    for (int n = 1; n <= 12; ++n) t.entries.push_back(std::pow(c, n));
    const auto zs = zero_stability(t, {8, 10, 12}, INFINITY);
    ASSERT_EQ(zs.size(), 1u);
    EXPECT_NEAR(std::abs(zs[0].z - 1.0 / c), 0.0, 1e-12);
    EXPECT_LE(zs[0].spread, 1e-8);
    EXPECT_TRUE(zs[0].stable);
  }
}

TEST(Stability, InjectedTailIsFlagged) {
  zetalab::testing::Gen gen(31);
  std::vector<DeterminantSeries> truncs;
  for (int N : {8, 10, 12}) {
    DeterminantSeries s;
    s.coefficients.assign(N + 1, 0.0);
    s.coefficients[0] = 1.0;
    s.coefficients[1] = -1.0;
    for (int m = 5; m <= N; ++m) s.coefficients[m] = gen.complex(1e-9);
    truncs.push_back(s);
  }
  const auto zs = zero_stability(truncs, INFINITY);
  ASSERT_EQ(zs.size(), 12u);
  int stable = 0;
  for (const auto& z : zs) {
    if (!z.stable) continue;
    ++stable;
    EXPECT_NEAR(std::abs(z.z - 1.0), 0.0, 1e-7);
  }
  EXPECT_EQ(stable, 1);
  const auto rep = reported_zeros(zs);
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_NEAR(std::abs(rep[0].z - 1.0), 0.0, 1e-7);
}

TEST(Stability, RadiusFiltersZeros) {
  TraceTable t;
  for (int n = 1; n <= 12; ++n) t.entries.push_back(1.0 + std::pow(0.5, n));
  EXPECT_EQ(zero_stability(t, {8, 10, 12}, 3.0).size(), 2u);
  const auto inner = zero_stability(t, {8, 10, 12}, 1.5);
  ASSERT_EQ(inner.size(), 1u);
  EXPECT_NEAR(inner[0].z.real(), 1.0, 1e-12);
}

TEST(Stability, ScalingMapsZerosByInverse) {
  zetalab::testing::Gen gen(8);
  std::vector<cplx> lambdas{1.0, 0.45, cplx(-0.2, 0.3), cplx(-0.2, -0.3)};
  const auto base = power_sums(lambdas, 12);
  for (const cplx c : {cplx(0.8), cplx(1.25), cplx(0.6, 0.6)}) {
    TraceTable a, b;
    for (int n = 1; n <= 12; ++n) {
      a.entries.push_back(base[n - 1]);
      b.entries.push_back(std::pow(c, n) * base[n - 1]);
    }
    const auto za = zero_stability(a, {8, 10, 12}, INFINITY);
    const auto zb = zero_stability(b, {8, 10, 12}, INFINITY);
    for (const auto& z : za) {
      if (!z.stable) continue;
      double best = INFINITY;
      for (const auto& w : zb)
        if (w.stable) best = std::min(best, std::abs(w.z - z.z / c));
      EXPECT_LE(best, 1e-8 * std::abs(z.z / c));
    }
  }
}

TEST(Factorization, Examples) {
  const FitReport exact = factorization_check(std::vector<cplx>(12, 1.0), {1.0}, 0.5);
  EXPECT_EQ(exact.rate, 0.0);

  std::vector<cplx> t;
  for (int n = 1; n <= 16; ++n) t.push_back(1.0 + std::pow(0.6, n) + std::pow(0.2, n));
  const FitReport two = factorization_check(t, {1.0, 0.6}, 0.5);
  EXPECT_NEAR(two.rate, 0.2, 0.01);
  EXPECT_NEAR(two.bound, std::sqrt(0.5), 1e-15);

  std::vector<cplx> geo;
  for (int n = 1; n <= 16; ++n) geo.push_back(std::pow(0.8, n));
  EXPECT_NEAR(factorization_check(geo, {}, 1.5).rate, 0.8, 1e-10);
  // eigenvalues below sigma do not enter the projector
  EXPECT_NEAR(factorization_check(geo, {0.8}, 1.5).rate, 0.8, 1e-10);

  EXPECT_EQ(kind_of([] { (void)factorization_check(std::vector<cplx>(7, 0.5), {}, 1.0); }), ErrorKind::DegenerateFit);
}

TEST(Factorization, SeriesOverloadAgrees) {
  std::vector<cplx> t;
  for (int n = 1; n <= 14; ++n) t.push_back(1.0 + std::pow(-0.3, n) + std::pow(0.1, n));
  const FitReport a = factorization_check(t, {1.0}, 0.5);
  const FitReport b = factorization_check(coefficients_from_traces(t, 14), {1.0}, 0.5);
  EXPECT_NEAR(a.rate, 0.3, 1e-3);  // the 0.1^n term tilts the fit slightly
  EXPECT_NEAR(b.rate, a.rate, 1e-8);
}

TEST(DeterminantIo, CsvAndJson) {
  const DeterminantSeries s{{1.0, cplx(-0.5, 0.25)}, "m", "w"};
  const std::string csv = series_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,re_c,im_c");
  ResonanceReport r;
  const std::string rc = resonance_report_csv(r);
  EXPECT_EQ(rc.substr(0, rc.find('\n')),
            "re_z,im_z,modulus,stability_spread,inside_certified,matched_eig_re,matched_eig_im,pairing_residual");
  const json j = spectral_bound_json(SpectralBoundParams::make(INFINITY, kCatLambda, 1.0));
  EXPECT_TRUE(j.contains("rho_star"));
  EXPECT_NO_THROW((void)json::parse(j.dump()));
}
