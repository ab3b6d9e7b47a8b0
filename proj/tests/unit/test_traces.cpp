#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "generators.hpp"
#include "zetalab/error.hpp"
#include "zetalab/traces.hpp"

using namespace zetalab;

namespace {

WeightSpec cos_weight(double a) {
  return WeightSpec::trig(TrigPolynomial::constant(1.0) + TrigPolynomial::cosine({1, 0}, a));
}

/// Plain long-double sum of the orbit formula, no sorting, no compensation.
cplx naive_trace(const OrbitSet& set, const TorusMap& map, const WeightSpec& g) {
  long double re = 0.0L, im = 0.0L;
  for (const auto& p : set.points) {
    cplx w = 1.0;
    Vec2 x = p.x;
    for (int i = 0; i < set.n; ++i) {
      w *= g(x);
      x = reduce_mod1(map.lift(x));
    }
    const double d = std::abs((Mat2::Identity() - p.monodromy).determinant());
    re += static_cast<long double>(w.real()) / d;
    im += static_cast<long double>(w.imag()) / d;
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

}  // namespace

TEST(WeightAlongOrbit, Examples) {
  const TorusMap cat(MapSpec::cat(0.0));
  EXPECT_EQ(weight_along_orbit(cat, WeightSpec::constant(0.7), Vec2(0.3, 0.1), 5), std::pow(cplx(0.7), 5));
  const WeightSpec g = cos_weight(0.1);
  EXPECT_NEAR(std::abs(weight_along_orbit(cat, g, Vec2(0.0, 0.0), 2) - 1.21), 0.0, 1e-15);
  const Vec2 x(0.17, 0.62);
  EXPECT_EQ(weight_along_orbit(cat, g, x, 1), g(x));
}

TEST(WeightAlongOrbit, MultiplicativeOverSplits) {
  const TorusMap map(MapSpec::cat(0.03));
  const WeightSpec g = cos_weight(0.3);
  zetalab::testing::Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 x = gen.point();
    const int a = gen.integer(1, 4), b = gen.integer(1, 4);
    Vec2 y = x;
    for (int i = 0; i < a; ++i) y = reduce_mod1(map.lift(y));
    const cplx lhs = weight_along_orbit(map, g, x, a + b);
    const cplx rhs = weight_along_orbit(map, g, x, a) * weight_along_orbit(map, g, y, b);
    EXPECT_LE(std::abs(lhs - rhs), 1e-13);
  }
}

TEST(TraceFromOrbits, CatMapIsOne) {
  const TorusMap cat(MapSpec::cat(0.0));
  for (int n = 1; n <= 12; ++n) {
    const cplx t = trace_from_orbits(enumerate_linear(cat, n), cat, WeightSpec::constant(1.0));
    EXPECT_NEAR(t.real(), 1.0, 1e-10) << n;
    EXPECT_EQ(t.imag(), 0.0);
  }
}

TEST(TraceFromOrbits, ConstantWeightAndFixedPointExample) {
  const TorusMap cat(MapSpec::cat(0.0));
  for (int n = 1; n <= 6; ++n) {
    const cplx c(0.3, -0.8);
    const cplx t = trace_from_orbits(enumerate_linear(cat, n), cat, WeightSpec::constant(c));
    EXPECT_LE(std::abs(t - std::pow(c, n)), 1e-10);
  }
  const cplx t1 = trace_from_orbits(enumerate_linear(cat, 1), cat, cos_weight(0.1));
  EXPECT_NEAR(t1.real(), 1.1, 1e-15);
}

TEST(TraceFromOrbits, AgreesWithNaiveSumInAnyOrder) {
  const TorusMap map(MapSpec::cat(0.02));
  const WeightSpec g = WeightSpec::exp_trig(TrigPolynomial::cosine({0, 1}, 0.2) + TrigPolynomial::sine({1, 1}, 0.1));
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 7; ++n) {
    OrbitSet s = periodic_points(map, n);
    const cplx sorted = trace_from_orbits(s, map, g);
    std::reverse(s.points.begin(), s.points.end());
    EXPECT_EQ(trace_from_orbits(s, map, g), sorted);
    std::shuffle(s.points.begin(), s.points.end(), rng);
    EXPECT_LE(std::abs(naive_trace(s, map, g) - sorted), 1e-12 * (1.0 + std::abs(sorted)));
  }
}

TEST(TraceFromOrbits, SingularMonodromyThrows) {
  const TorusMap cat(MapSpec::cat(0.0));
  OrbitSet s = enumerate_linear(cat, 1);
  s.points[0].monodromy = Mat2::Identity();
  try {
    (void)trace_from_orbits(s, cat, WeightSpec::constant(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularMonodromy);
  }
}

TEST(TraceTable, Examples) {
  const TorusMap cat(MapSpec::cat(0.0));
  const TraceTable ones = trace_table(cat, WeightSpec::constant(1.0), 8);
  ASSERT_EQ(ones.n_max(), 8);
  for (int n = 1; n <= 8; ++n) EXPECT_NEAR(ones.at(n).real(), 1.0, 1e-10);
  EXPECT_EQ(ones.map_digest, map_digest(cat.spec()));
  EXPECT_EQ(ones.weight_digest, weight_digest(WeightSpec::constant(1.0)));
  const TraceTable zeros = trace_table(cat, WeightSpec::constant(0.0), 8);
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(zeros.at(n), cplx(0.0));
  const TraceTable half = trace_table(cat, WeightSpec::constant(0.5), 8);
  for (int n = 1; n <= 8; ++n) EXPECT_NEAR(half.at(n).real(), std::pow(0.5, n), 1e-10);
}

TEST(TraceTable, ScalingCovariance) {
  const TorusMap map(MapSpec::cat(0.02));
  const WeightSpec g = cos_weight(0.25);
  const TraceTable base = trace_table(map, g, 7);
  for (const cplx c : {cplx(2.0), cplx(0.5, 0.5), cplx(-1.3)}) {
    const TraceTable scaled = trace_table(map, g.scaled(c), 7);
    for (int n = 1; n <= 7; ++n) {
      const cplx expect = std::pow(c, n) * base.at(n);
      EXPECT_LE(std::abs(scaled.at(n) - expect), 1e-10 * std::abs(expect));
    }
  }
}

TEST(TraceTable, RealWeightGivesRealTraces) {
  zetalab::testing::Gen gen(3);
  for (int trial = 0; trial < 4; ++trial) {
    const TorusMap map(MapSpec::cat(gen.uniform(0.0, 0.03)));
    const WeightSpec g = WeightSpec::exp_trig(gen.real_trig(2, 3, 0.2));
    const TraceTable t = trace_table(map, g, 6);
    for (int n = 1; n <= 6; ++n) EXPECT_LE(std::abs(t.at(n).imag()), 1e-10 * (1.0 + std::abs(t.at(n))));
  }
}

TEST(TraceTable, CsvRoundTrip) {
  const TorusMap map(MapSpec::cat(0.01));
  const TraceTable t = trace_table(map, cos_weight(0.2), 5);
  const json tol = {{"trace", 1e-10}};
  const std::string csv = trace_table_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,re_tr,im_tr");
  const TraceTable back = trace_table_from_csv(csv, trace_table_sidecar(t, tol));
  ASSERT_EQ(back.n_max(), 5);
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(back.at(n), t.at(n));
  EXPECT_EQ(back.map_digest, t.map_digest);
  try {
    (void)trace_table_from_csv("a,b\n1,2\n", trace_table_sidecar(t, tol));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaMismatch);
  }
}

TEST(Duality, ConstantFunctions) {
  for (double eps : {0.0, 0.02}) {
    const TorusMap map(MapSpec::cat(eps));
    const auto one = TrigPolynomial::constant(1.0);
    const IdentityResidual r = duality_check(map, WeightSpec::constant(1.0), one, one, 64);
    EXPECT_NEAR(r.lhs.real(), 1.0, 1e-12);
    EXPECT_LE(r.abs_err, 1e-12);
  }
}

TEST(Duality, CharacterOrthogonalityOracle) {
  const TorusMap cat(MapSpec::cat(0.0));
  const IMat2 at = cat.matrix().transpose();
  // (T h)(x) = e_k(Ax) = e_{A^T k}(x), so the pairing is 1 iff A^T k + j = 0.
  for (const Frequency k : {Frequency{1, 0}, Frequency{0, 1}, Frequency{1, -1}}) {
    const IVec2 akk = at * IVec2(k[0], k[1]);
    for (const Frequency j : {Frequency{-int(akk[0]), -int(akk[1])}, Frequency{0, 1}, Frequency{-2, 0}}) {
      const double oracle = (akk[0] + j[0] == 0 && akk[1] + j[1] == 0) ? 1.0 : 0.0;
      const IdentityResidual r = duality_check(cat, WeightSpec::constant(1.0), TrigPolynomial::character(k),
                                               TrigPolynomial::character(j), 64);
      EXPECT_LE(std::abs(r.lhs - oracle), 1e-12);
      EXPECT_LE(std::abs(r.rhs - oracle), 1e-12);
      EXPECT_LE(r.abs_err, 1e-10);
    }
  }
}

TEST(Duality, PerturbedQuadrature) {
  const TorusMap map(MapSpec::cat(0.01));
  const IdentityResidual r = duality_check(map, cos_weight(0.2), TrigPolynomial::character({1, 0}),
                                           TrigPolynomial::cosine({2, 1}, 1.0) + TrigPolynomial::constant(0.5), 256);
  EXPECT_LE(r.abs_err, 1e-8);
}

TEST(PowersIdentity, ConstantFunctions) {
  const TorusMap map(MapSpec::cat(0.01));
  const auto one = TrigPolynomial::constant(1.0);
  for (int n = 1; n <= 3; ++n) {
    const IdentityResidual r = powers_identity_check(map, WeightSpec::constant(1.0), one, one, n, 64);
    EXPECT_NEAR(r.rhs.real(), 1.0, 1e-12);
    EXPECT_LE(r.abs_err, 1e-12);
  }
}

TEST(PowersIdentity, CharacterOracle) {
  const TorusMap cat(MapSpec::cat(0.0));
  const IMat2 a2t = checked_power(cat.matrix(), 2).transpose();
  const IVec2 k(1, 0);
  const IVec2 j = -(a2t * k);
  const IdentityResidual hit =
      powers_identity_check(cat, WeightSpec::constant(1.0), TrigPolynomial::character({int(k[0]), int(k[1])}),
                            TrigPolynomial::character({int(j[0]), int(j[1])}), 1, 64);
  EXPECT_LE(std::abs(hit.lhs - 1.0), 1e-12);
  EXPECT_LE(hit.abs_err, 1e-10);
  const IdentityResidual miss = powers_identity_check(cat, WeightSpec::constant(1.0), TrigPolynomial::character({1, 0}),
                                                      TrigPolynomial::character({0, 1}), 1, 64);
  EXPECT_LE(std::abs(miss.lhs), 1e-12);
  EXPECT_LE(miss.abs_err, 1e-10);
}

TEST(PowersIdentity, PerturbedQuadrature) {
  const TorusMap map(MapSpec::cat(0.01));
  const IdentityResidual r = powers_identity_check(map, cos_weight(0.2), TrigPolynomial::character({1, 0}),
                                                   TrigPolynomial::character({-2, -1}) + TrigPolynomial::constant(0.5),
                                                   2, 256);
  EXPECT_LE(r.abs_err, 1e-8);
}

TEST(IdentityChecks, ResidualShrinksWithGrid) {
  const TorusMap map(MapSpec::cat(0.05));
  const WeightSpec g = cos_weight(0.3);
  const auto h = TrigPolynomial::character({1, 0});
  const auto f = TrigPolynomial::character({-2, -1}) + TrigPolynomial::constant(0.5);
  double prev_d = 0.0, prev_p = 0.0;
  for (int m : {32, 64, 128, 256}) {
    const double d = duality_check(map, g, h, f, m).abs_err;
    const double p = powers_identity_check(map, g, h, f, 1, m).abs_err;
    if (m > 32) {
      EXPECT_LE(d, 2.0 * prev_d + 1e-13) << m;
      EXPECT_LE(p, 2.0 * prev_p + 1e-13) << m;
    }
    prev_d = d;
    prev_p = p;
  }
}
