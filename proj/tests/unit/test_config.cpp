#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "zetalab/config.hpp"
#include "zetalab/error.hpp"
#include "zetalab/pipeline.hpp"
#include "zetalab/serialization.hpp"

using namespace zetalab;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

RunConfig random_config(zetalab::testing::Gen& gen) {
  RunConfig c;
  c.map = MapSpec::cat(gen.uniform(0.0, 0.05));
  c.map.perturbation.push_back({1, gen.uniform(-1.0, 1.0), {gen.integer(-2, 2), 1}, Phase::Cos});
  c.weight = WeightSpec::exp_trig(gen.real_trig(2, 2, 0.3));
  c.run.n_max = gen.integer(4, 16);
  c.run.N_list = {c.run.n_max - 2, c.run.n_max};
  c.run.galerkin_K = gen.integer(4, 40);
  c.run.sigma = gen.uniform(0.1, 0.9);
  c.run.r = 6.0;
  c.run.seed = static_cast<std::uint64_t>(gen.integer(0, 1 << 30)) << 20;
  c.run.zero_radius = gen.uniform(1.0, 3.0);
  c.run.tolerances.match = gen.uniform(1e-6, 1e-2);
  c.run.epsilon_ladder = {0.08, 0.04, 0.02};
  c.probe.powers = {1, 3};
  c.output_dir = "out-" + std::to_string(gen.integer(0, 99));
  return c;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("ZETALAB_CACHE")) saved = old;
    if (value)
      setenv("ZETALAB_CACHE", value, 1);
    else
      unsetenv("ZETALAB_CACHE");
  }
  ~EnvGuard() {
    if (saved)
      setenv("ZETALAB_CACHE", saved->c_str(), 1);
    else
      unsetenv("ZETALAB_CACHE");
  }
  std::optional<std::string> saved;
};

}  // namespace

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(run_config_from_json(to_json(c)), c);
  EXPECT_EQ(run_config_from_json(json::object()), c);
  EXPECT_EQ(to_json(c)["run"]["sigma"], "auto");
  EXPECT_NO_THROW(validate(c));
}

TEST(RunConfig, RandomRoundTripThroughText) {
  zetalab::testing::Gen gen(77);
  for (int trial = 0; trial < 25; ++trial) {
    const RunConfig c = random_config(gen);
    const RunConfig back = run_config_from_json(json::parse(to_json(c).dump()));
    EXPECT_EQ(back, c) << to_json(c).dump();
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  }
}

TEST(RunConfig, InfiniteValuesSerialize) {
  RunConfig c;
  c.run.r = INFINITY;
  const json j = to_json(c);
  EXPECT_EQ(j["run"]["r"], "inf");
  EXPECT_EQ(run_config_from_json(j).run.r, INFINITY);
}

TEST(RunConfig, ValidationErrors) {
  auto expect_config_error = [](auto mutate) {
    RunConfig c;
    mutate(c);
    EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::Config);
  };
  expect_config_error([](RunConfig& c) { c.run.tolerances.trace = 0.0; });
  expect_config_error([](RunConfig& c) { c.run.tolerances.match = -1e-3; });
  expect_config_error([](RunConfig& c) { c.run.n_max = 17; });
  expect_config_error([](RunConfig& c) { c.run.N_list = {8, 14}; });
  expect_config_error([](RunConfig& c) { c.run.sigma = 0.0; });
  expect_config_error([](RunConfig& c) {
    c.map.smoothness_r = 3.0;
    c.run.r = 4.0;
  });
  RunConfig big;
  big.run.n_max = 17;
  big.run.allow_large = true;
  EXPECT_NO_THROW(validate(big));
}

TEST(RunConfig, MalformedValues) {
  EXPECT_EQ(kind_of([] { (void)run_config_from_json(json::parse(R"({"run":{"n_max":"ten"}})")); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)run_config_from_json(json::parse(R"({"run":{"sigma":"maybe"}})")); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] {
              validate(run_config_from_json(json::parse(R"({"map":{"matrix":[[2,1],[1,2]]}})")));
            }),
            ErrorKind::Config);
}

TEST(RunConfig, LoadFromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "zetalab_config_load";
  std::filesystem::create_directories(dir);
  RunConfig c;
  c.weight = WeightSpec::constant(0.7);
  std::ofstream(dir / "ok.json") << to_json(c).dump(2);
  EXPECT_EQ(load_run_config(dir / "ok.json"), c);
  std::ofstream(dir / "bad.json") << "{\"map\": ";
  EXPECT_EQ(kind_of([&] { (void)load_run_config(dir / "bad.json"); }), ErrorKind::Config);
}

TEST(CacheKey, ChangesWithEveryInput) {
  const RunConfig base;
  const std::string k0 = orbit_cache_key(base);
  RunConfig m = base;
  m.map.epsilon = 0.01;
  RunConfig w = base;
  w.weight = WeightSpec::constant(0.7);
  RunConfig t = base;
  t.run.tolerances.orbit = 1e-12;
  EXPECT_NE(orbit_cache_key(m), k0);
  EXPECT_NE(orbit_cache_key(w), k0);
  EXPECT_NE(orbit_cache_key(t), k0);
  RunConfig unrelated = base;
  unrelated.output_dir = "elsewhere";
  unrelated.run.galerkin_K = 8;
  EXPECT_EQ(orbit_cache_key(unrelated), k0);
}

TEST(Workspace, CachePrecedence) {
  RunConfig c;
  c.output_dir = "from-config-out";
  c.cache_dir = "from-config-cache";
  {
    EnvGuard env(nullptr);
    const Workspace ws = resolve_workspace(c, std::nullopt, std::nullopt);
    EXPECT_EQ(ws.out, "from-config-out");
    EXPECT_EQ(ws.cache, "from-config-cache");
  }
  {
    EnvGuard env("from-env");
    EXPECT_EQ(resolve_workspace(c, std::nullopt, std::nullopt).cache, "from-env");
    const Workspace ws = resolve_workspace(c, std::string("flag-out"), std::string("from-flag"));
    EXPECT_EQ(ws.cache, "from-flag");
    EXPECT_EQ(ws.out, "flag-out");
  }
}

TEST(ExitCodes, Contract) {
  EXPECT_EQ(exit_code(ErrorKind::MissingArtifacts), 2);
  EXPECT_EQ(exit_code(ErrorKind::Io), 2);
  EXPECT_EQ(exit_code(ErrorKind::Config), 4);
  EXPECT_EQ(exit_code(ErrorKind::AmbiguousRounding), 4);
  for (ErrorKind k : {ErrorKind::ContinuationFailure, ErrorKind::EigenFailure, ErrorKind::NonMonotone,
                      ErrorKind::ValidationFailure, ErrorKind::RootIterationStall, ErrorKind::SingularMonodromy})
    EXPECT_EQ(exit_code(k), 3);
}
