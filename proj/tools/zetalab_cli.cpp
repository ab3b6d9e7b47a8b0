// zetalab: batch front end. Each subcommand runs one pipeline stage; stages
// exchange data only through files in the output and cache directories.

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "zetalab/error.hpp"
#include "zetalab/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string cache;
  int n = 0;
  int K = 0;
  long long seed = -1;
  bool allow_large = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "run configuration (JSON)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--cache", f.cache, "orbit cache directory (overrides ZETALAB_CACHE)");
  cmd->add_option("--n", f.n, "largest period / trace index")->check(CLI::PositiveNumber);
  cmd->add_option("--K", f.K, "Galerkin cutoff")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "root-finder seed")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--allow-large", f.allow_large, "permit n_max > 16");
}

zetalab::RunConfig load(const CommonFlags& f) {
  zetalab::RunConfig cfg;
  if (!f.config.empty()) {
    if (!std::filesystem::exists(f.config))
      throw zetalab::Error(zetalab::ErrorKind::MissingArtifacts, "config file " + f.config + " not found");
    cfg = zetalab::load_run_config(f.config);
  }
  if (f.n > 0) {
    cfg.run.n_max = f.n;
    for (int& N : cfg.run.N_list) N = std::min(N, f.n);
  }
  if (f.K > 0) cfg.run.galerkin_K = f.K;
  if (f.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(f.seed);
  if (f.allow_large) cfg.run.allow_large = true;
  zetalab::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical Fredholm determinants of hyperbolic torus maps"};
  app.require_subcommand(1, 1);
  CommonFlags flags;
  std::string suite = "all";
  std::string format = "csv";

  auto* orbits = app.add_subcommand("orbits", "enumerate, validate and cache Fix T^n for n = 1..n_max");
  auto* traces = app.add_subcommand("traces", "weighted periodic-orbit traces");
  auto* determinant = app.add_subcommand("determinant", "series, certified radius and stable zeros");
  auto* galerkin = app.add_subcommand("galerkin", "Fourier-Galerkin spectrum and K-convergence scan");
  auto* mollifier = app.add_subcommand("mollifier", "mollified trace ladders and extrapolation");
  auto* verify = app.add_subcommand("verify", "machine-readable verdicts");
  auto* report = app.add_subcommand("report", "merged zeros/eigenvalues scatter data");
  for (auto* c : {orbits, traces, determinant, galerkin, mollifier, verify, report}) add_common(c, flags);
  verify->add_option("--suite", suite, "identities | lemma2 | crosscheck | all")
      ->check(CLI::IsMember({"identities", "lemma2", "crosscheck", "all"}));
  report->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  try {
    const zetalab::RunConfig cfg = load(flags);
    const zetalab::Workspace ws = zetalab::resolve_workspace(
        cfg, flags.out.empty() ? std::nullopt : std::optional<std::string>(flags.out),
        flags.cache.empty() ? std::nullopt : std::optional<std::string>(flags.cache));
    std::ostream& log = std::cerr;

    if (orbits->parsed()) {
      for (const auto& r : zetalab::stage_orbits(cfg, ws, log))
        std::cout << "n=" << r.n << " count=" << r.count << " expected=" << r.expected
                  << " cache=" << (r.cache_hit ? "hit" : "miss") << "\n";
    } else if (traces->parsed()) {
      const auto t = zetalab::stage_traces(cfg, ws, log);
      std::cout << zetalab::trace_table_csv(t);
    } else if (determinant->parsed()) {
      const auto d = zetalab::stage_determinant(cfg, ws, log);
      std::cout << "certified_radius=" << d.certified_radius << "\n";
      for (const auto& z : d.reported) std::cout << "zero " << z.z.real() << " " << z.z.imag() << " spread " << z.spread << "\n";
    } else if (galerkin->parsed()) {
      const auto g = zetalab::stage_galerkin(cfg, ws, log);
      std::cout << zetalab::spectrum_csv(g.spectrum);
    } else if (mollifier->parsed()) {
      for (const auto& o : zetalab::stage_mollifier(cfg, ws, log))
        std::cout << o.spec.name << " " << o.extrapolated.value.real() << " " << o.extrapolated.value.imag() << "\n";
    } else if (verify->parsed()) {
      const auto v = zetalab::stage_verify(cfg, ws, suite, log);
      std::cout << zetalab::to_json(v).dump(2) << "\n";
      return v.pass() ? 0 : 3;
    } else if (report->parsed()) {
      zetalab::stage_report(cfg, ws, format, log);
    }
    return 0;
  } catch (const zetalab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return zetalab::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
