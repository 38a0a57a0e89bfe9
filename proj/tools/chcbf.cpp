// chcbf <subcommand> --config <path> [--seed S] [--out DIR] [--paths N] [--modes n1,n2,...]
//
// Exit codes: 0 ok, 2 config error, 3 blow-up, 4 assertion failure.

#include <CLI11.hpp>
#include <iostream>

#include "chcbf/chcbf.hpp"
#include "chcbf/experiments.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, blow_up = 3, assertion = 4 };

int finish(const chcbf::ExperimentReport& rep, const std::filesystem::path& out) {
  rep.write(out);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& v : rep.verdicts)
    std::cout << (v.passed ? "PASS " : (v.hard ? "FAIL " : "SOFT-FAIL ")) << v.name << (v.detail.empty() ? "" : "  [" + v.detail + "]")
              << "\n";
  std::cout << "report: " << (out / ("report_" + rep.id + ".json")).string() << "\n";
  return rep.passed() ? ok : assertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Cahn-Hilliard / Brinkman-Forchheimer tumour growth: spectral Galerkin simulator"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, modes;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;

  const char* names[][2] = {{"simulate", "single trajectory: energy.csv, snapshots, report"},
                            {"verify-operators", "operator identity suite on random fields"},
                            {"galerkin-convergence", "shared-noise runs at several resolutions"},
                            {"uniqueness", "same-noise trajectories from perturbed data"},
                            {"ensemble-moments", "Monte Carlo moments of sup E_tot"},
                            {"soak-2d", "long 2D runs over the configured r values"}};
  for (const auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration (INI)")->required();
    sub->add_option("--seed", seed, "master seed, overrides experiment.seed");
    sub->add_option("--out", out_dir, "artifact directory, overrides experiment.out");
    sub->add_option("--paths", paths, "ensemble size, overrides experiment.paths");
    sub->add_option("--modes", modes, "comma-separated resolutions, overrides experiment.modes");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return config_error;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  chcbf::RunConfig cfg;
  try {
    cfg = chcbf::load_config(config_path);
    if (seed) cfg.experiment.seed = *seed;
    if (paths) {
      if (*paths < 2) throw chcbf::ConfigError("--paths", "need at least 2 paths");
      cfg.experiment.paths = *paths;
    }
    if (!out_dir.empty()) cfg.experiment.out = out_dir;
    if (!modes.empty()) {
      cfg.experiment.modes.clear();
      for (const auto& m : chcbf::detail::split(modes, ','))
        cfg.experiment.modes.push_back(int(chcbf::detail::parse_uint("--modes", m)));
    }
  } catch (const chcbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  }

  const std::filesystem::path out = cfg.experiment.out;
  try {
    if (cmd == "simulate") return finish(chcbf::simulate(cfg, out), out);
    if (cmd == "verify-operators") return finish(chcbf::verify_operators(cfg), out);
    if (cmd == "galerkin-convergence") return finish(chcbf::galerkin_convergence(cfg), out);
    if (cmd == "uniqueness") return finish(chcbf::uniqueness(cfg), out);
    if (cmd == "ensemble-moments") return finish(chcbf::ensemble_moments(cfg), out);
    if (cmd == "soak-2d") return finish(chcbf::soak_2d(cfg, out), out);
  } catch (const chcbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const chcbf::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const chcbf::BlowUpError& e) {
    std::cerr << e.what() << " (partial artifacts in " << out.string() << ")\n";
    return blow_up;
  }
  return config_error;
}
