#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "fsilab/config.hpp"
#include "fsilab/errors.hpp"
#include "fsilab/runner.hpp"

namespace {

// 0 Completed, 2 ValidationError, 3 StoppedEarly, 4 NonConvergence, 1 anything else
template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const fsilab::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const fsilab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const fsilab::NonConvergence& e) {
    std::cerr << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fsilab: stochastic fluid-shell Galerkin solver"};
  app.set_version_flag("--version", fsilab::version());
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir;
  int paths = 1, threads = 0;

  auto* validate = app.add_subcommand("validate", "parse and validate a config");
  validate->add_option("config", config_path, "config file")->required();

  auto* run = app.add_subcommand("run", "run one trajectory");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");

  auto* ens = app.add_subcommand("ensemble", "run a seeded Monte Carlo ensemble");
  ens->add_option("config", config_path, "config file")->required();
  ens->add_option("--paths", paths, "number of members")->required()->check(CLI::PositiveNumber);
  ens->add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  ens->add_option("--out", out_dir, "output directory (overrides output.dir)");

  auto* rep = app.add_subcommand("report", "summarize and verify a run directory");
  rep->add_option("run-dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  return guarded([&]() -> int {
    if (*validate) {
      auto cfg = fsilab::load_config_file(config_path);
      std::cout << "valid: " << fsilab::to_string(cfg.mode) << ", N = " << cfg.basis_N << ", steps = " << cfg.steps()
                << "\n";
      return 0;
    }
    if (*run) {
      auto cfg = fsilab::load_config_file(config_path);
      auto dir = out_dir.empty() ? fsilab::resolve_output_dir(cfg) : std::filesystem::path(out_dir);
      auto out = fsilab::run(cfg, dir);
      std::cout << fsilab::to_string(out.status);
      if (out.status == fsilab::RunStatus::StoppedEarly) std::cout << " at t = " << out.stop_time;
      std::cout << " -> " << out.dir.string() << "\n";
      return fsilab::exit_code(out.status);
    }
    if (*ens) {
      auto cfg = fsilab::load_config_file(config_path);
      auto dir = out_dir.empty() ? fsilab::resolve_output_dir(cfg) : std::filesystem::path(out_dir);
      auto eo = fsilab::ensemble(cfg, paths, dir, threads);
      std::cout << paths << " members, " << fsilab::to_string(eo.status) << "\n"
                << "final energy mean " << eo.final_energy.mean << " variance " << eo.final_energy.variance << "\n"
                << "energy drift mean " << eo.energy_drift.mean << "\n";
      return fsilab::exit_code(eo.status);
    }
    int code = 0;
    std::cout << fsilab::report(run_dir, &code);
    return code;
  });
}
