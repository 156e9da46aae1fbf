#include <CLI11.hpp>
#include <iostream>

#include "mflab/errors.hpp"
#include "mflab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-field and semiclassical bound verification experiments"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--jobs", jobs, "Number of sweep points run concurrently")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Override the output directory");

  std::string run_path, validate_path;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_path, "Config file (JSON)")->required();
  auto* validate = app.add_subcommand("validate", "Check a config and list diagnostics");
  validate->add_option("config", validate_path, "Config file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string path = run->parsed() ? run_path : validate_path;
    const auto j = mflab::load_json_file(path);
    const auto diag = mflab::validate_config(j);
    if (validate->parsed()) {
      for (const auto& d : diag) std::cout << d << '\n';
      if (diag.empty()) std::cout << "ok\n";
      return diag.empty() ? 0 : 2;
    }
    if (!diag.empty()) {
      for (const auto& d : diag) std::cerr << "config error: " << d << '\n';
      return 2;
    }
    mflab::RunOptions opt;
    opt.seed = seed;
    opt.out = out;
    opt.jobs = jobs;
    const auto summary = mflab::run_experiment(mflab::parse_config(j), opt);
    int failed = 0;
    for (const auto& r : summary.reports) {
      if (!r.pass) {
        ++failed;
        std::cout << "FAIL " << r.inequality_id << " t=" << r.time << " lhs=" << r.lhs_measured << " rhs=" << r.rhs
                  << (r.note.empty() ? "" : " (" + r.note + ")") << '\n';
      }
    }
    std::cout << summary.reports.size() - failed << " of " << summary.reports.size() << " reports pass\n";
    return summary.exit_code;
  } catch (const mflab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mflab::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
