#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mflab/experiment.hpp"

using namespace mflab;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const std::vector<std::string>& diags, const std::string& word) {
  for (const auto& d : diags)
    if (d.find(word) != std::string::npos) return true;
  return false;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("mflab_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validation diagnostics") {
    CHECK(validate_config(json{{"experiment", "ot-selftest"}, {"seed", 1}}).empty());
    CHECK(mentions(validate_config(json{{"experiment", "fluid-dynamics"}}), "fluid-dynamics"));
    CHECK(mentions(validate_config(json{{"experiment", "ot-selftest"}, {"bogus", 1}}), "bogus"));
    CHECK(mentions(validate_config(json{{"experiment", "combineq"}, {"p", "two"}}), "p"));
    CHECK(!validate_config(json{{"experiment", "classical-dobrushin"}, {"dt", -0.1}}).empty());
    CHECK(!validate_config(json{{"experiment", "classical-dobrushin"}, {"dt", 0.1}, {"output_times", {0.25}}}).empty());
    CHECK_THROWS_AS(parse_config(json{{"experiment", "nope"}}), ConfigError);
  }

  TEST_CASE("memory estimate for a 128-point doubled grid") {
    const json j = {{"experiment", "quantum-dobrushin"}, {"N", {2}}, {"epsilon", {0.25}}, {"grid", {{"points_per_axis", 128}, {"box_half_width", 8.0}}},
                    {"dt", 0.001}, {"t_final", 0.01}, {"output_every", 0.01}};
    const auto diags = validate_config(j);
    // 16 bytes * 128^4 = 4294967296.
    CHECK(mentions(diags, "4294967296"));
  }

  TEST_CASE("ot-selftest passes and is deterministic across job counts") {
    ExperimentConfig cfg = parse_config(json{{"experiment", "ot-selftest"}, {"seed", 5}, {"instances", 10}});
    const auto a = scratch("ot_a"), b = scratch("ot_b");
    RunOptions o1;
    o1.out = a.string();
    RunOptions o2;
    o2.out = b.string();
    o2.jobs = 2;
    const RunSummary s1 = run_experiment(cfg, o1);
    const RunSummary s2 = run_experiment(cfg, o2);
    CHECK(s1.exit_code == 0);
    CHECK(s2.exit_code == 0);
    const std::string j1 = slurp(a / "reports.jsonl");
    CHECK(!j1.empty());
    CHECK(j1 == slurp(b / "reports.jsonl"));
    CHECK(std::filesystem::exists(a / "timeseries.csv"));
    CHECK(std::filesystem::exists(a / "run.log"));
    std::istringstream lines(j1);
    std::string line;
    while (std::getline(lines, line)) {
      const json row = json::parse(line);
      CHECK(row["experiment"] == "ot-selftest");
      CHECK(row["seed"] == 5);
      CHECK(row.contains("constants"));
    }
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
  }

  TEST_CASE("seed override changes the instance draw") {
    ExperimentConfig cfg = parse_config(json{{"experiment", "ot-selftest"}, {"seed", 5}, {"instances", 5}});
    RunOptions o;
    o.write_files = false;
    const RunSummary s1 = run_experiment(cfg, o);
    o.seed = 6;
    const RunSummary s2 = run_experiment(cfg, o);
    REQUIRE(s1.reports.size() == s2.reports.size());
    bool differs = false;
    for (std::size_t i = 0; i < s1.reports.size(); ++i) differs = differs || s1.reports[i].lhs_measured != s2.reports[i].lhs_measured;
    CHECK(differs);
  }

  TEST_CASE("free classical dynamics pass through the tolerance band") {
    const json j = {{"experiment", "classical-dobrushin"},
                    {"seed", 2},
                    {"potential", {{"family", "gaussian"}, {"amplitude", 0.0}, {"width", 1.0}}},
                    {"N", {4}},
                    {"dt", 0.05},
                    {"output_times", {0.25, 0.5}},
                    {"coupled_samples", 40},
                    {"reference_samples", 256},
                    {"subsample_size", 32},
                    {"subsample_repeats", 3}};
    RunOptions o;
    o.write_files = false;
    const RunSummary s = run_experiment(parse_config(j), o);
    CHECK(!s.reports.empty());
    for (const auto& r : s.reports) {
      if (r.inequality_id.find("n_slope") != std::string::npos) continue;
      CHECK_MESSAGE(r.pass, r.inequality_id);
      if (r.inequality_id == "thm3.1.gronwall_D2") {
        CHECK(r.rhs == 0.0);
        CHECK(r.lhs_measured == 0.0);
      }
    }
  }

  TEST_CASE("exit code reflects failing reports") {
    ExperimentConfig cfg = parse_config(json{{"experiment", "toeplitz-identities"}, {"seed", 1}, {"instances", 2}});
    RunOptions o;
    o.write_files = false;
    const RunSummary s = run_experiment(cfg, o);
    bool any_fail = false;
    for (const auto& r : s.reports) any_fail = any_fail || !r.pass;
    CHECK(s.exit_code == (any_fail ? 1 : 0));
  }
}
