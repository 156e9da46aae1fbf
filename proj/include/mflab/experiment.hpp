#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/bounds.hpp"
#include "mflab/potential.hpp"

namespace mflab {

// Invalid configuration; the message lists one diagnostic per line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PotentialSpec {
  std::string family = "gaussian";  // "gaussian" or "cosine"
  double amplitude = 1.0;
  double width = 1.0;       // Gaussian width
  double wavenumber = 1.0;  // cosine
  double cutoff = 1.0;      // cosine envelope radius
  double scale_c = 1.0;     // V -> c V(L .)
  double scale_L = 1.0;

  Potential build(int d = 1) const;
};

struct ExperimentConfig {
  std::string experiment;
  PotentialSpec potential;
  std::uint64_t seed = 1;
  std::string output = "out";

  std::vector<double> epsilon{0.25};
  std::vector<int> N{2};
  double p = 2.0;
  int n = 1;
  double dt = 0.01;
  double t_final = 0.5;
  std::vector<double> output_times;  // derived from output_every when empty
  double output_every = 0.1;

  int points_per_axis = 64;
  double box_half_width = 8.0;
  double center_q = 0.0, center_p = 0.5;  // coherent centre for quantum-dobrushin
  int husimi_points = 24;

  long mc_samples = 100000;
  int coupled_samples = 2000;
  int reference_samples = 4096;
  int particles = 20000;
  int subsample_size = 256;
  int subsample_repeats = 10;
  int instances = 20;
  int max_cloud = 6;
  bool counting = false;
  bool checkpoint = false;

  // Output times in increasing order, each a whole number of steps.
  std::vector<double> times() const;
};

// Experiment identifiers accepted by run().
const std::vector<std::string>& experiment_ids();

// Schema and cross-field checks; an empty list means the config is usable.
std::vector<std::string> validate_config(const nlohmann::json& j);
// Parses a validated config; throws ConfigError with all diagnostics otherwise.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json load_json_file(const std::string& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  bool write_files = true;
};

struct RunSummary {
  std::vector<BoundReport> reports;
  bool guard_tripped = false;
  bool errored = false;
  int exit_code = 0;  // 0 all pass, 1 some report failed, 3 guard trip or solver error
};

// Runs the experiment. With write_files, creates the output directory holding
// reports.jsonl (deterministic), timeseries.csv and run.log (timestamps).
RunSummary run_experiment(ExperimentConfig cfg, const RunOptions& opt);

}  // namespace mflab
