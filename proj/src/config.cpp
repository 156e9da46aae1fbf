#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "mflab/experiment.hpp"
#include "mflab/grid.hpp"

namespace mflab {

using nlohmann::json;

Potential PotentialSpec::build(int d) const {
  Potential base = family == "cosine" ? Potential::cosine(amplitude, wavenumber, cutoff, d)
                                      : Potential::gaussian(amplitude, width, d);
  if (scale_c == 1.0 && scale_L == 1.0) return base;
  return base.scaled(scale_c, scale_L);
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"classical-dobrushin", "quantum-dobrushin", "mk-bracket",
                                            "toeplitz-identities", "combineq",          "ot-selftest",
                                            "vlasov-moments"};
  return ids;
}

std::vector<double> ExperimentConfig::times() const {
  std::vector<double> t = output_times;
  if (t.empty()) {
    const long k = std::lround(t_final / output_every);
    for (long i = 0; i <= k; ++i) t.push_back(i * output_every);
  }
  std::sort(t.begin(), t.end());
  return t;
}

namespace {

ExperimentConfig defaults_for(const std::string& id) {
  ExperimentConfig c;
  c.experiment = id;
  if (id == "classical-dobrushin") {
    c.N = {16, 64, 256};
    c.dt = 0.025;
    c.t_final = 1.0;
    c.output_times = {0.25, 0.5, 1.0};
  } else if (id == "quantum-dobrushin") {
    c.epsilon = {0.5, 0.25};
    c.N = {2};
  } else if (id == "mk-bracket") {
    c.epsilon = {0.5, 0.25, 0.1};
    c.points_per_axis = 256;
    c.instances = 20;
  } else if (id == "toeplitz-identities") {
    c.points_per_axis = 256;
    c.instances = 10;
  } else if (id == "combineq") {
    c.N = {4, 16, 64};
  } else if (id == "ot-selftest") {
    c.instances = 50;
  } else if (id == "vlasov-moments") {
    c.t_final = 1.0;
  }
  return c;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "experiment",     "potential",   "seed",          "output",          "epsilon",        "N",
      "p",              "n",           "dt",            "t_final",         "output_times",   "output_every",
      "grid",           "coherent_center", "husimi_points", "mc_samples",  "coupled_samples", "reference_samples",
      "particles",      "subsample_size", "subsample_repeats", "instances", "max_cloud",     "counting",
      "checkpoint"};
  return keys;
}

// Reads fields into cfg, collecting diagnostics instead of throwing.
class Reader {
 public:
  Reader(const json& j, std::vector<std::string>& diag) : j_(j), diag_(diag) {}

  template <class T>
  void number(const char* key, T& out) {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) {
      diag_.push_back(std::string(key) + ": expected a number");
      return;
    }
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        diag_.push_back(std::string(key) + ": expected an integer");
        return;
      }
    }
    out = v.get<T>();
  }

  template <class T>
  void list(const char* key, std::vector<T>& out) {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    std::vector<T> tmp;
    auto push = [&](const json& e) {
      if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer())) {
        diag_.push_back(std::string(key) + ": entries must be " + (std::is_integral_v<T> ? "integers" : "numbers"));
        return false;
      }
      tmp.push_back(e.get<T>());
      return true;
    };
    if (v.is_array()) {
      for (const json& e : v)
        if (!push(e)) return;
    } else if (!push(v)) {
      return;
    }
    if (tmp.empty()) diag_.push_back(std::string(key) + ": list is empty");
    out = tmp;
  }

  void boolean(const char* key, bool& out) {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_boolean()) {
      diag_.push_back(std::string(key) + ": expected true or false");
      return;
    }
    out = j_.at(key).get<bool>();
  }

  void string(const char* key, std::string& out) {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) {
      diag_.push_back(std::string(key) + ": expected a string");
      return;
    }
    out = j_.at(key).get<std::string>();
  }

 private:
  const json& j_;
  std::vector<std::string>& diag_;
};

bool multiple_of(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

ExperimentConfig read(const json& j, std::vector<std::string>& diag) {
  if (!j.is_object()) {
    diag.push_back("config: expected a JSON object");
    return {};
  }
  if (!j.contains("experiment") || !j.at("experiment").is_string()) {
    diag.push_back("experiment: missing experiment identifier");
    return {};
  }
  const std::string id = j.at("experiment").get<std::string>();
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    std::string known;
    for (const auto& s : ids) known += (known.empty() ? "" : ", ") + s;
    diag.push_back("experiment: unknown identifier '" + id + "' (known: " + known + ")");
    return {};
  }
  ExperimentConfig c = defaults_for(id);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known_keys().count(it.key())) diag.push_back(it.key() + ": unknown field");

  Reader r(j, diag);
  r.number("seed", c.seed);
  r.string("output", c.output);
  r.list("epsilon", c.epsilon);
  r.list("N", c.N);
  r.number("p", c.p);
  r.number("n", c.n);
  r.number("dt", c.dt);
  r.number("t_final", c.t_final);
  r.list("output_times", c.output_times);
  r.number("output_every", c.output_every);
  r.number("husimi_points", c.husimi_points);
  r.number("mc_samples", c.mc_samples);
  r.number("coupled_samples", c.coupled_samples);
  r.number("reference_samples", c.reference_samples);
  r.number("particles", c.particles);
  r.number("subsample_size", c.subsample_size);
  r.number("subsample_repeats", c.subsample_repeats);
  r.number("instances", c.instances);
  r.number("max_cloud", c.max_cloud);
  r.boolean("counting", c.counting);
  r.boolean("checkpoint", c.checkpoint);
  if (j.contains("output_times") && !j.contains("t_final") && !c.output_times.empty())
    c.t_final = *std::max_element(c.output_times.begin(), c.output_times.end());

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (!g.is_object()) {
      diag.push_back("grid: expected an object");
    } else {
      for (auto it = g.begin(); it != g.end(); ++it)
        if (it.key() != "points_per_axis" && it.key() != "box_half_width")
          diag.push_back("grid." + it.key() + ": unknown field");
      Reader gr(g, diag);
      gr.number("points_per_axis", c.points_per_axis);
      gr.number("box_half_width", c.box_half_width);
    }
  }
  if (j.contains("coherent_center")) {
    const json& z = j.at("coherent_center");
    if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
      diag.push_back("coherent_center: expected [q, p]");
    else {
      c.center_q = z[0].get<double>();
      c.center_p = z[1].get<double>();
    }
  }
  if (j.contains("potential")) {
    const json& v = j.at("potential");
    if (!v.is_object()) {
      diag.push_back("potential: expected an object");
    } else {
      static const std::set<std::string> pk{"family", "amplitude", "width", "wavenumber", "cutoff", "scale"};
      for (auto it = v.begin(); it != v.end(); ++it)
        if (!pk.count(it.key())) diag.push_back("potential." + it.key() + ": unknown field");
      Reader pr(v, diag);
      pr.string("family", c.potential.family);
      pr.number("amplitude", c.potential.amplitude);
      pr.number("width", c.potential.width);
      pr.number("wavenumber", c.potential.wavenumber);
      pr.number("cutoff", c.potential.cutoff);
      if (v.contains("scale")) {
        const json& s = v.at("scale");
        if (!s.is_object()) diag.push_back("potential.scale: expected {\"c\": ..., \"L\": ...}");
        else {
          Reader sr(s, diag);
          sr.number("c", c.potential.scale_c);
          sr.number("L", c.potential.scale_L);
        }
      }
    }
  }
  return c;
}

void cross_check(const ExperimentConfig& c, std::vector<std::string>& diag) {
  const std::string& id = c.experiment;
  const PotentialSpec& v = c.potential;
  if (v.family != "gaussian" && v.family != "cosine")
    diag.push_back("potential.family: must be 'gaussian' or 'cosine'");
  if (v.family == "gaussian" && !(v.width > 0.0)) diag.push_back("potential.width: must be positive");
  if (v.family == "cosine" && !(v.cutoff > 0.0)) diag.push_back("potential.cutoff: must be positive");
  if (!std::isfinite(v.amplitude)) diag.push_back("potential.amplitude: must be finite");
  if (!(v.scale_L > 0.0)) diag.push_back("potential.scale.L: must be positive");

  for (double e : c.epsilon)
    if (!(e > 0.0)) diag.push_back("epsilon: entries must be positive");
  for (int N : c.N)
    if (N < 1) diag.push_back("N: entries must be at least 1");
  if (!(c.p >= 1.0)) diag.push_back("p: must be at least 1");
  if (c.n < 1) diag.push_back("n: must be at least 1");
  for (int N : c.N)
    if (c.n > N) diag.push_back("n: must not exceed N = " + std::to_string(N));
  if (!(c.dt > 0.0)) diag.push_back("dt: must be positive");
  if (!(c.t_final >= 0.0)) diag.push_back("t_final: must be nonnegative");
  if (c.output_times.empty() && !(c.output_every > 0.0)) diag.push_back("output_every: must be positive");
  if (c.dt > 0.0 && (id == "classical-dobrushin" || id == "quantum-dobrushin" || id == "vlasov-moments")) {
    for (double t : c.times()) {
      if (t < 0.0) diag.push_back("output_times: entries must be nonnegative");
      else if (!multiple_of(t, c.dt))
        diag.push_back("output_times: t = " + std::to_string(t) + " is not a whole number of steps of dt");
    }
  }
  if (c.instances < 1) diag.push_back("instances: must be at least 1");
  if (c.mc_samples < 1) diag.push_back("mc_samples: must be positive");
  if (c.max_cloud < 1 || c.max_cloud > 8) diag.push_back("max_cloud: must be between 1 and 8");
  if (c.husimi_points < 2) diag.push_back("husimi_points: must be at least 2");
  if (c.particles < 2) diag.push_back("particles: must be at least 2");

  if (id == "classical-dobrushin") {
    if (c.coupled_samples < 2) diag.push_back("coupled_samples: must be at least 2");
    if (c.reference_samples < 2) diag.push_back("reference_samples: must be at least 2");
    if (c.subsample_size < 1 || c.subsample_size > std::min(c.coupled_samples, c.reference_samples) ||
        c.subsample_size > 2048)
      diag.push_back("subsample_size: must be between 1 and min(coupled_samples, reference_samples, 2048)");
    if (c.subsample_repeats < 1) diag.push_back("subsample_repeats: must be at least 1");
  }

  const bool quantum = id == "quantum-dobrushin" || id == "mk-bracket" || id == "toeplitz-identities";
  if (quantum) {
    const int n = c.points_per_axis;
    if (n < 8 || (n & (n - 1)) != 0) diag.push_back("grid.points_per_axis: must be a power of two >= 8");
    if (!(c.box_half_width > 0.0)) diag.push_back("grid.box_half_width: must be positive");
  }
  if (id == "quantum-dobrushin" && c.points_per_axis >= 8 && c.box_half_width > 0.0) {
    for (int N : c.N) {
      if (N > 2) {
        diag.push_back("N: the coupled quantum evolution supports N <= 2 (d = 1)");
        continue;
      }
      const double bytes = 16.0 * std::pow(static_cast<double>(c.points_per_axis), 2 * N);
      const double cap = static_cast<double>(memory_cap_bytes());
      if (bytes > cap) {
        std::ostringstream os;
        os << "grid: doubled-system state of " << c.points_per_axis << "^" << 2 * N << " points needs "
           << static_cast<unsigned long long>(bytes) << " bytes, above the memory cap of "
           << static_cast<unsigned long long>(cap) << " bytes";
        diag.push_back(os.str());
      }
      for (double e : c.epsilon) {
        if (!(e > 0.0)) continue;
        const double L = c.box_half_width;
        // Position tail of |phi|^2 outside the inner half box; it must sit well below the runtime guard.
        if (std::erfc((0.5 * L - std::abs(c.center_q)) / std::sqrt(e)) > 1e-12)
          diag.push_back("coherent_center: q = " + std::to_string(c.center_q) + " is not inside the guard band for eps = " +
                         std::to_string(e));
        const double kmax = std::numbers::pi * c.points_per_axis / (2.0 * L);
        if (std::abs(c.center_p) / e + 7.0 / std::sqrt(2.0 * e) > kmax)
          diag.push_back("coherent_center: p = " + std::to_string(c.center_p) + " is not resolved by the grid for eps = " +
                         std::to_string(e));
        const double phase = c.dt * 2 * N * e * kmax * kmax / 2.0;
        if (c.dt > 0.0 && !(phase < std::numbers::pi))
          diag.push_back("dt: kinetic phase per step " + std::to_string(phase) + " must stay below pi for eps = " +
                         std::to_string(e));
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_config(const json& j) {
  std::vector<std::string> diag;
  const ExperimentConfig c = read(j, diag);
  if (!c.experiment.empty()) cross_check(c, diag);
  return diag;
}

ExperimentConfig parse_config(const json& j) {
  const auto diag = validate_config(j);
  if (!diag.empty()) {
    std::string msg;
    for (const auto& d : diag) msg += d + "\n";
    throw ConfigError(msg);
  }
  std::vector<std::string> unused;
  return read(j, unused);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace mflab
