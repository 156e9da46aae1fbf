#include "mflab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "mflab/errors.hpp"

namespace mflab {

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int a = 0; a < axes(); ++a) s *= static_cast<std::size_t>(points_per_axis);
  return s;
}

double GridSpec::cell_volume() const { return std::pow(dx(), axes()); }

std::vector<double> GridSpec::x_axis() const {
  std::vector<double> x(points_per_axis);
  for (int i = 0; i < points_per_axis; ++i) x[i] = -box_half_width + dx() * i;
  return x;
}

std::vector<double> GridSpec::k_axis() const {
  const int n = points_per_axis;
  std::vector<double> k(n);
  const double dk = std::numbers::pi / box_half_width;
  for (int j = 0; j < n; ++j) k[j] = dk * (j < n / 2 ? j : j - n);
  return k;
}

double GridSpec::k_max() const { return std::numbers::pi / dx(); }

void GridSpec::validate() const {
  if (d != 1) throw std::invalid_argument("grid: only d = 1 quantum grids are supported");
  if (n_particles < 1) throw std::invalid_argument("grid: n_particles must be >= 1");
  if (points_per_axis < 2 || (points_per_axis & (points_per_axis - 1)) != 0)
    throw std::invalid_argument("grid: points_per_axis must be a power of two >= 2");
  if (!(box_half_width > 0.0)) throw std::invalid_argument("grid: box_half_width must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("grid: epsilon must be positive");
  const double cells = std::pow(static_cast<double>(points_per_axis), axes());
  if (cells * sizeof(cplx) > static_cast<double>(memory_cap_bytes()))
    throw ResourceError("grid " + std::to_string(points_per_axis) + "^" + std::to_string(axes()) + " needs " +
                        std::to_string(static_cast<long long>(cells * sizeof(cplx))) +
                        " bytes, above the memory cap of " + std::to_string(memory_cap_bytes()));
}

GridSpec GridSpec::single() const {
  GridSpec g = *this;
  g.n_particles = 1;
  g.doubled = false;
  return g;
}

std::size_t memory_cap_bytes() {
  if (const char* env = std::getenv("MFLAB_MEMORY_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::size_t{2} << 30;
}

void check_memory(std::size_t bytes, const std::string& what) {
  if (bytes > memory_cap_bytes())
    throw ResourceError(what + " needs " + std::to_string(bytes) + " bytes, above the memory cap of " +
                        std::to_string(memory_cap_bytes()));
}

namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  fftw_plan get(const std::vector<int>& shape, int sign, cplx* data) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(shape, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    // FFTW_ESTIMATE planning leaves the array untouched, so the caller's buffer is used.
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_plan p = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf, sign, FFTW_ESTIMATE);
    if (!p) throw std::runtime_error("FFTW planning failed");
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void check_alignment(const cplx* data) {
  if (reinterpret_cast<std::uintptr_t>(data) % 64 != 0)
    throw std::invalid_argument("fft: buffers must be 64-byte aligned (use CVec)");
}

}  // namespace

void fft_forward(cplx* data, const std::vector<int>& shape) {
  check_alignment(data);
  fftw_plan p = cache().get(shape, FFTW_FORWARD, data);
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

void fft_inverse(cplx* data, const std::vector<int>& shape) {
  check_alignment(data);
  fftw_plan p = cache().get(shape, FFTW_BACKWARD, data);
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) data[i] *= inv;
}

}  // namespace mflab
