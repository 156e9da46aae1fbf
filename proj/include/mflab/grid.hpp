#pragma once

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <string>
#include <vector>

namespace mflab {

using cplx = std::complex<double>;

// 64-byte aligned allocator so that every state buffer has the alignment the
// cached FFT plans were created with.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) {
    const std::size_t bytes = ((n * sizeof(T) + 63) / 64) * 64;
    void* p = std::aligned_alloc(64, bytes == 0 ? 64 : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { std::free(p); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using CVec = std::vector<cplx, AlignedAllocator<cplx>>;

// Periodic spectral grid on [-L, L)^axes with `points_per_axis` nodes per axis.
// Axis order: particle 1 .. N (then the second copy 1 .. N for doubled grids),
// row-major with the first axis slowest. Only d = 1 is supported.
struct GridSpec {
  int d = 1;
  int n_particles = 1;
  int points_per_axis = 64;
  double box_half_width = 8.0;
  double epsilon = 0.25;
  bool doubled = false;

  int axes() const { return d * n_particles * (doubled ? 2 : 1); }
  std::size_t size() const;
  std::size_t bytes() const { return size() * sizeof(cplx); }
  double dx() const { return 2.0 * box_half_width / points_per_axis; }
  double cell_volume() const;
  std::vector<double> x_axis() const;
  std::vector<double> k_axis() const;  // angular wavenumbers in FFT order
  double k_max() const;

  // Checks shape parameters and the memory cap; throws invalid_argument or ResourceError.
  void validate() const;
  GridSpec single() const;  // one particle, not doubled
};

// Default 2 GiB; overridden by the MFLAB_MEMORY_CAP environment variable (bytes).
std::size_t memory_cap_bytes();
void check_memory(std::size_t bytes, const std::string& what);

// In-place multidimensional FFT. Plans are created once per shape and cached.
void fft_forward(cplx* data, const std::vector<int>& shape);
// Inverse transform including the 1/size normalization.
void fft_inverse(cplx* data, const std::vector<int>& shape);

}  // namespace mflab
