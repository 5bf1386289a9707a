#pragma once

// Thin FFTW wrapper: cached plans, unnormalized complex transforms.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace cgh::fft {

enum class Direction { forward, backward };

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  // The FFTW planner is not thread-safe; execution with fftw_execute_dft is.
  fftw_plan get(int rank, int n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(rank, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int a = 0; a < rank; ++a) total *= static_cast<std::size_t>(n);
    std::vector<std::complex<double>> in(total), out(total);
    std::vector<int> dims(static_cast<std::size_t>(rank), n);
    fftw_plan plan = fftw_plan_dft(rank, dims.data(), reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized multidimensional DFT over a hypercube of `rank` axes with `n` points each.
/// `in` and `out` must not alias.
inline void transform(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                      int rank, int n, Direction dir) {
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = detail::PlanCache::instance().get(rank, n, sign);
  // c2c out-of-place transforms preserve their input.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace cgh::fft
