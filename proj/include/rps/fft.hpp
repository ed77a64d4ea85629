#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>

#include "rps/common.hpp"

namespace rps {

namespace detail {

// FFTW planning is not thread-safe; execution through the new-array interface
// is. Plans are cached for the life of the process.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!p) throw std::runtime_error("fftw: planning failed");
    plans_.emplace(key, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

// Unnormalized complex DFT of fixed length: forward uses exp(-j2πkn/N),
// inverse exp(+j2πkn/N) without the 1/N factor.
class Fft {
 public:
  explicit Fft(std::size_t n)
      : n_(n),
        forward_(detail::FftPlanCache::instance().get(n, FFTW_FORWARD)),
        inverse_(detail::FftPlanCache::instance().get(n, FFTW_BACKWARD)) {}

  std::size_t size() const { return n_; }

  void forward(std::span<const Complex> in, std::span<Complex> out) const {
    run(forward_, in, out);
  }
  void inverse(std::span<const Complex> in, std::span<Complex> out) const {
    run(inverse_, in, out);
  }

 private:
  void run(fftw_plan plan, std::span<const Complex> in, std::span<Complex> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("fft: length mismatch");
    if (in.data() == out.data()) throw std::invalid_argument("fft: in-place not supported");
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

  std::size_t n_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace rps
