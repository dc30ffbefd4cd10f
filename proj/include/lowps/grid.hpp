#pragma once

#include <cstddef>
#include <functional>

#include "lowps/types.hpp"

namespace lowps {

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

// Rectangular grid in the complex plane. Points run over the real axis
// fastest: index k maps to (k % n_re, k / n_re). A single sample along an
// axis sits at the lower bound.
struct GridSpec {
  double re_min = -1.0;
  double re_max = 1.0;
  double im_min = -1.0;
  double im_max = 1.0;
  Index n_re = 1;
  Index n_im = 1;

  std::size_t size() const { return static_cast<std::size_t>(n_re) * static_cast<std::size_t>(n_im); }
  double re_at(Index i) const;
  double im_at(Index j) const;
  Complex point(std::size_t k) const;

  // Throws PreconditionError for an empty or inverted box and
  // CapExceededError when the point count exceeds cap.
  void validate(std::size_t cap = kDefaultGridCap) const;

  // Square box [-h, h] x [-h, h] with n x n points.
  static GridSpec square(double half_width, Index n);
};

// Runs body(k) for k in [0, count) over a static partition into contiguous
// chunks. threads <= 0 selects the hardware concurrency. The first exception
// raised by any worker is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

int default_thread_count();

}  // namespace lowps
