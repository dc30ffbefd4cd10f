#include "lowps/grid.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lowps/errors.hpp"

namespace lowps {

double GridSpec::re_at(Index i) const {
  if (n_re <= 1) return re_min;
  return re_min + (re_max - re_min) * static_cast<double>(i) / static_cast<double>(n_re - 1);
}

double GridSpec::im_at(Index j) const {
  if (n_im <= 1) return im_min;
  return im_min + (im_max - im_min) * static_cast<double>(j) / static_cast<double>(n_im - 1);
}

Complex GridSpec::point(std::size_t k) const {
  const auto nr = static_cast<std::size_t>(n_re);
  return {re_at(static_cast<Index>(k % nr)), im_at(static_cast<Index>(k / nr))};
}

void GridSpec::validate(std::size_t cap) const {
  if (!std::isfinite(re_min) || !std::isfinite(re_max) || !std::isfinite(im_min) ||
      !std::isfinite(im_max)) {
    throw PreconditionError("grid bounds must be finite");
  }
  if (n_re < 1 || n_im < 1) throw PreconditionError("grid needs at least one point per axis");
  if ((n_re > 1 && !(re_min < re_max)) || (n_im > 1 && !(im_min < im_max))) {
    throw PreconditionError("grid requires re_min < re_max and im_min < im_max");
  }
  const double total = static_cast<double>(n_re) * static_cast<double>(n_im);
  if (total > static_cast<double>(cap)) {
    throw CapExceededError("grid has " + std::to_string(static_cast<long long>(total)) +
                           " points, cap is " + std::to_string(cap));
  }
}

GridSpec GridSpec::square(double half_width, Index n) {
  return GridSpec{-half_width, half_width, -half_width, half_width, n, n};
}

int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 0) threads = default_thread_count();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t k = begin; k < end; ++k) body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lowps
