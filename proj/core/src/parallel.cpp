#include "pdds/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pdds {

namespace {
std::atomic<int> g_threads{0};
}

void set_num_threads(int threads) { g_threads.store(threads < 0 ? 0 : threads); }

int num_threads() {
#ifdef _OPENMP
  const int t = g_threads.load();
  return t > 0 ? t : omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
#ifdef _OPENMP
  const int threads = num_threads();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Exceptions must not escape an OpenMP region; the first one is rethrown.
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace pdds
