#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace ddlab {

/// Selects between the OpenMP kernels and the serial reference loops.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, n). Iterations must be independent; the first
/// exception thrown by any iteration is rethrown on the calling thread.
template <class Body>
void for_each_index(Execution exec, std::ptrdiff_t n, Body&& body)
{
  if (exec == Execution::serial || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

} // namespace ddlab
