#pragma once

#include <cstdint>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace perco {

// Threads to use: explicit request, else the OpenMP default.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(rep) for rep in [0, reps) across threads. Each replicate must
// derive its randomness from its own stream id and write only to its own
// slots. The first exception thrown by any replicate is rethrown.
template <class Body>
void parallel_replicates(std::int64_t reps, int threads, Body&& body) {
  std::exception_ptr failure = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads))
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    if (failure) continue;
    try {
      body(rep);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
#else
  (void)threads;
  for (std::int64_t rep = 0; rep < reps && !failure; ++rep) {
    try {
      body(rep);
    } catch (...) {
      failure = std::current_exception();
    }
  }
#endif
  if (failure) std::rethrow_exception(failure);
}

// Single-threaded reference path with the same contract; kept so tests can
// compare results against the parallel runner.
template <class Body>
void serial_replicates(std::int64_t reps, Body&& body) {
  for (std::int64_t rep = 0; rep < reps; ++rep) body(rep);
}

}  // namespace perco
