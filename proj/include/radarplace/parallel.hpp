#pragma once

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <cstddef>
#include <cstdlib>
#include <memory>
#include <string>

namespace radarplace {

/// Runs body(i) for i in [0, n). Bodies must write only to index-owned slots.
template <class Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  if (n <= 0) return;
  tbb::parallel_for(tbb::blocked_range<std::ptrdiff_t>(0, n), [&](const tbb::blocked_range<std::ptrdiff_t>& r) {
    for (std::ptrdiff_t i = r.begin(); i != r.end(); ++i) body(i);
  });
}

/// Honors RADARPLACE_THREADS; keep the returned handle alive for the duration of the run.
inline std::unique_ptr<tbb::global_control> thread_limit_from_env() {
  const char* env = std::getenv("RADARPLACE_THREADS");
  if (env == nullptr) return nullptr;
  const long n = std::strtol(env, nullptr, 10);
  if (n <= 0) return nullptr;
  return std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                               static_cast<std::size_t>(n));
}

/// Number of threads parallel_for may use right now.
inline int worker_count() {
  return static_cast<int>(tbb::global_control::active_value(tbb::global_control::max_allowed_parallelism));
}

}  // namespace radarplace
