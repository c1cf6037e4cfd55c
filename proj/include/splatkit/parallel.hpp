#pragma once

#include <omp.h>

namespace splatkit {

/// Sets the OpenMP thread count for the lifetime of the object and restores
/// the previous value on destruction.
class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(int threads) : previous_(omp_get_max_threads()) {
    omp_set_num_threads(threads > 0 ? threads : 1);
  }
  ~ScopedThreadCount() { omp_set_num_threads(previous_); }

  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  int previous_;
};

}  // namespace splatkit
