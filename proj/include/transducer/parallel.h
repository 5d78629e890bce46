// transducer/parallel.h

// Copyright 2026  Transducer Kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TRANSDUCER_PARALLEL_H_
#define TRANSDUCER_PARALLEL_H_

#ifdef _OPENMP
#include <omp.h>
#endif

namespace transducer {

// Execution policy for the batch-level kernels (per-utterance losses,
// per-hypothesis gradients, corpus decodes, sweep grid points).  The serial
// path is the reference implementation; kernels must produce bit-identical
// results under either policy, which the test suite asserts.  Dynamic
// programming within a single lattice is always serial.
enum class Exec { kSerial, kParallel };

inline int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_max_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

// Runs fn(i) for i in [0, n).  Each index must be independent of the others;
// any cross-index reduction belongs in a fixed-order loop after this returns.
template <typename F>
void for_each_index(Exec exec, int n, F&& fn) {
  if (exec == Exec::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) fn(i);
    return;
#endif
  }
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace transducer

#endif  // TRANSDUCER_PARALLEL_H_
