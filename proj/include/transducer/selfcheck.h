// transducer/selfcheck.h

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

#ifndef TRANSDUCER_SELFCHECK_H_
#define TRANSDUCER_SELFCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace transducer {

struct SelfcheckOptions {
  uint64_t seed = 42;
  // Fault-injection hook: perturbs one analytic gradient entry so the
  // finite-difference comparison must fail.  Verifies the checker itself.
  bool corrupt_gradient = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst observed error or failure description
};

// Runs every registered invariant check: alignment enumeration against
// forward-backward, finite-difference gradients for both heads and the full
// MWER chain, HAT and internal-LM normalization, acoustic invariance of the
// internal LM, N-best posterior normalization, and the MWER zero-sum
// property.
std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options);

// Names of all registered checks, in execution order.
std::vector<std::string> selfcheck_names();

}  // namespace transducer

#endif  // TRANSDUCER_SELFCHECK_H_
