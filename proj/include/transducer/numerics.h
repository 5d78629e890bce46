// transducer/numerics.h

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

#ifndef TRANSDUCER_NUMERICS_H_
#define TRANSDUCER_NUMERICS_H_

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace transducer {

// Log-domain probability.  -inf encodes probability zero; values must never
// be NaN.  All probabilities in the toolkit live in this representation.
using LogProb = double;

constexpr LogProb kLogZero = -std::numeric_limits<double>::infinity();

// ln(a + b) given ln a and ln b.  Treats -inf as log-zero without producing
// NaN; the larger argument anchors the exponentiation.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// ln sum_i exp(v_i), max-shifted.  Returns -inf iff every input is -inf.
// Throws std::invalid_argument("empty reduction") on an empty span.
double log_sum_exp(std::span<const double> values);

// softmax(logits / temperature) with max-shift stabilization.  The output
// sums to one to within 1e-12.  Throws std::invalid_argument("invalid
// temperature") unless temperature > 0.
std::vector<double> stable_softmax(std::span<const double> logits,
                                   double temperature);

// In-place log-softmax of logits / temperature over [out, out + n).
// Same temperature contract as stable_softmax.
void log_softmax_inplace(double* out, int n, double temperature);

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// ln sigmoid(x), stable across the whole real line.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace transducer

#endif  // TRANSDUCER_NUMERICS_H_
