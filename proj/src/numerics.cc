// transducer/numerics.cc

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

#include "transducer/numerics.h"

#include <algorithm>
#include <stdexcept>

namespace transducer {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty reduction");
  double m = *std::max_element(values.begin(), values.end());
  if (m == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

std::vector<double> stable_softmax(std::span<const double> logits,
                                   double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("invalid temperature");
  std::vector<double> out(logits.begin(), logits.end());
  double m = kLogZero;
  for (double& v : out) {
    v /= temperature;
    m = std::max(m, v);
  }
  double z = 0.0;
  for (double& v : out) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : out) v /= z;
  return out;
}

void log_softmax_inplace(double* out, int n, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("invalid temperature");
  double m = kLogZero;
  for (int i = 0; i < n; ++i) {
    out[i] /= temperature;
    m = std::max(m, out[i]);
  }
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(out[i] - m);
  double lz = m + std::log(z);
  for (int i = 0; i < n; ++i) out[i] -= lz;
}

}  // namespace transducer
