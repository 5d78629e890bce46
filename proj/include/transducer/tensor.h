// transducer/tensor.h

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

#ifndef TRANSDUCER_TENSOR_H_
#define TRANSDUCER_TENSOR_H_

#include <cassert>
#include <cstdint>
#include <vector>

namespace transducer {

// Dense row-major matrix of doubles.  All lattice and model math is 64-bit;
// finite-difference gradient validation rules out single precision.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<size_t>(r) * cols;
  }
  size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// Dense row-major rank-3 tensor, indexed [i][j][k].
struct Tensor3 {
  int d0 = 0;
  int d1 = 0;
  int d2 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int a, int b, int c)
      : d0(a), d1(b), d2(c),
        data(static_cast<size_t>(a) * b * c, 0.0) {}

  double& at(int i, int j, int k) {
    assert(i >= 0 && i < d0 && j >= 0 && j < d1 && k >= 0 && k < d2);
    return data[(static_cast<size_t>(i) * d1 + j) * d2 + k];
  }
  double at(int i, int j, int k) const {
    assert(i >= 0 && i < d0 && j >= 0 && j < d1 && k >= 0 && k < d2);
    return data[(static_cast<size_t>(i) * d1 + j) * d2 + k];
  }
  // Pointer to the length-d2 vector at cell (i, j).
  double* cell(int i, int j) {
    return data.data() + (static_cast<size_t>(i) * d1 + j) * d2;
  }
  const double* cell(int i, int j) const {
    return data.data() + (static_cast<size_t>(i) * d1 + j) * d2;
  }
  size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace transducer

#endif  // TRANSDUCER_TENSOR_H_
