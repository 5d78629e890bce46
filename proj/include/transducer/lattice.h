// transducer/lattice.h

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

#ifndef TRANSDUCER_LATTICE_H_
#define TRANSDUCER_LATTICE_H_

#include <span>
#include <string>
#include <vector>

#include "transducer/numerics.h"
#include "transducer/tensor.h"

namespace transducer {

// Token vocabulary.  Index 0 is reserved for the blank token; label ids
// occupy 1..size.
struct Vocab {
  int size = 0;  // |V|, number of label tokens
  static constexpr int kBlankId = 0;
  int extended_size() const { return size + 1; }  // |V̄| = |V| + 1
  bool valid_label(int id) const { return id >= 1 && id <= size; }
};

// Label sequence y_1..y_U; contains no blank ids.
using LabelSequence = std::vector<int>;

// Which output head turns joint logits into per-step distributions.
enum class Head { kRnnt, kHat };

// Whether decoding temperature divides the blank sigmoid argument as well as
// the label logits for the HAT head.
enum class HatTemperatureMode { kBlankAndLabels, kLabelsOnly };

// Log-probability vector over the extended vocabulary V̄ for one (t, u) cell.
using StepDistribution = std::vector<double>;

// Joint logit tensor z[t][u][k] of shape T x (U+1) x |V̄|.  Column u indexes
// the prediction-network state after consuming y_1..y_u.
struct JointLattice {
  Tensor3 logits;
  Vocab vocab;

  JointLattice() = default;
  JointLattice(int t, int u_plus_1, Vocab v)
      : logits(t, u_plus_1, v.extended_size()), vocab(v) {}

  int num_frames() const { return logits.d0; }       // T
  int num_labels() const { return logits.d1 - 1; }   // U
  int num_classes() const { return logits.d2; }      // |V̄|
};

// Cached per-cell log-prob grid, same shape as the lattice logits.
struct StepGrid {
  Tensor3 log_probs;  // T x (U+1) x |V̄|
  int num_frames() const { return log_probs.d0; }
  int num_labels() const { return log_probs.d1 - 1; }
  int num_classes() const { return log_probs.d2; }
};

// Forward/backward variables in log space plus the sequence log-likelihood.
struct AlphaBetaTableau {
  Mat log_alpha;  // T x (U+1); empty if only backward was run
  Mat log_beta;   // T x (U+1); empty if only forward was run
  double log_likelihood = kLogZero;
};

struct NllResult {
  double loss = 0.0;  // -log P(y|x)
  Tensor3 grad;       // dloss/dz, same shape as the lattice logits
};

// Softmax over V̄ at the given temperature for one lattice cell (Head::kRnnt).
// Throws std::invalid_argument("vocab mismatch") if the cell length is not
// |V̄|.
StepDistribution rnnt_step_distribution(const Vocab& vocab,
                                        std::span<const double> cell_logits,
                                        double temperature);

// Builds the full T x (U+1) grid of per-step log-prob distributions for the
// given head.  Throws "lattice/label mismatch" on shape mismatch and
// "invalid label" if a label id is out of range.
StepGrid build_step_grid(const JointLattice& lattice,
                         const LabelSequence& labels, Head head,
                         double temperature,
                         HatTemperatureMode hat_mode =
                             HatTemperatureMode::kBlankAndLabels);

// Forward recursion: fills log_alpha and the log-likelihood
//   alpha(t,u) = alpha(t-1,u) P(blank | t-1,u) + alpha(t,u-1) P(y_u | t,u-1)
// with alpha(0,0) = 1 and likelihood alpha(T-1,U) P(blank | T-1,U).
AlphaBetaTableau forward(const StepGrid& grid, const LabelSequence& labels);

// Backward recursion: fills log_beta; log_beta[0][0] equals the sequence
// log-likelihood, which is also stored in the result.
AlphaBetaTableau backward(const StepGrid& grid, const LabelSequence& labels);

// NLL loss -log P(y|x) and its gradient with respect to the joint logits.
// Arc occupancies from forward-backward are routed through the head's local
// Jacobian (softmax for rnnt, blank-sigmoid/label-softmax for hat).  Throws
// "invalid lattice" if any logit is non-finite.
NllResult nll_loss(const JointLattice& lattice, const LabelSequence& labels,
                   Head head, double temperature,
                   HatTemperatureMode hat_mode =
                       HatTemperatureMode::kBlankAndLabels);

// Brute-force enumeration of every monotone blank/label path that maps to
// the label sequence; returns the log of the summed path probabilities.
// This is the test oracle for forward(); it is deliberately independent of
// the recursion.  Throws "oracle limit exceeded" when T + U > 20.
LogProb alignment_oracle(const StepGrid& grid, const LabelSequence& labels);

// Log-probabilities of the individual alignment paths, in enumeration order.
// Exposed so tests can check the path count C(T-1+U, U).
std::vector<double> enumerate_alignment_log_probs(const StepGrid& grid,
                                                  const LabelSequence& labels);

// Convenience: log P(y|x) for a lattice under the given head.
LogProb sequence_log_likelihood(const JointLattice& lattice,
                                const LabelSequence& labels, Head head,
                                double temperature,
                                HatTemperatureMode hat_mode =
                                    HatTemperatureMode::kBlankAndLabels);

// TLAT fixture format: header {magic "TLAT", version u32, T u32, U u32,
// K u32, dtype u32 (0 = f64)} followed by row-major little-endian doubles.
void write_lattice_file(const std::string& path, const JointLattice& lattice);
JointLattice read_lattice_file(const std::string& path);

}  // namespace transducer

#endif  // TRANSDUCER_LATTICE_H_
