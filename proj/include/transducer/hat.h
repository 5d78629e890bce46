// transducer/hat.h

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

#ifndef TRANSDUCER_HAT_H_
#define TRANSDUCER_HAT_H_

#include <span>
#include <vector>

#include "transducer/lattice.h"
#include "transducer/numerics.h"
#include "transducer/tensor.h"

namespace transducer {

// Factorized per-cell distribution: Bernoulli blank plus a label softmax
// normalized over V (not V̄).
struct HatStepDistribution {
  double log_blank = kLogZero;            // ln b
  double log_one_minus_blank = kLogZero;  // ln (1 - b)
  std::vector<double> log_labels;         // ln P̃(k), k = 1..|V|

  // Combined distribution over V̄: P(blank) = b, P(k) = (1-b) P̃(k).
  StepDistribution combined() const {
    StepDistribution out(log_labels.size() + 1);
    out[Vocab::kBlankId] = log_blank;
    for (size_t k = 0; k < log_labels.size(); ++k)
      out[k + 1] = log_one_minus_blank + log_labels[k];
    return out;
  }
};

// Internal LM score of a label sequence, estimated from the prediction
// network alone (acoustic contribution removed).
struct InternalLmScore {
  LogProb log_prob = 0.0;
  std::vector<double> per_token;  // per-step log-probs; log_prob is their sum
};

// Splits one cell's joint logits into blank sigmoid and label softmax.  The
// blank_id slot feeds the sigmoid; the remaining |V| slots feed the softmax.
// Throws std::invalid_argument("vocab mismatch") if the cell length is not
// |V̄|.
HatStepDistribution hat_step_distribution(
    const Vocab& vocab, std::span<const double> cell_logits,
    double temperature,
    HatTemperatureMode mode = HatTemperatureMode::kBlankAndLabels);

// Internal LM score from predictor-only joint logits.  Row u of
// predictor_logits holds J(g_u) over V̄ for the prediction state after
// y_1..y_u (so row u scores y_{u+1}); the blank slot is ignored and the
// label slots are log-softmax normalized over V.  Throws
// std::invalid_argument("invalid label") on an out-of-range label id and
// "ilm shape mismatch" when the row count differs from the label count.
InternalLmScore internal_lm_score(const Mat& predictor_logits,
                                  const LabelSequence& labels,
                                  const Vocab& vocab);

}  // namespace transducer

#endif  // TRANSDUCER_HAT_H_
