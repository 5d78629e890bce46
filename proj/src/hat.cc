// transducer/hat.cc

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

#include "transducer/hat.h"

#include <stdexcept>

namespace transducer {

HatStepDistribution hat_step_distribution(const Vocab& vocab,
                                          std::span<const double> cell_logits,
                                          double temperature,
                                          HatTemperatureMode mode) {
  if (static_cast<int>(cell_logits.size()) != vocab.extended_size())
    throw std::invalid_argument("vocab mismatch");
  if (!(temperature > 0.0)) throw std::invalid_argument("invalid temperature");

  double blank_arg = cell_logits[Vocab::kBlankId];
  if (mode == HatTemperatureMode::kBlankAndLabels) blank_arg /= temperature;

  HatStepDistribution d;
  d.log_blank = log_sigmoid(blank_arg);
  d.log_one_minus_blank = log_sigmoid(-blank_arg);
  d.log_labels.assign(cell_logits.begin() + 1, cell_logits.end());
  log_softmax_inplace(d.log_labels.data(),
                      static_cast<int>(d.log_labels.size()), temperature);
  return d;
}

InternalLmScore internal_lm_score(const Mat& predictor_logits,
                                  const LabelSequence& labels,
                                  const Vocab& vocab) {
  if (predictor_logits.rows != static_cast<int>(labels.size()))
    throw std::invalid_argument("ilm shape mismatch");
  if (predictor_logits.rows > 0 &&
      predictor_logits.cols != vocab.extended_size())
    throw std::invalid_argument("vocab mismatch");

  InternalLmScore score;
  score.per_token.reserve(labels.size());
  std::vector<double> row(vocab.size);
  for (size_t u = 0; u < labels.size(); ++u) {
    int y = labels[u];
    if (!vocab.valid_label(y)) throw std::invalid_argument("invalid label");
    const double* z = predictor_logits.row(static_cast<int>(u));
    // label slots only; the blank slot never enters the internal LM
    for (int k = 0; k < vocab.size; ++k) row[k] = z[k + 1];
    log_softmax_inplace(row.data(), vocab.size, 1.0);
    score.per_token.push_back(row[y - 1]);
  }
  double sum = 0.0;
  for (double v : score.per_token) sum += v;
  score.log_prob = sum;
  return score;
}

}  // namespace transducer
