// transducer/decoder.h

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

#ifndef TRANSDUCER_DECODER_H_
#define TRANSDUCER_DECODER_H_

#include <memory>
#include <string>
#include <vector>

#include "transducer/hat.h"
#include "transducer/lattice.h"
#include "transducer/lm.h"
#include "transducer/model.h"
#include "transducer/mwer.h"

namespace transducer {

// Interpolation weights for decoding with an external LM: the score is
// log P(y|x) - lambda1 log P_ilm(y) + lambda2 log P_lm(y).  (0, 0) reduces
// decoding exactly to the no-LM rule.
struct FusionWeights {
  double lambda1 = 0.0;  // internal-LM subtraction weight
  double lambda2 = 0.0;  // external-LM weight
};

struct DecodeConfig {
  int beam_size = 8;
  double temperature = 1.0;
  bool length_norm = true;
  FusionWeights fusion;
  int max_symbols_per_step = 5;  // cap on consecutive non-blank emissions
  Head head = Head::kRnnt;
  HatTemperatureMode hat_mode = HatTemperatureMode::kBlankAndLabels;
};

// Per-utterance scoring session driving the search: joint logits for any
// (frame, prediction state) pair plus predictor-only logits for internal LM
// estimation.
class StepScorer {
 public:
  // Prediction-network state after a token prefix.
  struct State {
    std::vector<double> pred;
    int len = 0;
  };

  virtual ~StepScorer() = default;
  virtual int num_frames() const = 0;
  virtual const Vocab& vocab() const = 0;
  virtual State start_state() const = 0;
  virtual State advance(const State& state, int token) const = 0;
  virtual std::vector<double> joint_logits_at(int t,
                                              const State& state) const = 0;
  virtual std::vector<double> ilm_logits_at(const State& state) const = 0;
};

// Scorer backed by the toy model; the encoder runs once at construction.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const ToyModelParams& params, const FeatureSequence& features);

  int num_frames() const override { return encoded_.rows; }
  const Vocab& vocab() const override { return params_.dims.vocab; }
  State start_state() const override;
  State advance(const State& state, int token) const override;
  std::vector<double> joint_logits_at(int t, const State& state) const
      override;
  std::vector<double> ilm_logits_at(const State& state) const override;

 private:
  const ToyModelParams& params_;
  Mat encoded_;
};

// Scorer backed by a fixed joint lattice (test fixtures): the logit column
// is selected by prefix length, clamped to the lattice's label axis.  The
// internal-LM logits are zero (a uniform label prior).
class GridScorer : public StepScorer {
 public:
  explicit GridScorer(const JointLattice& lattice) : lattice_(lattice) {}

  int num_frames() const override { return lattice_.num_frames(); }
  const Vocab& vocab() const override { return lattice_.vocab; }
  State start_state() const override { return State{}; }
  State advance(const State& state, int token) const override;
  std::vector<double> joint_logits_at(int t, const State& state) const
      override;
  std::vector<double> ilm_logits_at(const State& state) const override;

 private:
  const JointLattice& lattice_;
};

// Interpolated decode score, optionally normalized by hypothesis length.
// Throws std::invalid_argument("invalid length") when length_norm is set
// and y_len < 1.
double fusion_score(double log_p, double ilm, double lm, int y_len,
                    const FusionWeights& weights, bool length_norm);

// Re-ranks a hypothesis list by score/|y| (empty hypothesis divides by 1)
// when enabled, by unnormalized score otherwise.  Posterior/risk columns
// are permuted alongside their hypotheses.
NBestList length_norm_rerank(NBestList nbest, bool enabled);

// Output-synchronous prefix beam search with log-sum-exp prefix merging.
// Returns up to beam_size hypotheses ranked by final (fused, optionally
// length-normalized) score; each hypothesis retains its raw marginal
// log P(y|x) for MWER use.  Throws std::invalid_argument("empty input") for
// an empty acoustic sequence and std::runtime_error("search failure") if no
// hypothesis survives.
NBestList beam_search(const StepScorer& scorer, const DecodeConfig& config,
                      const LanguageModel* external_lm = nullptr,
                      std::string utt_id = "",
                      LabelSequence reference = {});

// Convenience wrapper building a ModelScorer per utterance.
NBestList decode_utterance(const ToyModelParams& params, const Utterance& utt,
                           const DecodeConfig& config,
                           const LanguageModel* external_lm = nullptr);

}  // namespace transducer

#endif  // TRANSDUCER_DECODER_H_
