// transducer/mwer.h

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

#ifndef TRANSDUCER_MWER_H_
#define TRANSDUCER_MWER_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "transducer/lattice.h"
#include "transducer/parallel.h"

namespace transducer {

// One decoded hypothesis.  log_prob is log P(y|x) marginalized over
// alignments; score is the decoder's (possibly fused) unnormalized ranking
// score and equals log_prob when no LM fusion is active.
struct Hypothesis {
  LabelSequence tokens;
  double log_prob = 0.0;
  double score = 0.0;

  int word_count() const { return static_cast<int>(tokens.size()); }
};

// Maps a token sequence to word units for risk computation.  The default
// treats every token as one word; a word-piece segmentation can group
// tokens.
using WordSegmenter =
    std::function<std::vector<LabelSequence>(const LabelSequence&)>;

std::vector<LabelSequence> identity_segmenter(const LabelSequence& tokens);

struct MwerOptions {
  // Length-normalize log-probs before the empirical posterior.  Off by
  // default: the posterior uses unnormalized log P(y_i|x).
  bool posterior_length_norm = false;
  WordSegmenter segmenter = identity_segmenter;
};

// N-best list with its empirical posterior, word-level risks, and expected
// risk.  Hypotheses are ordered by descending log_prob with duplicates
// merged by log-sum-exp.
struct NBestList {
  std::string utt_id;
  LabelSequence reference;
  std::vector<Hypothesis> hypotheses;
  std::vector<double> posteriors;
  std::vector<double> risks;
  double expected_risk = 0.0;
};

struct MwerLossResult {
  double loss = 0.0;                  // expected risk R̄
  std::vector<double> dloss_dlogp;    // P̂_i (R_i - R̄), per hypothesis
};

// Levenshtein distance with unit substitution/insertion/deletion costs, at
// word granularity.
int word_edit_distance(const std::vector<LabelSequence>& hyp_words,
                       const std::vector<LabelSequence>& ref_words);

// Token-sequence convenience overload (each token is one word).
int word_edit_distance(const LabelSequence& hyp, const LabelSequence& ref);

// Empirical posterior P̂_i = exp(logp_i - logsumexp(logp)).  Throws
// std::invalid_argument("empty N-best") on an empty list.
std::vector<double> nbest_posterior(std::span<const double> log_probs);

// Assembles an NBestList: merges duplicate token sequences by log-sum-exp,
// sorts by descending log_prob, and fills posteriors, risks, and expected
// risk.
NBestList build_nbest(std::string utt_id, std::vector<Hypothesis> hypotheses,
                      LabelSequence reference,
                      const MwerOptions& options = MwerOptions());

// Expected-risk loss and its gradient with respect to each hypothesis's
// sequence log-probability.
MwerLossResult mwer_loss(const NBestList& nbest,
                         const MwerOptions& options = MwerOptions());

// Chain rule onto per-hypothesis joint logits: gradient_i = dloss_dlogp[i]
// times the full forward-backward gradient of log P(y_i|x).  lattices[i]
// must be built against hypothesis i's token sequence on the shared
// acoustic encoding.  Throws std::invalid_argument("mismatch") on a
// lattice/hypothesis mismatch.
std::vector<Tensor3> mwer_backprop_to_lattice(
    const NBestList& nbest, const std::vector<JointLattice>& lattices,
    Head head, double temperature,
    const MwerOptions& options = MwerOptions(), Exec exec = Exec::kSerial);

// Line-delimited exchange format: one JSON object per utterance with
// utt_id, reference tokens, and {tokens, log_prob} hypotheses.
void write_nbest_file(const std::string& path,
                      const std::vector<NBestList>& lists);
std::vector<NBestList> read_nbest_file(const std::string& path,
                                       const MwerOptions& options =
                                           MwerOptions());

}  // namespace transducer

#endif  // TRANSDUCER_MWER_H_
