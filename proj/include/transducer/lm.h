// transducer/lm.h

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

#ifndef TRANSDUCER_LM_H_
#define TRANSDUCER_LM_H_

#include <map>
#include <string>
#include <vector>

#include "transducer/lattice.h"
#include "transducer/numerics.h"
#include "transducer/rng.h"

namespace transducer {

// Opaque scoring context: the last n-1 tokens for the n-gram implementation.
// Token 0 inside a context marks the sequence start.
struct LmState {
  std::vector<int> context;
  bool operator==(const LmState&) const = default;
};

// External language model.  Immutable after construction; scoring is
// read-only and callable from concurrent decodes.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocab& vocab() const = 0;
  virtual LmState start_state() const = 0;

  // log P(token | state).  Per state, exp-scores over token = 1..|V| sum to
  // one within 1e-8.  Throws std::invalid_argument("invalid label") for a
  // token outside 1..|V|.
  virtual LogProb score_token(const LmState& state, int token) const = 0;

  // Deterministic successor state after consuming token.
  virtual LmState advance(const LmState& state, int token) const = 0;

  // Sum of per-token scores from the start state; 0 for an empty sequence.
  LogProb score_sequence(const LabelSequence& tokens) const;

  // Samples a sequence of the given length from the model's distribution.
  LabelSequence sample_sequence(int length, Rng& rng) const;
};

// Count-based n-gram LM with add-alpha smoothing.  A context never seen in
// training backs off to the next shorter context, down to the always-defined
// unigram level.
class NgramLm : public LanguageModel {
 public:
  NgramLm(Vocab vocab, int order, double alpha);

  // Accumulates counts from a corpus of label sequences.
  void train(const std::vector<LabelSequence>& corpus);

  const Vocab& vocab() const override { return vocab_; }
  LmState start_state() const override;
  LogProb score_token(const LmState& state, int token) const override;
  LmState advance(const LmState& state, int token) const override;

  int order() const { return order_; }
  double alpha() const { return alpha_; }

  // Plain-text model file: a JSON header line {order, alpha, vocab_size}
  // followed by one line per (context, token) event holding the context
  // tokens, the token, and its log10 probability.
  void save(const std::string& path) const;
  static NgramLm load(const std::string& path);

 private:
  LogProb stored_or_backoff(const std::vector<int>& context, int token) const;

  Vocab vocab_;
  int order_;
  double alpha_;
  // log-probabilities for every token given each seen context, per context
  // length (index 0 = unigram/empty context).
  std::vector<std::map<std::vector<int>, std::vector<double>>> tables_;
};

// Fixed lookup-table LM for deterministic tests: one distribution used in
// every state (context-free).
class TableLm : public LanguageModel {
 public:
  TableLm(Vocab vocab, std::vector<double> log_probs);

  // Uniform distribution over the label vocabulary.
  static TableLm uniform(Vocab vocab);

  const Vocab& vocab() const override { return vocab_; }
  LmState start_state() const override { return LmState{}; }
  LogProb score_token(const LmState& state, int token) const override;
  LmState advance(const LmState& state, int token) const override;

 private:
  Vocab vocab_;
  std::vector<double> log_probs_;  // index k-1 holds log P(k)
};

}  // namespace transducer

#endif  // TRANSDUCER_LM_H_
