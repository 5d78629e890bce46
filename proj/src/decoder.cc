// transducer/decoder.cc

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

#include "transducer/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace transducer {

ModelScorer::ModelScorer(const ToyModelParams& params,
                         const FeatureSequence& features)
    : params_(params), encoded_(encode(params, features)) {}

StepScorer::State ModelScorer::start_state() const {
  State s;
  s.pred.assign(params_.dims.d_h, 0.0);
  return s;
}

StepScorer::State ModelScorer::advance(const State& state, int token) const {
  State next;
  next.pred = predictor_step(params_, state.pred, token);
  next.len = state.len + 1;
  return next;
}

std::vector<double> ModelScorer::joint_logits_at(int t,
                                                 const State& state) const {
  return joint_logits(
      params_,
      std::span<const double>(encoded_.row(t), params_.dims.d_h),
      std::span<const double>(state.pred.data(), state.pred.size()));
}

std::vector<double> ModelScorer::ilm_logits_at(const State& state) const {
  return ilm_logits(params_, std::span<const double>(state.pred.data(),
                                                     state.pred.size()));
}

StepScorer::State GridScorer::advance(const State& state,
                                      int /*token*/) const {
  State next = state;
  next.len = state.len + 1;
  return next;
}

std::vector<double> GridScorer::joint_logits_at(int t,
                                                const State& state) const {
  int u = std::min(state.len, lattice_.num_labels());
  const double* z = lattice_.logits.cell(t, u);
  return std::vector<double>(z, z + lattice_.num_classes());
}

std::vector<double> GridScorer::ilm_logits_at(const State& /*state*/) const {
  return std::vector<double>(lattice_.num_classes(), 0.0);
}

double fusion_score(double log_p, double ilm, double lm, int y_len,
                    const FusionWeights& weights, bool length_norm) {
  if (length_norm && y_len < 1)
    throw std::invalid_argument("invalid length");
  double s = log_p;
  if (weights.lambda1 != 0.0) s -= weights.lambda1 * ilm;
  if (weights.lambda2 != 0.0) s += weights.lambda2 * lm;
  return length_norm ? s / y_len : s;
}

namespace {

struct Entry {
  LabelSequence tokens;
  double log_p = kLogZero;  // marginal over alignments reaching this prefix
  double ilm = 0.0;
  double lm = 0.0;
  StepScorer::State state;
  LmState lm_state;
};

using Beam = std::map<LabelSequence, Entry>;

double fused_score(const Entry& e, const FusionWeights& w) {
  double s = e.log_p;
  if (w.lambda1 != 0.0) s -= w.lambda1 * e.ilm;
  if (w.lambda2 != 0.0) s += w.lambda2 * e.lm;
  return s;
}

// Duplicate prefixes merge by log-sum-exp; the remaining fields depend only
// on the token sequence and are identical across merged paths.
void merge_into(Beam& beam, Entry entry) {
  auto it = beam.find(entry.tokens);
  if (it == beam.end()) {
    beam.emplace(entry.tokens, std::move(entry));
  } else {
    it->second.log_p = log_add(it->second.log_p, entry.log_p);
  }
}

// Deterministic ranking: higher score first, then shorter hypothesis, then
// lexicographic token order.
bool ranks_before(double score_a, const LabelSequence& a, double score_b,
                  const LabelSequence& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

void prune_beam(Beam& beam, int beam_size, const FusionWeights& w) {
  if (static_cast<int>(beam.size()) <= beam_size) return;
  std::vector<std::pair<double, const LabelSequence*>> order;
  order.reserve(beam.size());
  for (const auto& [tokens, e] : beam)
    order.emplace_back(fused_score(e, w), &tokens);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) {
              return ranks_before(a.first, *a.second, b.first, *b.second);
            });
  Beam kept;
  for (int i = 0; i < beam_size; ++i) {
    auto node = beam.extract(*order[i].second);
    kept.insert(std::move(node));
  }
  beam = std::move(kept);
}

// log-prob of one label under the predictor-only softmax (Eq.-style internal
// LM: label slots only, no temperature).
double ilm_token_log_prob(std::vector<double> logits, int token) {
  int v = static_cast<int>(logits.size()) - 1;
  log_softmax_inplace(logits.data() + 1, v, 1.0);
  return logits[token];
}

}  // namespace

NBestList beam_search(const StepScorer& scorer, const DecodeConfig& config,
                      const LanguageModel* external_lm, std::string utt_id,
                      LabelSequence reference) {
  int T = scorer.num_frames();
  if (T < 1) throw std::invalid_argument("empty input");
  if (config.beam_size < 1) throw std::invalid_argument("invalid beam size");
  const Vocab& vocab = scorer.vocab();
  const FusionWeights& w = config.fusion;
  bool use_ilm = w.lambda1 != 0.0;
  bool use_lm = w.lambda2 != 0.0 && external_lm != nullptr;

  Beam beam;
  {
    Entry root;
    root.log_p = 0.0;
    root.state = scorer.start_state();
    if (use_lm) root.lm_state = external_lm->start_state();
    beam.emplace(LabelSequence{}, std::move(root));
  }

  for (int t = 0; t < T; ++t) {
    Beam done;  // prefixes that have taken blank at this frame
    Beam wave = std::move(beam);
    beam.clear();
    for (int depth = 0; depth <= config.max_symbols_per_step && !wave.empty();
         ++depth) {
      prune_beam(wave, config.beam_size, w);
      Beam next;
      for (auto& [tokens, e] : wave) {
        std::vector<double> logits = scorer.joint_logits_at(t, e.state);
        StepDistribution dist;
        if (config.head == Head::kRnnt) {
          dist = rnnt_step_distribution(vocab, logits, config.temperature);
        } else {
          dist = hat_step_distribution(vocab, logits, config.temperature,
                                       config.hat_mode)
                     .combined();
        }

        Entry blank = e;
        blank.log_p = e.log_p + dist[Vocab::kBlankId];
        merge_into(done, std::move(blank));

        if (depth == config.max_symbols_per_step) continue;
        std::vector<double> ilm_lp;
        if (use_ilm) ilm_lp = scorer.ilm_logits_at(e.state);
        for (int k = 1; k <= vocab.size; ++k) {
          if (dist[k] == kLogZero) continue;  // zero-probability extension
          Entry child;
          child.tokens = e.tokens;
          child.tokens.push_back(k);
          child.log_p = e.log_p + dist[k];
          child.state = scorer.advance(e.state, k);
          if (use_ilm) child.ilm = e.ilm + ilm_token_log_prob(ilm_lp, k);
          if (use_lm) {
            child.lm = e.lm + external_lm->score_token(e.lm_state, k);
            child.lm_state = external_lm->advance(e.lm_state, k);
          } else {
            child.lm = e.lm;
            child.lm_state = e.lm_state;
          }
          merge_into(next, std::move(child));
        }
      }
      wave = std::move(next);
    }
    prune_beam(done, config.beam_size, w);
    beam = std::move(done);
  }
  if (beam.empty()) throw std::runtime_error("search failure");

  // Final ranking by fused score, normalized by emitted-token count when
  // length normalization is on (the empty hypothesis divides by 1).
  struct Ranked {
    const Entry* entry;
    double fused;
    double final_score;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(beam.size());
  for (const auto& [tokens, e] : beam) {
    double fused = fused_score(e, w);
    double len = static_cast<double>(std::max<size_t>(tokens.size(), 1));
    ranked.push_back({&e, fused, config.length_norm ? fused / len : fused});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return ranks_before(a.final_score, a.entry->tokens, b.final_score,
                        b.entry->tokens);
  });
  if (static_cast<int>(ranked.size()) > config.beam_size)
    ranked.resize(config.beam_size);

  NBestList nbest;
  nbest.utt_id = std::move(utt_id);
  nbest.reference = std::move(reference);
  std::vector<double> raw_log_probs;
  for (const Ranked& r : ranked) {
    Hypothesis h;
    h.tokens = r.entry->tokens;
    h.log_prob = r.entry->log_p;
    h.score = r.fused;
    raw_log_probs.push_back(h.log_prob);
    nbest.hypotheses.push_back(std::move(h));
  }
  nbest.posteriors = nbest_posterior(raw_log_probs);
  nbest.risks.resize(nbest.hypotheses.size());
  nbest.expected_risk = 0.0;
  for (size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    nbest.risks[i] =
        word_edit_distance(nbest.hypotheses[i].tokens, nbest.reference);
    nbest.expected_risk += nbest.posteriors[i] * nbest.risks[i];
  }
  return nbest;
}

NBestList length_norm_rerank(NBestList nbest, bool enabled) {
  size_t n = nbest.hypotheses.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  auto key = [&](size_t i) {
    const Hypothesis& h = nbest.hypotheses[i];
    double len = static_cast<double>(std::max<size_t>(h.tokens.size(), 1));
    return enabled ? h.score / len : h.score;
  };
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ranks_before(key(a), nbest.hypotheses[a].tokens, key(b),
                        nbest.hypotheses[b].tokens);
  });

  NBestList out;
  out.utt_id = std::move(nbest.utt_id);
  out.reference = std::move(nbest.reference);
  out.expected_risk = nbest.expected_risk;
  for (size_t i : order) {
    out.hypotheses.push_back(std::move(nbest.hypotheses[i]));
    if (i < nbest.posteriors.size())
      out.posteriors.push_back(nbest.posteriors[i]);
    if (i < nbest.risks.size()) out.risks.push_back(nbest.risks[i]);
  }
  return out;
}

NBestList decode_utterance(const ToyModelParams& params, const Utterance& utt,
                           const DecodeConfig& config,
                           const LanguageModel* external_lm) {
  ModelScorer scorer(params, utt.features);
  return beam_search(scorer, config, external_lm, utt.id, utt.labels);
}

}  // namespace transducer
