// transducer/mwer.cc

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

#include "transducer/mwer.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace transducer {

std::vector<LabelSequence> identity_segmenter(const LabelSequence& tokens) {
  std::vector<LabelSequence> words;
  words.reserve(tokens.size());
  for (int t : tokens) words.push_back({t});
  return words;
}

int word_edit_distance(const std::vector<LabelSequence>& hyp_words,
                       const std::vector<LabelSequence>& ref_words) {
  size_t n = hyp_words.size();
  size_t m = ref_words.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (hyp_words[i - 1] == ref_words[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

int word_edit_distance(const LabelSequence& hyp, const LabelSequence& ref) {
  return word_edit_distance(identity_segmenter(hyp),
                            identity_segmenter(ref));
}

std::vector<double> nbest_posterior(std::span<const double> log_probs) {
  if (log_probs.empty()) throw std::invalid_argument("empty N-best");
  double lse = log_sum_exp(log_probs);
  std::vector<double> post(log_probs.size());
  for (size_t i = 0; i < log_probs.size(); ++i)
    post[i] = std::exp(log_probs[i] - lse);
  return post;
}

namespace {

// Posterior support scores: raw log-probs, or length-normalized behind the
// option.  The normalization divisor for the empty hypothesis is 1.
std::vector<double> posterior_scores(const NBestList& nbest,
                                     const MwerOptions& options) {
  std::vector<double> s(nbest.hypotheses.size());
  for (size_t i = 0; i < s.size(); ++i) {
    const Hypothesis& h = nbest.hypotheses[i];
    double len = std::max<size_t>(h.tokens.size(), 1);
    s[i] = options.posterior_length_norm ? h.log_prob / len : h.log_prob;
  }
  return s;
}

void fill_posterior_and_risk(NBestList& nbest, const MwerOptions& options) {
  nbest.posteriors = nbest_posterior(posterior_scores(nbest, options));
  std::vector<LabelSequence> ref_words = options.segmenter(nbest.reference);
  nbest.risks.resize(nbest.hypotheses.size());
  for (size_t i = 0; i < nbest.hypotheses.size(); ++i)
    nbest.risks[i] = word_edit_distance(
        options.segmenter(nbest.hypotheses[i].tokens), ref_words);
  nbest.expected_risk = 0.0;
  for (size_t i = 0; i < nbest.hypotheses.size(); ++i)
    nbest.expected_risk += nbest.posteriors[i] * nbest.risks[i];
}

}  // namespace

NBestList build_nbest(std::string utt_id, std::vector<Hypothesis> hypotheses,
                      LabelSequence reference, const MwerOptions& options) {
  if (hypotheses.empty()) throw std::invalid_argument("empty N-best");

  // Merge duplicate token sequences by log-sum-exp of their probabilities.
  std::map<LabelSequence, Hypothesis> merged;
  for (Hypothesis& h : hypotheses) {
    auto it = merged.find(h.tokens);
    if (it == merged.end()) {
      merged.emplace(h.tokens, std::move(h));
    } else {
      it->second.log_prob = log_add(it->second.log_prob, h.log_prob);
      it->second.score = log_add(it->second.score, h.score);
    }
  }

  NBestList nbest;
  nbest.utt_id = std::move(utt_id);
  nbest.reference = std::move(reference);
  nbest.hypotheses.reserve(merged.size());
  for (auto& [tokens, hyp] : merged) nbest.hypotheses.push_back(std::move(hyp));
  std::stable_sort(nbest.hypotheses.begin(), nbest.hypotheses.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     if (a.log_prob != b.log_prob)
                       return a.log_prob > b.log_prob;
                     if (a.tokens.size() != b.tokens.size())
                       return a.tokens.size() < b.tokens.size();
                     return a.tokens < b.tokens;
                   });

  fill_posterior_and_risk(nbest, options);
  return nbest;
}

MwerLossResult mwer_loss(const NBestList& nbest, const MwerOptions& options) {
  MwerLossResult res;
  res.loss = nbest.expected_risk;
  size_t n = nbest.hypotheses.size();
  res.dloss_dlogp.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double g = nbest.posteriors[i] * (nbest.risks[i] - nbest.expected_risk);
    if (options.posterior_length_norm) {
      double len = std::max<size_t>(nbest.hypotheses[i].tokens.size(), 1);
      g /= len;
    }
    res.dloss_dlogp[i] = g;
  }
  return res;
}

std::vector<Tensor3> mwer_backprop_to_lattice(
    const NBestList& nbest, const std::vector<JointLattice>& lattices,
    Head head, double temperature, const MwerOptions& options, Exec exec) {
  if (lattices.size() != nbest.hypotheses.size())
    throw std::invalid_argument("mismatch");
  for (size_t i = 0; i < lattices.size(); ++i)
    if (lattices[i].num_labels() !=
        static_cast<int>(nbest.hypotheses[i].tokens.size()))
      throw std::invalid_argument("mismatch");

  MwerLossResult loss = mwer_loss(nbest, options);
  int n = static_cast<int>(lattices.size());
  std::vector<Tensor3> grads(n);
  for_each_index(exec, n, [&](int i) {
    const Tensor3& z = lattices[i].logits;
    double w = loss.dloss_dlogp[i];
    if (w == 0.0) {
      grads[i] = Tensor3(z.d0, z.d1, z.d2);  // zero tensor
      return;
    }
    // dlog P(y_i|x)/dz is the negated NLL gradient.
    NllResult nll = nll_loss(lattices[i], nbest.hypotheses[i].tokens, head,
                             temperature);
    grads[i] = std::move(nll.grad);
    for (double& g : grads[i].data) g *= -w;
  });
  return grads;
}

void write_nbest_file(const std::string& path,
                      const std::vector<NBestList>& lists) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write nbest file: " + path);
  for (const NBestList& nbest : lists) {
    nlohmann::json rec;
    rec["utt_id"] = nbest.utt_id;
    rec["reference"] = nbest.reference;
    nlohmann::json hyps = nlohmann::json::array();
    for (const Hypothesis& h : nbest.hypotheses)
      hyps.push_back({{"tokens", h.tokens}, {"log_prob", h.log_prob}});
    rec["hypotheses"] = std::move(hyps);
    os << rec.dump() << "\n";
  }
}

std::vector<NBestList> read_nbest_file(const std::string& path,
                                       const MwerOptions& options) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read nbest file: " + path);
  std::vector<NBestList> lists;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    std::vector<Hypothesis> hyps;
    for (const auto& h : rec.at("hypotheses")) {
      Hypothesis hyp;
      hyp.tokens = h.at("tokens").get<LabelSequence>();
      hyp.log_prob = h.at("log_prob").get<double>();
      hyp.score = hyp.log_prob;
      hyps.push_back(std::move(hyp));
    }
    lists.push_back(build_nbest(rec.at("utt_id").get<std::string>(),
                                std::move(hyps),
                                rec.at("reference").get<LabelSequence>(),
                                options));
  }
  return lists;
}

}  // namespace transducer
