// transducer/selfcheck.cc

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

#include "transducer/selfcheck.h"

#include <cmath>
#include <cstdio>
#include <functional>

#include "transducer/hat.h"
#include "transducer/lattice.h"
#include "transducer/model.h"
#include "transducer/mwer.h"
#include "transducer/rng.h"

namespace transducer {

namespace {

// Relative-error floor: entries below it are compared absolutely, which
// keeps finite-difference rounding noise out of the verdict.
constexpr double kFdFloor = 1e-4;
constexpr double kFdEps = 1e-5;

double rel_err(double analytic, double fd) {
  double denom = std::max({std::fabs(analytic), std::fabs(fd), kFdFloor});
  return std::fabs(analytic - fd) / denom;
}

std::string format_err(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max err %.3g", v);
  return buf;
}

JointLattice random_lattice(Rng& rng, int T, int U, int vocab_size,
                            double scale = 1.5) {
  JointLattice lattice(T, U + 1, Vocab{vocab_size});
  for (double& z : lattice.logits.data) z = rng.normal() * scale;
  return lattice;
}

LabelSequence random_labels(Rng& rng, int U, int vocab_size) {
  LabelSequence labels(U);
  for (int& y : labels) y = rng.uniform_int(1, vocab_size);
  return labels;
}

CheckResult check_alignment_oracle(const SelfcheckOptions& opts) {
  CheckResult res{"alignment-oracle-vs-forward-backward", true, ""};
  Rng rng(opts.seed);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    int T = rng.uniform_int(1, 6);
    int U = rng.uniform_int(0, std::min(4, 12 - T));
    int V = rng.uniform_int(1, 4);
    Head head = i % 2 == 0 ? Head::kRnnt : Head::kHat;
    JointLattice lattice = random_lattice(rng, T, U, V);
    LabelSequence labels = random_labels(rng, U, V);
    StepGrid grid = build_step_grid(lattice, labels, head, 1.0);
    double ll = forward(grid, labels).log_likelihood;
    double ll_b = backward(grid, labels).log_likelihood;
    double oracle = alignment_oracle(grid, labels);
    worst = std::max(worst, std::fabs(ll - oracle));
    worst = std::max(worst, std::fabs(ll_b - oracle));
  }
  res.passed = worst < 1e-10;
  res.detail = format_err(worst);
  return res;
}

CheckResult check_nll_gradient(const SelfcheckOptions& opts, Head head,
                               const std::string& name) {
  CheckResult res{name, true, ""};
  Rng rng(opts.seed + (head == Head::kRnnt ? 1 : 2));
  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    int T = 4, U = 2, V = 4;
    JointLattice lattice = random_lattice(rng, T, U, V);
    LabelSequence labels = random_labels(rng, U, V);
    double temperature = rep == 2 ? 1.2 : 1.0;
    NllResult nll = nll_loss(lattice, labels, head, temperature);
    if (opts.corrupt_gradient && head == Head::kRnnt && rep == 0)
      nll.grad.data[0] += 1e-3;
    for (size_t j = 0; j < lattice.logits.data.size(); ++j) {
      double saved = lattice.logits.data[j];
      lattice.logits.data[j] = saved + kFdEps;
      double up = nll_loss(lattice, labels, head, temperature).loss;
      lattice.logits.data[j] = saved - kFdEps;
      double down = nll_loss(lattice, labels, head, temperature).loss;
      lattice.logits.data[j] = saved;
      double fd = (up - down) / (2.0 * kFdEps);
      worst = std::max(worst, rel_err(nll.grad.data[j], fd));
    }
  }
  res.passed = worst < 1e-5;
  res.detail = format_err(worst);
  return res;
}

// Expected risk of a fixed hypothesis set as a function of model parameters.
double expected_risk_of(const ToyModelParams& params, const Mat& features,
                        const std::vector<LabelSequence>& hyps,
                        const std::vector<double>& risks, Head head) {
  std::vector<double> lls(hyps.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    JointLattice lattice = model_forward(params, features, hyps[i]);
    StepGrid grid = build_step_grid(lattice, hyps[i], head, 1.0);
    lls[i] = forward(grid, hyps[i]).log_likelihood;
  }
  std::vector<double> post = nbest_posterior(lls);
  double rbar = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) rbar += post[i] * risks[i];
  return rbar;
}

CheckResult check_mwer_chain(const SelfcheckOptions& opts) {
  CheckResult res{"mwer-chain-fd", true, ""};
  Rng rng(opts.seed + 3);
  double worst = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    Head head = rep == 0 ? Head::kRnnt : Head::kHat;
    ModelDims dims{3, 4, 3, Vocab{3}};
    ToyModelParams params =
        ToyModelParams::init(dims, opts.seed + 10 + rep);
    Mat features(4, dims.d_in);
    for (double& v : features.data) v = rng.normal();
    LabelSequence reference = random_labels(rng, 2, dims.vocab.size);
    std::vector<LabelSequence> hyp_tokens = {
        reference, random_labels(rng, 3, dims.vocab.size),
        random_labels(rng, 1, dims.vocab.size)};

    std::vector<Hypothesis> hyps;
    std::vector<JointLattice> lattices;
    for (const LabelSequence& tokens : hyp_tokens) {
      JointLattice lattice = model_forward(params, features, tokens);
      StepGrid grid = build_step_grid(lattice, tokens, head, 1.0);
      double ll = forward(grid, tokens).log_likelihood;
      hyps.push_back(Hypothesis{tokens, ll, ll});
      lattices.push_back(std::move(lattice));
    }
    NBestList nbest = build_nbest("fd", hyps, reference);
    // build_nbest reorders; rebuild lattices in its order
    lattices.clear();
    std::vector<LabelSequence> ordered;
    for (const Hypothesis& h : nbest.hypotheses) {
      lattices.push_back(model_forward(params, features, h.tokens));
      ordered.push_back(h.tokens);
    }

    std::vector<Tensor3> dz =
        mwer_backprop_to_lattice(nbest, lattices, head, 1.0);
    ModelGrads grads = ToyModelParams::zeros(dims);
    for (size_t i = 0; i < dz.size(); ++i) {
      ModelGrads g = model_backward(params, features, ordered[i], dz[i]);
      auto dst = grads.named_tensors();
      auto src = g.named_tensors();
      for (size_t k = 0; k < dst.size(); ++k)
        for (size_t j = 0; j < dst[k].second->data.size(); ++j)
          dst[k].second->data[j] += src[k].second->data[j];
    }

    auto tensors = params.named_tensors();
    auto grad_tensors = grads.named_tensors();
    for (size_t k = 0; k < tensors.size(); ++k) {
      for (size_t j = 0; j < tensors[k].second->data.size(); ++j) {
        double saved = tensors[k].second->data[j];
        tensors[k].second->data[j] = saved + kFdEps;
        double up =
            expected_risk_of(params, features, ordered, nbest.risks, head);
        tensors[k].second->data[j] = saved - kFdEps;
        double down =
            expected_risk_of(params, features, ordered, nbest.risks, head);
        tensors[k].second->data[j] = saved;
        double fd = (up - down) / (2.0 * kFdEps);
        worst =
            std::max(worst, rel_err(grad_tensors[k].second->data[j], fd));
      }
    }
  }
  res.passed = worst < 1e-4;
  res.detail = format_err(worst);
  return res;
}

CheckResult check_hat_normalization(const SelfcheckOptions& opts) {
  CheckResult res{"hat-cell-normalization", true, ""};
  Rng rng(opts.seed + 4);
  Vocab vocab{5};
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> logits(vocab.extended_size());
    for (double& z : logits) z = rng.normal() * 3.0;
    HatStepDistribution d =
        hat_step_distribution(vocab, logits, i % 2 == 0 ? 1.0 : 1.2);
    double total = 0.0;
    for (double lp : d.combined()) total += std::exp(lp);
    worst = std::max(worst, std::fabs(total - 1.0));
  }
  res.passed = worst < 1e-12;
  res.detail = format_err(worst);
  return res;
}

CheckResult check_ilm_normalization(const SelfcheckOptions& opts) {
  CheckResult res{"ilm-normalization", true, ""};
  Rng rng(opts.seed + 5);
  ModelDims dims{4, 5, 3, Vocab{4}};
  ToyModelParams params = ToyModelParams::init(dims, opts.seed + 5);
  LabelSequence labels = random_labels(rng, 4, dims.vocab.size);
  Mat rows = ilm_logit_rows(params, labels);
  double worst = 0.0;
  for (int u = 0; u < rows.rows; ++u) {
    std::vector<double> lp(rows.row(u) + 1,
                           rows.row(u) + dims.vocab.extended_size());
    log_softmax_inplace(lp.data(), dims.vocab.size, 1.0);
    double total = 0.0;
    for (double v : lp) total += std::exp(v);
    worst = std::max(worst, std::fabs(total - 1.0));
  }
  res.passed = worst < 1e-10;
  res.detail = format_err(worst);
  return res;
}

CheckResult check_ilm_acoustic_invariance(const SelfcheckOptions& opts) {
  CheckResult res{"ilm-acoustic-invariance", true, ""};
  Rng rng(opts.seed + 6);
  ModelDims dims{4, 5, 3, Vocab{4}};
  ToyModelParams params = ToyModelParams::init(dims, opts.seed + 6);
  LabelSequence labels = random_labels(rng, 3, dims.vocab.size);
  // Two distinct acoustic inputs; the internal LM must not see them.
  Mat feats_a(6, dims.d_in), feats_b(9, dims.d_in);
  for (double& v : feats_a.data) v = rng.normal();
  for (double& v : feats_b.data) v = rng.normal() * 2.0 + 1.0;
  (void)model_forward(params, feats_a, labels);
  InternalLmScore score_a =
      internal_lm_score(ilm_logit_rows(params, labels), labels, dims.vocab);
  (void)model_forward(params, feats_b, labels);
  InternalLmScore score_b =
      internal_lm_score(ilm_logit_rows(params, labels), labels, dims.vocab);
  bool identical = score_a.log_prob == score_b.log_prob &&
                   score_a.per_token == score_b.per_token;
  res.passed = identical;
  res.detail = identical ? "bit-identical" : "scores differ";
  return res;
}

CheckResult check_posterior_normalization(const SelfcheckOptions& opts) {
  CheckResult res{"nbest-posterior-normalization", true, ""};
  Rng rng(opts.seed + 7);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    int n = rng.uniform_int(1, 16);
    std::vector<double> lp(n);
    for (double& v : lp) v = -30.0 * rng.uniform();
    std::vector<double> post = nbest_posterior(lp);
    double total = 0.0;
    for (double p : post) total += p;
    worst = std::max(worst, std::fabs(total - 1.0));
  }
  res.passed = worst < 1e-10;
  res.detail = format_err(worst);
  return res;
}

CheckResult check_mwer_zero_sum(const SelfcheckOptions& opts) {
  CheckResult res{"mwer-gradient-zero-sum", true, ""};
  Rng rng(opts.seed + 8);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    int n = rng.uniform_int(1, 8);
    std::vector<Hypothesis> hyps;
    for (int j = 0; j < n; ++j) {
      Hypothesis h;
      h.tokens = random_labels(rng, rng.uniform_int(0, 4), 4);
      h.log_prob = -20.0 * rng.uniform();
      h.score = h.log_prob;
      hyps.push_back(std::move(h));
    }
    NBestList nbest =
        build_nbest("zs", std::move(hyps), random_labels(rng, 3, 4));
    MwerLossResult loss = mwer_loss(nbest);
    double total = 0.0;
    for (double g : loss.dloss_dlogp) total += g;
    worst = std::max(worst, std::fabs(total));
  }
  res.passed = worst < 1e-10;
  res.detail = format_err(worst);
  return res;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(check_alignment_oracle(options));
  results.push_back(
      check_nll_gradient(options, Head::kRnnt, "nll-gradient-fd-rnnt"));
  results.push_back(
      check_nll_gradient(options, Head::kHat, "nll-gradient-fd-hat"));
  results.push_back(check_mwer_chain(options));
  results.push_back(check_hat_normalization(options));
  results.push_back(check_ilm_normalization(options));
  results.push_back(check_ilm_acoustic_invariance(options));
  results.push_back(check_posterior_normalization(options));
  results.push_back(check_mwer_zero_sum(options));
  return results;
}

std::vector<std::string> selfcheck_names() {
  return {"alignment-oracle-vs-forward-backward",
          "nll-gradient-fd-rnnt",
          "nll-gradient-fd-hat",
          "mwer-chain-fd",
          "hat-cell-normalization",
          "ilm-normalization",
          "ilm-acoustic-invariance",
          "nbest-posterior-normalization",
          "mwer-gradient-zero-sum"};
}

}  // namespace transducer
