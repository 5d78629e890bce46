// transducer/model.h

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

#ifndef TRANSDUCER_MODEL_H_
#define TRANSDUCER_MODEL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "transducer/lattice.h"
#include "transducer/lm.h"
#include "transducer/tensor.h"

namespace transducer {

// Synthetic acoustic features: T frames of dimension d_in.
using FeatureSequence = Mat;

struct ModelDims {
  int d_in = 0;   // feature dimension
  int d_h = 0;    // shared encoder/predictor hidden size (joiner input)
  int d_e = 0;    // label embedding dimension
  Vocab vocab;
};

// Desk-scale transducer: a single-layer tanh recurrent encoder producing
// f_t, a label embedding plus single-layer tanh recurrent predictor
// producing g_u, and a joiner z = W_out relu(f_t + g_u) + b_out over V̄.
// Biases are stored as 1 x d matrices so every parameter is a Mat.
struct ToyModelParams {
  ModelDims dims;
  Mat enc_w_in;    // d_h x d_in
  Mat enc_w_rec;   // d_h x d_h
  Mat enc_bias;    // 1 x d_h
  Mat embedding;   // |V| x d_e
  Mat pred_w_in;   // d_h x d_e
  Mat pred_w_rec;  // d_h x d_h
  Mat pred_bias;   // 1 x d_h
  Mat joint_w;     // |V̄| x d_h
  Mat joint_bias;  // 1 x |V̄|

  // Zero-valued parameters with the given shapes (also the gradient shape).
  static ToyModelParams zeros(const ModelDims& dims);
  // Small random initialization, deterministic in the seed.
  static ToyModelParams init(const ModelDims& dims, uint64_t seed);

  // Stable-ordered view over all parameter tensors, used by the optimizer
  // and the checkpoint writer.
  std::vector<std::pair<std::string, Mat*>> named_tensors();
  std::vector<std::pair<std::string, const Mat*>> named_tensors() const;
};

using ModelGrads = ToyModelParams;

// Encoder outputs f_t for every frame; row t is f_t.
Mat encode(const ToyModelParams& params, const FeatureSequence& features);

// Prediction-network states g_0..g_U for a label sequence; row u is the
// state after consuming y_1..y_u (row 0 is the empty-prefix state).
Mat predictor_states(const ToyModelParams& params,
                     const LabelSequence& labels);

// One predictor step from a previous state.
std::vector<double> predictor_step(const ToyModelParams& params,
                                   std::span<const double> prev_state,
                                   int token);

// Joiner logits over V̄ for one (f, g) pair.
std::vector<double> joint_logits(const ToyModelParams& params,
                                 std::span<const double> f,
                                 std::span<const double> g);

// Joiner applied to the prediction network alone (acoustic contribution
// zeroed), used for internal LM estimation.
std::vector<double> ilm_logits(const ToyModelParams& params,
                               std::span<const double> g);

// Full joint lattice z[t][u][k] = joiner(f_t, g_u)[k].  Throws
// std::invalid_argument("config error") on dimension mismatch.
JointLattice model_forward(const ToyModelParams& params,
                           const FeatureSequence& features,
                           const LabelSequence& labels);

// Predictor-only logit rows J(g_0)..J(g_{U-1}) used by internal_lm_score
// for this label sequence (row u scores y_{u+1}).
Mat ilm_logit_rows(const ToyModelParams& params, const LabelSequence& labels);

// Backpropagation of a lattice-logit gradient onto every parameter tensor;
// recurrent cells use full-sequence backprop through time.  Throws
// std::invalid_argument("shape mismatch") if dloss_dz does not match the
// lattice shape implied by features/labels.
ModelGrads model_backward(const ToyModelParams& params,
                          const FeatureSequence& features,
                          const LabelSequence& labels,
                          const Tensor3& dloss_dz);

// ---------------------------------------------------------------------------
// Synthetic task

struct Utterance {
  std::string id;
  FeatureSequence features;
  LabelSequence labels;
};

struct Dataset {
  Vocab vocab;
  int d_in = 0;
  std::vector<Utterance> utts;
};

struct SynthConfig {
  uint64_t seed = 1;
  int num_utts = 100;
  int t_min = 8;
  int t_max = 12;
  int u_min = 2;
  int u_max = 4;
  int vocab_size = 6;
  double noise_level = 0.3;
  // Optional prior over label sequences; uniform i.i.d. labels when null.
  const LanguageModel* label_prior = nullptr;
};

// Deterministic synthetic dataset: features are noisy one-hot encodings of a
// hidden token stream obtained by stretching the label sequence across T
// frames (d_in = vocab_size + 1; channel 0 is silence).  With zero noise a
// linear readout classifies every frame.  Throws
// std::invalid_argument("invalid ranges") when the ranges are inconsistent
// or labels cannot fit (u_max >= t_min).
Dataset synth_task(const SynthConfig& config);

// Dataset files: one JSON object per line {utt_id, labels, features}.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

}  // namespace transducer

#endif  // TRANSDUCER_MODEL_H_
