// transducer/trainer.h

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

#ifndef TRANSDUCER_TRAINER_H_
#define TRANSDUCER_TRAINER_H_

#include <optional>
#include <string>
#include <vector>

#include "transducer/model.h"
#include "transducer/parallel.h"

namespace transducer {

enum class LossKind { kNll, kMwer };
enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  uint64_t seed = 1;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  int epochs = 10;
  int batch_size = 8;
  LossKind loss = LossKind::kNll;
  Head head = Head::kRnnt;
  double temperature = 1.0;
  // MWER fine-tuning: N-best lists are decoded on the fly with this beam.
  int mwer_beam = 4;
  bool include_reference = false;     // force-add the reference to the N-best
  bool posterior_length_norm = false;
  int max_symbols_per_step = 5;
  Exec exec = Exec::kSerial;
};

// Adam moments, index-aligned with ToyModelParams::named_tensors().
struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  int64_t step = 0;

  static AdamState zeros_like(const ToyModelParams& params);
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-utterance training criterion
  // Validation metrics (NaN without a validation set):
  double val_loss = 0.0;           // mean NLL, or mean expected risk for MWER
  double val_token_error = 0.0;    // pooled greedy token error rate
  double val_expected_risk = 0.0;  // mean N-best expected risk (MWER mode)
};

struct TrainResult {
  ToyModelParams params;
  AdamState opt;
  std::vector<EpochMetrics> metrics;
};

// Runs epochs [start_epoch+1, start_epoch+config.epochs].  Deterministic in
// (seed, config): the shuffle stream is keyed by (seed, epoch) and gradient
// accumulation is a fixed-order reduction, so thread count does not change
// the result and a resumed run reproduces the uninterrupted one bit for
// bit.  Throws std::runtime_error("training diverged (loss is NaN)") on
// divergence.
TrainResult train(ToyModelParams params, const Dataset& train_data,
                  const Dataset* val_data, const TrainConfig& config,
                  const AdamState* resume_opt = nullptr, int start_epoch = 0);

// Evaluation helpers shared by the trainer, sweeps, and the test suites.
double mean_nll(const ToyModelParams& params, const Dataset& data, Head head,
                double temperature, Exec exec = Exec::kSerial);
double mean_expected_risk(const ToyModelParams& params, const Dataset& data,
                          const TrainConfig& config);
double corpus_token_error(const ToyModelParams& params, const Dataset& data,
                          Head head, double temperature, int beam,
                          bool length_norm, Exec exec = Exec::kSerial);

// Metrics CSV: epoch,loss,token_error,expected_risk (one row per epoch,
// loss = training criterion mean).  Rewritten atomically per call;
// deterministic bytes for identical metric values.
void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& metrics);

// Checkpoint: "TCKP" binary with a JSON manifest (dims, vocab, head, seed,
// epoch) followed by named f64 tensors; Adam moments ride along so training
// can resume bit-exactly.
struct Checkpoint {
  ToyModelParams params;
  Head head = Head::kRnnt;
  uint64_t seed = 0;
  int epoch = 0;
  std::optional<AdamState> opt;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace transducer

#endif  // TRANSDUCER_TRAINER_H_
