// transducer/evalkit.h

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

#ifndef TRANSDUCER_EVALKIT_H_
#define TRANSDUCER_EVALKIT_H_

#include <string>
#include <vector>

#include "transducer/decoder.h"
#include "transducer/lm.h"
#include "transducer/model.h"
#include "transducer/parallel.h"

namespace transducer {

// Corpus-level WER counts: wer = (S+I+D) / reference_words, pooled over all
// scored pairs (not averaged per utterance).
struct WerReport {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t reference_words = 0;

  int64_t edits() const { return substitutions + insertions + deletions; }
  double wer() const {
    if (reference_words == 0)
      return edits() == 0 ? 0.0
                          : std::numeric_limits<double>::infinity();
    return static_cast<double>(edits()) /
           static_cast<double>(reference_words);
  }
};

// Aligns one hypothesis/reference pair and splits the edits into S/I/D.
// Backtrace preference on ties: match/substitution, then deletion, then
// insertion.
WerReport align_pair(const LabelSequence& hyp, const LabelSequence& ref);

// Pooled corpus WER.  Throws std::invalid_argument("paired list mismatch")
// when the lists differ in length.
WerReport score_wer(const std::vector<LabelSequence>& hyps,
                    const std::vector<LabelSequence>& refs);

struct SweepGrid {
  std::vector<int> beams;
  std::vector<double> temperatures;
  std::vector<int> length_norms;  // 0 = off, 1 = on
  std::vector<double> lambda1s;
  std::vector<double> lambda2s;
};

struct SweepPoint {
  int beam = 8;
  double temperature = 1.0;
  bool length_norm = true;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct SweepRow {
  SweepPoint point;
  WerReport report;
  bool failed = false;
  std::string error;
};

// Exhaustive cartesian sweep over the grid axes in the order
// beam > temperature > length_norm > lambda1 > lambda2.  Row order is
// deterministic; grid points run independently (in parallel under
// Exec::kParallel) and per-row decode errors mark the row failed without
// stopping the sweep.  Throws std::invalid_argument("empty sweep axis") if
// any axis is empty.
std::vector<SweepRow> run_sweep(const ToyModelParams& params, Head head,
                                const Dataset& data, const SweepGrid& grid,
                                const LanguageModel* external_lm = nullptr,
                                int max_symbols_per_step = 5,
                                Exec exec = Exec::kSerial);

// Argmin-WER fusion weights over the given dev rows; ties break toward
// smaller lambda1, then smaller lambda2.  Failed rows are skipped.  Throws
// std::invalid_argument("empty sweep table") when nothing is usable.
FusionWeights pick_lambda(const std::vector<SweepRow>& dev_table);

// CSV schema: beam,temperature,length_norm,lambda1,lambda2,S,I,D,ref_words,
// wer.  Failed rows carry nan in the wer column.
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

// WER-vs-beam curves as a standalone SVG document: one polyline per
// (temperature, lambda1, lambda2, length_norm) group, solid for length
// normalization on and dashed for off.
std::string render_beam_curves_svg(const std::vector<SweepRow>& rows);

// Per-utterance decode results table.
struct DecodeRow {
  std::string utt_id;
  SweepPoint point;
  int64_t wer_numerator = 0;    // word edits vs. the reference
  int64_t wer_denominator = 0;  // reference length
  LabelSequence top1_tokens;
};

// CSV schema: utt_id,beam,temperature,length_norm,lambda1,lambda2,
// wer_numerator,wer_denominator,top1_tokens (tokens space-separated).
void write_decode_csv(const std::string& path,
                      const std::vector<DecodeRow>& rows);

}  // namespace transducer

#endif  // TRANSDUCER_EVALKIT_H_
