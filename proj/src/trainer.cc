// transducer/trainer.cc

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

#include "transducer/trainer.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "transducer/decoder.h"
#include "transducer/evalkit.h"
#include "transducer/rng.h"

namespace transducer {

namespace {

void accumulate(ToyModelParams& into, const ToyModelParams& grads) {
  auto dst = into.named_tensors();
  auto src = grads.named_tensors();
  for (size_t i = 0; i < dst.size(); ++i)
    for (size_t j = 0; j < dst[i].second->data.size(); ++j)
      dst[i].second->data[j] += src[i].second->data[j];
}

struct UtteranceLoss {
  double loss = 0.0;
  ToyModelParams grads;
};

DecodeConfig nbest_decode_config(const TrainConfig& config) {
  DecodeConfig dc;
  dc.beam_size = config.mwer_beam;
  dc.temperature = config.temperature;
  dc.length_norm = false;  // hypothesis selection uses unnormalized ranking
  dc.max_symbols_per_step = config.max_symbols_per_step;
  dc.head = config.head;
  return dc;
}

MwerOptions mwer_options(const TrainConfig& config) {
  MwerOptions opts;
  opts.posterior_length_norm = config.posterior_length_norm;
  return opts;
}

UtteranceLoss nll_utterance_loss(const ToyModelParams& params,
                                 const Utterance& utt,
                                 const TrainConfig& config) {
  UtteranceLoss out;
  JointLattice lattice = model_forward(params, utt.features, utt.labels);
  NllResult nll =
      nll_loss(lattice, utt.labels, config.head, config.temperature);
  out.loss = nll.loss;
  out.grads = model_backward(params, utt.features, utt.labels, nll.grad);
  return out;
}

NBestList decode_nbest(const ToyModelParams& params, const Utterance& utt,
                       const TrainConfig& config) {
  NBestList decoded = decode_utterance(params, utt, nbest_decode_config(config));
  std::vector<Hypothesis> hyps = decoded.hypotheses;
  if (config.include_reference) {
    bool found = false;
    for (const Hypothesis& h : hyps)
      if (h.tokens == utt.labels) found = true;
    if (!found) {
      JointLattice lattice = model_forward(params, utt.features, utt.labels);
      StepGrid grid = build_step_grid(lattice, utt.labels, config.head,
                                      config.temperature);
      double ll = forward(grid, utt.labels).log_likelihood;
      hyps.push_back(Hypothesis{utt.labels, ll, ll});
    }
  }
  return build_nbest(utt.id, std::move(hyps), utt.labels,
                     mwer_options(config));
}

UtteranceLoss mwer_utterance_loss(const ToyModelParams& params,
                                  const Utterance& utt,
                                  const TrainConfig& config) {
  UtteranceLoss out;
  out.grads = ToyModelParams::zeros(params.dims);

  NBestList nbest = decode_nbest(params, utt, config);
  MwerLossResult loss = mwer_loss(nbest, mwer_options(config));
  out.loss = loss.loss;

  bool any_nonzero = false;
  for (double g : loss.dloss_dlogp)
    if (g != 0.0) any_nonzero = true;
  if (!any_nonzero) return out;  // all risks equal: zero gradient

  std::vector<JointLattice> lattices;
  lattices.reserve(nbest.hypotheses.size());
  for (const Hypothesis& h : nbest.hypotheses)
    lattices.push_back(model_forward(params, utt.features, h.tokens));

  std::vector<Tensor3> dz = mwer_backprop_to_lattice(
      nbest, lattices, config.head, config.temperature, mwer_options(config));
  for (size_t i = 0; i < dz.size(); ++i) {
    if (loss.dloss_dlogp[i] == 0.0) continue;
    ToyModelParams g = model_backward(params, utt.features,
                                      nbest.hypotheses[i].tokens, dz[i]);
    accumulate(out.grads, g);
  }
  return out;
}

void apply_update(ToyModelParams& params, const ToyModelParams& grads,
                  AdamState& opt, const TrainConfig& config) {
  auto ps = params.named_tensors();
  auto gs = grads.named_tensors();
  if (config.optimizer == OptimizerKind::kSgd) {
    for (size_t i = 0; i < ps.size(); ++i)
      for (size_t j = 0; j < ps[i].second->data.size(); ++j)
        ps[i].second->data[j] -= config.learning_rate * gs[i].second->data[j];
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  opt.step += 1;
  double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.step));
  double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.step));
  for (size_t i = 0; i < ps.size(); ++i) {
    std::vector<double>& p = ps[i].second->data;
    const std::vector<double>& g = gs[i].second->data;
    std::vector<double>& m = opt.m[i].data;
    std::vector<double>& v = opt.v[i].data;
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace

AdamState AdamState::zeros_like(const ToyModelParams& params) {
  AdamState s;
  for (const auto& [name, mat] : params.named_tensors()) {
    s.m.emplace_back(mat->rows, mat->cols);
    s.v.emplace_back(mat->rows, mat->cols);
  }
  return s;
}

double mean_nll(const ToyModelParams& params, const Dataset& data, Head head,
                double temperature, Exec exec) {
  if (data.utts.empty()) return 0.0;
  std::vector<double> losses(data.utts.size());
  for_each_index(exec, static_cast<int>(data.utts.size()), [&](int i) {
    const Utterance& utt = data.utts[i];
    JointLattice lattice = model_forward(params, utt.features, utt.labels);
    StepGrid grid = build_step_grid(lattice, utt.labels, head, temperature);
    losses[i] = -forward(grid, utt.labels).log_likelihood;
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

double mean_expected_risk(const ToyModelParams& params, const Dataset& data,
                          const TrainConfig& config) {
  if (data.utts.empty()) return 0.0;
  std::vector<double> risks(data.utts.size());
  for_each_index(config.exec, static_cast<int>(data.utts.size()), [&](int i) {
    risks[i] = decode_nbest(params, data.utts[i], config).expected_risk;
  });
  double sum = 0.0;
  for (double r : risks) sum += r;
  return sum / static_cast<double>(risks.size());
}

double corpus_token_error(const ToyModelParams& params, const Dataset& data,
                          Head head, double temperature, int beam,
                          bool length_norm, Exec exec) {
  DecodeConfig dc;
  dc.beam_size = beam;
  dc.temperature = temperature;
  dc.length_norm = length_norm;
  dc.head = head;
  std::vector<LabelSequence> hyps(data.utts.size());
  std::vector<LabelSequence> refs(data.utts.size());
  for_each_index(exec, static_cast<int>(data.utts.size()), [&](int i) {
    hyps[i] = decode_utterance(params, data.utts[i], dc).hypotheses[0].tokens;
    refs[i] = data.utts[i].labels;
  });
  return score_wer(hyps, refs).wer();
}

TrainResult train(ToyModelParams params, const Dataset& train_data,
                  const Dataset* val_data, const TrainConfig& config,
                  const AdamState* resume_opt, int start_epoch) {
  if (config.batch_size < 1 || config.epochs < 0 ||
      config.learning_rate < 0.0 || config.mwer_beam < 1)
    throw std::invalid_argument("config error");
  if (train_data.utts.empty()) throw std::invalid_argument("empty dataset");

  TrainResult result;
  result.params = std::move(params);
  result.opt = resume_opt != nullptr ? *resume_opt
                                     : AdamState::zeros_like(result.params);

  size_t n = train_data.utts.size();
  std::vector<int> order(n);

  for (int e = 0; e < config.epochs; ++e) {
    int epoch = start_epoch + e + 1;
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng epoch_rng = Rng::fork(config.seed, static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += config.batch_size) {
      size_t stop = std::min(n, start + config.batch_size);
      int batch = static_cast<int>(stop - start);
      std::vector<UtteranceLoss> per_utt(batch);
      for_each_index(config.exec, batch, [&](int b) {
        const Utterance& utt = train_data.utts[order[start + b]];
        per_utt[b] = config.loss == LossKind::kNll
                         ? nll_utterance_loss(result.params, utt, config)
                         : mwer_utterance_loss(result.params, utt, config);
      });
      // Fixed-order reduction keeps training bit-reproducible.
      ToyModelParams batch_grads = ToyModelParams::zeros(result.params.dims);
      double batch_loss = 0.0;
      for (int b = 0; b < batch; ++b) {
        batch_loss += per_utt[b].loss;
        accumulate(batch_grads, per_utt[b].grads);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("training diverged (loss is NaN)");
      epoch_loss += batch_loss;
      apply_update(result.params, batch_grads, result.opt, config);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / static_cast<double>(n);
    if (val_data != nullptr && !val_data->utts.empty()) {
      if (config.loss == LossKind::kNll) {
        m.val_loss = mean_nll(result.params, *val_data, config.head,
                              config.temperature, config.exec);
        m.val_expected_risk = 0.0;
      } else {
        m.val_expected_risk =
            mean_expected_risk(result.params, *val_data, config);
        m.val_loss = m.val_expected_risk;
      }
      m.val_token_error =
          corpus_token_error(result.params, *val_data, config.head,
                             config.temperature, /*beam=*/1,
                             /*length_norm=*/false, config.exec);
    } else {
      m.val_loss = std::nan("");
      m.val_token_error = std::nan("");
      m.val_expected_risk = std::nan("");
    }
    result.metrics.push_back(m);
  }
  return result;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& metrics) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write metrics csv: " + path);
  os << "epoch,loss,token_error,expected_risk\n";
  char buf[128];
  for (const EpochMetrics& m : metrics) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", m.epoch,
                  m.train_loss, m.val_token_error, m.val_expected_risk);
    os << buf;
  }
}

namespace {

constexpr char kCheckpointMagic[4] = {'T', 'C', 'K', 'P'};
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_tensor(std::ostream& os, const std::string& name, const Mat& mat) {
  write_u32(os, static_cast<uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os, static_cast<uint32_t>(mat.rows));
  write_u32(os, static_cast<uint32_t>(mat.cols));
  os.write(reinterpret_cast<const char*>(mat.data.data()),
           static_cast<std::streamsize>(mat.data.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);

  nlohmann::json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["head"] = checkpoint.head == Head::kRnnt ? "rnnt" : "hat";
  manifest["seed"] = checkpoint.seed;
  manifest["epoch"] = checkpoint.epoch;
  manifest["dims"] = {{"d_in", checkpoint.params.dims.d_in},
                      {"d_h", checkpoint.params.dims.d_h},
                      {"d_e", checkpoint.params.dims.d_e},
                      {"vocab_size", checkpoint.params.dims.vocab.size}};
  manifest["optimizer"] = {
      {"present", checkpoint.opt.has_value()},
      {"step", checkpoint.opt.has_value() ? checkpoint.opt->step : 0}};
  std::string manifest_str = manifest.dump();

  os.write(kCheckpointMagic, 4);
  write_u32(os, kCheckpointVersion);
  write_u64(os, manifest_str.size());
  os.write(manifest_str.data(),
           static_cast<std::streamsize>(manifest_str.size()));

  auto tensors = checkpoint.params.named_tensors();
  uint32_t count = static_cast<uint32_t>(tensors.size());
  if (checkpoint.opt.has_value()) count += 2 * tensors.size();
  write_u32(os, count);
  for (const auto& [name, mat] : tensors) write_tensor(os, name, *mat);
  if (checkpoint.opt.has_value()) {
    for (size_t i = 0; i < tensors.size(); ++i) {
      write_tensor(os, "adam.m." + tensors[i].first, checkpoint.opt->m[i]);
      write_tensor(os, "adam.v." + tensors[i].first, checkpoint.opt->v[i]);
    }
  }
  if (!os) throw std::runtime_error("short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint: " + path);
  uint32_t version = read_u32(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("bad checkpoint: " + path);
  uint64_t manifest_len = read_u64(is);
  std::string manifest_str(manifest_len, '\0');
  is.read(manifest_str.data(), static_cast<std::streamsize>(manifest_len));
  nlohmann::json manifest = nlohmann::json::parse(manifest_str);

  ModelDims dims;
  dims.d_in = manifest.at("dims").at("d_in").get<int>();
  dims.d_h = manifest.at("dims").at("d_h").get<int>();
  dims.d_e = manifest.at("dims").at("d_e").get<int>();
  dims.vocab = Vocab{manifest.at("dims").at("vocab_size").get<int>()};

  Checkpoint ckpt;
  ckpt.params = ToyModelParams::zeros(dims);
  ckpt.head = manifest.at("head").get<std::string>() == "hat" ? Head::kHat
                                                              : Head::kRnnt;
  ckpt.seed = manifest.at("seed").get<uint64_t>();
  ckpt.epoch = manifest.at("epoch").get<int>();
  bool has_opt = manifest.at("optimizer").at("present").get<bool>();
  if (has_opt) {
    ckpt.opt = AdamState::zeros_like(ckpt.params);
    ckpt.opt->step = manifest.at("optimizer").at("step").get<int64_t>();
  }

  auto tensors = ckpt.params.named_tensors();
  uint32_t count = read_u32(is);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t rows = read_u32(is);
    uint32_t cols = read_u32(is);

    Mat* target = nullptr;
    for (size_t j = 0; j < tensors.size() && target == nullptr; ++j) {
      if (name == tensors[j].first) {
        target = tensors[j].second;
      } else if (ckpt.opt.has_value()) {
        if (name == "adam.m." + tensors[j].first)
          target = &ckpt.opt->m[j];
        else if (name == "adam.v." + tensors[j].first)
          target = &ckpt.opt->v[j];
      }
    }
    if (target == nullptr ||
        target->rows != static_cast<int>(rows) ||
        target->cols != static_cast<int>(cols))
      throw std::runtime_error("bad checkpoint: " + path);
    is.read(reinterpret_cast<char*>(target->data.data()),
            static_cast<std::streamsize>(target->data.size() *
                                         sizeof(double)));
  }
  if (!is) throw std::runtime_error("bad checkpoint: " + path);
  return ckpt;
}

}  // namespace transducer
