// transducer/model.cc

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

#include "transducer/model.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "transducer/rng.h"

namespace transducer {

namespace {

// out += W x  (W: m x n, x: n, out: m)
void matvec_acc(const Mat& w, const double* x, double* out) {
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double acc = 0.0;
    for (int c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    out[r] += acc;
  }
}

// out += W^T y  (W: m x n, y: m, out: n)
void matvec_t_acc(const Mat& w, const double* y, double* out) {
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double yr = y[r];
    for (int c = 0; c < w.cols; ++c) out[c] += yr * wr[c];
  }
}

// W += y x^T  (outer product accumulate)
void outer_acc(Mat& w, const double* y, const double* x) {
  for (int r = 0; r < w.rows; ++r) {
    double* wr = w.row(r);
    double yr = y[r];
    for (int c = 0; c < w.cols; ++c) wr[c] += yr * x[c];
  }
}

void check_dims(const ToyModelParams& params, const FeatureSequence& features,
                const LabelSequence& labels) {
  const ModelDims& d = params.dims;
  if (features.cols != d.d_in || features.rows < 1)
    throw std::invalid_argument("config error");
  for (int y : labels)
    if (!d.vocab.valid_label(y)) throw std::invalid_argument("config error");
}

}  // namespace

ToyModelParams ToyModelParams::zeros(const ModelDims& dims) {
  ToyModelParams p;
  p.dims = dims;
  int k = dims.vocab.extended_size();
  p.enc_w_in = Mat(dims.d_h, dims.d_in);
  p.enc_w_rec = Mat(dims.d_h, dims.d_h);
  p.enc_bias = Mat(1, dims.d_h);
  p.embedding = Mat(dims.vocab.size, dims.d_e);
  p.pred_w_in = Mat(dims.d_h, dims.d_e);
  p.pred_w_rec = Mat(dims.d_h, dims.d_h);
  p.pred_bias = Mat(1, dims.d_h);
  p.joint_w = Mat(k, dims.d_h);
  p.joint_bias = Mat(1, k);
  return p;
}

ToyModelParams ToyModelParams::init(const ModelDims& dims, uint64_t seed) {
  ToyModelParams p = zeros(dims);
  Rng rng(seed);
  for (auto& [name, mat] : p.named_tensors()) {
    if (mat->cols == 0) continue;
    double scale = 1.0 / std::sqrt(static_cast<double>(mat->cols));
    for (double& v : mat->data) v = rng.normal() * scale;
  }
  // Biases start at zero.
  p.enc_bias.fill(0.0);
  p.pred_bias.fill(0.0);
  p.joint_bias.fill(0.0);
  return p;
}

std::vector<std::pair<std::string, Mat*>> ToyModelParams::named_tensors() {
  return {
      {"enc_w_in", &enc_w_in},   {"enc_w_rec", &enc_w_rec},
      {"enc_bias", &enc_bias},   {"embedding", &embedding},
      {"pred_w_in", &pred_w_in}, {"pred_w_rec", &pred_w_rec},
      {"pred_bias", &pred_bias}, {"joint_w", &joint_w},
      {"joint_bias", &joint_bias},
  };
}

std::vector<std::pair<std::string, const Mat*>> ToyModelParams::named_tensors()
    const {
  auto mutable_view = const_cast<ToyModelParams*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Mat*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, mat] : mutable_view) out.emplace_back(name, mat);
  return out;
}

Mat encode(const ToyModelParams& params, const FeatureSequence& features) {
  const ModelDims& d = params.dims;
  Mat h(features.rows, d.d_h);
  std::vector<double> prev(d.d_h, 0.0);
  for (int t = 0; t < features.rows; ++t) {
    double* ht = h.row(t);
    for (int i = 0; i < d.d_h; ++i) ht[i] = params.enc_bias.at(0, i);
    matvec_acc(params.enc_w_in, features.row(t), ht);
    matvec_acc(params.enc_w_rec, prev.data(), ht);
    for (int i = 0; i < d.d_h; ++i) ht[i] = std::tanh(ht[i]);
    prev.assign(ht, ht + d.d_h);
  }
  return h;
}

std::vector<double> predictor_step(const ToyModelParams& params,
                                   std::span<const double> prev_state,
                                   int token) {
  const ModelDims& d = params.dims;
  if (!d.vocab.valid_label(token))
    throw std::invalid_argument("invalid label");
  std::vector<double> s(d.d_h);
  for (int i = 0; i < d.d_h; ++i) s[i] = params.pred_bias.at(0, i);
  matvec_acc(params.pred_w_in, params.embedding.row(token - 1), s.data());
  matvec_acc(params.pred_w_rec, prev_state.data(), s.data());
  for (double& v : s) v = std::tanh(v);
  return s;
}

Mat predictor_states(const ToyModelParams& params,
                     const LabelSequence& labels) {
  const ModelDims& d = params.dims;
  Mat g(static_cast<int>(labels.size()) + 1, d.d_h);
  std::vector<double> state(d.d_h, 0.0);  // empty-prefix state g_0
  for (size_t u = 0; u < labels.size(); ++u) {
    state = predictor_step(params, state, labels[u]);
    double* row = g.row(static_cast<int>(u) + 1);
    std::copy(state.begin(), state.end(), row);
  }
  return g;
}

std::vector<double> joint_logits(const ToyModelParams& params,
                                 std::span<const double> f,
                                 std::span<const double> g) {
  const ModelDims& d = params.dims;
  int k = d.vocab.extended_size();
  std::vector<double> r(d.d_h);
  for (int i = 0; i < d.d_h; ++i) r[i] = std::max(f[i] + g[i], 0.0);
  std::vector<double> z(k);
  for (int i = 0; i < k; ++i) z[i] = params.joint_bias.at(0, i);
  matvec_acc(params.joint_w, r.data(), z.data());
  return z;
}

std::vector<double> ilm_logits(const ToyModelParams& params,
                               std::span<const double> g) {
  std::vector<double> zero(params.dims.d_h, 0.0);
  return joint_logits(params, zero, g);
}

JointLattice model_forward(const ToyModelParams& params,
                           const FeatureSequence& features,
                           const LabelSequence& labels) {
  check_dims(params, features, labels);
  const ModelDims& d = params.dims;
  Mat f = encode(params, features);
  Mat g = predictor_states(params, labels);

  JointLattice lattice(features.rows, g.rows, d.vocab);
  for (int t = 0; t < f.rows; ++t) {
    for (int u = 0; u < g.rows; ++u) {
      std::vector<double> z =
          joint_logits(params, std::span<const double>(f.row(t), d.d_h),
                       std::span<const double>(g.row(u), d.d_h));
      std::copy(z.begin(), z.end(), lattice.logits.cell(t, u));
    }
  }
  return lattice;
}

Mat ilm_logit_rows(const ToyModelParams& params, const LabelSequence& labels) {
  const ModelDims& d = params.dims;
  Mat g = predictor_states(params, labels);
  Mat rows(static_cast<int>(labels.size()), d.vocab.extended_size());
  for (size_t u = 0; u < labels.size(); ++u) {
    std::vector<double> z = ilm_logits(
        params, std::span<const double>(g.row(static_cast<int>(u)), d.d_h));
    std::copy(z.begin(), z.end(), rows.row(static_cast<int>(u)));
  }
  return rows;
}

ModelGrads model_backward(const ToyModelParams& params,
                          const FeatureSequence& features,
                          const LabelSequence& labels,
                          const Tensor3& dloss_dz) {
  check_dims(params, features, labels);
  const ModelDims& d = params.dims;
  int T = features.rows;
  int U = static_cast<int>(labels.size());
  int K = d.vocab.extended_size();
  if (dloss_dz.d0 != T || dloss_dz.d1 != U + 1 || dloss_dz.d2 != K)
    throw std::invalid_argument("shape mismatch");

  Mat f = encode(params, features);
  Mat g = predictor_states(params, labels);

  ModelGrads grads = ToyModelParams::zeros(d);
  Mat df(T, d.d_h);  // dloss/df_t
  Mat dg(U + 1, d.d_h);

  // Joiner: z = W r + b with r = relu(f_t + g_u).
  std::vector<double> r(d.d_h), dr(d.d_h);
  for (int t = 0; t < T; ++t) {
    const double* ft = f.row(t);
    for (int u = 0; u <= U; ++u) {
      const double* gu = g.row(u);
      const double* dz = dloss_dz.cell(t, u);
      for (int i = 0; i < d.d_h; ++i) r[i] = std::max(ft[i] + gu[i], 0.0);
      outer_acc(grads.joint_w, dz, r.data());
      for (int i = 0; i < K; ++i) grads.joint_bias.at(0, i) += dz[i];
      std::fill(dr.begin(), dr.end(), 0.0);
      matvec_t_acc(params.joint_w, dz, dr.data());
      double* dft = df.row(t);
      double* dgu = dg.row(u);
      for (int i = 0; i < d.d_h; ++i) {
        double dv = (ft[i] + gu[i]) > 0.0 ? dr[i] : 0.0;
        dft[i] += dv;
        dgu[i] += dv;
      }
    }
  }

  // Encoder backprop through time.
  std::vector<double> dh(d.d_h, 0.0), da(d.d_h);
  std::vector<double> zero_state(d.d_h, 0.0);
  for (int t = T - 1; t >= 0; --t) {
    const double* ht = f.row(t);
    const double* dft = df.row(t);
    for (int i = 0; i < d.d_h; ++i) {
      double total = dh[i] + dft[i];
      da[i] = total * (1.0 - ht[i] * ht[i]);
    }
    outer_acc(grads.enc_w_in, da.data(), features.row(t));
    const double* prev = t > 0 ? f.row(t - 1) : zero_state.data();
    outer_acc(grads.enc_w_rec, da.data(), prev);
    for (int i = 0; i < d.d_h; ++i) grads.enc_bias.at(0, i) += da[i];
    std::fill(dh.begin(), dh.end(), 0.0);
    matvec_t_acc(params.enc_w_rec, da.data(), dh.data());
  }

  // Predictor backprop through time; g_0 is a constant zero state.
  std::vector<double> ds(d.d_h, 0.0);
  for (int u = U; u >= 1; --u) {
    const double* su = g.row(u);
    const double* dgu = dg.row(u);
    for (int i = 0; i < d.d_h; ++i) {
      double total = ds[i] + dgu[i];
      da[i] = total * (1.0 - su[i] * su[i]);
    }
    const double* emb = params.embedding.row(labels[u - 1] - 1);
    outer_acc(grads.pred_w_in, da.data(), emb);
    const double* prev = g.row(u - 1);
    outer_acc(grads.pred_w_rec, da.data(), prev);
    for (int i = 0; i < d.d_h; ++i) grads.pred_bias.at(0, i) += da[i];
    matvec_t_acc(params.pred_w_in, da.data(),
                 grads.embedding.row(labels[u - 1] - 1));
    std::fill(ds.begin(), ds.end(), 0.0);
    matvec_t_acc(params.pred_w_rec, da.data(), ds.data());
  }

  return grads;
}

Dataset synth_task(const SynthConfig& config) {
  if (config.num_utts < 1 || config.t_min < 1 || config.t_min > config.t_max ||
      config.u_min < 0 || config.u_min > config.u_max ||
      config.vocab_size < 1 || config.u_max >= config.t_min ||
      config.noise_level < 0.0)
    throw std::invalid_argument("invalid ranges");

  Dataset ds;
  ds.vocab = Vocab{config.vocab_size};
  ds.d_in = config.vocab_size + 1;
  Rng rng(config.seed);

  for (int n = 0; n < config.num_utts; ++n) {
    Utterance utt;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%05d", n);
    utt.id = buf;

    int T = rng.uniform_int(config.t_min, config.t_max);
    int U = rng.uniform_int(config.u_min, config.u_max);
    if (config.label_prior != nullptr) {
      utt.labels = config.label_prior->sample_sequence(U, rng);
    } else {
      utt.labels.resize(U);
      for (int& y : utt.labels) y = rng.uniform_int(1, config.vocab_size);
    }

    // Hidden token stream: labels stretched across the frames, remainder
    // spread over the leading segments.  Channel 0 encodes silence (U = 0).
    std::vector<int> hidden(T, 0);
    if (U > 0) {
      int base = T / U;
      int rem = T % U;
      int t = 0;
      for (int u = 0; u < U; ++u) {
        int len = base + (u < rem ? 1 : 0);
        for (int i = 0; i < len; ++i) hidden[t++] = utt.labels[u];
      }
    }

    utt.features = Mat(T, ds.d_in);
    for (int t = 0; t < T; ++t) {
      double* row = utt.features.row(t);
      row[hidden[t]] = 1.0;
      for (int i = 0; i < ds.d_in; ++i)
        row[i] += config.noise_level * rng.normal();
    }
    ds.utts.push_back(std::move(utt));
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write dataset: " + path);
  for (const Utterance& utt : dataset.utts) {
    nlohmann::json rec;
    rec["utt_id"] = utt.id;
    rec["labels"] = utt.labels;
    nlohmann::json frames = nlohmann::json::array();
    for (int t = 0; t < utt.features.rows; ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (int i = 0; i < utt.features.cols; ++i)
        row.push_back(utt.features.at(t, i));
      frames.push_back(std::move(row));
    }
    rec["features"] = std::move(frames);
    rec["vocab_size"] = dataset.vocab.size;
    os << rec.dump() << "\n";
  }
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read dataset: " + path);
  Dataset ds;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    Utterance utt;
    utt.id = rec.at("utt_id").get<std::string>();
    utt.labels = rec.at("labels").get<LabelSequence>();
    const auto& frames = rec.at("features");
    int T = static_cast<int>(frames.size());
    int d_in = T > 0 ? static_cast<int>(frames[0].size()) : 0;
    utt.features = Mat(T, d_in);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < d_in; ++i)
        utt.features.at(t, i) = frames[t][i].get<double>();
    ds.vocab = Vocab{rec.at("vocab_size").get<int>()};
    ds.d_in = d_in;
    ds.utts.push_back(std::move(utt));
  }
  return ds;
}

}  // namespace transducer
