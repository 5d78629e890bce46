// transducer/lattice.cc

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

#include "transducer/lattice.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "transducer/hat.h"

namespace transducer {

namespace {

void check_shapes(int grid_cols, const LabelSequence& labels) {
  if (grid_cols != static_cast<int>(labels.size()) + 1)
    throw std::invalid_argument("lattice/label mismatch");
}

void check_labels(const Vocab& vocab, const LabelSequence& labels) {
  for (int id : labels)
    if (!vocab.valid_label(id)) throw std::invalid_argument("invalid label");
}

}  // namespace

StepDistribution rnnt_step_distribution(const Vocab& vocab,
                                        std::span<const double> cell_logits,
                                        double temperature) {
  if (static_cast<int>(cell_logits.size()) != vocab.extended_size())
    throw std::invalid_argument("vocab mismatch");
  StepDistribution out(cell_logits.begin(), cell_logits.end());
  log_softmax_inplace(out.data(), static_cast<int>(out.size()), temperature);
  return out;
}

StepGrid build_step_grid(const JointLattice& lattice,
                         const LabelSequence& labels, Head head,
                         double temperature, HatTemperatureMode hat_mode) {
  check_shapes(lattice.logits.d1, labels);
  check_labels(lattice.vocab, labels);
  int T = lattice.num_frames();
  int cols = lattice.logits.d1;
  int K = lattice.num_classes();

  StepGrid grid;
  grid.log_probs = Tensor3(T, cols, K);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < cols; ++u) {
      const double* z = lattice.logits.cell(t, u);
      double* out = grid.log_probs.cell(t, u);
      if (head == Head::kRnnt) {
        std::memcpy(out, z, K * sizeof(double));
        log_softmax_inplace(out, K, temperature);
      } else {
        HatStepDistribution d = hat_step_distribution(
            lattice.vocab, std::span<const double>(z, K), temperature,
            hat_mode);
        out[Vocab::kBlankId] = d.log_blank;
        for (int k = 1; k < K; ++k)
          out[k] = d.log_one_minus_blank + d.log_labels[k - 1];
      }
    }
  }
  return grid;
}

AlphaBetaTableau forward(const StepGrid& grid, const LabelSequence& labels) {
  check_shapes(grid.log_probs.d1, labels);
  check_labels(Vocab{grid.num_classes() - 1}, labels);
  int T = grid.num_frames();
  int U = grid.num_labels();

  AlphaBetaTableau tab;
  tab.log_alpha = Mat(T, U + 1);
  Mat& a = tab.log_alpha;
  a.fill(kLogZero);
  a.at(0, 0) = 0.0;

  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double from_blank = kLogZero;
      if (t > 0)
        from_blank = a.at(t - 1, u) +
                     grid.log_probs.at(t - 1, u, Vocab::kBlankId);
      double from_emit = kLogZero;
      if (u > 0)
        from_emit = a.at(t, u - 1) +
                    grid.log_probs.at(t, u - 1, labels[u - 1]);
      a.at(t, u) = log_add(from_blank, from_emit);
    }
  }
  tab.log_likelihood =
      a.at(T - 1, U) + grid.log_probs.at(T - 1, U, Vocab::kBlankId);
  return tab;
}

AlphaBetaTableau backward(const StepGrid& grid, const LabelSequence& labels) {
  check_shapes(grid.log_probs.d1, labels);
  check_labels(Vocab{grid.num_classes() - 1}, labels);
  int T = grid.num_frames();
  int U = grid.num_labels();

  AlphaBetaTableau tab;
  tab.log_beta = Mat(T, U + 1);
  Mat& b = tab.log_beta;
  b.fill(kLogZero);
  b.at(T - 1, U) = grid.log_probs.at(T - 1, U, Vocab::kBlankId);

  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double via_blank = kLogZero;
      if (t + 1 < T)
        via_blank = grid.log_probs.at(t, u, Vocab::kBlankId) + b.at(t + 1, u);
      double via_emit = kLogZero;
      if (u < U)
        via_emit = grid.log_probs.at(t, u, labels[u]) + b.at(t, u + 1);
      b.at(t, u) = log_add(via_blank, via_emit);
    }
  }
  tab.log_likelihood = b.at(0, 0);
  return tab;
}

NllResult nll_loss(const JointLattice& lattice, const LabelSequence& labels,
                   Head head, double temperature,
                   HatTemperatureMode hat_mode) {
  for (double z : lattice.logits.data)
    if (!std::isfinite(z)) throw std::invalid_argument("invalid lattice");

  StepGrid grid = build_step_grid(lattice, labels, head, temperature,
                                  hat_mode);
  AlphaBetaTableau fwd = forward(grid, labels);
  AlphaBetaTableau bwd = backward(grid, labels);
  double ll = fwd.log_likelihood;

  int T = lattice.num_frames();
  int U = lattice.num_labels();
  int K = lattice.num_classes();

  NllResult res;
  res.loss = -ll;
  res.grad = Tensor3(T, U + 1, K);

  // Arc occupancies G(t,u,k) = dP(y|x)/d log p(k|t,u), then the head's local
  // Jacobian maps them onto the raw logits.
  std::vector<double> occ(K);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      std::fill(occ.begin(), occ.end(), 0.0);
      double alpha = fwd.log_alpha.at(t, u);
      const double* lp = grid.log_probs.cell(t, u);

      // Terminal blank leaves the lattice with continuation probability 1;
      // a blank off the top row at u < U contributes nothing.
      double beta_blank = (t + 1 < T) ? bwd.log_beta.at(t + 1, u)
                                      : (u == U ? 0.0 : kLogZero);
      occ[Vocab::kBlankId] =
          std::exp(alpha + lp[Vocab::kBlankId] + beta_blank - ll);

      if (u < U) {
        int y = labels[u];
        occ[y] = std::exp(alpha + lp[y] + bwd.log_beta.at(t, u + 1) - ll);
      }

      double total = 0.0;
      for (int k = 0; k < K; ++k) total += occ[k];

      const double* z = lattice.logits.cell(t, u);
      double* g = res.grad.cell(t, u);
      if (head == Head::kRnnt) {
        // d lp_k / d z_j = (delta_kj - softmax_j) / Z
        std::vector<double> p =
            stable_softmax(std::span<const double>(z, K), temperature);
        for (int j = 0; j < K; ++j)
          g[j] = (total * p[j] - occ[j]) / temperature;
      } else {
        HatStepDistribution d = hat_step_distribution(
            lattice.vocab, std::span<const double>(z, K), temperature,
            hat_mode);
        double b = std::exp(d.log_blank);
        double label_occ = total - occ[Vocab::kBlankId];
        double blank_scale =
            hat_mode == HatTemperatureMode::kBlankAndLabels ? temperature
                                                            : 1.0;
        g[Vocab::kBlankId] =
            -(occ[Vocab::kBlankId] * (1.0 - b) - b * label_occ) / blank_scale;
        for (int j = 1; j < K; ++j) {
          double p_label = std::exp(d.log_labels[j - 1]);
          g[j] = (label_occ * p_label - occ[j]) / temperature;
        }
      }
    }
  }
  return res;
}

std::vector<double> enumerate_alignment_log_probs(
    const StepGrid& grid, const LabelSequence& labels) {
  check_shapes(grid.log_probs.d1, labels);
  int T = grid.num_frames();
  int U = grid.num_labels();
  if (T + U > 20) throw std::invalid_argument("oracle limit exceeded");

  std::vector<double> paths;
  std::function<void(int, int, double)> walk = [&](int t, int u, double acc) {
    if (t == T - 1 && u == U) {
      paths.push_back(acc + grid.log_probs.at(t, u, Vocab::kBlankId));
      return;
    }
    if (t + 1 < T)
      walk(t + 1, u, acc + grid.log_probs.at(t, u, Vocab::kBlankId));
    if (u < U)
      walk(t, u + 1, acc + grid.log_probs.at(t, u, labels[u]));
  };
  walk(0, 0, 0.0);
  return paths;
}

LogProb alignment_oracle(const StepGrid& grid, const LabelSequence& labels) {
  std::vector<double> paths = enumerate_alignment_log_probs(grid, labels);
  return log_sum_exp(paths);
}

LogProb sequence_log_likelihood(const JointLattice& lattice,
                                const LabelSequence& labels, Head head,
                                double temperature,
                                HatTemperatureMode hat_mode) {
  StepGrid grid = build_step_grid(lattice, labels, head, temperature,
                                  hat_mode);
  return forward(grid, labels).log_likelihood;
}

namespace {

constexpr char kLatticeMagic[4] = {'T', 'L', 'A', 'T'};
constexpr uint32_t kLatticeVersion = 1;
constexpr uint32_t kDtypeF64 = 0;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void write_lattice_file(const std::string& path,
                        const JointLattice& lattice) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write lattice file: " + path);
  os.write(kLatticeMagic, 4);
  write_u32(os, kLatticeVersion);
  write_u32(os, static_cast<uint32_t>(lattice.num_frames()));
  write_u32(os, static_cast<uint32_t>(lattice.num_labels()));
  write_u32(os, static_cast<uint32_t>(lattice.num_classes()));
  write_u32(os, kDtypeF64);
  os.write(reinterpret_cast<const char*>(lattice.logits.data.data()),
           static_cast<std::streamsize>(lattice.logits.size() *
                                        sizeof(double)));
  if (!os) throw std::runtime_error("short write: " + path);
}

JointLattice read_lattice_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read lattice file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kLatticeMagic, 4) != 0)
    throw std::runtime_error("bad lattice file: " + path);
  uint32_t version = read_u32(is);
  uint32_t T = read_u32(is);
  uint32_t U = read_u32(is);
  uint32_t K = read_u32(is);
  uint32_t dtype = read_u32(is);
  if (version != kLatticeVersion || dtype != kDtypeF64 || K == 0)
    throw std::runtime_error("bad lattice file: " + path);
  JointLattice lattice(static_cast<int>(T), static_cast<int>(U) + 1,
                       Vocab{static_cast<int>(K) - 1});
  is.read(reinterpret_cast<char*>(lattice.logits.data.data()),
          static_cast<std::streamsize>(lattice.logits.size() *
                                       sizeof(double)));
  if (!is) throw std::runtime_error("bad lattice file: " + path);
  return lattice;
}

}  // namespace transducer
