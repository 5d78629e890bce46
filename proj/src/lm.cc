// transducer/lm.cc

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

#include "transducer/lm.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace transducer {

namespace {
constexpr int kBosToken = 0;  // start marker inside n-gram contexts
}

LogProb LanguageModel::score_sequence(const LabelSequence& tokens) const {
  double total = 0.0;
  LmState state = start_state();
  for (int t : tokens) {
    total += score_token(state, t);
    state = advance(state, t);
  }
  return total;
}

LabelSequence LanguageModel::sample_sequence(int length, Rng& rng) const {
  LabelSequence out;
  out.reserve(length);
  LmState state = start_state();
  int n = vocab().size;
  for (int i = 0; i < length; ++i) {
    double r = rng.uniform();
    double acc = 0.0;
    int pick = n;
    for (int k = 1; k <= n; ++k) {
      acc += std::exp(score_token(state, k));
      if (r < acc) {
        pick = k;
        break;
      }
    }
    out.push_back(pick);
    state = advance(state, pick);
  }
  return out;
}

NgramLm::NgramLm(Vocab vocab, int order, double alpha)
    : vocab_(vocab), order_(order), alpha_(alpha),
      tables_(static_cast<size_t>(order)) {
  if (order < 1) throw std::invalid_argument("ngram order must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  // The empty context always exists so backoff terminates.
  tables_[0].emplace(std::vector<int>{},
                     std::vector<double>(vocab_.size, 0.0));
  train({});
}

void NgramLm::train(const std::vector<LabelSequence>& corpus) {
  // Raw counts per context length.
  std::vector<std::map<std::vector<int>, std::vector<int64_t>>> counts(
      static_cast<size_t>(order_));
  counts[0].emplace(std::vector<int>{},
                    std::vector<int64_t>(vocab_.size, 0));
  for (const LabelSequence& sent : corpus) {
    std::vector<int> context{kBosToken};
    for (int token : sent) {
      if (!vocab_.valid_label(token))
        throw std::invalid_argument("invalid label");
      for (int len = 0; len < order_; ++len) {
        if (len > static_cast<int>(context.size())) break;
        std::vector<int> ctx(context.end() - len, context.end());
        auto [it, inserted] = counts[len].try_emplace(
            std::move(ctx), std::vector<int64_t>(vocab_.size, 0));
        it->second[token - 1] += 1;
      }
      context.push_back(token);
      if (static_cast<int>(context.size()) > order_ - 1)
        context.erase(context.begin(),
                      context.end() - std::max(order_ - 1, 0));
    }
  }

  // Add-alpha normalization into log-prob tables.
  for (int len = 0; len < order_; ++len) {
    tables_[len].clear();
    for (const auto& [ctx, c] : counts[len]) {
      int64_t total = 0;
      for (int64_t v : c) total += v;
      std::vector<double> lp(vocab_.size);
      double denom = static_cast<double>(total) + alpha_ * vocab_.size;
      for (int k = 0; k < vocab_.size; ++k)
        lp[k] = std::log((c[k] + alpha_) / denom);
      tables_[len].emplace(ctx, std::move(lp));
    }
  }
}

LmState NgramLm::start_state() const {
  LmState s;
  if (order_ > 1) s.context = {kBosToken};
  return s;
}

LogProb NgramLm::stored_or_backoff(const std::vector<int>& context,
                                   int token) const {
  for (int len = static_cast<int>(context.size()); len >= 0; --len) {
    std::vector<int> ctx(context.end() - len, context.end());
    auto it = tables_[len].find(ctx);
    if (it != tables_[len].end()) return it->second[token - 1];
  }
  // Unreachable: the empty context is always present.
  return std::log(1.0 / vocab_.size);
}

LogProb NgramLm::score_token(const LmState& state, int token) const {
  if (!vocab_.valid_label(token)) throw std::invalid_argument("invalid label");
  return stored_or_backoff(state.context, token);
}

LmState NgramLm::advance(const LmState& state, int token) const {
  if (!vocab_.valid_label(token)) throw std::invalid_argument("invalid label");
  LmState next = state;
  next.context.push_back(token);
  int keep = std::max(order_ - 1, 0);
  if (static_cast<int>(next.context.size()) > keep)
    next.context.erase(next.context.begin(), next.context.end() - keep);
  return next;
}

void NgramLm::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write lm file: " + path);
  nlohmann::json header;
  header["order"] = order_;
  header["alpha"] = alpha_;
  header["vocab_size"] = vocab_.size;
  os << header.dump() << "\n";
  char buf[64];
  for (int len = 0; len < order_; ++len) {
    for (const auto& [ctx, lp] : tables_[len]) {
      for (int k = 0; k < vocab_.size; ++k) {
        std::ostringstream line;
        for (int c : ctx) line << c << " ";
        std::snprintf(buf, sizeof(buf), "%.17g", lp[k] / std::log(10.0));
        line << (k + 1) << " " << buf;
        os << line.str() << "\n";
      }
    }
  }
}

NgramLm NgramLm::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read lm file: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("bad lm file: " + path);
  nlohmann::json header = nlohmann::json::parse(line);
  NgramLm lm(Vocab{header.at("vocab_size").get<int>()},
             header.at("order").get<int>(), header.at("alpha").get<double>());
  for (auto& table : lm.tables_) table.clear();

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> fields;
    double v;
    while (ss >> v) fields.push_back(v);
    if (fields.size() < 2) throw std::runtime_error("bad lm file: " + path);
    double log10p = fields.back();
    int token = static_cast<int>(fields[fields.size() - 2]);
    std::vector<int> ctx;
    for (size_t i = 0; i + 2 < fields.size(); ++i)
      ctx.push_back(static_cast<int>(fields[i]));
    if (static_cast<int>(ctx.size()) >= lm.order_ ||
        !lm.vocab_.valid_label(token))
      throw std::runtime_error("bad lm file: " + path);
    auto [it, inserted] = lm.tables_[ctx.size()].try_emplace(
        ctx, std::vector<double>(lm.vocab_.size, kLogZero));
    it->second[token - 1] = log10p * std::log(10.0);
  }
  if (lm.tables_[0].empty())
    lm.tables_[0].emplace(std::vector<int>{},
                          std::vector<double>(
                              lm.vocab_.size,
                              std::log(1.0 / lm.vocab_.size)));
  return lm;
}

TableLm::TableLm(Vocab vocab, std::vector<double> log_probs)
    : vocab_(vocab), log_probs_(std::move(log_probs)) {
  if (static_cast<int>(log_probs_.size()) != vocab_.size)
    throw std::invalid_argument("vocab mismatch");
}

TableLm TableLm::uniform(Vocab vocab) {
  return TableLm(vocab, std::vector<double>(
                            vocab.size, std::log(1.0 / vocab.size)));
}

LogProb TableLm::score_token(const LmState& /*state*/, int token) const {
  if (!vocab_.valid_label(token)) throw std::invalid_argument("invalid label");
  return log_probs_[token - 1];
}

LmState TableLm::advance(const LmState& state, int token) const {
  if (!vocab_.valid_label(token)) throw std::invalid_argument("invalid label");
  return state;
}

}  // namespace transducer
