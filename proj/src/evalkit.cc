// transducer/evalkit.cc

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

#include "transducer/evalkit.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace transducer {

WerReport align_pair(const LabelSequence& hyp, const LabelSequence& ref) {
  size_t n = hyp.size();
  size_t m = ref.size();
  // cost[i][j]: edits aligning hyp[0:i) to ref[0:j).
  Mat cost(static_cast<int>(n) + 1, static_cast<int>(m) + 1);
  for (size_t i = 0; i <= n; ++i) cost.at(i, 0) = static_cast<double>(i);
  for (size_t j = 0; j <= m; ++j) cost.at(0, j) = static_cast<double>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      double sub = cost.at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      double del = cost.at(i, j - 1) + 1;  // ref word not covered
      double ins = cost.at(i - 1, j) + 1;  // extra hyp word
      cost.at(i, j) = std::min({sub, del, ins});
    }
  }

  WerReport report;
  report.reference_words = static_cast<int64_t>(m);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost.at(i, j) ==
            cost.at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++report.substitutions;
      --i;
      --j;
    } else if (j > 0 && cost.at(i, j) == cost.at(i, j - 1) + 1) {
      ++report.deletions;
      --j;
    } else {
      ++report.insertions;
      --i;
    }
  }
  return report;
}

WerReport score_wer(const std::vector<LabelSequence>& hyps,
                    const std::vector<LabelSequence>& refs) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument("paired list mismatch");
  WerReport total;
  for (size_t i = 0; i < hyps.size(); ++i) {
    WerReport r = align_pair(hyps[i], refs[i]);
    total.substitutions += r.substitutions;
    total.insertions += r.insertions;
    total.deletions += r.deletions;
    total.reference_words += r.reference_words;
  }
  return total;
}

std::vector<SweepRow> run_sweep(const ToyModelParams& params, Head head,
                                const Dataset& data, const SweepGrid& grid,
                                const LanguageModel* external_lm,
                                int max_symbols_per_step, Exec exec) {
  if (grid.beams.empty() || grid.temperatures.empty() ||
      grid.length_norms.empty() || grid.lambda1s.empty() ||
      grid.lambda2s.empty())
    throw std::invalid_argument("empty sweep axis");

  std::vector<SweepPoint> points;
  for (int beam : grid.beams)
    for (double z : grid.temperatures)
      for (int norm : grid.length_norms)
        for (double l1 : grid.lambda1s)
          for (double l2 : grid.lambda2s)
            points.push_back(SweepPoint{beam, z, norm != 0, l1, l2});

  std::vector<SweepRow> rows(points.size());
  for_each_index(exec, static_cast<int>(points.size()), [&](int i) {
    SweepRow row;
    row.point = points[i];
    try {
      DecodeConfig dc;
      dc.beam_size = row.point.beam;
      dc.temperature = row.point.temperature;
      dc.length_norm = row.point.length_norm;
      dc.fusion = FusionWeights{row.point.lambda1, row.point.lambda2};
      dc.max_symbols_per_step = max_symbols_per_step;
      dc.head = head;
      std::vector<LabelSequence> hyps(data.utts.size());
      std::vector<LabelSequence> refs(data.utts.size());
      for (size_t u = 0; u < data.utts.size(); ++u) {
        NBestList nbest =
            decode_utterance(params, data.utts[u], dc, external_lm);
        hyps[u] = nbest.hypotheses[0].tokens;
        refs[u] = data.utts[u].labels;
      }
      row.report = score_wer(hyps, refs);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows[i] = std::move(row);
  });
  return rows;
}

FusionWeights pick_lambda(const std::vector<SweepRow>& dev_table) {
  const SweepRow* best = nullptr;
  for (const SweepRow& row : dev_table) {
    if (row.failed) continue;
    if (best == nullptr) {
      best = &row;
      continue;
    }
    double a = row.report.wer();
    double b = best->report.wer();
    bool better = a < b;
    if (a == b) {
      if (row.point.lambda1 != best->point.lambda1)
        better = row.point.lambda1 < best->point.lambda1;
      else
        better = row.point.lambda2 < best->point.lambda2;
    }
    if (better) best = &row;
  }
  if (best == nullptr) throw std::invalid_argument("empty sweep table");
  return FusionWeights{best->point.lambda1, best->point.lambda2};
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write sweep csv: " + path);
  os << "beam,temperature,length_norm,lambda1,lambda2,S,I,D,ref_words,wer\n";
  char buf[256];
  for (const SweepRow& row : rows) {
    double wer = row.failed ? std::nan("") : row.report.wer();
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%d,%.17g,%.17g,%lld,%lld,%lld,%lld,%.17g\n",
                  row.point.beam, row.point.temperature,
                  row.point.length_norm ? 1 : 0, row.point.lambda1,
                  row.point.lambda2,
                  static_cast<long long>(row.report.substitutions),
                  static_cast<long long>(row.report.insertions),
                  static_cast<long long>(row.report.deletions),
                  static_cast<long long>(row.report.reference_words), wer);
    os << buf;
  }
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read sweep csv: " + path);
  std::vector<SweepRow> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    SweepRow row;
    int norm = 0;
    long long s = 0, ins = 0, d = 0, ref = 0;
    double wer = 0.0;
    ss >> row.point.beam >> row.point.temperature >> norm >>
        row.point.lambda1 >> row.point.lambda2 >> s >> ins >> d >> ref >> wer;
    if (!ss && !ss.eof()) throw std::runtime_error("bad sweep csv: " + path);
    row.point.length_norm = norm != 0;
    row.report.substitutions = s;
    row.report.insertions = ins;
    row.report.deletions = d;
    row.report.reference_words = ref;
    row.failed = std::isnan(wer);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string format_double(double v, const char* fmt = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::string render_beam_curves_svg(const std::vector<SweepRow>& rows) {
  // Group by everything except the beam axis.
  struct Key {
    double temperature, lambda1, lambda2;
    bool length_norm;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<std::pair<int, double>>> curves;
  double wer_max = 0.0;
  int beam_min = 0, beam_max = 0;
  bool first = true;
  for (const SweepRow& row : rows) {
    if (row.failed) continue;
    Key key{row.point.temperature, row.point.lambda1, row.point.lambda2,
            row.point.length_norm};
    curves[key].emplace_back(row.point.beam, row.report.wer());
    wer_max = std::max(wer_max, row.report.wer());
    if (first) {
      beam_min = beam_max = row.point.beam;
      first = false;
    }
    beam_min = std::min(beam_min, row.point.beam);
    beam_max = std::max(beam_max, row.point.beam);
  }
  if (wer_max <= 0.0) wer_max = 1.0;
  if (beam_max == beam_min) beam_max = beam_min + 1;

  const double width = 640, height = 420;
  const double ml = 60, mr = 150, mt = 20, mb = 45;
  auto x_of = [&](int beam) {
    return ml + (width - ml - mr) * (beam - beam_min) /
                    static_cast<double>(beam_max - beam_min);
  };
  auto y_of = [&](double wer) {
    return height - mb - (height - mt - mb) * (wer / (wer_max * 1.05));
  };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << (height - mb) << "\" x2=\""
      << (width - mr) << "\" y2=\"" << (height - mb)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << (height - mb) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (width - mr) / 2 << "\" y=\"" << (height - 10)
      << "\" font-size=\"13\">decoding beam</text>\n";
  svg << "<text x=\"14\" y=\"" << height / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 14 " << height / 2
      << ")\">WER</text>\n";

  int color_idx = 0;
  int legend_y = 30;
  for (auto& [key, pts] : curves) {
    std::sort(pts.begin(), pts.end());
    const char* color =
        kColors[color_idx % (sizeof(kColors) / sizeof(kColors[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\""
        << (key.length_norm ? "" : " stroke-dasharray=\"6,4\"")
        << " stroke-width=\"2\" points=\"";
    for (auto& [beam, wer] : pts)
      svg << format_double(x_of(beam)) << "," << format_double(y_of(wer))
          << " ";
    svg << "\"/>\n";
    for (auto& [beam, wer] : pts)
      svg << "<circle cx=\"" << format_double(x_of(beam)) << "\" cy=\""
          << format_double(y_of(wer)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    svg << "<text x=\"" << (width - mr + 10) << "\" y=\"" << legend_y
        << "\" font-size=\"11\" fill=\"" << color << "\">Z="
        << format_double(key.temperature, "%.2g") << " l1="
        << format_double(key.lambda1, "%.2g") << " l2="
        << format_double(key.lambda2, "%.2g")
        << (key.length_norm ? " norm" : " no-norm") << "</text>\n";
    legend_y += 16;
    // length-norm off/on pairs of one config share a color (off sorts first)
    if (key.length_norm) ++color_idx;
  }
  // y-axis reference labels
  svg << "<text x=\"" << (ml - 36) << "\" y=\"" << (y_of(0.0) + 4)
      << "\" font-size=\"11\">0</text>\n";
  svg << "<text x=\"" << (ml - 48) << "\" y=\"" << (y_of(wer_max) + 4)
      << "\" font-size=\"11\">" << format_double(wer_max, "%.3f")
      << "</text>\n";
  for (int beam = beam_min; beam <= beam_max; ++beam) {
    svg << "<text x=\"" << format_double(x_of(beam) - 3) << "\" y=\""
        << (height - mb + 16) << "\" font-size=\"11\">" << beam
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_decode_csv(const std::string& path,
                      const std::vector<DecodeRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write decode csv: " + path);
  os << "utt_id,beam,temperature,length_norm,lambda1,lambda2,"
        "wer_numerator,wer_denominator,top1_tokens\n";
  char buf[256];
  for (const DecodeRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%d,%.17g,%.17g,%lld,%lld,",
                  row.utt_id.c_str(), row.point.beam, row.point.temperature,
                  row.point.length_norm ? 1 : 0, row.point.lambda1,
                  row.point.lambda2,
                  static_cast<long long>(row.wer_numerator),
                  static_cast<long long>(row.wer_denominator));
    os << buf;
    for (size_t i = 0; i < row.top1_tokens.size(); ++i) {
      if (i > 0) os << " ";
      os << row.top1_tokens[i];
    }
    os << "\n";
  }
}

}  // namespace transducer
