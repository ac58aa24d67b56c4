// Copyright 2026 The NeedForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "needforge/agreement.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "needforge/error.h"
#include "needforge/random.h"
#include "needforge/stats.h"

namespace needforge {
namespace {

using Key = std::pair<std::string, std::string>;

double Statistic(const LabelPairs& pairs, AgreementStatistic statistic) {
  return statistic == AgreementStatistic::kKappa ? CohenKappa(pairs)
                                                 : MeanAbsoluteError(pairs);
}

void RequireNonEmpty(const LabelPairs& pairs) {
  if (pairs.pairs.empty()) throw InvalidArgument("no label pairs");
}

}  // namespace

void LabelPairs::Validate() const {
  std::set<Key> seen;
  for (const LabelPair& p : pairs) {
    if (!scale.InRange(p.gold) || !scale.InRange(p.predicted)) {
      throw InvalidArgument(fmt::format("label outside 0..{} for ({}, {})",
                                        scale.max_grade, p.topic_id, p.doc_id));
    }
    if (!seen.emplace(p.topic_id, p.doc_id).second) {
      throw InvalidArgument(
          fmt::format("duplicate pair ({}, {})", p.topic_id, p.doc_id));
    }
  }
}

AlignedLabels AlignLabels(const Qrels& gold,
                          const std::vector<JudgmentRecord>& judgments) {
  AlignedLabels out{LabelPairs{{}, gold.scale()}, 0, 0};
  std::map<Key, int> predicted;
  for (const JudgmentRecord& r : judgments) {
    if (r.error_flag || !r.grade) {
      ++out.chi;
      continue;
    }
    if (!gold.Contains(r.topic_id, r.doc_id)) {
      ++out.unmatched;
      continue;
    }
    if (!predicted.emplace(Key{r.topic_id, r.doc_id}, *r.grade).second) {
      throw InvalidArgument(
          fmt::format("judged twice: ({}, {})", r.topic_id, r.doc_id));
    }
  }
  for (const auto& [key, grade] : predicted) {
    out.labels.pairs.push_back(
        {key.first, key.second, *gold.Grade(key.first, key.second), grade});
  }
  out.labels.Validate();
  return out;
}

int Binarize(int grade, const GradeScale& scale) {
  if (!scale.InRange(grade)) {
    throw InvalidArgument(
        fmt::format("grade {} outside 0..{}", grade, scale.max_grade));
  }
  return grade >= scale.binary_threshold ? 1 : 0;
}

LabelPairs BinarizePairs(const LabelPairs& pairs) {
  LabelPairs out{{}, GradeScale{pairs.scale.name, 1, 1}};
  out.pairs.reserve(pairs.size());
  for (const LabelPair& p : pairs.pairs) {
    out.pairs.push_back({p.topic_id, p.doc_id, Binarize(p.gold, pairs.scale),
                         Binarize(p.predicted, pairs.scale)});
  }
  return out;
}

KappaResult CohenKappaDetail(const LabelPairs& pairs) {
  RequireNonEmpty(pairs);
  const int k = pairs.scale.num_categories();
  std::vector<double> gold_marginal(k, 0.0);
  std::vector<double> pred_marginal(k, 0.0);
  double agree = 0.0;
  for (const LabelPair& p : pairs.pairs) {
    if (!pairs.scale.InRange(p.gold) || !pairs.scale.InRange(p.predicted)) {
      throw InvalidArgument("label outside scale");
    }
    gold_marginal[p.gold] += 1.0;
    pred_marginal[p.predicted] += 1.0;
    if (p.gold == p.predicted) agree += 1.0;
  }
  const double n = static_cast<double>(pairs.size());
  const double p_o = agree / n;
  double p_e = 0.0;
  for (int c = 0; c < k; ++c) p_e += (gold_marginal[c] / n) * (pred_marginal[c] / n);
  if (p_e >= 1.0) return {1.0, p_o, p_e, true};
  return {(p_o - p_e) / (1.0 - p_e), p_o, p_e, false};
}

double CohenKappa(const LabelPairs& pairs) { return CohenKappaDetail(pairs).kappa; }

double MeanAbsoluteError(const LabelPairs& pairs) {
  RequireNonEmpty(pairs);
  double sum = 0.0;
  for (const LabelPair& p : pairs.pairs) sum += std::abs(p.gold - p.predicted);
  return sum / static_cast<double>(pairs.size());
}

FleissResult FleissKappaDetail(const std::vector<std::vector<int>>& ratings,
                               int raters_per_item) {
  if (ratings.empty()) throw InvalidArgument("no items to rate");
  if (raters_per_item < 2) throw InvalidArgument("Fleiss kappa needs >= 2 raters");
  const std::size_t k = ratings.front().size();
  const double n = raters_per_item;
  std::vector<double> category_totals(k, 0.0);
  double sum_p_i = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& row = ratings[i];
    if (row.size() != k) throw InvalidArgument("rows have different widths");
    int total = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw InvalidArgument("negative rating count");
      total += row[j];
      sq += static_cast<double>(row[j]) * row[j];
      category_totals[j] += row[j];
    }
    if (total != raters_per_item) {
      throw InvalidArgument(fmt::format("item {} has {} ratings, expected {}", i,
                                        total, raters_per_item));
    }
    sum_p_i += (sq - n) / (n * (n - 1.0));
  }
  const double items = static_cast<double>(ratings.size());
  const double p_bar = sum_p_i / items;
  double p_e = 0.0;
  for (double t : category_totals) {
    const double p_j = t / (items * n);
    p_e += p_j * p_j;
  }
  if (p_e >= 1.0) return {1.0, p_bar, p_e, true};
  return {(p_bar - p_e) / (1.0 - p_e), p_bar, p_e, false};
}

double FleissKappa(const std::vector<std::vector<int>>& ratings,
                   int raters_per_item) {
  return FleissKappaDetail(ratings, raters_per_item).kappa;
}

std::vector<std::vector<int>> BuildFleissMatrix(
    const std::vector<std::vector<JudgmentRecord>>& assessors,
    const GradeScale& scale, bool binary) {
  std::map<Key, std::vector<int>> grades;
  for (std::size_t a = 0; a < assessors.size(); ++a) {
    std::set<Key> seen;
    for (const JudgmentRecord& r : assessors[a]) {
      if (r.error_flag || !r.grade) continue;
      Key key{r.topic_id, r.doc_id};
      if (!seen.insert(key).second) continue;
      auto& g = grades[key];
      if (g.size() == a) g.push_back(*r.grade);
    }
  }
  const int width = binary ? 2 : scale.num_categories();
  std::vector<std::vector<int>> matrix;
  for (const auto& [key, g] : grades) {
    if (g.size() != assessors.size()) continue;
    std::vector<int> row(width, 0);
    for (int grade : g) ++row[binary ? Binarize(grade, scale) : grade];
    matrix.push_back(std::move(row));
  }
  return matrix;
}

double RelevantFraction(std::span<const int> grades, const GradeScale& scale) {
  if (grades.empty()) throw InvalidArgument("no grades");
  double relevant = 0.0;
  for (int g : grades) relevant += Binarize(g, scale);
  return relevant / static_cast<double>(grades.size());
}

std::vector<double> LabelDistribution(std::span<const int> grades,
                                      const GradeScale& scale) {
  if (grades.empty()) throw InvalidArgument("no grades");
  std::vector<double> dist(scale.num_categories(), 0.0);
  for (int g : grades) {
    if (!scale.InRange(g)) throw InvalidArgument("grade outside scale");
    dist[g] += 1.0;
  }
  for (double& d : dist) d /= static_cast<double>(grades.size());
  return dist;
}

BootstrapResult BootstrapCi(const LabelPairs& pairs,
                            AgreementStatistic statistic,
                            const BootstrapOptions& options) {
  if (pairs.size() < 2) throw InvalidArgument("bootstrap needs >= 2 pairs");
  if (options.n_resamples < 1) throw InvalidArgument("n_resamples must be >= 1");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw InvalidArgument("confidence level must be in (0, 1)");
  }
  // Resampling units: single pairs, or all pairs of one topic.
  std::vector<std::vector<std::size_t>> units;
  if (options.unit == BootstrapUnit::kPair) {
    units.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) units[i] = {i};
  } else {
    std::map<std::string, std::vector<std::size_t>> by_topic;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      by_topic[pairs.pairs[i].topic_id].push_back(i);
    }
    for (auto& [_, idx] : by_topic) units.push_back(std::move(idx));
  }

  Rng rng(options.seed);
  BootstrapResult result{0.0, 0.0, {}};
  result.replicates.reserve(options.n_resamples);
  LabelPairs sample{{}, pairs.scale};
  for (int r = 0; r < options.n_resamples; ++r) {
    sample.pairs.clear();
    for (std::size_t u = 0; u < units.size(); ++u) {
      for (std::size_t i : units[rng.UniformIndex(units.size())]) {
        sample.pairs.push_back(pairs.pairs[i]);
      }
    }
    result.replicates.push_back(Statistic(sample, statistic));
  }
  std::vector<double> sorted = result.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double alpha = 1.0 - options.level;
  result.lo = PercentileSorted(sorted, alpha / 2.0);
  result.hi = PercentileSorted(sorted, 1.0 - alpha / 2.0);
  return result;
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b,
                        double alpha) {
  if (a.size() != b.size()) {
    throw InvalidArgument(
        fmt::format("paired samples differ in length ({} vs {})", a.size(), b.size()));
  }
  if (a.size() < 2) throw InvalidArgument("paired t-test needs >= 2 pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double mean = Mean(diff);
  const double var = SampleVariance(diff);
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, 1.0, false};
    const double t = mean > 0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
    return {t, 0.0, true};
  }
  const double n = static_cast<double>(diff.size());
  const double t = mean / std::sqrt(var / n);
  const double p = StudentTTwoTailedP(t, n - 1.0);
  return {t, p, p < alpha};
}

AgreementReport SummarizeAlignment(const LabelPairs& pairs, int chi,
                                   const BootstrapOptions& options) {
  RequireNonEmpty(pairs);
  AgreementReport report;
  const KappaResult kappa = CohenKappaDetail(pairs);
  report.kappa = kappa.kappa;
  report.kappa_degenerate = kappa.degenerate;
  report.mae = MeanAbsoluteError(pairs);
  report.n = pairs.size();
  report.chi = chi;
  std::vector<int> predicted;
  predicted.reserve(pairs.size());
  for (const LabelPair& p : pairs.pairs) predicted.push_back(p.predicted);
  report.label_distribution = LabelDistribution(predicted, pairs.scale);
  if (pairs.size() >= 2) {
    auto k = BootstrapCi(pairs, AgreementStatistic::kKappa, options);
    auto m = BootstrapCi(pairs, AgreementStatistic::kMae, options);
    report.kappa_ci = {k.lo, k.hi};
    report.mae_ci = {m.lo, m.hi};
    report.kappa_replicates = std::move(k.replicates);
  } else {
    report.kappa_ci = {report.kappa, report.kappa};
    report.mae_ci = {report.mae, report.mae};
  }
  return report;
}

}  // namespace needforge
