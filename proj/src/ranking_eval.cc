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


#include "needforge/ranking_eval.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

double GainOf(int grade, Gain gain) {
  if (grade <= 0) return 0.0;
  return gain == Gain::kLinear ? grade : std::exp2(grade) - 1.0;
}

double Discount(std::size_t position) {  // 1-based
  return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

std::map<std::string, double> ScoresById(const SystemRanking& r) {
  std::map<std::string, double> scores;
  for (const auto& e : r.entries) {
    if (!scores.emplace(e.system_id, e.score).second) {
      throw InvalidArgument("system " + e.system_id + " ranked twice");
    }
  }
  return scores;
}

void RequireSameSystems(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b) {
  if (a.size() < 2) throw InvalidArgument("rank correlation needs >= 2 systems");
  if (a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw InvalidArgument("rankings cover different systems");
  }
}

// Average ranks (1 = best) for descending scores.
std::vector<double> AverageRanks(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Probability that `x` sits above `y` in the reference ordering.
using Concordance = std::function<double(std::size_t, std::size_t)>;

// Expected tau_AP of the estimate over random orderings of its score ties.
// Items are indices; `estimate` holds their scores.
double ExpectedTauAp(const std::vector<double>& estimate,
                     const Concordance& above_in_truth) {
  const std::size_t n = estimate.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return estimate[a] > estimate[b];
  });
  double sum = 0.0;
  std::size_t group_start = 0;
  while (group_start < n) {
    std::size_t group_end = group_start;
    while (group_end < n && estimate[order[group_end]] == estimate[order[group_start]]) {
      ++group_end;
    }
    const std::size_t g = group_end - group_start;
    const std::size_t s = group_start;  // items strictly above the group
    for (std::size_t a = group_start; a < group_end; ++a) {
      const std::size_t item = order[a];
      double strictly_above = 0.0;
      for (std::size_t b = 0; b < s; ++b) strictly_above += above_in_truth(order[b], item);
      double mates_above = 0.0;
      for (std::size_t b = group_start; b < group_end; ++b) {
        if (b != a) mates_above += above_in_truth(order[b], item);
      }
      double expected = 0.0;
      for (std::size_t j = 1; j <= g; ++j) {
        const std::size_t position = s + j;
        if (position == 1) continue;
        const double mates = g > 1 ? static_cast<double>(j - 1) * mates_above /
                                         static_cast<double>(g - 1)
                                   : 0.0;
        expected += (strictly_above + mates) / static_cast<double>(position - 1);
      }
      sum += expected / static_cast<double>(g);
    }
    group_start = group_end;
  }
  return 2.0 / static_cast<double>(n - 1) * sum - 1.0;
}

bool HasTies(std::vector<double> scores) {
  std::sort(scores.begin(), scores.end());
  return std::adjacent_find(scores.begin(), scores.end()) != scores.end();
}

double TieAwareTauAp(const std::vector<double>& reference,
                     const std::vector<double>& estimate) {
  const std::size_t n = estimate.size();
  double sum = 0.0;
  int terms = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int above = 0;
    int concordant = 0;
    int discordant = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(estimate[j] > estimate[i])) continue;
      ++above;
      if (reference[j] > reference[i]) ++concordant;
      if (reference[j] < reference[i]) ++discordant;
    }
    if (above == 0) continue;
    sum += static_cast<double>(concordant - discordant) / above;
    ++terms;
  }
  if (terms > 0) return sum / terms;
  // A constant estimate agrees only with a constant reference.
  return std::adjacent_find(reference.begin(), reference.end(),
                            std::not_equal_to<>()) == reference.end()
             ? 1.0
             : 0.0;
}

// (topic, doc) pairs of `run` that are judged in `qrels`.
std::set<std::pair<std::string, std::string>> Contributions(
    const RunFile& run, const Qrels& qrels, std::optional<int> depth) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [topic_id, docs] : run.rankings) {
    const auto* judged = qrels.TopicJudgments(topic_id);
    if (judged == nullptr) continue;
    std::size_t limit = docs.size();
    if (depth) limit = std::min(limit, static_cast<std::size_t>(std::max(0, *depth)));
    for (std::size_t i = 0; i < limit; ++i) {
      if (judged->count(docs[i].doc_id) > 0) out.emplace(topic_id, docs[i].doc_id);
    }
  }
  return out;
}

}  // namespace

std::string MetricSpec::Name() const {
  return fmt::format("nDCG{}@{}", gain == Gain::kExponential ? "-exp" : "", k);
}

MetricSpec MetricSpec::Parse(std::string_view name) {
  std::string lower = ToLower(Trim(name));
  MetricSpec spec;
  std::string_view rest = lower;
  if (rest.starts_with("ndcg-exp@")) {
    spec.gain = Gain::kExponential;
    rest.remove_prefix(9);
  } else if (rest.starts_with("ndcg@")) {
    rest.remove_prefix(5);
  } else {
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
  }
  try {
    std::size_t used = 0;
    spec.k = std::stoi(std::string(rest), &used);
    if (used != rest.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("bad cutoff in metric '" + std::string(name) + "'");
  }
  if (spec.k < 1) throw InvalidArgument("metric cutoff must be >= 1");
  return spec;
}

NdcgResult NdcgAtK(std::span<const std::string> ranking, const Qrels& qrels,
                   const std::string& topic_id, int k, Gain gain) {
  if (k < 1) throw InvalidArgument("nDCG cutoff must be >= 1");
  const auto cutoff = static_cast<std::size_t>(k);
  std::vector<int> ideal;
  if (const auto* judged = qrels.TopicJudgments(topic_id)) {
    for (const auto& [_, grade] : *judged) {
      if (grade > 0) ideal.push_back(grade);
    }
  }
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(cutoff, ideal.size()); ++i) {
    idcg += GainOf(ideal[i], gain) * Discount(i + 1);
  }
  if (idcg == 0.0) return {0.0, true};
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(cutoff, ranking.size()); ++i) {
    dcg += GainOf(qrels.GradeOrZero(topic_id, ranking[i]), gain) * Discount(i + 1);
  }
  return {dcg / idcg, false};
}

SystemRanking RankSystems(std::span<const RunFile> runs, const Qrels& qrels,
                          const MetricSpec& metric,
                          const std::string& qrels_id) {
  if (runs.size() < 2) throw InvalidArgument("ranking needs >= 2 systems");
  const auto topics = qrels.TopicIds();
  bool overlap = false;
  std::set<std::string> ids;
  SystemRanking ranking{{}, metric.Name(), qrels_id};
  for (const RunFile& run : runs) {
    if (!ids.insert(run.system_id).second) {
      throw InvalidArgument("duplicate system " + run.system_id);
    }
    double total = 0.0;
    for (const std::string& topic_id : topics) {
      auto it = run.rankings.find(topic_id);
      if (it == run.rankings.end()) continue;
      overlap = true;
      std::vector<std::string> docs;
      docs.reserve(it->second.size());
      for (const auto& d : it->second) docs.push_back(d.doc_id);
      total += NdcgAtK(docs, qrels, topic_id, metric.k, metric.gain).value;
    }
    const double mean = topics.empty() ? 0.0 : total / static_cast<double>(topics.size());
    ranking.entries.push_back({run.system_id, mean});
  }
  if (!overlap) throw InvalidArgument("no run covers a judged topic");
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const SystemScore& a, const SystemScore& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.system_id < b.system_id;
            });
  return ranking;
}

double Spearman(const SystemRanking& a, const SystemRanking& b) {
  const auto sa = ScoresById(a);
  const auto sb = ScoresById(b);
  RequireSameSystems(sa, sb);
  std::vector<double> xa;
  std::vector<double> xb;
  for (const auto& [id, score] : sa) {
    xa.push_back(score);
    xb.push_back(sb.at(id));
  }
  const auto ra = AverageRanks(xa);
  const auto rb = AverageRanks(xb);
  const double n = static_cast<double>(ra.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  // All systems tied on one side: correlation undefined. Report 1 when both
  // sides agree completely, 0 otherwise.
  if (va == 0.0 || vb == 0.0) return ra == rb ? 1.0 : 0.0;
  return cov / std::sqrt(va * vb);
}

double TauAp(const SystemRanking& truth, const SystemRanking& estimate,
             TauApMode mode) {
  const auto st = ScoresById(truth);
  const auto se = ScoresById(estimate);
  RequireSameSystems(st, se);
  std::vector<double> truth_scores;
  std::vector<double> estimate_scores;
  for (const auto& [id, score] : st) {
    truth_scores.push_back(score);
    estimate_scores.push_back(se.at(id));
  }
  switch (mode) {
    case TauApMode::kSymmetric:
      if (!HasTies(truth_scores) && !HasTies(estimate_scores)) {
        return TieAwareTauAp(truth_scores, estimate_scores);
      }
      return 0.5 * (TieAwareTauAp(truth_scores, estimate_scores) +
                    TieAwareTauAp(estimate_scores, truth_scores));
    case TauApMode::kTruthReference:
      return TieAwareTauAp(truth_scores, estimate_scores);
    case TauApMode::kExpectedTieBreak:
      break;
  }
  return ExpectedTauAp(estimate_scores, [&](std::size_t x, std::size_t y) {
    if (truth_scores[x] > truth_scores[y]) return 1.0;
    return truth_scores[x] == truth_scores[y] ? 0.5 : 0.0;
  });
}

Qrels LogoReducedQrels(std::span<const RunFile> runs, const Qrels& qrels,
                       const std::string& group_id, const LogoOptions& options) {
  std::set<std::pair<std::string, std::string>> own;
  std::set<std::pair<std::string, std::string>> others;
  for (const RunFile& run : runs) {
    auto contributed = Contributions(run, qrels, options.pool_depth);
    auto& target = run.group_id == group_id ? own : others;
    target.insert(contributed.begin(), contributed.end());
  }
  Qrels reduced = qrels;
  for (const auto& key : own) {
    if (others.count(key) == 0) reduced.Erase(key.first, key.second);
  }
  return reduced;
}

LogoReport LogoExperiment(std::span<const RunFile> runs, const Qrels& qrels,
                          std::span<const MetricSpec> metrics,
                          const LogoOptions& options,
                          std::span<const std::string> declared_groups) {
  std::set<std::string> groups;
  for (const RunFile& run : runs) {
    if (run.group_id.empty()) {
      throw InvalidArgument("run " + run.system_id + " has no group");
    }
    groups.insert(run.group_id);
  }
  for (const std::string& g : declared_groups) {
    if (groups.count(g) == 0) spdlog::warn("group {} has no runs; skipped", g);
  }
  if (groups.size() < 2) throw InvalidArgument("leave-one-group-out needs >= 2 groups");
  if (metrics.empty()) throw InvalidArgument("no metrics");

  std::vector<SystemRanking> full;
  for (const MetricSpec& m : metrics) full.push_back(RankSystems(runs, qrels, m, "full"));

  LogoReport report;
  for (const std::string& group : groups) {
    const Qrels reduced = LogoReducedQrels(runs, qrels, group, options);
    ++report.reduced_evaluations;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const SystemRanking r = RankSystems(runs, reduced, metrics[m], "without " + group);
      report.per_group.push_back({group, metrics[m].Name(), Spearman(full[m], r),
                                  TauAp(full[m], r, options.tau_mode),
                                  qrels.size() - reduced.size()});
    }
  }
  for (const MetricSpec& m : metrics) {
    LogoAggregate agg{m.Name(), 0.0, 0.0, 1.0, 1.0};
    int count = 0;
    for (const auto& g : report.per_group) {
      if (g.metric != agg.metric) continue;
      agg.mean_spearman += g.spearman;
      agg.mean_tau_ap += g.tau_ap;
      agg.min_spearman = std::min(agg.min_spearman, g.spearman);
      agg.min_tau_ap = std::min(agg.min_tau_ap, g.tau_ap);
      ++count;
    }
    agg.mean_spearman /= count;
    agg.mean_tau_ap /= count;
    report.aggregates.push_back(agg);
  }
  return report;
}

}  // namespace needforge
