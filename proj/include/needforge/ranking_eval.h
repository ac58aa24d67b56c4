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


// System effectiveness (nDCG@k), system rankings, rank correlations and the
// leave-one-group-out reusability protocol.

#ifndef NEEDFORGE_RANKING_EVAL_H_
#define NEEDFORGE_RANKING_EVAL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "needforge/trec_io.h"

namespace needforge {

enum class Gain {
  kLinear,       // gain = grade
  kExponential,  // gain = 2^grade - 1
};

struct MetricSpec {
  int k = 10;
  Gain gain = Gain::kLinear;

  // "nDCG@10".
  std::string Name() const;
  static MetricSpec Parse(std::string_view name);
};

struct NdcgResult {
  double value;
  // The topic has no relevant (grade > 0) judgment; value is 0.
  bool no_relevant;
};

// Unjudged documents have grade 0; the ideal ranking uses every judged
// grade of the topic. Throws InvalidArgument when k < 1.
NdcgResult NdcgAtK(std::span<const std::string> ranking, const Qrels& qrels,
                   const std::string& topic_id, int k,
                   Gain gain = Gain::kLinear);

struct SystemScore {
  std::string system_id;
  double score;

  friend bool operator==(const SystemScore&, const SystemScore&) = default;
};

// Sorted by score descending, ties by ascending system_id.
struct SystemRanking {
  std::vector<SystemScore> entries;
  std::string metric;
  std::string qrels_id;
};

// Mean metric over the topics that have judgments; a run missing a topic
// scores 0 on it. Needs >= 2 systems and at least one run covering a judged
// topic.
SystemRanking RankSystems(std::span<const RunFile> runs, const Qrels& qrels,
                          const MetricSpec& metric,
                          const std::string& qrels_id = "");

// Spearman's rho with average ranks for tied scores. Both rankings must
// cover the same systems (>= 2).
double Spearman(const SystemRanking& a, const SystemRanking& b);

enum class TauApMode {
  // With score ties, the mean of the tie-aware value with each ranking
  // taken as the reference; plain tau_AP otherwise.
  kSymmetric,
  // Tie-aware value with `truth` as the reference only.
  kTruthReference,
  // Expected plain tau_AP under uniformly random tie-breaking of both
  // rankings.
  kExpectedTieBreak,
};

// Yilmaz et al.'s AP correlation of `estimate` against `truth`. The
// tie-aware value averages, over every system with at least one system
// scored strictly higher in the estimate, (C - D) / A where A counts those
// higher systems and C and D count the ones the reference puts strictly
// above and strictly below it. Without ties every mode equals plain tau_AP.
double TauAp(const SystemRanking& truth, const SystemRanking& estimate,
             TauApMode mode = TauApMode::kSymmetric);

struct LogoOptions {
  // Only the top `pool_depth` documents of each run count as contributed.
  std::optional<int> pool_depth;
  TauApMode tau_mode = TauApMode::kSymmetric;
};

// `qrels` minus every judged (topic, doc) that only runs of `group_id`
// contribute.
Qrels LogoReducedQrels(std::span<const RunFile> runs, const Qrels& qrels,
                       const std::string& group_id,
                       const LogoOptions& options = {});

struct LogoGroupResult {
  std::string group_id;
  std::string metric;
  double spearman;
  double tau_ap;
  std::size_t removed_judgments;
};

struct LogoAggregate {
  std::string metric;
  double mean_spearman;
  double mean_tau_ap;
  double min_spearman;
  double min_tau_ap;
};

struct LogoReport {
  std::vector<LogoGroupResult> per_group;
  std::vector<LogoAggregate> aggregates;
  // Number of reduced qrels built (one per group with runs).
  int reduced_evaluations = 0;
};

// Every run needs a group_id. Groups listed in `declared_groups` without
// runs are skipped with a warning.
LogoReport LogoExperiment(std::span<const RunFile> runs, const Qrels& qrels,
                          std::span<const MetricSpec> metrics,
                          const LogoOptions& options = {},
                          std::span<const std::string> declared_groups = {});

}  // namespace needforge

#endif  // NEEDFORGE_RANKING_EVAL_H_
