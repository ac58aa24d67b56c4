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


// Label alignment between human and LLM judgments and agreement among LLM
// assessors.

#ifndef NEEDFORGE_AGREEMENT_H_
#define NEEDFORGE_AGREEMENT_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "needforge/trec_io.h"

namespace needforge {

struct LabelPair {
  std::string topic_id;
  std::string doc_id;
  int gold;
  int predicted;
};

// Gold/predicted labels over unique (topic_id, doc_id) keys.
struct LabelPairs {
  std::vector<LabelPair> pairs;
  GradeScale scale;

  std::size_t size() const { return pairs.size(); }
  // Throws InvalidArgument on out-of-range labels or duplicate keys.
  void Validate() const;
};

struct AlignedLabels {
  LabelPairs labels;
  // Judgment records with error_flag set (generation errors).
  int chi = 0;
  // Successful judgments whose key is absent from the gold qrels.
  int unmatched = 0;
};

// Inner join of successful judgments with the gold qrels, ordered by key.
AlignedLabels AlignLabels(const Qrels& gold,
                          const std::vector<JudgmentRecord>& judgments);

// 1 iff grade >= scale.binary_threshold. Throws on out-of-range grades.
int Binarize(int grade, const GradeScale& scale);

// Both sides binarized; the result uses a 0..1 scale.
LabelPairs BinarizePairs(const LabelPairs& pairs);

struct KappaResult {
  double kappa;
  double observed;
  double expected;
  // Expected agreement was 1 (both sides constant). kappa is reported as 1
  // in that case since observed agreement is then necessarily 1 as well.
  bool degenerate;
};

// Unweighted multi-class Cohen's kappa over the scale's categories.
KappaResult CohenKappaDetail(const LabelPairs& pairs);
double CohenKappa(const LabelPairs& pairs);

double MeanAbsoluteError(const LabelPairs& pairs);

struct FleissResult {
  double kappa;
  double mean_agreement;
  double expected_agreement;
  bool degenerate;
};

// `ratings` is items x categories of rater counts; each row must sum to
// raters_per_item >= 2.
FleissResult FleissKappaDetail(const std::vector<std::vector<int>>& ratings,
                               int raters_per_item);
double FleissKappa(const std::vector<std::vector<int>>& ratings,
                   int raters_per_item);

// Items x categories count matrix over the keys every assessor judged
// successfully, in key order. With `binary`, categories are {0, 1}.
std::vector<std::vector<int>> BuildFleissMatrix(
    const std::vector<std::vector<JudgmentRecord>>& assessors,
    const GradeScale& scale, bool binary);

double RelevantFraction(std::span<const int> grades, const GradeScale& scale);

// Fraction of each grade 0..max_grade; sums to 1.
std::vector<double> LabelDistribution(std::span<const int> grades,
                                      const GradeScale& scale);

enum class AgreementStatistic { kKappa, kMae };
enum class BootstrapUnit { kPair, kTopic };

struct BootstrapOptions {
  int n_resamples = 20;
  double level = 0.95;
  std::uint64_t seed = 0;
  BootstrapUnit unit = BootstrapUnit::kPair;
};

struct BootstrapResult {
  double lo;
  double hi;
  // Statistic on each resample, in draw order. Two calls with the same seed
  // and sample size draw identical index sequences, so replicates of
  // different judgment sets over the same keys pair up.
  std::vector<double> replicates;
};

// Percentile bootstrap interval of the statistic.
BootstrapResult BootstrapCi(const LabelPairs& pairs,
                            AgreementStatistic statistic,
                            const BootstrapOptions& options);

struct TTestResult {
  double t;
  double p;
  bool significant;
};

// Two-tailed paired t-test. All-zero differences give t = 0, p = 1; a
// constant non-zero difference gives t = +-inf, p = 0.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b,
                        double alpha = 0.05);

struct AgreementReport {
  double kappa;
  double mae;
  std::pair<double, double> kappa_ci;
  std::pair<double, double> mae_ci;
  std::vector<double> label_distribution;
  std::size_t n;
  int chi;
  bool kappa_degenerate;
  std::vector<double> kappa_replicates;
};

AgreementReport SummarizeAlignment(const LabelPairs& pairs, int chi,
                                   const BootstrapOptions& options);

}  // namespace needforge

#endif  // NEEDFORGE_AGREEMENT_H_
