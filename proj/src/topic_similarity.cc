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


#include "needforge/topic_similarity.h"

#include <algorithm>

#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

// Harmonic mean; negative cosine scores of opposite signs give 0.
PrecisionRecallF1 Combine(double precision, double recall) {
  const double f1 = precision * recall > 0.0
                        ? 2.0 * precision * recall / (precision + recall)
                        : 0.0;
  return {precision, recall, f1};
}

// Mean over rows of `from` of the best match among rows of `to`.
double MeanBestMatch(const std::vector<std::vector<double>>& from,
                     const std::vector<std::vector<double>>& to) {
  double total = 0.0;
  for (const auto& u : from) {
    double best = -1.0;
    for (const auto& v : to) {
      double dot = 0.0;
      for (std::size_t d = 0; d < u.size(); ++d) dot += u[d] * v[d];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total / static_cast<double>(from.size());
}

std::string JoinFields(const Topic& topic, FieldSet fields) {
  std::string out;
  for (TopicField f : fields.Fields()) {
    if (!out.empty()) out += ' ';
    out += topic.Field(f);
  }
  return out;
}

}  // namespace

std::size_t LcsLength(const std::vector<std::string>& a,
                      const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrecisionRecallF1 RougeL(std::string_view candidate, std::string_view reference) {
  const auto cand = Tokenize(candidate);
  const auto ref = Tokenize(reference);
  if (cand.empty() || ref.empty()) return {0.0, 0.0, 0.0};
  const double lcs = static_cast<double>(LcsLength(cand, ref));
  return Combine(lcs / static_cast<double>(cand.size()),
                 lcs / static_cast<double>(ref.size()));
}

PrecisionRecallF1 BertScore(const TokenEmbeddings& candidate,
                            const TokenEmbeddings& reference,
                            const BertScoreOptions& options) {
  if (candidate.vectors.empty() || reference.vectors.empty()) {
    throw InvalidArgument("BERTScore needs tokens on both sides");
  }
  const std::size_t dim = candidate.vectors.front().size();
  for (const auto* side : {&candidate, &reference}) {
    for (const auto& v : side->vectors) {
      if (v.size() != dim) throw InvalidArgument("embedding dimensions differ");
    }
  }
  double precision = MeanBestMatch(candidate.vectors, reference.vectors);
  double recall = MeanBestMatch(reference.vectors, candidate.vectors);
  if (options.rescale_baseline) {
    const double b = *options.rescale_baseline;
    precision = (precision - b) / (1.0 - b);
    recall = (recall - b) / (1.0 - b);
  }
  return Combine(precision, recall);
}

double RelativeLength(std::string_view candidate, std::string_view reference) {
  const auto ref = Tokenize(reference);
  if (ref.empty()) throw InvalidArgument("relative length of empty reference");
  return static_cast<double>(Tokenize(candidate).size()) /
         static_cast<double>(ref.size());
}

SimilarityReport CompareTopics(const Topic& candidate, const Topic& reference,
                               const Embedder& embed,
                               const BertScoreOptions& options) {
  SimilarityReport report;
  auto row = [&](std::string name, const std::string& cand,
                 const std::string& ref) {
    SimilarityRow r{std::move(name), std::nullopt, RougeL(cand, ref).f1,
                    RelativeLength(cand, ref)};
    if (embed) {
      const TokenEmbeddings ce = embed(cand);
      const TokenEmbeddings re = embed(ref);
      if (!ce.vectors.empty() && !re.vectors.empty()) {
        r.bertscore_f1 = BertScore(ce, re, options).f1;
        if (report.embedding_model.empty()) report.embedding_model = re.model_id;
      }
    }
    report.rows.push_back(std::move(r));
  };
  FieldSet compared;
  for (TopicField f : kAllTopicFields) {
    const std::string& ref = reference.Field(f);
    const std::string& cand = candidate.Field(f);
    if (cand.empty() || Tokenize(ref).empty()) continue;
    compared.Insert(f);
    row(std::string(TopicFieldName(f)), cand, ref);
  }
  if (!compared.empty()) {
    row("topic", JoinFields(candidate, compared), JoinFields(reference, compared));
  }
  return report;
}

}  // namespace needforge
