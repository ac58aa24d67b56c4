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


// Similarity of synthesized or reconstructed topics to reference topics:
// Rouge-L, relative length and BERTScore over sidecar token embeddings.

#ifndef NEEDFORGE_TOPIC_SIMILARITY_H_
#define NEEDFORGE_TOPIC_SIMILARITY_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "needforge/llm_gateway.h"
#include "needforge/trec_io.h"

namespace needforge {

struct PrecisionRecallF1 {
  double precision;
  double recall;
  double f1;
};

// Length of the longest common subsequence of two token sequences.
std::size_t LcsLength(const std::vector<std::string>& a,
                      const std::vector<std::string>& b);

// Token-level Rouge-L (lowercased, split on non-alphanumerics). An empty
// side gives all zeros.
PrecisionRecallF1 RougeL(std::string_view candidate, std::string_view reference);

struct BertScoreOptions {
  // Scores become (x - baseline) / (1 - baseline) when set.
  std::optional<double> rescale_baseline;
};

// Greedy cosine matching of unit-length token vectors. Throws
// InvalidArgument on an empty side or mismatched dimensions.
PrecisionRecallF1 BertScore(const TokenEmbeddings& candidate,
                            const TokenEmbeddings& reference,
                            const BertScoreOptions& options = {});

// Token count of candidate / token count of reference.
double RelativeLength(std::string_view candidate, std::string_view reference);

struct SimilarityRow {
  // "title", "description", "narrative" or "topic".
  std::string field;
  std::optional<double> bertscore_f1;
  double rouge_l_f1;
  double relative_length;
};

struct SimilarityReport {
  // Fields the candidate leaves empty are absent.
  std::vector<SimilarityRow> rows;
  // Embedding model stamp from the sidecar, empty without BERTScore.
  std::string embedding_model;
};

using Embedder = std::function<TokenEmbeddings(const std::string&)>;

// Per-field rows for fields both topics fill, plus a whole-topic row over
// the space-joined fields (title, description, narrative order) the
// candidate provides. BERTScore is computed only when `embed` is set.
SimilarityReport CompareTopics(const Topic& candidate, const Topic& reference,
                               const Embedder& embed = nullptr,
                               const BertScoreOptions& options = {});

}  // namespace needforge

#endif  // NEEDFORGE_TOPIC_SIMILARITY_H_
