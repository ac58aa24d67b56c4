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


// LLM relevance judging from configurable topic-field subsets.

#ifndef NEEDFORGE_JUDGE_H_
#define NEEDFORGE_JUDGE_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "needforge/context_forge.h"
#include "needforge/llm_gateway.h"
#include "needforge/trec_io.h"

namespace needforge {

// Stamped into every JudgmentRecord; bump when the template text changes.
inline constexpr char kJudgeTemplateVersion[] = "graded-rater-v1";

struct JudgeConfig {
  FieldSet topic_fields = FieldSet::All();
  GradeScale scale = GradeScale::R04();
  std::string judge_model;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::string> reasoning_effort;
};

// Throws InvalidArgument for an empty document, an empty field set, or a
// selected field the topic leaves empty.
std::string RenderJudgePrompt(const Topic& topic, FieldSet fields,
                              std::string_view document,
                              const GradeScale& scale);

using GradeOrError = std::variant<int, GenerationError>;

// Last standalone integer in `raw`; absent or out of range is an error.
GradeOrError ParseGrade(std::string_view raw, const GradeScale& scale);

struct JudgeItem {
  Topic topic;
  std::string doc_id;
  // "original" or the id of the synthesis cell the topic came from.
  std::string topic_source = "original";
  int context_size = 0;
};

// One record per item, in input order. Unparseable replies, transport
// failures, unknown documents and topics missing a selected field all
// become records with error_flag set.
std::vector<JudgmentRecord> JudgeBatch(std::span<const JudgeItem> items,
                                       const DocStore& docs,
                                       const JudgeConfig& config,
                                       LlmGateway& gateway);

}  // namespace needforge

#endif  // NEEDFORGE_JUDGE_H_
