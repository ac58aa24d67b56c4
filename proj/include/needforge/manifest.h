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


// The experiment manifest: one JSON file declaring inputs, the LLM
// endpoint, and the grid of synthesis/judging cells.

#ifndef NEEDFORGE_MANIFEST_H_
#define NEEDFORGE_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "needforge/context_forge.h"
#include "needforge/llm_gateway.h"
#include "needforge/ranking_eval.h"
#include "needforge/trec_io.h"

namespace needforge {

struct ExperimentCell {
  PromptVariant prompt_variant = PromptVariant::kQuery;
  int context_size = 1;
  int query_variants = 0;
  std::string topic_model;
  std::string judge_model;
  FieldSet topic_fields = FieldSet::All();

  // Identifies the synthesized topics this cell judges with.
  std::string SynthesisId() const;
  // Identifies the judgments of this cell.
  std::string JudgmentId() const;
};

struct ReconstructionSpec {
  std::string topic_model;
  FieldSet given;
  FieldSet target;

  std::string Id() const;
};

struct LlmSettings {
  GatewayConfig gateway;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::string> reasoning_effort;
};

struct ExperimentManifest {
  std::filesystem::path manifest_dir;
  std::string collection;
  GradeScale scale = GradeScale::R04();
  std::uint64_t seed = 0;

  // Inputs; relative paths are resolved against the manifest directory.
  std::optional<std::filesystem::path> topics;
  TopicFormat topics_format = TopicFormat::kSgml;
  std::optional<std::filesystem::path> qrels;
  std::optional<std::filesystem::path> doc_store;
  std::vector<std::filesystem::path> runs;
  std::optional<std::filesystem::path> group_manifest;
  std::optional<std::filesystem::path> query_variants;
  std::optional<std::filesystem::path> judge_sample;
  std::filesystem::path output_dir;

  LlmSettings llm;

  DocSelection doc_selection = DocSelection::kTopGradeThenDocId;
  std::size_t max_doc_chars = 4000;
  // Topic field holding the original query.
  TopicField query_field = TopicField::kTitle;

  std::vector<ExperimentCell> cells;
  std::vector<ReconstructionSpec> reconstructions;

  int bootstrap_resamples = 20;
  bool bootstrap_by_topic = false;
  double alpha = 0.05;
  std::vector<MetricSpec> metrics;
  std::optional<int> pool_depth;
  TauApMode tau_mode = TauApMode::kSymmetric;
  std::optional<double> bertscore_baseline;
  std::map<std::string, std::string> regression_baselines;
};

// Throws ConfigError for unreadable/invalid manifests and referenced input
// paths that do not exist. Creates the output and cache directories.
ExperimentManifest LoadManifest(const std::filesystem::path& path);
ExperimentManifest ParseManifest(const std::string& json_text,
                                 const std::filesystem::path& manifest_dir);

// Filesystem-safe name: anything outside [A-Za-z0-9._-] becomes '_'.
std::string SafeFileName(std::string_view s);

}  // namespace needforge

#endif  // NEEDFORGE_MANIFEST_H_
