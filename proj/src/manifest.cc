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


#include "needforge/manifest.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path Resolve(const fs::path& dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : dir / path;
}

std::optional<fs::path> InputPath(const json& paths, const char* key,
                                  const fs::path& dir) {
  if (!paths.contains(key) || paths[key].is_null()) return std::nullopt;
  const fs::path path = Resolve(dir, paths[key].get<std::string>());
  if (!fs::exists(path)) {
    throw ConfigError(fmt::format("paths.{}: {} does not exist", key, path.string()));
  }
  return path;
}

FieldSet ParseFields(const json& j) {
  if (j.is_string()) return FieldSet::Parse(j.get<std::string>());
  return FieldSet::FromNames(j.get<std::vector<std::string>>());
}

ExperimentCell ParseCell(const json& j) {
  ExperimentCell cell;
  cell.prompt_variant = ParsePromptVariant(j.at("prompt_variant").get<std::string>());
  cell.context_size = j.value("context_size", 1);
  cell.query_variants = j.value("query_variants", 0);
  cell.topic_model = j.at("topic_model").get<std::string>();
  cell.judge_model = j.at("judge_model").get<std::string>();
  if (j.contains("topic_fields")) cell.topic_fields = ParseFields(j["topic_fields"]);
  if (cell.topic_fields.empty()) throw InvalidArgument("cell with empty topic_fields");
  ContextPolicy{cell.context_size, DocSelection::kTopGradeThenDocId, 0, 1,
                cell.query_variants}
      .Validate();
  return cell;
}

}  // namespace

std::string SafeFileName(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::string ExperimentCell::SynthesisId() const {
  return SafeFileName(fmt::format("{}.{}.k{}.qv{}", topic_model,
                                  VariantName(prompt_variant), context_size,
                                  query_variants));
}

std::string ExperimentCell::JudgmentId() const {
  return SynthesisId() + "." + SafeFileName(judge_model) + "." +
         topic_fields.ToString();
}

std::string ReconstructionSpec::Id() const {
  return SafeFileName(fmt::format("{}.{}_to_{}", topic_model, given.ToString(),
                                  target.ToString()));
}

ExperimentManifest ParseManifest(const std::string& json_text,
                                 const fs::path& manifest_dir) {
  ExperimentManifest m;
  m.manifest_dir = manifest_dir;
  try {
    const json j = json::parse(json_text);
    m.collection = j.value("collection", "");
    m.scale = GradeScale::FromName(j.value("scale", "R04"));
    m.seed = j.value("seed", std::uint64_t{0});

    const json paths = j.value("paths", json::object());
    m.topics = InputPath(paths, "topics", manifest_dir);
    const std::string fmt_name = ToLower(paths.value("topics_format", "sgml"));
    if (fmt_name == "sgml") {
      m.topics_format = TopicFormat::kSgml;
    } else if (fmt_name == "jsonl") {
      m.topics_format = TopicFormat::kJsonl;
    } else {
      throw ConfigError("paths.topics_format must be sgml or jsonl");
    }
    m.qrels = InputPath(paths, "qrels", manifest_dir);
    m.doc_store = InputPath(paths, "doc_store", manifest_dir);
    m.group_manifest = InputPath(paths, "group_manifest", manifest_dir);
    m.query_variants = InputPath(paths, "query_variants", manifest_dir);
    m.judge_sample = InputPath(paths, "judge_sample", manifest_dir);
    if (paths.contains("runs")) {
      std::vector<std::string> entries;
      if (paths["runs"].is_string()) {
        entries.push_back(paths["runs"].get<std::string>());
      } else {
        entries = paths["runs"].get<std::vector<std::string>>();
      }
      for (const auto& e : entries) {
        const fs::path p = Resolve(manifest_dir, e);
        if (!fs::exists(p)) throw ConfigError("paths.runs: " + p.string() + " does not exist");
        if (fs::is_directory(p)) {
          std::vector<fs::path> files;
          for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
          }
          std::sort(files.begin(), files.end());
          m.runs.insert(m.runs.end(), files.begin(), files.end());
        } else {
          m.runs.push_back(p);
        }
      }
    }
    m.output_dir = Resolve(manifest_dir, paths.value("output_dir", "out"));

    const json llm = j.value("llm", json::object());
    GatewayConfig& g = m.llm.gateway;
    g.base_url = llm.value("base_url", "");
    g.sidecar_url = llm.value("sidecar_url", "");
    g.max_in_flight = llm.value("max_in_flight", 8);
    g.max_retries = llm.value("max_retries", 5);
    g.initial_backoff = std::chrono::milliseconds(llm.value("initial_backoff_ms", 500));
    g.max_backoff = std::chrono::milliseconds(llm.value("max_backoff_ms", 30000));
    g.timeout = std::chrono::seconds(llm.value("timeout_s", 300));
    if (const char* key = std::getenv(kApiKeyEnv)) g.api_key = key;
    if (paths.contains("cache_dir")) {
      g.cache_dir = Resolve(manifest_dir, paths["cache_dir"].get<std::string>());
    }
    m.llm.temperature = llm.value("temperature", 0.0);
    m.llm.max_tokens = llm.value("max_tokens", 2048);
    if (llm.contains("reasoning_effort") && !llm["reasoning_effort"].is_null()) {
      m.llm.reasoning_effort = llm["reasoning_effort"].get<std::string>();
    }
    if (g.max_in_flight < 1) throw ConfigError("llm.max_in_flight must be >= 1");
    if (m.llm.temperature < 0) throw ConfigError("llm.temperature must be >= 0");

    const json synthesis = j.value("synthesis", json::object());
    m.doc_selection =
        ParseDocSelection(synthesis.value("doc_selection", "top_grade_then_docid"));
    m.max_doc_chars = synthesis.value("max_doc_chars", std::size_t{4000});
    m.query_field = ParseTopicField(synthesis.value("query_field", "title"));
    if (m.max_doc_chars == 0) throw ConfigError("synthesis.max_doc_chars must be > 0");

    for (const json& c : j.value("cells", json::array())) m.cells.push_back(ParseCell(c));
    if (m.cells.empty()) throw ConfigError("manifest declares no cells");
    for (const json& r : j.value("reconstructions", json::array())) {
      ReconstructionSpec spec{r.at("topic_model").get<std::string>(),
                              ParseFields(r.at("given")), ParseFields(r.at("target"))};
      if (!spec.given.Intersect(spec.target).empty() ||
          spec.given.Union(spec.target) != FieldSet::All() || spec.given.empty() ||
          spec.target.empty()) {
        throw ConfigError("reconstruction given/target must split the three fields");
      }
      m.reconstructions.push_back(std::move(spec));
    }

    const json eval = j.value("evaluation", json::object());
    m.bootstrap_resamples = eval.value("bootstrap_resamples", 20);
    m.bootstrap_by_topic = eval.value("bootstrap_unit", "pair") == "topic";
    m.alpha = eval.value("alpha", 0.05);
    for (const auto& name : eval.value(
             "metrics", std::vector<std::string>{"nDCG@10", "nDCG@20", "nDCG@1000"})) {
      m.metrics.push_back(MetricSpec::Parse(name));
    }
    if (eval.contains("pool_depth") && !eval["pool_depth"].is_null()) {
      m.pool_depth = eval["pool_depth"].get<int>();
    }
    const std::string tau = eval.value("tau_ap", "symmetric");
    if (tau == "symmetric") {
      m.tau_mode = TauApMode::kSymmetric;
    } else if (tau == "truth_reference") {
      m.tau_mode = TauApMode::kTruthReference;
    } else if (tau == "expected_tie_break") {
      m.tau_mode = TauApMode::kExpectedTieBreak;
    } else {
      throw ConfigError("evaluation.tau_ap must be symmetric, truth_reference "
                        "or expected_tie_break");
    }
    if (eval.contains("bertscore_baseline") && !eval["bertscore_baseline"].is_null()) {
      m.bertscore_baseline = eval["bertscore_baseline"].get<double>();
    }
    m.regression_baselines = eval.value("regression_baselines",
                                        std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  fs::create_directories(m.output_dir);
  if (m.llm.gateway.cache_dir) fs::create_directories(*m.llm.gateway.cache_dir);
  return m;
}

ExperimentManifest LoadManifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseManifest(buf.str(), fs::absolute(path).parent_path());
}

}  // namespace needforge
