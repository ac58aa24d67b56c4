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


#include "needforge/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "needforge/agreement.h"
#include "needforge/context_forge.h"
#include "needforge/error.h"
#include "needforge/factor_analysis.h"
#include "needforge/judge.h"
#include "needforge/ranking_eval.h"
#include "needforge/text.h"
#include "needforge/topic_similarity.h"

namespace needforge {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string Num(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{:.{}f}", v, digits);
  // "-0.0000" reads as a sign where there is none.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

const fs::path& RequireInput(const std::optional<fs::path>& path,
                             std::string_view key, std::string_view stage) {
  if (!path) {
    throw ConfigError(fmt::format("{} needs paths.{} in the manifest", stage, key));
  }
  return *path;
}

void RequireArtifact(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw ConfigError(fmt::format("{} not found; run `needforge {}` first",
                                  path.string(), producer));
  }
}

std::ofstream OpenOutput(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string OriginalJudgmentId(const ExperimentCell& cell) {
  return "original." + SafeFileName(cell.judge_model) + "." +
         cell.topic_fields.ToString();
}

template <typename Key>
std::vector<const ExperimentCell*> UniqueCells(
    const std::vector<ExperimentCell>& cells, Key key) {
  std::vector<const ExperimentCell*> out;
  std::set<std::string> seen;
  for (const ExperimentCell& c : cells) {
    if (seen.insert(key(c)).second) out.push_back(&c);
  }
  return out;
}

std::vector<const ExperimentCell*> SynthesisCells(const ExperimentManifest& m) {
  return UniqueCells(m.cells, [](const ExperimentCell& c) { return c.SynthesisId(); });
}

std::vector<const ExperimentCell*> OriginalCells(const ExperimentManifest& m) {
  return UniqueCells(m.cells, OriginalJudgmentId);
}

std::vector<const ExperimentCell*> JudgedCells(const ExperimentManifest& m) {
  return UniqueCells(m.cells, [](const ExperimentCell& c) { return c.JudgmentId(); });
}

int ContextDocCount(const ExperimentCell& cell) {
  const VariantTraits& t = Traits(cell.prompt_variant);
  return cell.context_size * ((t.uses_pos ? 1 : 0) + (t.uses_neg ? 1 : 0));
}

std::map<std::string, std::vector<std::string>> LoadQueryVariants(
    const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& queries = out[j.at("topic_id").get<std::string>()];
      for (const auto& q : j.at("queries")) {
        queries.push_back(CollapseWhitespace(q.get<std::string>()));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("{}: {}", path.string(), e.what()), line_no);
    }
  }
  return out;
}

std::map<std::string, Topic> IndexTopics(const std::vector<Topic>& topics) {
  std::map<std::string, Topic> out;
  for (const Topic& t : topics) out.emplace(t.topic_id, t);
  return out;
}

std::vector<Topic> ReadTopicsJsonl(const fs::path& path) {
  return LoadTopics(path.string(), TopicFormat::kJsonl);
}

void WriteTopics(const std::vector<Topic>& topics, const fs::path& path) {
  std::ofstream out = OpenOutput(path);
  WriteJsonl(topics, out);
}

}  // namespace

TopicSource ParseTopicSource(std::string_view name) {
  const std::string lower = ToLower(name);
  if (lower == "original") return TopicSource::kOriginal;
  if (lower == "synthesized") return TopicSource::kSynthesized;
  throw InvalidArgument(fmt::format("topics must be original or synthesized, got '{}'", name));
}

std::string_view ReportName(ReportKind kind) {
  switch (kind) {
    case ReportKind::kAlignment:
      return "alignment";
    case ReportKind::kAgreement:
      return "agreement";
    case ReportKind::kLogo:
      return "logo";
    case ReportKind::kSimilarity:
      return "similarity";
    case ReportKind::kRegression:
      return "regression";
  }
  return "";
}

ReportKind ParseReportKind(std::string_view name) {
  for (ReportKind k : kAllReports) {
    if (ReportName(k) == ToLower(name)) return k;
  }
  throw InvalidArgument(fmt::format("unknown report '{}'", name));
}

std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void WriteTable(const Table& table, const fs::path& stem) {
  {
    std::ofstream csv = OpenOutput(fs::path(stem.string() + ".csv"));
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) csv << ',';
        csv << CsvEscape(cells[i]);
      }
      csv << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
  }
  std::ofstream md = OpenOutput(fs::path(stem.string() + ".md"));
  auto line = [&](const std::vector<std::string>& cells) {
    md << '|';
    for (const auto& c : cells) {
      std::string cell = c;
      std::replace(cell.begin(), cell.end(), '|', '/');
      md << ' ' << cell << " |";
    }
    md << '\n';
  };
  line(table.header);
  md << '|';
  for (std::size_t i = 0; i < table.header.size(); ++i) md << " --- |";
  md << '\n';
  for (const auto& row : table.rows) line(row);
  if (!table.notes.empty()) {
    md << '\n';
    for (const auto& note : table.notes) md << note << '\n';
  }
}

Pipeline::Pipeline(ExperimentManifest manifest,
                   std::shared_ptr<HttpTransport> transport)
    : manifest_(std::move(manifest)),
      gateway_(manifest_.llm.gateway, std::move(transport)) {}

namespace {

LlmRequest MakeRequest(const LlmSettings& llm, const std::string& model,
                       std::string prompt) {
  LlmRequest req;
  req.model = model;
  req.user_prompt = std::move(prompt);
  req.temperature = llm.temperature;
  req.max_tokens = llm.max_tokens;
  req.reasoning_effort = llm.reasoning_effort;
  return req;
}

struct SynthesisTally {
  int topics = 0;
  int produced = 0;
  int chi = 0;
  int context_errors = 0;
  int transport_errors = 0;
};

ordered_json ErrorRow(const std::string& cell, const std::string& topic_id,
                      std::string_view stage, const std::string& reason,
                      const std::string* raw = nullptr) {
  ordered_json j = {{"cell", cell}, {"topic_id", topic_id}, {"stage", stage},
                    {"reason", SanitizeUtf8(reason)}};
  if (raw) j["raw"] = SanitizeUtf8(*raw);
  return j;
}

}  // namespace

int Pipeline::Synthesize() {
  const ExperimentManifest& m = manifest_;
  if (m.llm.gateway.base_url.empty()) {
    throw ConfigError("synthesize needs llm.base_url in the manifest");
  }
  const std::vector<Topic> topics =
      LoadTopics(RequireInput(m.topics, "topics", "synthesize").string(),
                 m.topics_format);
  const Qrels gold = LoadQrels(RequireInput(m.qrels, "qrels", "synthesize").string(), m.scale);
  const auto cells = SynthesisCells(m);
  const bool needs_docs = std::any_of(cells.begin(), cells.end(), [](auto* c) {
    const auto& t = Traits(c->prompt_variant);
    return t.uses_pos || t.uses_neg;
  });
  DocStore docs;
  if (needs_docs) {
    docs = DocStore::Load(RequireInput(m.doc_store, "doc_store", "synthesize").string());
  }
  std::map<std::string, std::vector<std::string>> variants;
  if (m.query_variants) variants = LoadQueryVariants(*m.query_variants);

  std::ofstream errors = OpenOutput(OutputPath("synthesis_errors.jsonl"));
  Table summary{{"cell", "prompt", "context_size", "query_variants", "topic_model",
                 "topics", "synthesized", "chi", "context_errors",
                 "transport_errors"},
                {},
                {}};
  bool partial = false;

  for (const ExperimentCell* cell : cells) {
    const std::string id = cell->SynthesisId();
    spdlog::info("synthesize {}", id);
    const ContextPolicy policy{cell->context_size, m.doc_selection, m.seed,
                               m.max_doc_chars, cell->query_variants};
    const ContextSides sides = ContextSides::For(cell->prompt_variant);
    const bool uses_query = Traits(cell->prompt_variant).uses_query;
    SynthesisTally tally;
    std::vector<LlmRequest> requests;
    std::vector<std::size_t> request_topic;
    std::vector<ordered_json> error_rows;

    for (std::size_t i = 0; i < topics.size(); ++i) {
      const Topic& topic = topics[i];
      ++tally.topics;
      std::vector<std::string> queries{topic.Field(m.query_field)};
      if (auto it = variants.find(topic.topic_id); it != variants.end()) {
        const std::size_t n = std::min<std::size_t>(cell->query_variants, it->second.size());
        queries.insert(queries.end(), it->second.begin(), it->second.begin() + n);
      }
      try {
        if (uses_query && queries.front().empty()) {
          throw InvalidArgument(fmt::format("topic {}: empty {}", topic.topic_id,
                                            TopicFieldName(m.query_field)));
        }
        const SynthesisContext ctx =
            AssembleContext(topic.topic_id, gold, docs, policy, queries, sides);
        requests.push_back(MakeRequest(m.llm, cell->topic_model,
                                       RenderSynthesisPrompt(ctx, cell->prompt_variant)));
        request_topic.push_back(i);
      } catch (const InvalidArgument& e) {
        ++tally.context_errors;
        error_rows.push_back(ErrorRow(id, topic.topic_id, "context", e.what()));
      }
    }

    const auto outcomes = gateway_.CompleteBatch(requests);
    std::vector<Topic> produced;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      const Topic& source = topics[request_topic[k]];
      if (!outcomes[k].text) {
        ++tally.transport_errors;
        error_rows.push_back(ErrorRow(id, source.topic_id, "transport", outcomes[k].error));
        continue;
      }
      auto parsed = ParseTopicOutput(*outcomes[k].text, FieldSet::All());
      if (auto* t = std::get_if<Topic>(&parsed)) {
        t->topic_id = source.topic_id;
        produced.push_back(std::move(*t));
        ++tally.produced;
      } else {
        ++tally.chi;
        const auto& err = std::get<GenerationError>(parsed);
        error_rows.push_back(ErrorRow(id, source.topic_id, "parse", err.reason, &err.raw));
      }
    }
    WriteTopics(produced, OutputPath("synthesized/" + id + ".jsonl"));
    for (const auto& row : error_rows) errors << row.dump() << '\n';
    partial = partial || !error_rows.empty();
    summary.rows.push_back({id, std::string(VariantName(cell->prompt_variant)),
                            std::to_string(cell->context_size),
                            std::to_string(cell->query_variants), cell->topic_model,
                            std::to_string(tally.topics), std::to_string(tally.produced),
                            std::to_string(tally.chi), std::to_string(tally.context_errors),
                            std::to_string(tally.transport_errors)});
  }

  for (const ReconstructionSpec& spec : m.reconstructions) {
    const std::string id = spec.Id();
    spdlog::info("reconstruct {}", id);
    SynthesisTally tally;
    std::vector<LlmRequest> requests;
    std::vector<Topic> partials;
    std::vector<ordered_json> error_rows;
    for (const Topic& topic : topics) {
      ++tally.topics;
      Topic given;
      given.topic_id = topic.topic_id;
      for (TopicField f : spec.given.Fields()) given.Field(f) = topic.Field(f);
      try {
        requests.push_back(MakeRequest(m.llm, spec.topic_model,
                                       RenderReconstructionPrompt(given, spec.target)));
        partials.push_back(std::move(given));
      } catch (const InvalidArgument& e) {
        ++tally.context_errors;
        error_rows.push_back(ErrorRow(id, topic.topic_id, "context", e.what()));
      }
    }
    const auto outcomes = gateway_.CompleteBatch(requests);
    std::vector<Topic> produced;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      const Topic& given = partials[k];
      if (!outcomes[k].text) {
        ++tally.transport_errors;
        error_rows.push_back(ErrorRow(id, given.topic_id, "transport", outcomes[k].error));
        continue;
      }
      auto parsed = ParseTopicOutput(*outcomes[k].text, spec.target);
      if (auto* t = std::get_if<Topic>(&parsed)) {
        Topic merged = given;
        for (TopicField f : spec.target.Fields()) merged.Field(f) = t->Field(f);
        produced.push_back(std::move(merged));
        ++tally.produced;
      } else {
        ++tally.chi;
        const auto& err = std::get<GenerationError>(parsed);
        error_rows.push_back(ErrorRow(id, given.topic_id, "parse", err.reason, &err.raw));
      }
    }
    WriteTopics(produced, OutputPath("reconstructed/" + id + ".jsonl"));
    for (const auto& row : error_rows) errors << row.dump() << '\n';
    partial = partial || !error_rows.empty();
    summary.rows.push_back({id, "reconstruction", "", "", spec.topic_model,
                            std::to_string(tally.topics), std::to_string(tally.produced),
                            std::to_string(tally.chi), std::to_string(tally.context_errors),
                            std::to_string(tally.transport_errors)});
  }

  WriteTable(summary, OutputPath("synthesis_summary"));
  const auto stats = gateway_.stats();
  spdlog::info("synthesize done: {} network calls, {} cache hits",
               stats.network_calls, stats.cache_hits);
  return partial ? kExitPartial : kExitOk;
}

namespace {

// Judges every sampled pair against `topics`; pairs whose topic is missing
// become error records.
std::vector<JudgmentRecord> JudgeSet(const Qrels& sample,
                                     const std::map<std::string, Topic>& topics,
                                     const std::string& source, int context_size,
                                     const DocStore& docs, const JudgeConfig& config,
                                     LlmGateway& gateway) {
  std::vector<JudgmentRecord> records;
  std::vector<JudgeItem> items;
  std::vector<std::size_t> slots;
  for (const auto& [topic_id, judged] : sample.by_topic()) {
    const auto it = topics.find(topic_id);
    for (const auto& [doc_id, grade] : judged) {
      (void)grade;
      if (it == topics.end()) {
        JudgmentRecord r;
        r.topic_id = topic_id;
        r.doc_id = doc_id;
        r.judge_model = config.judge_model;
        r.prompt_variant = source;
        r.topic_fields_used = config.topic_fields;
        r.context_size = context_size;
        r.error_flag = true;
        r.error_reason = "no topic text for topic " + topic_id;
        r.template_version = kJudgeTemplateVersion;
        records.push_back(std::move(r));
        continue;
      }
      items.push_back({it->second, doc_id, source, context_size});
      slots.push_back(records.size());
      records.emplace_back();
    }
  }
  auto judged = JudgeBatch(items, docs, config, gateway);
  for (std::size_t k = 0; k < judged.size(); ++k) records[slots[k]] = std::move(judged[k]);
  return records;
}

JudgeConfig MakeJudgeConfig(const ExperimentManifest& m, const ExperimentCell& cell) {
  JudgeConfig config;
  config.topic_fields = cell.topic_fields;
  config.scale = m.scale;
  config.judge_model = cell.judge_model;
  config.temperature = m.llm.temperature;
  config.max_tokens = m.llm.max_tokens;
  config.reasoning_effort = m.llm.reasoning_effort;
  return config;
}

Qrels LoadSample(const ExperimentManifest& m, std::string_view stage) {
  if (m.judge_sample) return LoadQrels(m.judge_sample->string(), m.scale);
  return LoadQrels(RequireInput(m.qrels, "qrels", stage).string(), m.scale);
}

}  // namespace

int Pipeline::Judge(TopicSource source) {
  const ExperimentManifest& m = manifest_;
  if (m.llm.gateway.base_url.empty()) {
    throw ConfigError("judge needs llm.base_url in the manifest");
  }
  const Qrels sample = LoadSample(m, "judge");
  const DocStore docs =
      DocStore::Load(RequireInput(m.doc_store, "doc_store", "judge").string());
  const bool original = source == TopicSource::kOriginal;
  std::map<std::string, Topic> original_topics;
  if (original) {
    original_topics = IndexTopics(LoadTopics(
        RequireInput(m.topics, "topics", "judge").string(), m.topics_format));
  }

  Table summary{{"judgments", "source", "judge_model", "topic_fields", "pairs", "judged", "chi"},
                {},
                {}};
  bool partial = false;
  for (const ExperimentCell* cell : original ? OriginalCells(m) : JudgedCells(m)) {
    const std::string id = original ? OriginalJudgmentId(*cell) : cell->JudgmentId();
    const std::string topic_source = original ? "original" : cell->SynthesisId();
    std::map<std::string, Topic> synthesized;
    if (!original) {
      const fs::path path = OutputPath("synthesized/" + cell->SynthesisId() + ".jsonl");
      RequireArtifact(path, "synthesize");
      synthesized = IndexTopics(ReadTopicsJsonl(path));
    }
    spdlog::info("judge {}", id);
    const auto records = JudgeSet(sample, original ? original_topics : synthesized,
                                  topic_source, original ? 0 : cell->context_size, docs,
                                  MakeJudgeConfig(m, *cell), gateway_);
    {
      std::ofstream out = OpenOutput(OutputPath("judgments/" + id + ".jsonl"));
      WriteJsonl(records, out);
    }
    const auto chi = std::count_if(records.begin(), records.end(),
                                   [](const JudgmentRecord& r) { return r.error_flag; });
    partial = partial || chi > 0;
    summary.rows.push_back({id, topic_source, cell->judge_model,
                            cell->topic_fields.ToString(), std::to_string(records.size()),
                            std::to_string(records.size() - chi), std::to_string(chi)});
  }
  WriteTable(summary, OutputPath(original ? "judge_summary.original"
                                          : "judge_summary.synthesized"));
  const auto stats = gateway_.stats();
  spdlog::info("judge done: {} network calls, {} cache hits", stats.network_calls,
               stats.cache_hits);
  return partial ? kExitPartial : kExitOk;
}

int Pipeline::Report(ReportKind kind) {
  switch (kind) {
    case ReportKind::kAlignment:
      return ReportAlignment();
    case ReportKind::kAgreement:
      return ReportAgreement();
    case ReportKind::kLogo:
      return ReportLogo();
    case ReportKind::kSimilarity:
      return ReportSimilarity();
    case ReportKind::kRegression:
      return ReportRegression();
  }
  return kExitConfig;
}

int Pipeline::ReportAll() {
  int code = kExitOk;
  int produced = 0;
  for (ReportKind kind : kAllReports) {
    try {
      code = std::max(code, Report(kind));
      ++produced;
    } catch (const ConfigError& e) {
      spdlog::warn("skipping {} report: {}", ReportName(kind), e.what());
    }
  }
  if (produced == 0) throw ConfigError("no report could be produced");
  return code;
}

namespace {

struct JudgmentSet {
  std::string id;
  const ExperimentCell* cell;
  bool original;
  std::vector<JudgmentRecord> records;
};

// Original sets first, then synthesized ones, in manifest order; only sets
// whose file exists.
std::vector<JudgmentSet> LoadJudgmentSets(const ExperimentManifest& m,
                                          const fs::path& dir) {
  std::vector<JudgmentSet> out;
  for (const ExperimentCell* c : OriginalCells(m)) {
    const fs::path path = dir / (OriginalJudgmentId(*c) + ".jsonl");
    if (fs::exists(path)) out.push_back({OriginalJudgmentId(*c), c, true, LoadJudgments(path.string())});
  }
  for (const ExperimentCell* c : JudgedCells(m)) {
    const fs::path path = dir / (c->JudgmentId() + ".jsonl");
    if (fs::exists(path)) out.push_back({c->JudgmentId(), c, false, LoadJudgments(path.string())});
  }
  return out;
}

}  // namespace

int Pipeline::ReportAlignment() {
  const ExperimentManifest& m = manifest_;
  const Qrels gold =
      LoadQrels(RequireInput(m.qrels, "qrels", "eval-alignment").string(), m.scale);
  const auto sets = LoadJudgmentSets(m, OutputPath("judgments"));
  if (sets.empty()) {
    throw ConfigError(fmt::format("no judgments under {}; run `needforge judge` first",
                                  OutputPath("judgments").string()));
  }
  const BootstrapOptions options{m.bootstrap_resamples, 0.95, m.seed,
                                 m.bootstrap_by_topic ? BootstrapUnit::kTopic
                                                      : BootstrapUnit::kPair};
  Table table;
  table.header = {"judgments", "source", "judge_model", "topic_model", "prompt",
                  "context_size", "query_variants", "topic_fields", "n", "chi",
                  "kappa", "kappa_lo", "kappa_hi", "mae", "mae_lo", "mae_hi",
                  "kappa_binary"};
  for (int g = 0; g <= m.scale.max_grade; ++g) table.header.push_back(fmt::format("p{}", g));
  for (const char* h : {"t", "p", "sig"}) table.header.push_back(h);

  std::map<std::string, std::vector<double>> baseline_replicates;
  bool partial = false;
  for (const JudgmentSet& set : sets) {
    const AlignedLabels aligned = AlignLabels(gold, set.records);
    const ExperimentCell& c = *set.cell;
    std::vector<std::string> row = {
        set.id,
        set.original ? "original" : "synthesized",
        c.judge_model,
        set.original ? "" : c.topic_model,
        set.original ? "" : std::string(VariantName(c.prompt_variant)),
        set.original ? "" : std::to_string(c.context_size),
        set.original ? "" : std::to_string(c.query_variants),
        c.topic_fields.ToString(),
        std::to_string(aligned.labels.size()),
        std::to_string(aligned.chi)};
    partial = partial || aligned.chi > 0;
    if (aligned.labels.size() == 0) {
      partial = true;
      row.resize(table.header.size(), "nan");
      row[row.size() - 1] = "";
      table.rows.push_back(std::move(row));
      continue;
    }
    const AgreementReport r = SummarizeAlignment(aligned.labels, aligned.chi, options);
    for (double v : {r.kappa, r.kappa_ci.first, r.kappa_ci.second, r.mae, r.mae_ci.first,
                     r.mae_ci.second, CohenKappa(BinarizePairs(aligned.labels))}) {
      row.push_back(Num(v));
    }
    for (double p : r.label_distribution) row.push_back(Num(p));
    const std::string baseline_key = OriginalJudgmentId(c);
    if (set.original) {
      baseline_replicates[baseline_key] = r.kappa_replicates;
      row.insert(row.end(), {"", "", ""});
    } else if (auto it = baseline_replicates.find(baseline_key);
               it != baseline_replicates.end() && !it->second.empty() &&
               it->second.size() == r.kappa_replicates.size()) {
      const TTestResult t = PairedTTest(r.kappa_replicates, it->second, m.alpha);
      row.insert(row.end(), {Num(t.t), Num(t.p), t.significant ? "*" : ""});
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    table.rows.push_back(std::move(row));
  }
  table.notes = {
      fmt::format("Scale {}. CIs: {} bootstrap resamples over {}, seed {}.",
                  m.scale.name_str(), m.bootstrap_resamples,
                  m.bootstrap_by_topic ? "topics" : "pairs", m.seed),
      fmt::format("* paired t-test against the original-topic judgments of the same "
                  "judge and fields, p < {}.",
                  Num(m.alpha, 2))};
  WriteTable(table, OutputPath("reports/alignment"));
  return partial ? kExitPartial : kExitOk;
}

int Pipeline::ReportAgreement() {
  const ExperimentManifest& m = manifest_;
  const auto sets = LoadJudgmentSets(m, OutputPath("judgments"));
  std::vector<const JudgmentSet*> originals;
  for (const auto& s : sets) {
    if (s.original) originals.push_back(&s);
  }
  if (originals.empty()) {
    throw ConfigError("eval-agreement needs original-topic judgments; run "
                      "`needforge judge --topics original` first");
  }
  Table fleiss{{"topic_fields", "assessors", "items", "fleiss_kappa", "fleiss_kappa_binary"},
               {},
               {}};
  Table relevant{{"topic_fields", "assessor", "n", "relevant_pct"}, {}, {}};
  std::vector<FieldSet> field_sets;
  for (const JudgmentSet* s : originals) {
    if (std::find(field_sets.begin(), field_sets.end(), s->cell->topic_fields) ==
        field_sets.end()) {
      field_sets.push_back(s->cell->topic_fields);
    }
  }
  for (FieldSet fields : field_sets) {
    std::vector<std::vector<JudgmentRecord>> assessors;
    for (const JudgmentSet* s : originals) {
      if (s->cell->topic_fields != fields) continue;
      assessors.push_back(s->records);
      std::vector<int> grades;
      for (const auto& r : s->records) {
        if (r.grade) grades.push_back(*r.grade);
      }
      relevant.rows.push_back(
          {fields.ToString(), s->cell->judge_model, std::to_string(grades.size()),
           grades.empty() ? "nan" : Num(100.0 * RelevantFraction(grades, m.scale), 2)});
    }
    const auto graded = BuildFleissMatrix(assessors, m.scale, false);
    const auto binary = BuildFleissMatrix(assessors, m.scale, true);
    const bool enough = assessors.size() >= 2 && !graded.empty();
    const int raters = static_cast<int>(assessors.size());
    fleiss.rows.push_back({fields.ToString(), std::to_string(assessors.size()),
                           std::to_string(graded.size()),
                           enough ? Num(FleissKappa(graded, raters)) : "nan",
                           enough ? Num(FleissKappa(binary, raters)) : "nan"});
  }
  const Qrels sample = LoadSample(m, "eval-agreement");
  std::vector<int> human;
  for (const auto& [topic, judged] : sample.by_topic()) {
    for (const auto& [doc, grade] : judged) human.push_back(grade);
  }
  if (!human.empty()) {
    relevant.rows.push_back({"", "human", std::to_string(human.size()),
                             Num(100.0 * RelevantFraction(human, m.scale), 2)});
  }
  fleiss.notes = {"Raters are the judge models; items judged by every rater."};
  relevant.notes = {fmt::format("Relevant means grade >= {} on the {} scale.",
                                m.scale.binary_threshold, m.scale.name_str())};
  WriteTable(fleiss, OutputPath("reports/agreement"));
  WriteTable(relevant, OutputPath("reports/relevant"));
  return kExitOk;
}

int Pipeline::ReportLogo() {
  const ExperimentManifest& m = manifest_;
  if (m.runs.empty()) throw ConfigError("eval-logo needs paths.runs in the manifest");
  if (!m.group_manifest) {
    throw ConfigError(
        "eval-logo needs paths.group_manifest: a text file with one "
        "`<run_tag> <group_id>` line per run");
  }
  std::map<std::string, std::string> groups;
  {
    std::ifstream in(*m.group_manifest, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + m.group_manifest->string());
    groups = ParseGroupManifest(in);
  }
  std::vector<RunFile> runs;
  std::vector<std::string> unassigned;
  for (const fs::path& p : m.runs) {
    RunFile run = LoadRun(p.string());
    if (auto it = groups.find(run.system_id); it != groups.end()) {
      run.group_id = it->second;
    } else {
      unassigned.push_back(run.system_id);
    }
    runs.push_back(std::move(run));
  }
  if (!unassigned.empty()) {
    std::string names;
    for (const auto& n : unassigned) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError(fmt::format("group manifest {} has no group for runs: {}",
                                  m.group_manifest->string(), names));
  }

  std::vector<std::pair<std::string, Qrels>> qrels_sets;
  qrels_sets.emplace_back(
      "human", LoadQrels(RequireInput(m.qrels, "qrels", "eval-logo").string(), m.scale));
  for (const auto& s : LoadJudgmentSets(m, OutputPath("judgments"))) {
    qrels_sets.emplace_back(s.id, JudgmentsToQrels(s.records, m.scale));
  }
  const LogoOptions options{m.pool_depth, m.tau_mode};
  Table table{{"qrels", "group", "metric", "spearman", "tau_ap", "removed_judgments"}, {}, {}};
  bool partial = false;
  for (const auto& [id, qrels] : qrels_sets) {
    LogoReport report;
    try {
      report = LogoExperiment(runs, qrels, m.metrics, options);
    } catch (const InvalidArgument& e) {
      spdlog::warn("logo over {}: {}", id, e.what());
      table.rows.push_back({id, "error", "", "nan", "nan", SanitizeUtf8(e.what())});
      partial = true;
      continue;
    }
    for (const auto& g : report.per_group) {
      table.rows.push_back({id, g.group_id, g.metric, Num(g.spearman), Num(g.tau_ap),
                            std::to_string(g.removed_judgments)});
    }
    for (const auto& a : report.aggregates) {
      table.rows.push_back({id, "mean", a.metric, Num(a.mean_spearman), Num(a.mean_tau_ap), ""});
      table.rows.push_back({id, "min", a.metric, Num(a.min_spearman), Num(a.min_tau_ap), ""});
    }
  }
  table.notes = {fmt::format("{} runs; contribution depth {}.", runs.size(),
                             m.pool_depth ? std::to_string(*m.pool_depth) : "full")};
  WriteTable(table, OutputPath("reports/logo"));
  return partial ? kExitPartial : kExitOk;
}

namespace {

struct FieldAverages {
  int n = 0;
  double rouge = 0.0;
  double rel_len = 0.0;
  double bert = 0.0;
  int bert_n = 0;

  void Add(const SimilarityRow& row) {
    ++n;
    rouge += row.rouge_l_f1;
    rel_len += row.relative_length;
    if (row.bertscore_f1) {
      bert += *row.bertscore_f1;
      ++bert_n;
    }
  }
};

// Field order within a report: title, description, narrative, topic.
int FieldOrder(const std::string& field) {
  static const std::vector<std::string> kOrder = {"title", "description", "narrative", "topic"};
  return static_cast<int>(std::find(kOrder.begin(), kOrder.end(), field) - kOrder.begin());
}

}  // namespace

int Pipeline::ReportSimilarity() {
  const ExperimentManifest& m = manifest_;
  const auto originals = IndexTopics(LoadTopics(
      RequireInput(m.topics, "topics", "eval-similarity").string(), m.topics_format));
  Embedder embed;
  if (gateway_.has_sidecar()) {
    embed = [this](const std::string& text) { return gateway_.EmbedTokens(text); };
  }
  const BertScoreOptions options{m.bertscore_baseline};
  std::string embedding_model;
  bool partial = false;
  int sources = 0;

  Table table{{"source", "input", "reconstructed", "n", "bertscore_f1", "relative_length",
               "rouge_l_f1", "embedding_model"},
              {},
              {}};
  auto compare = [&](const std::string& source, const std::string& input,
                     const std::vector<Topic>& candidates, FieldSet fields) {
    std::map<std::string, FieldAverages> by_field;
    for (const Topic& candidate : candidates) {
      auto it = originals.find(candidate.topic_id);
      if (it == originals.end()) continue;
      Topic restricted;
      restricted.topic_id = candidate.topic_id;
      for (TopicField f : fields.Fields()) restricted.Field(f) = candidate.Field(f);
      try {
        const SimilarityReport r = CompareTopics(restricted, it->second, embed, options);
        if (!r.embedding_model.empty()) embedding_model = r.embedding_model;
        for (const auto& row : r.rows) by_field[row.field].Add(row);
      } catch (const Error& e) {
        spdlog::warn("similarity {} topic {}: {}", source, candidate.topic_id, e.what());
        partial = true;
      }
    }
    std::vector<std::pair<std::string, FieldAverages>> ordered(by_field.begin(), by_field.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      return FieldOrder(a.first) < FieldOrder(b.first);
    });
    for (const auto& [field, avg] : ordered) {
      table.rows.push_back(
          {source, input, field, std::to_string(avg.n),
           avg.bert_n ? Num(avg.bert / avg.bert_n) : "", Num(avg.rel_len / avg.n),
           Num(avg.rouge / avg.n), ""});
    }
  };

  for (const ExperimentCell* c : SynthesisCells(m)) {
    const fs::path path = OutputPath("synthesized/" + c->SynthesisId() + ".jsonl");
    if (!fs::exists(path)) continue;
    ++sources;
    compare(c->SynthesisId(), std::string(VariantName(c->prompt_variant)),
            ReadTopicsJsonl(path), FieldSet::All());
  }
  for (const ReconstructionSpec& spec : m.reconstructions) {
    const fs::path path = OutputPath("reconstructed/" + spec.Id() + ".jsonl");
    if (!fs::exists(path)) continue;
    ++sources;
    compare(spec.Id(), spec.given.ToString(), ReadTopicsJsonl(path), spec.target);
  }
  if (sources == 0) {
    throw ConfigError("eval-similarity found no synthesized or reconstructed topics; "
                      "run `needforge synthesize` first");
  }
  for (auto& row : table.rows) row.back() = embedding_model;
  table.notes = {embedding_model.empty()
                     ? "BERTScore omitted: no embedding sidecar configured."
                     : "BERTScore embeddings: " + embedding_model + "."};
  WriteTable(table, OutputPath("reports/similarity"));
  return partial ? kExitPartial : kExitOk;
}

int Pipeline::ReportRegression() {
  const ExperimentManifest& m = manifest_;
  const Qrels gold =
      LoadQrels(RequireInput(m.qrels, "qrels", "regress").string(), m.scale);
  std::vector<FactorRow> rows;
  for (const auto& s : LoadJudgmentSets(m, OutputPath("judgments"))) {
    if (s.original) continue;
    const AlignedLabels aligned = AlignLabels(gold, s.records);
    if (aligned.labels.size() == 0) continue;
    const ExperimentCell& c = *s.cell;
    rows.push_back({c.judge_model, c.topic_model, std::string(VariantName(c.prompt_variant)),
                    c.judge_model == c.topic_model, ContextDocCount(c),
                    CohenKappa(aligned.labels)});
  }
  if (rows.empty()) {
    throw ConfigError("regress needs synthesized-topic judgments; run "
                      "`needforge judge --topics synthesized` first");
  }
  // Factors without variation in this grid cannot be estimated.
  std::vector<Factor> factors;
  std::vector<Observation> observations;
  for (const FactorRow& r : rows) observations.push_back(r.ToObservation());
  for (Factor f : FactorRowFactors(rows)) {
    bool varies = f.levels.size() > 1;
    if (f.numeric()) {
      for (const auto& o : observations) {
        varies = varies || o.numeric.at(f.name) != observations.front().numeric.at(f.name);
      }
    }
    if (varies) factors.push_back(std::move(f));
  }
  std::map<std::string, std::string> baselines;
  for (const Factor& f : factors) {
    if (auto it = m.regression_baselines.find(f.name); it != m.regression_baselines.end()) {
      baselines.insert(*it);
    }
  }
  const RegressionFit fit = FitFactors(observations, factors, baselines);
  Table coef{{"term", "beta", "std_err", "t", "p", "sig"}, {}, {}};
  for (const Coefficient& c : fit.coefficients) {
    coef.rows.push_back({c.term, Num(c.beta), Num(c.std_err), Num(c.t), Num(c.p),
                         SignificanceStars(c.p)});
  }
  coef.rows.push_back({"R2", Num(fit.r2), "", "", "", ""});
  coef.rows.push_back({"Adj. R2", Num(fit.adj_r2), "", "", "", ""});
  coef.rows.push_back({"n", std::to_string(fit.n), "", "", "", ""});
  std::string base_note = "Baselines:";
  for (const auto& [factor, level] : fit.baseline_levels) {
    base_note += fmt::format(" {}={}", factor, level);
  }
  coef.notes = {base_note, "Response: graded Cohen's kappa per judged cell.",
                "* p < 0.05, ** p < 0.01, *** p < 0.001"};
  WriteTable(coef, OutputPath("reports/regression"));

  Table anova{{"factor", "sum_sq", "df", "eta2", "F", "p"}, {}, {}};
  for (const AnovaTerm& t : AnovaType2Eta2(observations, factors, baselines)) {
    anova.rows.push_back({t.factor, Num(t.sum_sq, 6), std::to_string(t.df), Num(t.eta2),
                          Num(t.f), Num(t.p)});
  }
  WriteTable(anova, OutputPath("reports/anova"));
  return kExitOk;
}

}  // namespace needforge
