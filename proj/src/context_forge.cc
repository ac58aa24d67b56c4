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


#include "needforge/context_forge.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "needforge/error.h"
#include "needforge/random.h"
#include "needforge/text.h"

namespace needforge {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr VariantTraits kVariantTable[] = {
    {"query", true, false, false},
    {"query-contrastive", true, true, true},
    {"query-docs-pos", true, true, false},
    {"query-docs-neg", true, false, true},
    {"contrastive", false, true, true},
    {"docs-pos", false, true, false},
    {"docs-neg", false, false, true},
};

constexpr int kMaxContextSize = 5;
constexpr int kMaxQueryVariants = 4;

std::string_view FieldGloss(TopicField f) {
  switch (f) {
    case TopicField::kTitle:
      return "The title should be a brief, 2-4 word label for the topic.";
    case TopicField::kDescription:
      return "The description should clearly summarize the user's information "
             "goal in one sentence or a question.";
    case TopicField::kNarrative:
      break;
  }
  return "The narrative should be a short statement that explains the user's "
         "intent and the criteria for relevance.";
}

std::string_view FieldLabel(TopicField f) {
  switch (f) {
    case TopicField::kTitle:
      return "Title";
    case TopicField::kDescription:
      return "Description";
    case TopicField::kNarrative:
      break;
  }
  return "Narrative";
}

// "title", "title and narrative", "title, description, and narrative".
std::string JoinFieldNames(FieldSet fields) {
  std::vector<std::string_view> names;
  for (TopicField f : fields.Fields()) names.push_back(TopicFieldName(f));
  if (names.size() == 1) return std::string(names[0]);
  if (names.size() == 2) return fmt::format("{} and {}", names[0], names[1]);
  return fmt::format("{}, {}, and {}", names[0], names[1], names[2]);
}

// Names the context kinds present, e.g. "user queries, relevant and not
// relevant documents".
std::string ContextKinds(const VariantTraits& t) {
  std::vector<std::string> doc_kinds;
  if (t.uses_pos) doc_kinds.push_back("relevant");
  if (t.uses_neg) doc_kinds.push_back("not relevant");
  std::string docs;
  if (!doc_kinds.empty()) {
    docs = doc_kinds.size() == 2 ? "relevant and not relevant documents"
                                 : doc_kinds[0] + " documents";
  }
  if (!t.uses_query) return docs;
  if (docs.empty()) return "user queries";
  return doc_kinds.size() == 2 ? "user queries, " + docs
                               : "user queries and " + docs;
}

void AppendDocuments(std::string& out, const std::vector<ContextDoc>& docs) {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out += fmt::format("Document {}:\n{}\n", i + 1, docs[i].text);
    if (i + 1 < docs.size()) out += '\n';
  }
}

struct Candidate {
  std::string doc_id;
  int grade;
};

std::vector<ContextDoc> SelectSide(const std::string& topic_id,
                                   std::vector<Candidate> candidates,
                                   const char* side, const DocStore& docs,
                                   const ContextPolicy& policy) {
  const auto k = static_cast<std::size_t>(policy.context_size);
  if (candidates.size() < k) {
    throw InvalidArgument(fmt::format("topic {}: {} side has {} < {}", topic_id,
                                      side, candidates.size(), k));
  }
  if (policy.selection == DocSelection::kTopGradeThenDocId) {
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.grade != b.grade) return a.grade > b.grade;
                return a.doc_id < b.doc_id;
              });
  } else {
    // Candidates arrive sorted by doc_id, so the draw depends only on the
    // seed, the topic and the side.
    Rng rng(policy.seed ^ StableHash(topic_id) ^ StableHash(side));
    rng.PartialShuffle(candidates, k);
  }
  std::vector<ContextDoc> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::string* text = docs.Find(candidates[i].doc_id);
    if (text == nullptr) {
      throw InvalidArgument(fmt::format("topic {}: document {} not in store",
                                        topic_id, candidates[i].doc_id));
    }
    out.push_back({candidates[i].doc_id,
                   TruncateAtWhitespace(*text, policy.max_doc_chars)});
  }
  return out;
}

}  // namespace

DocStore DocStore::Load(const std::string& path) {
  namespace fs = std::filesystem;
  DocStore store;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      store.Add(file.stem().string(), SanitizeUtf8(buf.str()));
    }
    return store;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open document store " + path);
  return FromJsonl(in);
}

DocStore DocStore::FromJsonl(std::istream& in) {
  DocStore store;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(SanitizeUtf8(line));
      const auto& id = j.at("doc_id");
      store.Add(id.is_string() ? id.get<std::string>() : id.dump(),
                j.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid document record: ") + e.what(),
                       line_no);
    }
  }
  return store;
}

void DocStore::Add(std::string doc_id, std::string text) {
  docs_.insert_or_assign(std::move(doc_id), std::move(text));
}

const std::string* DocStore::Find(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

const std::string& DocStore::Text(const std::string& doc_id) const {
  const std::string* text = Find(doc_id);
  if (text == nullptr) throw InvalidArgument("unknown document " + doc_id);
  return *text;
}

const VariantTraits& Traits(PromptVariant variant) {
  return kVariantTable[static_cast<int>(variant)];
}

PromptVariant ParsePromptVariant(std::string_view name) {
  std::string normalized = ToLower(Trim(name));
  std::replace(normalized.begin(), normalized.end(), '_', '-');
  for (PromptVariant v : kAllPromptVariants) {
    if (Traits(v).name == normalized) return v;
  }
  throw InvalidArgument("unknown prompt variant '" + std::string(name) + "'");
}

DocSelection ParseDocSelection(std::string_view name) {
  const std::string lower = ToLower(Trim(name));
  if (lower == "top_grade_then_docid") return DocSelection::kTopGradeThenDocId;
  if (lower == "random_seeded") return DocSelection::kRandomSeeded;
  throw InvalidArgument("unknown doc selection '" + std::string(name) + "'");
}

void ContextPolicy::Validate() const {
  if (context_size < 1 || context_size > kMaxContextSize) {
    throw InvalidArgument(
        fmt::format("context size {} outside 1..{}", context_size, kMaxContextSize));
  }
  if (max_doc_chars == 0) throw InvalidArgument("max_doc_chars must be > 0");
  if (include_query_variants < 0 || include_query_variants > kMaxQueryVariants) {
    throw InvalidArgument(fmt::format("query variants {} outside 0..{}",
                                      include_query_variants, kMaxQueryVariants));
  }
}

SynthesisContext AssembleContext(const std::string& topic_id,
                                 const Qrels& qrels, const DocStore& docs,
                                 const ContextPolicy& policy,
                                 std::span<const std::string> queries,
                                 ContextSides sides) {
  policy.Validate();
  SynthesisContext ctx;
  ctx.topic_id = topic_id;
  const std::size_t n_queries =
      std::min(queries.size(),
               static_cast<std::size_t>(1 + policy.include_query_variants));
  for (std::size_t i = 0; i < n_queries; ++i) {
    std::string q = CollapseWhitespace(queries[i]);
    if (!q.empty()) ctx.queries.push_back(std::move(q));
  }

  if (sides.positive || sides.negative) {
    const auto* judged = qrels.TopicJudgments(topic_id);
    if (judged == nullptr) {
      throw InvalidArgument("topic " + topic_id + " has no judgments");
    }
    std::vector<Candidate> pos;
    std::vector<Candidate> neg;
    for (const auto& [doc_id, grade] : *judged) {
      (grade >= qrels.scale().binary_threshold ? pos : neg)
          .push_back({doc_id, grade});
    }
    if (sides.positive) {
      ctx.positive_docs = SelectSide(topic_id, std::move(pos), "positive", docs, policy);
    }
    if (sides.negative) {
      ctx.negative_docs = SelectSide(topic_id, std::move(neg), "negative", docs, policy);
    }
  }
  if (ctx.queries.empty() && ctx.positive_docs.empty() &&
      ctx.negative_docs.empty()) {
    throw InvalidArgument("topic " + topic_id +
                          ": context needs a query or documents");
  }
  return ctx;
}

std::string FormatInstructions(FieldSet fields) {
  ordered_json properties = ordered_json::object();
  ordered_json required = ordered_json::array();
  for (TopicField f : fields.Fields()) {
    const std::string name(TopicFieldName(f));
    properties[name] = {{"type", "string"},
                        {"description", std::string(FieldGloss(f))}};
    required.push_back(name);
  }
  ordered_json schema = {{"type", "object"},
                         {"properties", std::move(properties)},
                         {"required", std::move(required)},
                         {"additionalProperties", false}};
  return "Respond with a single JSON object that conforms to the JSON schema "
         "below. Do not wrap it in other text.\n```json\n" +
         schema.dump(2) + "\n```";
}

std::string RenderSynthesisPrompt(const SynthesisContext& ctx,
                                  PromptVariant variant) {
  const VariantTraits& t = Traits(variant);
  if (t.uses_query && ctx.queries.empty()) {
    throw InvalidArgument(fmt::format("variant {} needs queries", t.name));
  }
  if (t.uses_pos && ctx.positive_docs.empty()) {
    throw InvalidArgument(fmt::format("variant {} needs relevant documents", t.name));
  }
  if (t.uses_neg && ctx.negative_docs.empty()) {
    throw InvalidArgument(
        fmt::format("variant {} needs not relevant documents", t.name));
  }

  std::string out = fmt::format(
      "Given some {}, you must provide a TREC-style topic that simulates a "
      "nuanced user information need.\n\n",
      ContextKinds(t));
  out += "The topic must include the following fields: title, description, and "
         "narrative.";
  for (TopicField f : kAllTopicFields) {
    out += ' ';
    out += FieldGloss(f);
  }
  out += "\n\n";
  if (t.uses_query) {
    out += "Queries\nA person has typed these queries into a search engine:\n";
    for (const std::string& q : ctx.queries) out += "- " + q + "\n";
    out += '\n';
  }
  if (t.uses_pos) {
    out += "BEGIN RELEVANT DOCUMENTS CONTENT -\n";
    AppendDocuments(out, ctx.positive_docs);
    out += "END RELEVANT DOCUMENTS CONTENT -\n\n";
  }
  if (t.uses_neg) {
    out += "BEGIN NOT RELEVANT DOCUMENTS CONTENT -\n";
    AppendDocuments(out, ctx.negative_docs);
    out += "END NOT RELEVANT DOCUMENTS CONTENT -\n\n";
  }
  out += "Output Format and Structure:\n";
  out += FormatInstructions(FieldSet::All());
  out += '\n';
  return out;
}

std::string RenderReconstructionPrompt(const Topic& partial,
                                       FieldSet target_fields) {
  const FieldSet given = partial.PresentFields();
  if (target_fields.empty()) throw InvalidArgument("no target fields");
  if (given.empty()) throw InvalidArgument("no given fields");
  if (!given.Intersect(target_fields).empty()) {
    throw InvalidArgument("given and target fields overlap: " +
                          given.Intersect(target_fields).ToString());
  }
  if (given.Union(target_fields) != FieldSet::All()) {
    throw InvalidArgument("given and target fields must cover title, "
                          "description, and narrative");
  }
  const bool plural = target_fields.size() > 1;
  std::string out = fmt::format(
      "Given the {} of a TREC-style topic that simulates a nuanced user "
      "information need, you must provide the missing {}: {}.",
      JoinFieldNames(given), plural ? "fields" : "field",
      JoinFieldNames(target_fields));
  for (TopicField f : target_fields.Fields()) {
    out += ' ';
    out += FieldGloss(f);
  }
  out += "\n\nBEGIN TOPIC FIELDS -\n";
  for (TopicField f : given.Fields()) {
    out += fmt::format("{}: {}\n", FieldLabel(f), partial.Field(f));
  }
  out += "END TOPIC FIELDS -\n\n";
  out += "Output Format and Structure:\n";
  out += FormatInstructions(target_fields);
  out += '\n';
  return out;
}

std::optional<std::string> ExtractFirstJsonObject(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        std::string candidate(raw.substr(start, i - start + 1));
        if (nlohmann::json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

TopicOrError ParseTopicOutput(std::string_view raw, FieldSet expected_fields) {
  const std::string sanitized = SanitizeUtf8(raw);
  const auto object = ExtractFirstJsonObject(sanitized);
  if (!object) return GenerationError{"no JSON object in output", sanitized};
  const auto j = nlohmann::json::parse(*object);
  Topic topic;
  for (TopicField f : expected_fields.Fields()) {
    const std::string name(TopicFieldName(f));
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
      return GenerationError{"missing field " + name, sanitized};
    }
    std::string value(Trim(it->get<std::string>()));
    if (value.empty()) return GenerationError{"empty field " + name, sanitized};
    topic.Field(f) = std::move(value);
  }
  return topic;
}

}  // namespace needforge
