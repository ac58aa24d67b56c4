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


// Synthesis contexts, the seven synthesis prompt variants, reconstruction
// prompts, and parsing of generated topics.

#ifndef NEEDFORGE_CONTEXT_FORGE_H_
#define NEEDFORGE_CONTEXT_FORGE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "needforge/trec_io.h"

namespace needforge {

// doc_id -> document text.
class DocStore {
 public:
  // JSONL of {"doc_id": ..., "text": ...} or a directory of <doc_id>.txt.
  static DocStore Load(const std::string& path);
  static DocStore FromJsonl(std::istream& in);

  void Add(std::string doc_id, std::string text);
  const std::string* Find(const std::string& doc_id) const;
  // Throws InvalidArgument when the document is unknown.
  const std::string& Text(const std::string& doc_id) const;
  std::size_t size() const { return docs_.size(); }

 private:
  std::unordered_map<std::string, std::string> docs_;
};

struct ContextDoc {
  std::string doc_id;
  std::string text;

  friend bool operator==(const ContextDoc&, const ContextDoc&) = default;
};

struct SynthesisContext {
  std::string topic_id;
  // Original query first, then variants.
  std::vector<std::string> queries;
  std::vector<ContextDoc> positive_docs;
  std::vector<ContextDoc> negative_docs;

  friend bool operator==(const SynthesisContext&,
                         const SynthesisContext&) = default;
};

enum class PromptVariant {
  kQuery,
  kQueryContrastive,
  kQueryDocsPos,
  kQueryDocsNeg,
  kContrastive,
  kDocsPos,
  kDocsNeg,
};

inline constexpr PromptVariant kAllPromptVariants[] = {
    PromptVariant::kQuery,        PromptVariant::kQueryContrastive,
    PromptVariant::kQueryDocsPos, PromptVariant::kQueryDocsNeg,
    PromptVariant::kContrastive,  PromptVariant::kDocsPos,
    PromptVariant::kDocsNeg,
};

// Which context kinds a variant embeds.
struct VariantTraits {
  std::string_view name;
  bool uses_query;
  bool uses_pos;
  bool uses_neg;
};

const VariantTraits& Traits(PromptVariant variant);
inline std::string_view VariantName(PromptVariant v) { return Traits(v).name; }
// Accepts "query-docs-pos" and "query_docs_pos".
PromptVariant ParsePromptVariant(std::string_view name);

enum class DocSelection { kTopGradeThenDocId, kRandomSeeded };

DocSelection ParseDocSelection(std::string_view name);

struct ContextPolicy {
  // Documents per side, 1..5.
  int context_size = 1;
  DocSelection selection = DocSelection::kTopGradeThenDocId;
  std::uint64_t seed = 0;
  std::size_t max_doc_chars = 4000;
  // Query variants appended after the original query, 0..4.
  int include_query_variants = 0;

  void Validate() const;
};

// Document sides a context must fill; the other sides stay empty.
struct ContextSides {
  bool positive = true;
  bool negative = true;

  static ContextSides For(PromptVariant variant) {
    const auto& t = Traits(variant);
    return {t.uses_pos, t.uses_neg};
  }
};

// Picks policy.context_size binary-relevant and binary-non-relevant
// documents of `topic_id`. `queries` holds the original query followed by
// optional variants. Throws InvalidArgument when a required side has fewer
// than context_size documents or a selected document is not in `docs`.
SynthesisContext AssembleContext(const std::string& topic_id,
                                 const Qrels& qrels, const DocStore& docs,
                                 const ContextPolicy& policy,
                                 std::span<const std::string> queries,
                                 ContextSides sides = {});

// JSON-schema output instructions requesting exactly `fields`.
std::string FormatInstructions(FieldSet fields);

// Throws InvalidArgument when `ctx` lacks a block the variant embeds.
std::string RenderSynthesisPrompt(const SynthesisContext& ctx,
                                  PromptVariant variant);

// Asks for `target_fields` given the non-empty fields of `partial`. The two
// sets must be disjoint and together cover all three fields.
std::string RenderReconstructionPrompt(const Topic& partial,
                                       FieldSet target_fields);

// An LLM reply that could not be turned into the requested value.
struct GenerationError {
  std::string reason;
  std::string raw;
};

using TopicOrError = std::variant<Topic, GenerationError>;

// Text of the first parseable JSON object embedded in `raw`, tolerating
// surrounding prose and code fences.
std::optional<std::string> ExtractFirstJsonObject(std::string_view raw);

// Reads the first JSON object of `raw`; every expected field must be a
// non-empty string. The returned topic has an empty topic_id and only the
// expected fields filled.
TopicOrError ParseTopicOutput(std::string_view raw, FieldSet expected_fields);

}  // namespace needforge

#endif  // NEEDFORGE_CONTEXT_FORGE_H_
