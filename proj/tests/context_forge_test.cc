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

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

bool Has(const std::string& s, const std::string& needle) {
  return s.find(needle) != std::string::npos;
}

class ContextTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const auto& [id, grade] : std::vector<std::pair<std::string, int>>{
             {"a", 1}, {"b", 2}, {"c", 2}, {"d", 0}, {"e", 0}, {"f", 0}}) {
      qrels_.Insert("t1", id, grade);
      docs_.Add(id, "text of " + id + " with some words");
    }
    qrels_.Insert("t2", "g", 2);
    qrels_.Insert("t2", "h", 0);
    docs_.Add("g", "relevant g");
    docs_.Add("h", "not relevant h");
  }
  Qrels qrels_{GradeScale::R04()};
  DocStore docs_;
  std::vector<std::string> queries_{"original query", "variant one", "variant two"};
};

TEST_F(ContextTest, ForcedChoice) {
  ContextPolicy policy;
  const auto ctx = AssembleContext("t2", qrels_, docs_, policy, queries_);
  ASSERT_EQ(ctx.positive_docs.size(), 1u);
  EXPECT_EQ(ctx.positive_docs[0], (ContextDoc{"g", "relevant g"}));
  EXPECT_EQ(ctx.negative_docs[0].doc_id, "h");
  EXPECT_EQ(ctx.queries, std::vector<std::string>{"original query"});
}

TEST_F(ContextTest, TopGradeThenDocId) {
  ContextPolicy policy;
  policy.context_size = 3;
  const auto ctx = AssembleContext("t1", qrels_, docs_, policy, queries_);
  std::vector<std::string> pos, neg;
  for (const auto& d : ctx.positive_docs) pos.push_back(d.doc_id);
  for (const auto& d : ctx.negative_docs) neg.push_back(d.doc_id);
  EXPECT_EQ(pos, (std::vector<std::string>{"b", "c", "a"}));
  EXPECT_EQ(neg, (std::vector<std::string>{"d", "e", "f"}));
}

TEST_F(ContextTest, NotEnoughDocuments) {
  ContextPolicy policy;
  policy.context_size = 2;
  try {
    AssembleContext("t2", qrels_, docs_, policy, queries_);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_TRUE(Has(e.what(), "positive side has 1 < 2")) << e.what();
  }
  // Only the negative side requested: the positive shortage does not matter.
  policy.context_size = 1;
  EXPECT_NO_THROW(AssembleContext("t2", qrels_, docs_, policy, queries_, {false, true}));
  EXPECT_THROW(AssembleContext("zz", qrels_, docs_, policy, queries_), InvalidArgument);
}

TEST_F(ContextTest, RandomSelectionIsSeeded) {
  ContextPolicy policy;
  policy.context_size = 2;
  policy.selection = DocSelection::kRandomSeeded;
  policy.seed = 99;
  const auto a = AssembleContext("t1", qrels_, docs_, policy, queries_);
  const auto b = AssembleContext("t1", qrels_, docs_, policy, queries_);
  EXPECT_EQ(a, b);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    policy.seed = seed;
    const auto c = AssembleContext("t1", qrels_, docs_, policy, queries_);
    for (const auto& d : c.positive_docs) {
      EXPECT_GE(*qrels_.Grade("t1", d.doc_id), 1);
      seen.insert(d.doc_id);
    }
    for (const auto& d : c.negative_docs) EXPECT_EQ(*qrels_.Grade("t1", d.doc_id), 0);
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST_F(ContextTest, QueryVariantsAndTruncation) {
  ContextPolicy policy;
  policy.include_query_variants = 1;
  policy.max_doc_chars = 9;
  const auto ctx = AssembleContext("t1", qrels_, docs_, policy, queries_);
  EXPECT_EQ(ctx.queries, (std::vector<std::string>{"original query", "variant one"}));
  EXPECT_EQ(ctx.positive_docs[0].text, "text of b");
}

TEST_F(ContextTest, PolicyValidation) {
  ContextPolicy policy;
  policy.context_size = 6;
  EXPECT_THROW(policy.Validate(), InvalidArgument);
  policy.context_size = 0;
  EXPECT_THROW(policy.Validate(), InvalidArgument);
  policy.context_size = 5;
  policy.include_query_variants = 5;
  EXPECT_THROW(policy.Validate(), InvalidArgument);
  policy.include_query_variants = 4;
  policy.max_doc_chars = 0;
  EXPECT_THROW(policy.Validate(), InvalidArgument);
}

TEST(VariantTable, MatchesDeclaredPatterns) {
  struct Row {
    const char* name;
    bool q, pos, neg;
  };
  const Row rows[] = {{"query", 1, 0, 0},          {"query-contrastive", 1, 1, 1},
                      {"query-docs-pos", 1, 1, 0}, {"query-docs-neg", 1, 0, 1},
                      {"contrastive", 0, 1, 1},    {"docs-pos", 0, 1, 0},
                      {"docs-neg", 0, 0, 1}};
  ASSERT_EQ(std::size(kAllPromptVariants), std::size(rows));
  for (const Row& r : rows) {
    const auto& t = Traits(ParsePromptVariant(r.name));
    EXPECT_EQ(t.name, r.name);
    EXPECT_EQ(t.uses_query, r.q) << r.name;
    EXPECT_EQ(t.uses_pos, r.pos) << r.name;
    EXPECT_EQ(t.uses_neg, r.neg) << r.name;
  }
  EXPECT_EQ(ParsePromptVariant("Query_Docs_Pos"), PromptVariant::kQueryDocsPos);
  EXPECT_THROW(ParsePromptVariant("docs"), InvalidArgument);
}

SynthesisContext FullContext() {
  SynthesisContext ctx;
  ctx.topic_id = "1";
  ctx.queries = {"coral bleaching"};
  ctx.positive_docs = {{"p", "POSITIVE TEXT"}};
  ctx.negative_docs = {{"n", "NEGATIVE TEXT"}};
  return ctx;
}

TEST(RenderSynthesisPrompt, QueryOnly) {
  const std::string p = RenderSynthesisPrompt(FullContext(), PromptVariant::kQuery);
  EXPECT_TRUE(Has(p, "Queries\nA person has typed these queries into a search engine:\n- coral bleaching\n"));
  EXPECT_FALSE(Has(p, "RELEVANT DOCUMENTS CONTENT"));
  EXPECT_FALSE(Has(p, "POSITIVE TEXT"));
  EXPECT_TRUE(Has(p, "Given some user queries, you must provide a TREC-style topic"));
  EXPECT_TRUE(Has(p, "The topic must include the following fields: title, description, and narrative."));
}

TEST(RenderSynthesisPrompt, Contrastive) {
  const std::string p = RenderSynthesisPrompt(FullContext(), PromptVariant::kContrastive);
  EXPECT_FALSE(Has(p, "Queries\n"));
  EXPECT_FALSE(Has(p, "coral bleaching"));
  EXPECT_TRUE(Has(p, "BEGIN RELEVANT DOCUMENTS CONTENT -\nDocument 1:\nPOSITIVE TEXT\nEND RELEVANT DOCUMENTS CONTENT -"));
  EXPECT_TRUE(Has(p, "BEGIN NOT RELEVANT DOCUMENTS CONTENT -\nDocument 1:\nNEGATIVE TEXT\nEND NOT RELEVANT DOCUMENTS CONTENT -"));
  EXPECT_LT(p.find("BEGIN RELEVANT"), p.find("BEGIN NOT RELEVANT"));
  EXPECT_LT(p.find("END NOT RELEVANT"), p.find("Output Format and Structure:"));
}

TEST(RenderSynthesisPrompt, MissingBlockIsAnError) {
  SynthesisContext ctx = FullContext();
  ctx.negative_docs.clear();
  EXPECT_THROW(RenderSynthesisPrompt(ctx, PromptVariant::kDocsNeg), InvalidArgument);
  EXPECT_NO_THROW(RenderSynthesisPrompt(ctx, PromptVariant::kDocsPos));
  ctx.queries.clear();
  EXPECT_THROW(RenderSynthesisPrompt(ctx, PromptVariant::kQueryDocsPos), InvalidArgument);
}

TEST(RenderSynthesisPrompt, Deterministic) {
  EXPECT_EQ(RenderSynthesisPrompt(FullContext(), PromptVariant::kQueryContrastive),
            RenderSynthesisPrompt(FullContext(), PromptVariant::kQueryContrastive));
}

TEST(FormatInstructions, SchemaListsExactlyTheFields) {
  const std::string s = FormatInstructions(FieldSet{TopicField::kNarrative});
  const auto begin = s.find("```json\n") + 8;
  const auto schema = nlohmann::json::parse(s.substr(begin, s.rfind("```") - begin));
  EXPECT_EQ(schema["required"], nlohmann::json::array({"narrative"}));
  EXPECT_EQ(schema["properties"].size(), 1u);
  EXPECT_FALSE(schema["additionalProperties"].get<bool>());
}

TEST(RenderReconstructionPrompt, DescriptionToTitle) {
  Topic partial{"1", "", "What causes coral bleaching?", ""};
  // Narrative is neither given nor targeted, so the sets do not cover all.
  EXPECT_THROW(RenderReconstructionPrompt(partial, FieldSet{TopicField::kTitle}),
               InvalidArgument);
  partial.narrative = "Relevant documents explain causes.";
  const std::string p = RenderReconstructionPrompt(partial, FieldSet{TopicField::kTitle});
  EXPECT_TRUE(Has(p, "What causes coral bleaching?"));
  EXPECT_TRUE(Has(p, "\"required\": [\n    \"title\"\n  ]"));
}

TEST(RenderReconstructionPrompt, TitleAndDescriptionToNarrative) {
  const Topic partial{"1", "coral", "What causes coral bleaching?", ""};
  const std::string p = RenderReconstructionPrompt(partial, FieldSet{TopicField::kNarrative});
  EXPECT_TRUE(Has(p, "narrative"));
  EXPECT_TRUE(Has(p, "BEGIN TOPIC FIELDS"));
  EXPECT_TRUE(Has(p, "coral"));
  EXPECT_FALSE(Has(p, "\"title\": {"));
}

TEST(RenderReconstructionPrompt, OverlapIsAnError) {
  const Topic partial{"1", "coral", "", ""};
  EXPECT_THROW(RenderReconstructionPrompt(partial, FieldSet{TopicField::kTitle}),
               InvalidArgument);
  EXPECT_THROW(RenderReconstructionPrompt(partial, FieldSet{}), InvalidArgument);
}

TEST(ParseTopicOutput, PlainObject) {
  const auto r = ParseTopicOutput(R"({"title":"a","description":"b","narrative":"c"})",
                                  FieldSet::All());
  ASSERT_TRUE(std::holds_alternative<Topic>(r));
  EXPECT_EQ(std::get<Topic>(r), (Topic{"", "a", "b", "c"}));
}

TEST(ParseTopicOutput, FencedMissingFieldIsGenerationError) {
  const std::string raw = "Sure!\n```json\n{\"title\":\"a\",\"description\":\"b\"}\n```";
  const auto r = ParseTopicOutput(raw, FieldSet::All());
  ASSERT_TRUE(std::holds_alternative<GenerationError>(r));
  EXPECT_EQ(std::get<GenerationError>(r).raw, raw);
}

TEST(ParseTopicOutput, FirstObjectWins) {
  const auto r = ParseTopicOutput(
      R"(x {"title":"first","description":"b","narrative":"c"} y {"title":"second","description":"b","narrative":"c"})",
      FieldSet::All());
  EXPECT_EQ(std::get<Topic>(r).title, "first");
}

TEST(ParseTopicOutput, BracesInsideStrings) {
  const auto r = ParseTopicOutput(
      R"(note {not json} {"title":"a } b","description":"{x}","narrative":"c"})",
      FieldSet::All());
  ASSERT_TRUE(std::holds_alternative<Topic>(r));
  EXPECT_EQ(std::get<Topic>(r).title, "a } b");
}

TEST(ParseTopicOutput, EmptyOrWrongTypedFields) {
  EXPECT_TRUE(std::holds_alternative<GenerationError>(
      ParseTopicOutput(R"({"title":"  ","description":"b","narrative":"c"})", FieldSet::All())));
  EXPECT_TRUE(std::holds_alternative<GenerationError>(
      ParseTopicOutput(R"({"title":1,"description":"b","narrative":"c"})", FieldSet::All())));
  EXPECT_TRUE(std::holds_alternative<GenerationError>(ParseTopicOutput("no json", FieldSet::All())));
  // Only the expected fields are required.
  EXPECT_TRUE(std::holds_alternative<Topic>(
      ParseTopicOutput(R"({"narrative":"c"})", FieldSet{TopicField::kNarrative})));
}

TEST(ParseTopicOutput, SerializeThenParseIsIdentity) {
  std::mt19937 rng(3);
  const std::vector<std::string> alphabet = {"a", "b", " ", "{", "}", "\"", "\\",
                                             ":", ",", "\n", "\xC3\xA9"};
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(1, 20);
  int chi = 0, topics = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Topic t;
    for (TopicField f : kAllTopicFields) {
      std::string s;
      const int n = len(rng);
      for (int i = 0; i < n; ++i) s += alphabet[pick(rng)];
      t.Field(f) = s;
    }
    nlohmann::json j = {{"title", t.title}, {"description", t.description}, {"narrative", t.narrative}};
    const auto r = ParseTopicOutput("Answer:\n" + j.dump(), FieldSet::All());
    if (auto* got = std::get_if<Topic>(&r)) {
      ++topics;
      for (TopicField f : kAllTopicFields) {
        EXPECT_EQ(got->Field(f), std::string(Trim(t.Field(f))));
      }
    } else {
      ++chi;
      // Only fields that are blank after trimming are rejected.
      bool blank = false;
      for (TopicField f : kAllTopicFields) blank = blank || Trim(t.Field(f)).empty();
      EXPECT_TRUE(blank);
    }
  }
  EXPECT_EQ(topics + chi, 300);
}

TEST(DocStoreTest, JsonlAndLookup) {
  std::istringstream in("{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":7,\"text\":\"y\"}\n");
  const DocStore store = DocStore::FromJsonl(in);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(store.Text("7"), "y");
  EXPECT_EQ(store.Find("zz"), nullptr);
  EXPECT_THROW(store.Text("zz"), InvalidArgument);
  std::istringstream bad("{\"doc_id\":\"a\"}\n");
  EXPECT_THROW(DocStore::FromJsonl(bad), ParseError);
}

}  // namespace
}  // namespace needforge
