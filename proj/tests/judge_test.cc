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


#include "needforge/judge.h"

#include <gtest/gtest.h>

#include "needforge/error.h"
#include "support/fake_llm.h"

namespace needforge {
namespace {

using testing::ChatBody;
using testing::ScriptedTransport;

Topic Sample() {
  return {"101", "coral reef bleaching",
          "Find reports on coral bleaching events.",
          "Relevant documents describe causes or extent of bleaching."};
}

GatewayConfig Config() {
  GatewayConfig c;
  c.base_url = "http://judge";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.max_retries = 1;
  return c;
}

bool Has(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

TEST(RenderJudgePrompt, TitleOnly) {
  const std::string p = RenderJudgePrompt(Sample(), {TopicField::kTitle},
                                          "Doc text.", GradeScale::R04());
  EXPECT_TRUE(Has(p, "Title: coral reef bleaching\n"));
  EXPECT_FALSE(Has(p, "Description:"));
  EXPECT_FALSE(Has(p, "Narrative:"));
  EXPECT_TRUE(Has(p, "<<<\nDoc text.\n>>>"));
  EXPECT_TRUE(Has(p, "from 0 to 2"));
  EXPECT_FALSE(Has(p, "3 = "));
}

TEST(RenderJudgePrompt, AllFieldsInOrder) {
  const std::string p =
      RenderJudgePrompt(Sample(), FieldSet::All(), "Doc.", GradeScale::R04());
  const auto t = p.find("Title:");
  const auto d = p.find("Description:");
  const auto n = p.find("Narrative:");
  ASSERT_NE(n, std::string::npos);
  EXPECT_LT(t, d);
  EXPECT_LT(d, n);
}

TEST(RenderJudgePrompt, DlScaleListsFourGrades) {
  const std::string p =
      RenderJudgePrompt(Sample(), FieldSet::All(), "Doc.", GradeScale::DL());
  for (int g = 0; g <= 3; ++g) EXPECT_TRUE(Has(p, std::to_string(g) + " = "));
  EXPECT_TRUE(Has(p, "from 0 to 3"));
}

TEST(RenderJudgePrompt, RejectsBadInput) {
  EXPECT_THROW(RenderJudgePrompt(Sample(), FieldSet::All(), "  ", GradeScale::R04()),
               InvalidArgument);
  EXPECT_THROW(RenderJudgePrompt(Sample(), FieldSet(), "d", GradeScale::R04()),
               InvalidArgument);
  Topic t = Sample();
  t.narrative.clear();
  EXPECT_THROW(RenderJudgePrompt(t, FieldSet::All(), "d", GradeScale::R04()),
               InvalidArgument);
  EXPECT_NO_THROW(RenderJudgePrompt(t, {TopicField::kTitle, TopicField::kDescription},
                                    "d", GradeScale::R04()));
}

TEST(RenderJudgePrompt, SameTemplateForAnyTopicSource) {
  Topic synthesized{"101", "bleached corals", "Other description.", "Other narrative."};
  std::string a = RenderJudgePrompt(Sample(), FieldSet::All(), "D", GradeScale::R04());
  std::string b = RenderJudgePrompt(synthesized, FieldSet::All(), "D", GradeScale::R04());
  for (TopicField f : FieldSet::All().Fields()) {
    a.replace(a.find(Sample().Field(f)), Sample().Field(f).size(), "X");
    b.replace(b.find(synthesized.Field(f)), synthesized.Field(f).size(), "X");
  }
  EXPECT_EQ(a, b);
}

int GradeOf(std::string_view raw, GradeScale scale = GradeScale::R04()) {
  auto g = ParseGrade(raw, scale);
  return std::holds_alternative<int>(g) ? std::get<int>(g) : -100;
}

TEST(ParseGrade, Examples) {
  EXPECT_EQ(GradeOf("The answer is 2"), 2);
  EXPECT_EQ(GradeOf("1"), 1);
  EXPECT_EQ(GradeOf("Scores 0 to 2 considered. Final: 1."), 1);
  EXPECT_EQ(GradeOf("relevance: 3"), -100);
  EXPECT_EQ(GradeOf("relevance: 3", GradeScale::DL()), 3);
  EXPECT_EQ(GradeOf("no number here"), -100);
  EXPECT_EQ(GradeOf("grade 1.5"), -100);
  EXPECT_EQ(GradeOf("-1"), -100);
  EXPECT_EQ(GradeOf("abc2"), -100);
  EXPECT_EQ(GradeOf("99999999999999999999999"), -100);
  auto err = ParseGrade("relevance: 3", GradeScale::R04());
  ASSERT_TRUE(std::holds_alternative<GenerationError>(err));
  EXPECT_EQ(std::get<GenerationError>(err).raw, "relevance: 3");
}

TEST(JudgeBatch, AllGraded) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{200, ChatBody("Grade: 1"), ""}});
  LlmGateway gw(Config(), transport);
  DocStore docs;
  docs.Add("d1", "one");
  docs.Add("d2", "two");
  docs.Add("d3", "three");
  std::vector<JudgeItem> items;
  for (const char* d : {"d1", "d2", "d3"}) items.push_back({Sample(), d});
  JudgeConfig config;
  config.judge_model = "j";
  const auto records = JudgeBatch(items, docs, config, gw);
  ASSERT_EQ(records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(records[i].grade, 1);
    EXPECT_FALSE(records[i].error_flag);
    EXPECT_EQ(records[i].doc_id, items[i].doc_id);
    EXPECT_EQ(records[i].template_version, kJudgeTemplateVersion);
    EXPECT_EQ(records[i].prompt_variant, "original");
    EXPECT_EQ(records[i].topic_fields_used, FieldSet::All());
  }
  EXPECT_EQ(transport->calls(), 3);
  // Rerun is served from the cache.
  const auto again = JudgeBatch(items, docs, config, gw);
  EXPECT_EQ(again, records);
  EXPECT_EQ(transport->calls(), 3);
}

TEST(JudgeBatch, FailuresBecomeErrorRecords) {
  testing::FakeLlmServer server([](const nlohmann::json& req) {
    const std::string prompt = req["messages"].back()["content"];
    if (prompt.find("<<<\nbad") != std::string::npos) {
      return testing::ChatReply("I cannot decide.");
    }
    return testing::ChatReply("2");
  });
  GatewayConfig c = Config();
  c.base_url = server.url();
  LlmGateway gw(c);
  DocStore docs;
  docs.Add("d1", "good");
  docs.Add("d2", "bad doc");
  docs.Add("d3", "good again");
  Topic no_narrative = Sample();
  no_narrative.narrative.clear();
  std::vector<JudgeItem> items = {{Sample(), "d1"},
                                  {Sample(), "d2"},
                                  {Sample(), "d3"},
                                  {Sample(), "missing"},
                                  {no_narrative, "d1"}};
  JudgeConfig config;
  config.judge_model = "j";
  const auto r = JudgeBatch(items, docs, config, gw);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].grade, 2);
  EXPECT_TRUE(r[1].error_flag);
  EXPECT_FALSE(r[1].grade.has_value());
  EXPECT_EQ(r[1].raw_response, "I cannot decide.");
  EXPECT_EQ(r[2].grade, 2);
  EXPECT_TRUE(r[3].error_flag);
  EXPECT_TRUE(Has(r[3].error_reason, "unknown document"));
  EXPECT_TRUE(r[4].error_flag);
  EXPECT_EQ(server.chat_calls(), 3);
}

TEST(JudgeBatch, TransportFailureIsRecorded) {
  auto transport =
      std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{500, "", ""}});
  LlmGateway gw(Config(), transport);
  DocStore docs;
  docs.Add("d1", "x");
  std::vector<JudgeItem> items = {{Sample(), "d1"}};
  JudgeConfig config;
  config.judge_model = "j";
  const auto r = JudgeBatch(items, docs, config, gw);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0].error_flag);
  EXPECT_TRUE(Has(r[0].error_reason, "500"));
}

}  // namespace
}  // namespace needforge
