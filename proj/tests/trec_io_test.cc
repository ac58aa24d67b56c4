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


#include "needforge/trec_io.h"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "needforge/error.h"

namespace needforge {
namespace {

std::vector<Topic> Sgml(const std::string& text) {
  std::istringstream in(text);
  return ParseTopics(in, TopicFormat::kSgml);
}

int ParseErrorLine(const std::string& text) {
  try {
    Sgml(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

TEST(ParseTopics, SingleLineBlock) {
  const auto topics = Sgml("<top><num> 301 <title> X <desc> D <narr> N </top>");
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0], (Topic{"301", "X", "D", "N"}));
}

TEST(ParseTopics, StripsLabelsAndCollapsesWhitespace) {
  const auto topics = Sgml(
      "<top>\n<num> Number: 301\n<title> Topic: foreign\n  minorities\n"
      "<desc> Description:\nWhich   countries?\n<narr> Narrative:\nA relevant\n"
      "document names one.\n</top>\n");
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].topic_id, "301");
  EXPECT_EQ(topics[0].title, "foreign minorities");
  EXPECT_EQ(topics[0].description, "Which countries?");
  EXPECT_EQ(topics[0].narrative, "A relevant document names one.");
}

TEST(ParseTopics, PreservesOrderAndClosingTags) {
  const auto topics = Sgml(
      "<top><num>2</num><title>b</title></top>\n\n<top><num>1</num><title>a</title></top>");
  ASSERT_EQ(topics.size(), 2u);
  EXPECT_EQ(topics[0].topic_id, "2");
  EXPECT_EQ(topics[1].topic_id, "1");
  EXPECT_EQ(topics[1].title, "a");
  EXPECT_EQ(topics[1].description, "");
}

TEST(ParseTopics, ErrorsNameTheLine) {
  EXPECT_EQ(ParseErrorLine("<top>\n<num> 1\n<title> x\n"), 4);
  EXPECT_EQ(ParseErrorLine("<top><num>1<title>x</top>\nstray"), 2);
  EXPECT_EQ(ParseErrorLine("<top><num>1\n<top>"), 2);
  EXPECT_EQ(ParseErrorLine("\n\n<top><title> x </top>"), 3);
  EXPECT_EQ(ParseErrorLine("<top><num>1<title>a<title>b</top>"), 1);
  EXPECT_EQ(ParseErrorLine("<top><num>1</top>"), 1);
  EXPECT_EQ(ParseErrorLine("</top>"), 1);
}

TEST(ParseTopics, Jsonl) {
  std::istringstream in(
      "{\"topic_id\":\"1\",\"title\":\"t\",\"description\":\"\",\"narrative\":\"\"}\n\n"
      "{\"topic_id\":\"2\",\"description\":\"d\"}\n");
  const auto topics = ParseTopics(in, TopicFormat::kJsonl);
  ASSERT_EQ(topics.size(), 2u);
  EXPECT_EQ(topics[0], (Topic{"1", "t", "", ""}));
  EXPECT_EQ(topics[1], (Topic{"2", "", "d", ""}));
}

TEST(ParseTopics, JsonlErrors) {
  std::istringstream bad_json("{\"topic_id\":\"1\",\"title\":\"t\"}\n{oops\n");
  try {
    ParseTopics(bad_json, TopicFormat::kJsonl);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream empty_topic("{\"topic_id\":\"1\"}\n");
  EXPECT_THROW(ParseTopics(empty_topic, TopicFormat::kJsonl), ParseError);
  std::istringstream not_string("{\"topic_id\":\"1\",\"title\":3}\n");
  EXPECT_THROW(ParseTopics(not_string, TopicFormat::kJsonl), ParseError);
}

TEST(FieldSetTest, NamesAndOrder) {
  const FieldSet s = FieldSet::Parse("narrative+title");
  EXPECT_EQ(s.ToString(), "title+narrative");
  EXPECT_EQ(s.size(), 2);
  EXPECT_EQ(FieldSet::Parse("desc, narr"), (FieldSet{TopicField::kDescription,
                                                       TopicField::kNarrative}));
  EXPECT_EQ(FieldSet::All().ToString(), "title+description+narrative");
  EXPECT_TRUE(FieldSet().empty());
  EXPECT_THROW(FieldSet::Parse("summary"), InvalidArgument);
}

TEST(ParseQrels, Basic) {
  std::istringstream in("301 0 docA 2\n\n301 0 docB 0\n");
  const Qrels q = ParseQrels(in, GradeScale::R04());
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(q.Grade("301", "docA"), 2);
  EXPECT_EQ(q.GradeOrZero("301", "zzz"), 0);
  EXPECT_FALSE(q.Grade("301", "zzz").has_value());
}

TEST(ParseQrels, IterationTokenIgnored) {
  std::istringstream in("19335 Q0 docB 3\n");
  const Qrels q = ParseQrels(in, GradeScale::DL());
  EXPECT_EQ(q.Grade("19335", "docB"), 3);
}

TEST(ParseQrels, Errors) {
  auto line_of = [](const std::string& text, GradeScale scale) {
    std::istringstream in(text);
    try {
      ParseQrels(in, scale);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("1 0 a 1\n1 0 b 3\n", GradeScale::R04()), 2);
  EXPECT_EQ(line_of("1 0 a x\n", GradeScale::R04()), 1);
  EXPECT_EQ(line_of("1 0 a 1\n1 0 a 0\n", GradeScale::R04()), 2);
  EXPECT_EQ(line_of("1 0 a\n", GradeScale::R04()), 1);
  EXPECT_EQ(line_of("1 0 a -1\n", GradeScale::DL()), 1);
  EXPECT_EQ(line_of("1 0 a 3\n", GradeScale::DL()), -1);
}

TEST(ParseRun, SortedInput) {
  std::istringstream in("1 Q0 d1 1 2.5 sysA\n1 Q0 d2 2 1.5 sysA\n2 Q0 d3 1 9 sysA\n");
  const RunFile run = ParseRun(in);
  EXPECT_EQ(run.system_id, "sysA");
  ASSERT_EQ(run.rankings.at("1").size(), 2u);
  EXPECT_EQ(run.rankings.at("1")[0], (RankedDoc{"d1", 1, 2.5}));
  EXPECT_EQ(run.rankings.at("2")[0].doc_id, "d3");
}

TEST(ParseRun, ResortsByScoreWhenRanksAreOutOfOrder) {
  std::istringstream in("1 Q0 low 1 0.1 s\n1 Q0 high 2 0.9 s\n1 Q0 mid 3 0.5 s\n");
  const RunFile run = ParseRun(in);
  const auto& docs = run.rankings.at("1");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0], (RankedDoc{"high", 1, 0.9}));
  EXPECT_EQ(docs[1], (RankedDoc{"mid", 2, 0.5}));
  EXPECT_EQ(docs[2], (RankedDoc{"low", 3, 0.1}));
}

TEST(ParseRun, Errors) {
  std::istringstream dup("1 Q0 d 1 1 s\n1 Q0 d 2 0.5 s\n");
  EXPECT_THROW(ParseRun(dup), ParseError);
  std::istringstream tags("1 Q0 a 1 1 s\n1 Q0 b 2 0.5 t\n");
  EXPECT_THROW(ParseRun(tags), ParseError);
  std::istringstream cols("1 Q0 a 1 1\n");
  EXPECT_THROW(ParseRun(cols), ParseError);
  std::istringstream score("1 Q0 a 1 high s\n");
  EXPECT_THROW(ParseRun(score), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(ParseRun(empty), ParseError);
}

TEST(ParseGroupManifest, CommentsAndDuplicates) {
  std::istringstream in("# tag group\nrunA g1\n\nrunB g2\n");
  const auto groups = ParseGroupManifest(in);
  EXPECT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups.at("runB"), "g2");
  std::istringstream dup("runA g1\nrunA g2\n");
  EXPECT_THROW(ParseGroupManifest(dup), ParseError);
}

JudgmentRecord SampleRecord(bool error) {
  JudgmentRecord r;
  r.topic_id = "301";
  r.doc_id = "d\"1";
  if (!error) r.grade = 2;
  r.judge_model = "m";
  r.prompt_variant = "original";
  r.topic_fields_used = FieldSet::Parse("title+narrative");
  r.context_size = 2;
  r.raw_response = error ? "no idea\n" : "Grade: 2";
  r.error_flag = error;
  if (error) r.error_reason = "no integer";
  r.template_version = "v1";
  return r;
}

TEST(Judgments, RoundTrip) {
  const std::vector<JudgmentRecord> records = {SampleRecord(false), SampleRecord(true)};
  std::ostringstream out;
  WriteJsonl(records, out);
  std::istringstream in(out.str());
  EXPECT_EQ(ParseJudgments(in), records);
}

TEST(Judgments, ErrorFlagMustMatchGrade) {
  std::istringstream in(
      "{\"topic_id\":\"1\",\"doc_id\":\"d\",\"grade\":1,\"judge_model\":\"m\","
      "\"prompt_variant\":\"original\",\"topic_fields_used\":[\"title\"],"
      "\"context_size\":0,\"raw_response\":\"1\",\"error_flag\":true}\n");
  EXPECT_THROW(ParseJudgments(in), ParseError);
}

TEST(Judgments, ToQrelsSkipsErrors) {
  const auto q = JudgmentsToQrels({SampleRecord(false), SampleRecord(true)}, GradeScale::R04());
  EXPECT_EQ(q.size(), 1u);
}

TEST(QrelsTest, InsertEraseAndScale) {
  Qrels q(GradeScale::DL());
  q.Insert("t", "a", 3);
  EXPECT_THROW(q.Insert("t", "a", 1), InvalidArgument);
  EXPECT_THROW(q.Insert("t", "b", 4), InvalidArgument);
  EXPECT_TRUE(q.Erase("t", "a"));
  EXPECT_FALSE(q.Erase("t", "a"));
  EXPECT_TRUE(q.empty());
  EXPECT_EQ(q.TopicJudgments("t"), nullptr);
  EXPECT_EQ(GradeScale::FromName("r04"), GradeScale::R04());
  EXPECT_THROW(GradeScale::FromName("x"), InvalidArgument);
}

std::string RandomWord(std::mt19937& rng) {
  static const char* kWords[] = {"coral", "reef", "b\xC3\xA9" "bleach", "Description:",
                                 "a", "x-ray", "42", "\"quoted\"", "tab\there"};
  std::uniform_int_distribution<int> pick(0, std::size(kWords) - 1);
  return kWords[pick(rng)];
}

std::string RandomText(std::mt19937& rng, int max_words) {
  std::uniform_int_distribution<int> len(0, max_words);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + RandomWord(rng);
  return out;
}

// Fuzz: writing then parsing reproduces the topics (modulo whitespace
// collapsing, which writers never introduce).
TEST(RoundTrip, TopicsSgmlAndJsonl) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Topic> topics;
    const int n = 1 + trial % 4;
    for (int i = 0; i < n; ++i) {
      Topic t;
      t.topic_id = std::to_string(100 + i);
      t.title = RandomText(rng, 4);
      t.description = RandomText(rng, 8);
      t.narrative = RandomText(rng, 12);
      for (auto* s : {&t.title, &t.description, &t.narrative}) {
        for (char& c : *s) {
          if (c == '\t') c = ' ';
        }
      }
      if (t.PresentFields().empty()) t.title = "fallback";
      // Labels are only stripped when they lead a field.
      if (t.description.rfind("Description:", 0) == 0) t.description = "d " + t.description;
      topics.push_back(t);
    }
    std::ostringstream sgml;
    WriteTopicsSgml(topics, sgml);
    std::istringstream sgml_in(sgml.str());
    ASSERT_EQ(ParseTopics(sgml_in, TopicFormat::kSgml), topics) << sgml.str();
    std::ostringstream jsonl;
    WriteJsonl(topics, jsonl);
    std::istringstream jsonl_in(jsonl.str());
    ASSERT_EQ(ParseTopics(jsonl_in, TopicFormat::kJsonl), topics);
  }
}

TEST(RoundTrip, QrelsAndRuns) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Qrels q(trial % 2 ? GradeScale::DL() : GradeScale::R04());
    RunFile run;
    run.system_id = "sys" + std::to_string(trial);
    std::uniform_int_distribution<int> grade(0, q.scale().max_grade);
    std::uniform_real_distribution<double> score(-5, 5);
    for (int t = 0; t < 3; ++t) {
      std::vector<double> scores;
      for (int d = 0; d < 5; ++d) {
        q.Insert(std::to_string(t), "doc" + std::to_string(d), grade(rng));
        scores.push_back(score(rng));
      }
      std::sort(scores.rbegin(), scores.rend());
      for (int d = 0; d < 5; ++d) {
        run.rankings[std::to_string(t)].push_back({"doc" + std::to_string(d), d + 1, scores[d]});
      }
    }
    std::ostringstream qo;
    WriteQrels(q, qo);
    std::istringstream qi(qo.str());
    ASSERT_EQ(ParseQrels(qi, q.scale()), q);
    std::ostringstream ro;
    WriteRun(run, ro);
    std::istringstream ri(ro.str());
    ASSERT_EQ(ParseRun(ri), run);
  }
}

}  // namespace
}  // namespace needforge
