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


// Readers and writers for TREC topics, qrels and run files, plus JSONL
// persistence for topics and judgment records.
//
// All parsers sanitize input to UTF-8 (invalid bytes become U+FFFD) and
// report malformed input as ParseError carrying the 1-based line number.

#ifndef NEEDFORGE_TREC_IO_H_
#define NEEDFORGE_TREC_IO_H_

#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace needforge {

enum class TopicField { kTitle, kDescription, kNarrative };

inline constexpr TopicField kAllTopicFields[] = {
    TopicField::kTitle, TopicField::kDescription, TopicField::kNarrative};

std::string_view TopicFieldName(TopicField field);
// Accepts "title", "description"/"desc", "narrative"/"narr".
TopicField ParseTopicField(std::string_view name);

// Subset of {title, description, narrative}. Iteration is always in the
// canonical title, description, narrative order.
class FieldSet {
 public:
  FieldSet() = default;
  FieldSet(std::initializer_list<TopicField> fields);
  static FieldSet All() { return FieldSet(0b111); }

  void Insert(TopicField f) { bits_ |= Bit(f); }
  bool Contains(TopicField f) const { return bits_ & Bit(f); }
  bool empty() const { return bits_ == 0; }
  int size() const;
  std::vector<TopicField> Fields() const;

  FieldSet Union(FieldSet o) const { return FieldSet(bits_ | o.bits_); }
  FieldSet Intersect(FieldSet o) const { return FieldSet(bits_ & o.bits_); }

  // "title+description"; "" for the empty set.
  std::string ToString() const;
  // Parses "title+narrative" or a list of names.
  static FieldSet Parse(std::string_view joined);
  static FieldSet FromNames(const std::vector<std::string>& names);

  friend bool operator==(FieldSet, FieldSet) = default;
  friend auto operator<=>(FieldSet, FieldSet) = default;

 private:
  explicit FieldSet(unsigned bits) : bits_(bits) {}
  static unsigned Bit(TopicField f) { return 1u << static_cast<unsigned>(f); }
  unsigned bits_ = 0;
};

struct Topic {
  std::string topic_id;
  std::string title;
  std::string description;
  std::string narrative;

  const std::string& Field(TopicField f) const;
  std::string& Field(TopicField f);
  // Fields with non-empty text.
  FieldSet PresentFields() const;

  friend bool operator==(const Topic&, const Topic&) = default;
};

// Throws InvalidArgument unless topic_id and at least one field are set.
void ValidateTopic(const Topic& topic);

struct GradeScale {
  enum class Name { kR04, kDL };

  Name name;
  int max_grade;
  // Grades at or above this are relevant after binarization.
  int binary_threshold;

  // 0..2, grades 1 and 2 relevant.
  static GradeScale R04() { return {Name::kR04, 2, 1}; }
  // 0..3, only the two highest grades relevant.
  static GradeScale DL() { return {Name::kDL, 3, 2}; }
  static GradeScale FromName(std::string_view name);

  std::string_view name_str() const { return name == Name::kR04 ? "R04" : "DL"; }
  bool InRange(int grade) const { return grade >= 0 && grade <= max_grade; }
  int num_categories() const { return max_grade + 1; }

  friend bool operator==(const GradeScale&, const GradeScale&) = default;
};

// Relevance judgments keyed by (topic_id, doc_id).
class Qrels {
 public:
  explicit Qrels(GradeScale scale) : scale_(scale) {}

  // Throws InvalidArgument on out-of-range grade or duplicate key.
  void Insert(const std::string& topic_id, const std::string& doc_id,
              int grade);
  // Removes the key if present; returns whether it was.
  bool Erase(const std::string& topic_id, const std::string& doc_id);

  std::optional<int> Grade(const std::string& topic_id,
                           const std::string& doc_id) const;
  // Grade, or 0 for unjudged documents.
  int GradeOrZero(const std::string& topic_id, const std::string& doc_id) const;
  bool Contains(const std::string& topic_id, const std::string& doc_id) const;

  // doc_id -> grade for one topic; nullptr if the topic has no judgments.
  const std::map<std::string, int>* TopicJudgments(
      const std::string& topic_id) const;
  std::vector<std::string> TopicIds() const;

  const std::map<std::string, std::map<std::string, int>>& by_topic() const {
    return entries_;
  }
  const GradeScale& scale() const { return scale_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  friend bool operator==(const Qrels&, const Qrels&) = default;

 private:
  GradeScale scale_;
  std::map<std::string, std::map<std::string, int>> entries_;
  std::size_t size_ = 0;
};

struct RankedDoc {
  std::string doc_id;
  int rank;
  double score;

  friend bool operator==(const RankedDoc&, const RankedDoc&) = default;
};

struct RunFile {
  std::string system_id;
  std::string group_id;
  std::map<std::string, std::vector<RankedDoc>> rankings;

  friend bool operator==(const RunFile&, const RunFile&) = default;
};

struct JudgmentRecord {
  std::string topic_id;
  std::string doc_id;
  std::optional<int> grade;
  std::string judge_model;
  // Where the topic came from: "original" or a synthesis cell id.
  std::string prompt_variant;
  FieldSet topic_fields_used;
  int context_size = 0;
  std::string raw_response;
  bool error_flag = false;
  // Set only for failed records.
  std::string error_reason;
  // Version of the judging template that produced the record.
  std::string template_version;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

enum class TopicFormat { kSgml, kJsonl };

std::vector<Topic> ParseTopics(std::istream& in, TopicFormat format);
Qrels ParseQrels(std::istream& in, GradeScale scale);
// The run tag becomes system_id; group_id is left empty for the caller to
// fill from a group manifest.
RunFile ParseRun(std::istream& in);
// `run_tag group_id` per line; '#' starts a comment.
std::map<std::string, std::string> ParseGroupManifest(std::istream& in);
std::vector<JudgmentRecord> ParseJudgments(std::istream& in);

void WriteTopicsSgml(const std::vector<Topic>& topics, std::ostream& out);
void WriteQrels(const Qrels& qrels, std::ostream& out);
void WriteRun(const RunFile& run, std::ostream& out);
void WriteJsonl(const std::vector<Topic>& topics, std::ostream& out);
void WriteJsonl(const std::vector<JudgmentRecord>& records, std::ostream& out);

std::string TopicToJsonLine(const Topic& topic);
std::string JudgmentToJsonLine(const JudgmentRecord& record);

// Qrels from the successful records; errored records are skipped.
Qrels JudgmentsToQrels(const std::vector<JudgmentRecord>& records,
                       GradeScale scale);

// File-path conveniences; throw ConfigError when the file cannot be opened.
std::vector<Topic> LoadTopics(const std::string& path, TopicFormat format);
Qrels LoadQrels(const std::string& path, GradeScale scale);
RunFile LoadRun(const std::string& path);
std::vector<JudgmentRecord> LoadJudgments(const std::string& path);

}  // namespace needforge

#endif  // NEEDFORGE_TREC_IO_H_
