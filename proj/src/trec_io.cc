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

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<int> ParseInt(std::string_view s) {
  int value = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> ParseDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

// Reads one line at a time, sanitized, tracking the line number.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool Next(std::string& line) {
    std::string raw;
    if (!std::getline(in_, raw)) return false;
    ++line_no_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    line = SanitizeUtf8(raw);
    return true;
  }
  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

// ---------------------------------------------------------------------------
// SGML topics.

enum class SgmlTag { kTop, kNum, kTitle, kDesc, kNarr, kOther };

SgmlTag ClassifyTag(std::string_view name) {
  const std::string lower = ToLower(name);
  if (lower == "top") return SgmlTag::kTop;
  if (lower == "num") return SgmlTag::kNum;
  if (lower == "title") return SgmlTag::kTitle;
  if (lower == "desc") return SgmlTag::kDesc;
  if (lower == "narr") return SgmlTag::kNarr;
  return SgmlTag::kOther;
}

std::string StripLabel(std::string_view body, SgmlTag tag) {
  std::string text = CollapseWhitespace(body);
  std::vector<std::string_view> labels;
  switch (tag) {
    case SgmlTag::kNum:
      labels = {"Number:"};
      break;
    case SgmlTag::kTitle:
      labels = {"Topic:", "Title:"};
      break;
    case SgmlTag::kDesc:
      labels = {"Description:"};
      break;
    case SgmlTag::kNarr:
      labels = {"Narrative:"};
      break;
    default:
      break;
  }
  for (std::string_view label : labels) {
    if (StartsWithIgnoreCase(text, label)) {
      return std::string(Trim(std::string_view(text).substr(label.size())));
    }
  }
  return text;
}

struct SgmlBlock {
  int open_line = 0;
  std::map<SgmlTag, std::string> fields;
  std::optional<SgmlTag> current;
  bool current_closed = false;
};

class SgmlTopicParser {
 public:
  std::vector<Topic> Parse(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    text = SanitizeUtf8(text);
    std::size_t i = 0;
    std::size_t text_start = 0;
    while (i < text.size()) {
      if (text[i] == '\n') ++line_;
      if (text[i] != '<') {
        ++i;
        continue;
      }
      // A tag is '<', optional '/', letters, '>'. Anything else is text.
      std::size_t j = i + 1;
      const bool closing = j < text.size() && text[j] == '/';
      if (closing) ++j;
      const std::size_t name_begin = j;
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      if (j == name_begin || j >= text.size() || text[j] != '>') {
        ++i;
        continue;
      }
      HandleText(std::string_view(text).substr(text_start, i - text_start));
      HandleTag(ClassifyTag(std::string_view(text).substr(name_begin, j - name_begin)),
                closing, std::string_view(text).substr(name_begin, j - name_begin));
      i = j + 1;
      text_start = i;
    }
    HandleText(std::string_view(text).substr(text_start));
    if (block_) {
      throw ParseError(
          fmt::format("unclosed <top> block opened at line {}", block_->open_line),
          line_);
    }
    return std::move(topics_);
  }

 private:
  void HandleText(std::string_view chunk) {
    if (chunk.empty()) return;
    if (!block_) {
      if (!Trim(chunk).empty()) {
        throw ParseError("text outside of a <top> block", line_);
      }
      return;
    }
    if (!block_->current || block_->current_closed) {
      if (!Trim(chunk).empty()) {
        throw ParseError("text in <top> block outside of any field tag", line_);
      }
      return;
    }
    block_->fields[*block_->current].append(chunk);
  }

  void HandleTag(SgmlTag tag, bool closing, std::string_view name) {
    if (tag == SgmlTag::kTop) {
      if (closing) {
        if (!block_) throw ParseError("</top> without matching <top>", line_);
        FinishBlock();
        return;
      }
      if (block_) {
        throw ParseError(fmt::format("<top> inside block opened at line {}",
                                     block_->open_line),
                         line_);
      }
      block_.emplace();
      block_->open_line = line_;
      return;
    }
    if (!block_) {
      throw ParseError(fmt::format("<{}{}> outside of a <top> block",
                                   closing ? "/" : "", name),
                       line_);
    }
    if (closing) {
      if (block_->current == tag) block_->current_closed = true;
      return;
    }
    if (tag != SgmlTag::kOther && block_->fields.count(tag) > 0) {
      throw ParseError(fmt::format("duplicate <{}> in block", name), line_);
    }
    block_->current = tag;
    block_->current_closed = false;
    block_->fields[tag];
  }

  void FinishBlock() {
    Topic topic;
    auto get = [&](SgmlTag tag) {
      auto it = block_->fields.find(tag);
      return it == block_->fields.end() ? std::string()
                                        : StripLabel(it->second, tag);
    };
    topic.topic_id = get(SgmlTag::kNum);
    topic.title = get(SgmlTag::kTitle);
    topic.description = get(SgmlTag::kDesc);
    topic.narrative = get(SgmlTag::kNarr);
    if (topic.topic_id.empty()) {
      throw ParseError("<top> block without <num>", block_->open_line);
    }
    if (topic.PresentFields().empty()) {
      throw ParseError(fmt::format("topic {} has no title, description or "
                                   "narrative", topic.topic_id),
                       block_->open_line);
    }
    topics_.push_back(std::move(topic));
    block_.reset();
  }

  int line_ = 1;
  std::optional<SgmlBlock> block_;
  std::vector<Topic> topics_;
};

// Integer ids such as 101 are accepted where `allow_integer` is set.
std::string JsonString(const ordered_json& obj, const char* key, int line,
                       bool allow_integer = false) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return "";
  if (it->is_string()) return SanitizeUtf8(it->get<std::string>());
  if (allow_integer && it->is_number_integer()) {
    return std::to_string(it->get<long long>());
  }
  throw ParseError(fmt::format("field '{}' must be a string", key), line);
}

std::vector<Topic> ParseTopicsJsonl(std::istream& in) {
  std::vector<Topic> topics;
  LineReader reader(in);
  std::string line;
  while (reader.Next(line)) {
    if (Trim(line).empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(),
                       reader.line_no());
    }
    if (!obj.is_object()) {
      throw ParseError("expected a JSON object", reader.line_no());
    }
    Topic topic;
    topic.topic_id = JsonString(obj, "topic_id", reader.line_no(), true);
    topic.title = JsonString(obj, "title", reader.line_no());
    topic.description = JsonString(obj, "description", reader.line_no());
    topic.narrative = JsonString(obj, "narrative", reader.line_no());
    try {
      ValidateTopic(topic);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), reader.line_no());
    }
    topics.push_back(std::move(topic));
  }
  return topics;
}

ordered_json JudgmentToJson(const JudgmentRecord& r) {
  ordered_json j;
  j["topic_id"] = r.topic_id;
  j["doc_id"] = r.doc_id;
  if (r.grade) j["grade"] = *r.grade;
  j["judge_model"] = r.judge_model;
  j["prompt_variant"] = r.prompt_variant;
  ordered_json fields = ordered_json::array();
  for (TopicField f : r.topic_fields_used.Fields()) {
    fields.push_back(std::string(TopicFieldName(f)));
  }
  j["topic_fields_used"] = std::move(fields);
  j["context_size"] = r.context_size;
  j["template_version"] = r.template_version;
  j["error_flag"] = r.error_flag;
  if (r.error_flag) j["error_reason"] = r.error_reason;
  j["raw_response"] = r.raw_response;
  return j;
}

std::ifstream OpenOrThrow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

}  // namespace

std::string_view TopicFieldName(TopicField field) {
  switch (field) {
    case TopicField::kTitle:
      return "title";
    case TopicField::kDescription:
      return "description";
    case TopicField::kNarrative:
      return "narrative";
  }
  return "";
}

TopicField ParseTopicField(std::string_view name) {
  const std::string lower = ToLower(Trim(name));
  if (lower == "title") return TopicField::kTitle;
  if (lower == "description" || lower == "desc") return TopicField::kDescription;
  if (lower == "narrative" || lower == "narr") return TopicField::kNarrative;
  throw InvalidArgument("unknown topic field '" + std::string(name) + "'");
}

FieldSet::FieldSet(std::initializer_list<TopicField> fields) {
  for (TopicField f : fields) Insert(f);
}

int FieldSet::size() const { return std::popcount(bits_); }

std::vector<TopicField> FieldSet::Fields() const {
  std::vector<TopicField> out;
  for (TopicField f : kAllTopicFields) {
    if (Contains(f)) out.push_back(f);
  }
  return out;
}

std::string FieldSet::ToString() const {
  std::string out;
  for (TopicField f : Fields()) {
    if (!out.empty()) out += '+';
    out += TopicFieldName(f);
  }
  return out;
}

FieldSet FieldSet::Parse(std::string_view joined) {
  FieldSet set;
  std::size_t start = 0;
  while (start <= joined.size()) {
    std::size_t end = joined.find_first_of("+,", start);
    if (end == std::string_view::npos) end = joined.size();
    std::string_view part = Trim(joined.substr(start, end - start));
    if (!part.empty()) set.Insert(ParseTopicField(part));
    start = end + 1;
  }
  return set;
}

FieldSet FieldSet::FromNames(const std::vector<std::string>& names) {
  FieldSet set;
  for (const auto& n : names) set.Insert(ParseTopicField(n));
  return set;
}

const std::string& Topic::Field(TopicField f) const {
  switch (f) {
    case TopicField::kTitle:
      return title;
    case TopicField::kDescription:
      return description;
    case TopicField::kNarrative:
      break;
  }
  return narrative;
}

std::string& Topic::Field(TopicField f) {
  return const_cast<std::string&>(std::as_const(*this).Field(f));
}

FieldSet Topic::PresentFields() const {
  FieldSet set;
  for (TopicField f : kAllTopicFields) {
    if (!Field(f).empty()) set.Insert(f);
  }
  return set;
}

void ValidateTopic(const Topic& topic) {
  if (topic.topic_id.empty()) throw InvalidArgument("topic without topic_id");
  if (topic.PresentFields().empty()) {
    throw InvalidArgument("topic " + topic.topic_id +
                          " has no title, description or narrative");
  }
}

GradeScale GradeScale::FromName(std::string_view name) {
  const std::string lower = ToLower(Trim(name));
  if (lower == "r04" || lower == "robust04") return R04();
  if (lower == "dl" || lower == "dl19" || lower == "dl20") return DL();
  throw InvalidArgument("unknown grade scale '" + std::string(name) + "'");
}

void Qrels::Insert(const std::string& topic_id, const std::string& doc_id,
                   int grade) {
  if (!scale_.InRange(grade)) {
    throw InvalidArgument(fmt::format("grade {} outside {} scale 0..{}", grade,
                                      scale_.name_str(), scale_.max_grade));
  }
  auto [it, inserted] = entries_[topic_id].emplace(doc_id, grade);
  if (!inserted) {
    throw InvalidArgument(
        fmt::format("duplicate judgment for ({}, {})", topic_id, doc_id));
  }
  ++size_;
}

bool Qrels::Erase(const std::string& topic_id, const std::string& doc_id) {
  auto it = entries_.find(topic_id);
  if (it == entries_.end() || it->second.erase(doc_id) == 0) return false;
  if (it->second.empty()) entries_.erase(it);
  --size_;
  return true;
}

std::optional<int> Qrels::Grade(const std::string& topic_id,
                                const std::string& doc_id) const {
  auto it = entries_.find(topic_id);
  if (it == entries_.end()) return std::nullopt;
  auto jt = it->second.find(doc_id);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

int Qrels::GradeOrZero(const std::string& topic_id,
                       const std::string& doc_id) const {
  return Grade(topic_id, doc_id).value_or(0);
}

bool Qrels::Contains(const std::string& topic_id,
                     const std::string& doc_id) const {
  return Grade(topic_id, doc_id).has_value();
}

const std::map<std::string, int>* Qrels::TopicJudgments(
    const std::string& topic_id) const {
  auto it = entries_.find(topic_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Qrels::TopicIds() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, _] : entries_) ids.push_back(id);
  return ids;
}

std::vector<Topic> ParseTopics(std::istream& in, TopicFormat format) {
  if (format == TopicFormat::kSgml) return SgmlTopicParser().Parse(in);
  return ParseTopicsJsonl(in);
}

Qrels ParseQrels(std::istream& in, GradeScale scale) {
  Qrels qrels(scale);
  LineReader reader(in);
  std::string line;
  while (reader.Next(line)) {
    const auto cols = SplitWhitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 4) {
      throw ParseError(
          fmt::format("expected 4 columns (topic iteration doc grade), got {}",
                      cols.size()),
          reader.line_no());
    }
    const auto grade = ParseInt(cols[3]);
    if (!grade) {
      throw ParseError("non-integer grade '" + cols[3] + "'", reader.line_no());
    }
    try {
      qrels.Insert(cols[0], cols[2], *grade);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), reader.line_no());
    }
  }
  return qrels;
}

RunFile ParseRun(std::istream& in) {
  RunFile run;
  LineReader reader(in);
  std::string line;
  std::map<std::string, std::set<std::string>> seen;
  while (reader.Next(line)) {
    const auto cols = SplitWhitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 6) {
      throw ParseError(
          fmt::format("expected 6 columns (topic Q0 doc rank score tag), got {}",
                      cols.size()),
          reader.line_no());
    }
    const auto rank = ParseInt(cols[3]);
    if (!rank) {
      throw ParseError("non-integer rank '" + cols[3] + "'", reader.line_no());
    }
    const auto score = ParseDouble(cols[4]);
    if (!score) {
      throw ParseError("non-numeric score '" + cols[4] + "'", reader.line_no());
    }
    if (run.system_id.empty()) {
      run.system_id = cols[5];
    } else if (run.system_id != cols[5]) {
      throw ParseError(fmt::format("run tag '{}' differs from '{}'", cols[5],
                                   run.system_id),
                       reader.line_no());
    }
    if (!seen[cols[0]].insert(cols[2]).second) {
      throw ParseError(fmt::format("document {} listed twice for topic {}",
                                   cols[2], cols[0]),
                       reader.line_no());
    }
    run.rankings[cols[0]].push_back({cols[2], *rank, *score});
  }
  if (run.system_id.empty()) throw ParseError("run file has no entries");

  for (auto& [topic_id, docs] : run.rankings) {
    // Order follows the scores, as in trec_eval; ranks are only trusted
    // when they agree with them.
    const bool consistent = std::adjacent_find(docs.begin(), docs.end(),
                                               [](const auto& a, const auto& b) {
                                                 return a.rank >= b.rank ||
                                                        a.score < b.score;
                                               }) == docs.end();
    if (consistent) continue;
    spdlog::warn("run {}: ranks for topic {} disagree with scores; re-sorting by "
                 "score",
                 run.system_id, topic_id);
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    for (std::size_t i = 0; i < docs.size(); ++i) {
      docs[i].rank = static_cast<int>(i) + 1;
    }
  }
  return run;
}

std::map<std::string, std::string> ParseGroupManifest(std::istream& in) {
  std::map<std::string, std::string> groups;
  LineReader reader(in);
  std::string line;
  while (reader.Next(line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto cols = SplitWhitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 2) {
      throw ParseError("expected 'run_tag group_id'", reader.line_no());
    }
    if (!groups.emplace(cols[0], cols[1]).second) {
      throw ParseError("run tag '" + cols[0] + "' listed twice",
                       reader.line_no());
    }
  }
  return groups;
}

std::vector<JudgmentRecord> ParseJudgments(std::istream& in) {
  std::vector<JudgmentRecord> records;
  LineReader reader(in);
  std::string line;
  while (reader.Next(line)) {
    if (Trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      JudgmentRecord r;
      r.topic_id = j.at("topic_id").get<std::string>();
      r.doc_id = j.at("doc_id").get<std::string>();
      if (j.contains("grade")) r.grade = j.at("grade").get<int>();
      r.judge_model = j.value("judge_model", "");
      r.prompt_variant = j.value("prompt_variant", "");
      r.topic_fields_used =
          FieldSet::FromNames(j.value("topic_fields_used", std::vector<std::string>{}));
      r.context_size = j.value("context_size", 0);
      r.template_version = j.value("template_version", "");
      r.error_flag = j.value("error_flag", false);
      r.error_reason = j.value("error_reason", "");
      r.raw_response = j.value("raw_response", "");
      if (r.error_flag == r.grade.has_value()) {
        throw ParseError("error_flag must be set exactly when grade is absent",
                         reader.line_no());
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid judgment record: ") + e.what(),
                       reader.line_no());
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), reader.line_no());
    }
  }
  return records;
}

void WriteTopicsSgml(const std::vector<Topic>& topics, std::ostream& out) {
  for (const Topic& t : topics) {
    out << "<top>\n<num> Number: " << t.topic_id << "\n";
    if (!t.title.empty()) out << "<title> " << t.title << "\n";
    if (!t.description.empty()) {
      out << "\n<desc> Description:\n" << t.description << "\n";
    }
    if (!t.narrative.empty()) {
      out << "\n<narr> Narrative:\n" << t.narrative << "\n";
    }
    out << "</top>\n\n";
  }
}

void WriteQrels(const Qrels& qrels, std::ostream& out) {
  for (const auto& [topic_id, docs] : qrels.by_topic()) {
    for (const auto& [doc_id, grade] : docs) {
      out << topic_id << " 0 " << doc_id << ' ' << grade << '\n';
    }
  }
}

void WriteRun(const RunFile& run, std::ostream& out) {
  for (const auto& [topic_id, docs] : run.rankings) {
    for (const RankedDoc& d : docs) {
      out << fmt::format("{} Q0 {} {} {} {}\n", topic_id, d.doc_id, d.rank,
                         d.score, run.system_id);
    }
  }
}

std::string TopicToJsonLine(const Topic& topic) {
  ordered_json j;
  j["topic_id"] = topic.topic_id;
  j["title"] = topic.title;
  j["description"] = topic.description;
  j["narrative"] = topic.narrative;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string JudgmentToJsonLine(const JudgmentRecord& record) {
  return JudgmentToJson(record).dump(-1, ' ', false,
                                     nlohmann::json::error_handler_t::replace);
}

void WriteJsonl(const std::vector<Topic>& topics, std::ostream& out) {
  for (const Topic& t : topics) out << TopicToJsonLine(t) << '\n';
  if (!out) throw Error("write failed");
}

void WriteJsonl(const std::vector<JudgmentRecord>& records, std::ostream& out) {
  for (const JudgmentRecord& r : records) out << JudgmentToJsonLine(r) << '\n';
  if (!out) throw Error("write failed");
}

Qrels JudgmentsToQrels(const std::vector<JudgmentRecord>& records,
                       GradeScale scale) {
  Qrels qrels(scale);
  for (const JudgmentRecord& r : records) {
    if (r.error_flag || !r.grade) continue;
    qrels.Insert(r.topic_id, r.doc_id, *r.grade);
  }
  return qrels;
}

std::vector<Topic> LoadTopics(const std::string& path, TopicFormat format) {
  auto in = OpenOrThrow(path);
  return ParseTopics(in, format);
}

Qrels LoadQrels(const std::string& path, GradeScale scale) {
  auto in = OpenOrThrow(path);
  return ParseQrels(in, scale);
}

RunFile LoadRun(const std::string& path) {
  auto in = OpenOrThrow(path);
  return ParseRun(in);
}

std::vector<JudgmentRecord> LoadJudgments(const std::string& path) {
  auto in = OpenOrThrow(path);
  return ParseJudgments(in);
}

}  // namespace needforge
