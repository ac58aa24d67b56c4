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

#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "needforge/error.h"
#include "needforge/text.h"

namespace needforge {
namespace {

std::string_view GradeGloss(const GradeScale& scale, int grade) {
  if (scale.name == GradeScale::Name::kDL) {
    switch (grade) {
      case 3:
        return "perfectly relevant: the document is dedicated to the topic and "
               "fully satisfies the information need";
      case 2:
        return "highly relevant: the document satisfies the information need "
               "but may contain extra unrelated content";
      case 1:
        return "related: the document is on the subject but does not satisfy "
               "the information need";
      default:
        return "not relevant: the document has nothing to do with the topic";
    }
  }
  switch (grade) {
    case 2:
      return "highly relevant: the document is primarily about the topic or "
             "contains vital information about it";
    case 1:
      return "relevant: some of the information in the document would be "
             "useful for a report on the topic";
    default:
      return "not relevant: nothing in the document is useful for the topic";
  }
}

std::string_view Label(TopicField f) {
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

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::string RenderJudgePrompt(const Topic& topic, FieldSet fields,
                              std::string_view document,
                              const GradeScale& scale) {
  if (Trim(document).empty()) throw InvalidArgument("empty document");
  if (fields.empty()) throw InvalidArgument("no topic fields selected");
  for (TopicField f : fields.Fields()) {
    if (topic.Field(f).empty()) {
      throw InvalidArgument(fmt::format("topic {} has no {}", topic.topic_id,
                                        TopicFieldName(f)));
    }
  }
  std::string out =
      "You are a search quality rater. You judge how relevant a document is "
      "to the information need of a searcher.\n\nSearch topic:\n";
  for (TopicField f : fields.Fields()) {
    out += fmt::format("{}: {}\n", Label(f), topic.Field(f));
  }
  out += "\nDocument:\n<<<\n";
  out += document;
  out += "\n>>>\n\n";
  out += fmt::format(
      "Rate the relevance of the document to the search topic on an integer "
      "scale from 0 to {}:\n",
      scale.max_grade);
  for (int g = scale.max_grade; g >= 0; --g) {
    out += fmt::format("{} = {}\n", g, GradeGloss(scale, g));
  }
  out += "\nThink about what the searcher is looking for, then decide. End "
         "your answer with the grade as a single integer and write nothing "
         "after it.\n";
  return out;
}

GradeOrError ParseGrade(std::string_view raw, const GradeScale& scale) {
  std::optional<long long> last;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) {
      ++j;
    }
    const char before = i > 0 ? raw[i - 1] : ' ';
    const char after = j < raw.size() ? raw[j] : ' ';
    const bool decimal_after = after == '.' && j + 1 < raw.size() &&
                               std::isdigit(static_cast<unsigned char>(raw[j + 1]));
    const bool standalone =
        !IsWordChar(before) && before != '.' && !IsWordChar(after) && !decimal_after;
    if (standalone) {
      long long value = 0;
      auto [ptr, ec] = std::from_chars(raw.data() + i, raw.data() + j, value);
      if (ec != std::errc()) value = -1;  // overflow: certainly out of range
      last = before == '-' ? -value : value;
    }
    i = j;
  }
  if (!last) return GenerationError{"no integer grade in output", std::string(raw)};
  if (*last < 0 || *last > scale.max_grade) {
    return GenerationError{
        fmt::format("grade {} outside 0..{}", *last, scale.max_grade),
        std::string(raw)};
  }
  return static_cast<int>(*last);
}

std::vector<JudgmentRecord> JudgeBatch(std::span<const JudgeItem> items,
                                       const DocStore& docs,
                                       const JudgeConfig& config,
                                       LlmGateway& gateway) {
  std::vector<JudgmentRecord> records(items.size());
  std::vector<LlmRequest> requests;
  std::vector<std::size_t> request_item;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const JudgeItem& item = items[i];
    JudgmentRecord& r = records[i];
    r.topic_id = item.topic.topic_id;
    r.doc_id = item.doc_id;
    r.judge_model = config.judge_model;
    r.prompt_variant = item.topic_source;
    r.topic_fields_used = config.topic_fields;
    r.context_size = item.context_size;
    r.template_version = kJudgeTemplateVersion;
    const std::string* text = docs.Find(item.doc_id);
    try {
      if (text == nullptr) throw InvalidArgument("unknown document " + item.doc_id);
      LlmRequest req;
      req.model = config.judge_model;
      req.user_prompt =
          RenderJudgePrompt(item.topic, config.topic_fields, *text, config.scale);
      req.temperature = config.temperature;
      req.max_tokens = config.max_tokens;
      req.reasoning_effort = config.reasoning_effort;
      requests.push_back(std::move(req));
      request_item.push_back(i);
    } catch (const InvalidArgument& e) {
      r.error_flag = true;
      r.error_reason = e.what();
    }
  }

  const auto outcomes = gateway.CompleteBatch(requests);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    JudgmentRecord& r = records[request_item[k]];
    if (!outcomes[k].text) {
      r.error_flag = true;
      r.error_reason = outcomes[k].error;
      continue;
    }
    r.raw_response = *outcomes[k].text;
    auto parsed = ParseGrade(r.raw_response, config.scale);
    if (auto* grade = std::get_if<int>(&parsed)) {
      r.grade = *grade;
    } else {
      r.error_flag = true;
      r.error_reason = std::get<GenerationError>(parsed).reason;
    }
  }
  return records;
}

}  // namespace needforge
