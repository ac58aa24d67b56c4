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


// The experiment stages behind the command-line subcommands. Every stage
// reads its inputs from the manifest and the output directory and writes
// deterministic files back into the output directory.

#ifndef NEEDFORGE_PIPELINE_H_
#define NEEDFORGE_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "needforge/llm_gateway.h"
#include "needforge/manifest.h"

namespace needforge {

enum ExitCode { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

enum class TopicSource { kOriginal, kSynthesized };
TopicSource ParseTopicSource(std::string_view name);

enum class ReportKind { kAlignment, kAgreement, kLogo, kSimilarity, kRegression };
inline constexpr ReportKind kAllReports[] = {
    ReportKind::kAlignment, ReportKind::kAgreement, ReportKind::kLogo,
    ReportKind::kSimilarity, ReportKind::kRegression};
std::string_view ReportName(ReportKind kind);
ReportKind ParseReportKind(std::string_view name);

// A rendered table; written as <stem>.csv and <stem>.md.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Lines printed under the markdown table.
  std::vector<std::string> notes;
};
void WriteTable(const Table& table, const std::filesystem::path& stem);
std::string CsvEscape(std::string_view field);

class Pipeline {
 public:
  // A null transport selects the network one.
  explicit Pipeline(ExperimentManifest manifest,
                    std::shared_ptr<HttpTransport> transport = nullptr);

  // Each stage returns an ExitCode: kExitPartial when some rows failed.
  // Missing inputs or upstream artifacts throw ConfigError.
  int Synthesize();
  int Judge(TopicSource source);
  int Report(ReportKind kind);
  // Every report whose inputs are configured; logo and regression are
  // skipped with a warning when they cannot run.
  int ReportAll();

  const ExperimentManifest& manifest() const { return manifest_; }
  LlmGateway& gateway() { return gateway_; }
  std::filesystem::path OutputPath(const std::string& relative) const {
    return manifest_.output_dir / relative;
  }

 private:
  int ReportAlignment();
  int ReportAgreement();
  int ReportLogo();
  int ReportSimilarity();
  int ReportRegression();

  ExperimentManifest manifest_;
  LlmGateway gateway_;
};

}  // namespace needforge

#endif  // NEEDFORGE_PIPELINE_H_
