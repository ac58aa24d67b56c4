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


// needforge: topic synthesis, LLM judging and evaluation reports driven by
// one experiment manifest.

#include <exception>
#include <functional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "needforge/error.h"
#include "needforge/manifest.h"
#include "needforge/pipeline.h"

namespace {

using needforge::Pipeline;

int Run(const std::string& manifest_path, const std::function<int(Pipeline&)>& stage) {
  try {
    Pipeline pipeline(needforge::LoadManifest(manifest_path));
    return stage(pipeline);
  } catch (const needforge::ConfigError& e) {
    spdlog::error("{}", e.what());
    return needforge::kExitConfig;
  } catch (const needforge::InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return needforge::kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return needforge::kExitPartial;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize topics, judge relevance with LLMs, and evaluate the qrels."};
  app.require_subcommand(1);
  std::string manifest;
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-m,--manifest", manifest, "Experiment manifest (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    return sub;
  };

  CLI::App* synthesize = add("synthesize", "Generate topics for every cell");
  std::string topics = "original";
  CLI::App* judge = add("judge", "Judge the sampled qrels pairs");
  judge->add_option("--topics", topics, "original or synthesized")
      ->check(CLI::IsMember({"original", "synthesized"}));
  CLI::App* alignment = add("eval-alignment", "Agreement of LLM labels with human qrels");
  CLI::App* agreement = add("eval-agreement", "Fleiss kappa among judges and relevant share");
  CLI::App* logo = add("eval-logo", "Leave-one-group-out reusability");
  CLI::App* similarity = add("eval-similarity", "Similarity of generated to original topics");
  CLI::App* regress = add("regress", "Factor regression of kappa over the cell grid");
  std::string which = "all";
  CLI::App* report = add("report", "Emit one or all report tables");
  report->add_option("--which", which, "alignment, agreement, logo, similarity, regression or all")
      ->check(CLI::IsMember({"all", "alignment", "agreement", "logo", "similarity", "regression"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : needforge::kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug
                            : quiet ? spdlog::level::warn : spdlog::level::info);

  using needforge::ReportKind;
  auto report_stage = [](ReportKind kind) {
    return [kind](Pipeline& p) { return p.Report(kind); };
  };
  if (*synthesize) return Run(manifest, [](Pipeline& p) { return p.Synthesize(); });
  if (*judge) {
    return Run(manifest, [&](Pipeline& p) {
      return p.Judge(needforge::ParseTopicSource(topics));
    });
  }
  if (*alignment) return Run(manifest, report_stage(ReportKind::kAlignment));
  if (*agreement) return Run(manifest, report_stage(ReportKind::kAgreement));
  if (*logo) return Run(manifest, report_stage(ReportKind::kLogo));
  if (*similarity) return Run(manifest, report_stage(ReportKind::kSimilarity));
  if (*regress) return Run(manifest, report_stage(ReportKind::kRegression));
  if (*report) {
    if (which == "all") return Run(manifest, [](Pipeline& p) { return p.ReportAll(); });
    return Run(manifest, report_stage(needforge::ParseReportKind(which)));
  }
  return needforge::kExitConfig;
}
