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


// Dummy-coded ordinary least squares over experiment factors and Type II
// ANOVA effect sizes.

#ifndef NEEDFORGE_FACTOR_ANALYSIS_H_
#define NEEDFORGE_FACTOR_ANALYSIS_H_

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace needforge {

// A categorical factor lists its levels; a numeric factor has none.
struct Factor {
  std::string name;
  std::vector<std::string> levels;

  bool numeric() const { return levels.empty(); }
};

struct Observation {
  std::map<std::string, std::string> categorical;
  std::map<std::string, double> numeric;
  double response = 0.0;
};

// One experiment cell of the label-alignment grid.
struct FactorRow {
  std::string judge_model;
  std::string topic_model;
  std::string prompt;
  bool same_llm = false;
  int n_context_docs = 0;
  double kappa = 0.0;

  Observation ToObservation() const;
};

// judge_model, topic_model and prompt as categorical factors (levels in
// first-seen order), same_llm and n_context_docs as numeric ones.
std::vector<Factor> FactorRowFactors(const std::vector<FactorRow>& rows);

struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> labels;
  // Index into the factor list per column; -1 for the intercept.
  std::vector<int> column_factor;
  // Baseline level per categorical factor.
  std::map<std::string, std::string> baselines;
};

// Intercept, one 0/1 column per non-baseline level of each categorical
// factor, one column per numeric factor. Factors without an entry in
// `baselines` use their first level. Throws InvalidArgument for levels not
// declared on the factor.
DesignMatrix BuildDesignMatrix(const std::vector<Observation>& rows,
                               const std::vector<Factor>& factors,
                               const std::map<std::string, std::string>& baselines);

struct Coefficient {
  std::string term;
  double beta;
  double std_err;
  double t;
  double p;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;
  double r2;
  double adj_r2;
  int n;
  int df_resid;
  double ss_res;
  double ss_tot;
  Eigen::VectorXd fitted;
  std::map<std::string, std::string> baseline_levels;
};

// Least squares through a column-pivoting Householder QR. Throws
// InvalidArgument when rows < columns or the design is rank deficient (the
// message names the collinear columns).
RegressionFit OlsFit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const std::vector<std::string>& labels);

RegressionFit FitFactors(const std::vector<Observation>& rows,
                         const std::vector<Factor>& factors,
                         const std::map<std::string, std::string>& baselines);

struct AnovaTerm {
  std::string factor;
  double sum_sq;
  int df;
  double eta2;
  double f;
  double p;
};

// Type II sums of squares per factor (model without the factor against the
// full main-effects model) with eta^2 = SS_factor / SS_total.
std::vector<AnovaTerm> AnovaType2Eta2(
    const std::vector<Observation>& rows, const std::vector<Factor>& factors,
    const std::map<std::string, std::string>& baselines);

// "***" for p < .001, "**" for p < .01, "*" for p < .05, else "".
std::string SignificanceStars(double p);

}  // namespace needforge

#endif  // NEEDFORGE_FACTOR_ANALYSIS_H_
