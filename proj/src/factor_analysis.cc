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


#include "needforge/factor_analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "needforge/error.h"
#include "needforge/stats.h"

namespace needforge {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd Responses(const std::vector<Observation>& rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(i) = rows[i].response;
  return y;
}

double SumSquaredResiduals(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() == 0) return y.squaredNorm();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  return (y - x * qr.solve(y)).squaredNorm();
}

}  // namespace

Observation FactorRow::ToObservation() const {
  Observation o;
  o.categorical = {{"judge_model", judge_model},
                   {"topic_model", topic_model},
                   {"prompt", prompt}};
  o.numeric = {{"same_llm", same_llm ? 1.0 : 0.0},
               {"n_context_docs", static_cast<double>(n_context_docs)}};
  o.response = kappa;
  return o;
}

std::vector<Factor> FactorRowFactors(const std::vector<FactorRow>& rows) {
  std::vector<Factor> factors = {{"judge_model", {}}, {"topic_model", {}},
                                 {"prompt", {}},      {"same_llm", {}},
                                 {"n_context_docs", {}}};
  auto add = [](Factor& f, const std::string& level) {
    if (std::find(f.levels.begin(), f.levels.end(), level) == f.levels.end()) {
      f.levels.push_back(level);
    }
  };
  for (const FactorRow& r : rows) {
    add(factors[0], r.judge_model);
    add(factors[1], r.topic_model);
    add(factors[2], r.prompt);
  }
  return factors;
}

DesignMatrix BuildDesignMatrix(const std::vector<Observation>& rows,
                               const std::vector<Factor>& factors,
                               const std::map<std::string, std::string>& baselines) {
  DesignMatrix dm;
  dm.labels.push_back("(Intercept)");
  dm.column_factor.push_back(-1);
  // Per factor: level -> column, baseline maps to -1.
  std::vector<std::map<std::string, int>> level_columns(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Factor& factor = factors[f];
    if (factor.numeric()) {
      dm.labels.push_back(factor.name);
      dm.column_factor.push_back(static_cast<int>(f));
      continue;
    }
    std::string baseline = factor.levels.front();
    if (auto it = baselines.find(factor.name); it != baselines.end()) {
      baseline = it->second;
      if (std::find(factor.levels.begin(), factor.levels.end(), baseline) ==
          factor.levels.end()) {
        throw InvalidArgument(fmt::format("baseline '{}' is not a level of {}",
                                          baseline, factor.name));
      }
    }
    dm.baselines[factor.name] = baseline;
    for (const std::string& level : factor.levels) {
      if (level == baseline) {
        level_columns[f][level] = -1;
        continue;
      }
      level_columns[f][level] = static_cast<int>(dm.labels.size());
      dm.labels.push_back(factor.name + "=" + level);
      dm.column_factor.push_back(static_cast<int>(f));
    }
  }

  dm.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(dm.labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Observation& row = rows[i];
    dm.x(i, 0) = 1.0;
    int column = 1;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const Factor& factor = factors[f];
      if (factor.numeric()) {
        auto it = row.numeric.find(factor.name);
        if (it == row.numeric.end()) {
          throw InvalidArgument(fmt::format("row {} has no value for {}", i, factor.name));
        }
        dm.x(i, column++) = it->second;
        continue;
      }
      auto it = row.categorical.find(factor.name);
      if (it == row.categorical.end()) {
        throw InvalidArgument(fmt::format("row {} has no level for {}", i, factor.name));
      }
      auto lc = level_columns[f].find(it->second);
      if (lc == level_columns[f].end()) {
        throw InvalidArgument(fmt::format("row {}: unknown level '{}' of {}", i,
                                          it->second, factor.name));
      }
      if (lc->second >= 0) dm.x(i, lc->second) = 1.0;
      column += static_cast<int>(factor.levels.size()) - 1;
    }
  }
  return dm;
}

RegressionFit OlsFit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const std::vector<std::string>& labels) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw InvalidArgument("response length differs from design rows");
  if (static_cast<Eigen::Index>(labels.size()) != p) {
    throw InvalidArgument("one label per design column required");
  }
  if (n < p || p == 0) {
    throw InvalidArgument(fmt::format("{} rows cannot fit {} columns", n, p));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) {
    // Each dependent column is written as a combination of the independent
    // ones; every column with a non-zero weight takes part.
    const Eigen::Index rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    Eigen::MatrixXd basis(n, rank);
    for (Eigen::Index i = 0; i < rank; ++i) basis.col(i) = x.col(perm(i));
    std::vector<bool> involved(p, false);
    for (Eigen::Index i = rank; i < p; ++i) {
      involved[perm(i)] = true;
      const Eigen::VectorXd w =
          basis.colPivHouseholderQr().solve(Eigen::VectorXd(x.col(perm(i))));
      for (Eigen::Index j = 0; j < rank; ++j) {
        if (std::abs(w(j)) > 1e-8) involved[perm(j)] = true;
      }
    }
    std::string names;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!involved[i]) continue;
      if (!names.empty()) names += ", ";
      names += labels[i];
    }
    throw InvalidArgument("design is rank deficient; collinear columns: " + names);
  }
  const Eigen::VectorXd beta = qr.solve(y);

  RegressionFit fit;
  fit.n = static_cast<int>(n);
  fit.df_resid = static_cast<int>(n - p);
  fit.fitted = x * beta;
  fit.ss_res = (y - fit.fitted).squaredNorm();
  fit.ss_tot = (y.array() - y.mean()).square().sum();
  fit.r2 = fit.ss_tot > 0.0 ? 1.0 - fit.ss_res / fit.ss_tot : 1.0;
  fit.adj_r2 = fit.df_resid > 0
                   ? 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) /
                               static_cast<double>(fit.df_resid)
                   : kNaN;

  // (X'X)^-1 = P R^-1 R^-T P' for X P = Q R.
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_unscaled =
      qr.colsPermutation() * (r_inv * r_inv.transpose()) *
      qr.colsPermutation().transpose();
  const double sigma2 =
      fit.df_resid > 0 ? fit.ss_res / static_cast<double>(fit.df_resid) : kNaN;
  for (Eigen::Index j = 0; j < p; ++j) {
    Coefficient c{labels[j], beta(j), std::sqrt(sigma2 * cov_unscaled(j, j)), kNaN, kNaN};
    if (fit.df_resid > 0) {
      c.t = c.beta / c.std_err;
      c.p = std::isnan(c.t) ? kNaN : StudentTTwoTailedP(c.t, fit.df_resid);
    }
    fit.coefficients.push_back(std::move(c));
  }
  return fit;
}

RegressionFit FitFactors(const std::vector<Observation>& rows,
                         const std::vector<Factor>& factors,
                         const std::map<std::string, std::string>& baselines) {
  DesignMatrix dm = BuildDesignMatrix(rows, factors, baselines);
  RegressionFit fit = OlsFit(dm.x, Responses(rows), dm.labels);
  fit.baseline_levels = std::move(dm.baselines);
  return fit;
}

std::vector<AnovaTerm> AnovaType2Eta2(
    const std::vector<Observation>& rows, const std::vector<Factor>& factors,
    const std::map<std::string, std::string>& baselines) {
  const DesignMatrix dm = BuildDesignMatrix(rows, factors, baselines);
  const Eigen::VectorXd y = Responses(rows);
  const RegressionFit full = OlsFit(dm.x, y, dm.labels);
  std::vector<AnovaTerm> terms;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    std::vector<Eigen::Index> keep;
    for (std::size_t c = 0; c < dm.column_factor.size(); ++c) {
      if (dm.column_factor[c] != static_cast<int>(f)) keep.push_back(c);
    }
    const int df = static_cast<int>(dm.column_factor.size() - keep.size());
    if (df == 0) continue;  // single-level factor, nothing to test
    Eigen::MatrixXd reduced(dm.x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) reduced.col(c) = dm.x.col(keep[c]);
    const double ss = std::max(0.0, SumSquaredResiduals(reduced, y) - full.ss_res);
    AnovaTerm term{factors[f].name, ss, df,
                   full.ss_tot > 0.0 ? ss / full.ss_tot : 0.0, kNaN, kNaN};
    if (full.df_resid > 0) {
      const double mse = full.ss_res / full.df_resid;
      if (mse > 0.0) {
        term.f = (ss / df) / mse;
        term.p = FDistributionSurvival(term.f, df, full.df_resid);
      } else {
        term.f = ss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        term.p = ss > 0.0 ? 0.0 : 1.0;
      }
    }
    terms.push_back(std::move(term));
  }
  return terms;
}

std::string SignificanceStars(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace needforge
