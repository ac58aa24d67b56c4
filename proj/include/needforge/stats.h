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


// Distribution functions and small descriptive statistics.

#ifndef NEEDFORGE_STATS_H_
#define NEEDFORGE_STATS_H_

#include <span>

namespace needforge {

// I_x(a, b), the regularized incomplete beta function. a, b > 0,
// 0 <= x <= 1. Evaluated with a modified-Lentz continued fraction.
double RegularizedIncompleteBeta(double a, double b, double x);

// P(T <= t) for Student's t with `df` > 0 degrees of freedom.
double StudentTCdf(double t, double df);

// P(|T| >= |t|).
double StudentTTwoTailedP(double t, double df);

// P(F >= f) for the F distribution with (df1, df2) degrees of freedom.
double FDistributionSurvival(double f, double df1, double df2);

double Mean(std::span<const double> xs);
// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double SampleVariance(std::span<const double> xs);

// Linear-interpolation percentile (q in [0, 1]) of a sorted sample.
double PercentileSorted(std::span<const double> sorted, double q);

}  // namespace needforge

#endif  // NEEDFORGE_STATS_H_
