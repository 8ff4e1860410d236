// Copyright 2026 The tfbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "test_oracles.hpp"
#include "tfbell/bell.hpp"
#include "tfbell/simulate.hpp"
#include "tfbell/stats.hpp"

namespace tfbell {
namespace {

OutcomeTable block_counts(int d, const std::array<double, 4>& totals) {
  OutcomeTable t(d, 2, 2);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < d; ++a) t(a, a, x, y) = totals[2 * x + y] / d;
  return t;
}

/// Expected counts for the maximally entangled state, scaled to n rounds per setting pair.
OutcomeTable entangled_counts(int d, double per_block, double v = 1.0) {
  OutcomeTable t = oracle::cglmp_table(oracle::max_entangled(d), 2);
  for (double& p : t.flat()) p = std::round(per_block * (v * p + (1 - v) / (d * d)));
  return t;
}

/// Binary relative entropy form of the McDiarmid bound.
double oracle_ln_p(double n, double t, double beta, double lo, double hi) {
  const double q = (t - lo) / (hi - lo), q0 = (beta - lo) / (hi - lo);
  double kl = q * std::log(q / q0);
  if (q < 1) kl += (1 - q) * std::log((1 - q) / (1 - q0));
  return -n * kl;
}

TEST(SettingsProbability, examples) {
  const auto even = settings_probability(block_counts(3, {1, 1, 1, 1}));
  EXPECT_TRUE(even.empty.empty());
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) EXPECT_DOUBLE_EQ(even.p(x, y), 0.25);
  const auto skew = settings_probability(block_counts(2, {100, 100, 100, 700}));
  EXPECT_DOUBLE_EQ(skew.p(0, 0), 0.1);
  EXPECT_DOUBLE_EQ(skew.p(1, 1), 0.7);
  const auto single = settings_probability(block_counts(2, {0, 0, 50, 0}));
  EXPECT_DOUBLE_EQ(single.p(1, 0), 1.0);
  EXPECT_EQ(single.empty.size(), 3u);
  EXPECT_EQ(uniform_settings(2, 3).sum(), 1.0);
}

TEST(ScoreModel, uniform_scores_and_range) {
  const auto m = score_model(cglmp_inequality(3), entangled_counts(3, 1000), SettingsMode::uniform);
  EXPECT_DOUBLE_EQ(m.s_max, 4.0);
  EXPECT_DOUBLE_EQ(m.s_min, -4.0);
  EXPECT_EQ(m.beta_l, 2.0);
  const auto counts = entangled_counts(3, 1000);
  double total = 0.0;
  for (double c : counts.flat()) total += c;
  EXPECT_DOUBLE_EQ(m.n, total);
}

TEST(ScoreModel, mean_score_equals_plug_in_cglmp) {
  for (int d = 2; d <= 6; ++d) {
    // Unequal blocks so the estimated settings probability matters.
    OutcomeTable counts = oracle::cglmp_table(oracle::max_entangled(d), 2);
    const double weights[4] = {1000, 2300, 700, 4100};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) counts(a, b, x, y) = std::round(counts(a, b, x, y) * weights[2 * x + y]);
    OutcomeTable freq = counts;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const double s = counts.block_sum(x, y);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) freq(a, b, x, y) /= s;
      }
    const auto m = score_model(cglmp_inequality(d), counts);
    EXPECT_NEAR(m.c / m.n, oracle::cglmp(freq), 1e-12) << d;
    EXPECT_NEAR(m.mean(), oracle::cglmp(freq), 1e-12) << d;
  }
}

TEST(ScoreModel, errors) {
  BellInequality zero{OutcomeTable(2, 2, 2), 0.0, "zero"};
  EXPECT_THROW(score_model(zero, entangled_counts(2, 100)), ValidationError);
  EXPECT_THROW(score_model(cglmp_inequality(2), block_counts(2, {0, 1, 1, 1})), ValidationError);
  EXPECT_THROW(score_model(cglmp_inequality(2), OutcomeTable(2, 2, 2)), ValidationError);
  EXPECT_THROW(score_model(cglmp_inequality(3), entangled_counts(2, 100)), ValidationError);
}

TEST(PValue, matches_relative_entropy_form) {
  for (double v : {0.75, 0.85, 1.0}) {
    const auto m = score_model(cglmp_inequality(3), entangled_counts(3, 2000, v), SettingsMode::uniform);
    const auto p = mcdiarmid_pvalue(m);
    EXPECT_NEAR(p.log10_p * std::log(10.0), oracle_ln_p(m.n, m.c / m.n, 2, -4, 4), 1e-9);
  }
}

TEST(PValue, one_at_or_below_local_bound) {
  ScoreModel m{OutcomeTable(2, 2, 2), 4, -4, 2, 100, 200};
  EXPECT_EQ(mcdiarmid_pvalue(m).p, 1.0);
  EXPECT_EQ(mcdiarmid_pvalue(m).log10_p, 0.0);
  m.c = -50;
  EXPECT_EQ(mcdiarmid_pvalue(m).p, 1.0);
  const auto noise = score_model(cglmp_inequality(4), entangled_counts(4, 1000, 0.0));
  EXPECT_EQ(mcdiarmid_pvalue(noise).p, 1.0);
}

TEST(PValue, doubling_rounds_doubles_log_p) {
  const auto a = score_model(cglmp_inequality(3), entangled_counts(3, 1000), SettingsMode::uniform);
  OutcomeTable twice = entangled_counts(3, 1000);
  for (double& c : twice.flat()) c *= 2;
  const auto b = score_model(cglmp_inequality(3), twice, SettingsMode::uniform);
  EXPECT_NEAR(b.c / b.n, a.c / a.n, 1e-14);
  EXPECT_NEAR(mcdiarmid_pvalue(b).log10_p, 2 * mcdiarmid_pvalue(a).log10_p, 1e-9);
}

TEST(PValue, decreases_with_mean_score) {
  double previous = 1.0;
  for (double t = 2.0; t <= 4.0; t += 0.125) {
    ScoreModel m{OutcomeTable(2, 2, 2), 4, -4, 2, 1000, 1000 * t};
    const double lp = mcdiarmid_pvalue(m).log10_p;
    EXPECT_LE(lp, previous);
    previous = lp;
  }
}

TEST(PValue, limit_at_maximum_score) {
  ScoreModel m{OutcomeTable(2, 2, 2), 4, -4, 2, 10, 40};
  // Only the second term survives: ln p = n ln((beta - s_min) / (s_max - s_min)).
  EXPECT_NEAR(mcdiarmid_pvalue(m).log10_p, 10 * std::log10(6.0 / 8.0), 1e-12);
  m.beta_l = 4;
  EXPECT_THROW(mcdiarmid_pvalue(m), ValidationError);
}

TEST(PValue, underflow_keeps_log) {
  ScoreModel m{OutcomeTable(2, 2, 2), 4, -4, 2, 1e9, 2.9e9};
  const auto p = mcdiarmid_pvalue(m);
  EXPECT_EQ(p.p, 0.0);
  EXPECT_LT(p.log10_p, -1000);
  EXPECT_TRUE(std::isfinite(p.log10_p));
}

TEST(PValue, frozen_fixture) {
  const auto m = score_model(cglmp_inequality(6), entangled_counts(6, 25000, 0.95));
  EXPECT_NEAR(mcdiarmid_pvalue(m).log10_p, -1206.0150079214, 1e-6);
}

WrappedDistribution expected_counts(int d, int bases, double total) {
  const Scenario s(d, bases);
  auto w = jpd_binned(s, PhaseGrid::cglmp(s), StateCoefficients::maximally_entangled(d));
  w.values *= total / w.values.sum();
  w.kind = DistributionKind::counts;
  return w;
}

TEST(Bootstrap, sigma_scales_with_inverse_root_counts) {
  const Scenario s(3, 4);
  double ratio_sum = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    BootstrapOptions opt{50, static_cast<std::uint64_t>(100 + rep), 1};
    const double lo = poisson_bootstrap(expected_counts(3, 4, 1e5), s, opt).sigma;
    const double hi = poisson_bootstrap(expected_counts(3, 4, 1e7), s, opt).sigma;
    ratio_sum += lo / hi;
  }
  EXPECT_NEAR(ratio_sum / 20, 10.0, 3.0);
}

TEST(Bootstrap, resample_count_stability) {
  const Scenario s(3, 4);
  const auto w = expected_counts(3, 4, 1e6);
  const double r50 = poisson_bootstrap(w, s, {50, 3, 1}).sigma;
  const double r200 = poisson_bootstrap(w, s, {200, 4, 1}).sigma;
  EXPECT_NEAR(r50 / r200, 1.0, 0.25);
}

TEST(Bootstrap, deterministic_and_thread_independent) {
  const Scenario s(2, 4);
  const auto w = expected_counts(2, 4, 1e5);
  const auto a = poisson_bootstrap(w, s, {30, 9, 1});
  const auto b = poisson_bootstrap(w, s, {30, 9, 3});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.sigma, b.sigma);
  EXPECT_NE(poisson_bootstrap(w, s, {30, 10, 1}).values, a.values);
}

TEST(Bootstrap, unbiased_to_within_sigma) {
  const Scenario s(3, 4);
  const auto w = expected_counts(3, 4, 1e6);
  const auto r = poisson_bootstrap(w, s, {100, 5, 1});
  const auto idx = cglmp_basis_indices(s);
  OutcomeTable t = w.to_table(s, idx.alice, idx.bob);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double total = t.block_sum(x, y);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) t(a, b, x, y) /= total;
    }
  EXPECT_LT(std::abs(r.mean - cglmp_value(t)), r.sigma);
  EXPECT_EQ(r.values.size(), 100u);
}

TEST(Bootstrap, errors) {
  const Scenario s(2, 4);
  WrappedDistribution zero{Eigen::MatrixXd::Zero(8, 8), DistributionKind::counts};
  EXPECT_THROW(poisson_bootstrap(zero, s), ValidationError);
  EXPECT_THROW(poisson_bootstrap(expected_counts(2, 4, 1e4), s, {1, 1, 1}), ValidationError);
}

}  // namespace
}  // namespace tfbell
