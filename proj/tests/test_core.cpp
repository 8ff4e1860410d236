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
#include <numbers>

#include "tfbell/core.hpp"

namespace tfbell {
namespace {

constexpr double kPiD = std::numbers::pi;

TEST(Scenario, derived_sizes_and_limits) {
  const Scenario s(6, 38);
  EXPECT_EQ(s.outcomes_per_period(), 228);
  EXPECT_DOUBLE_EQ(s.bin_width(), 2 * kPiD / 228);
  EXPECT_THROW(Scenario(1, 2), ValidationError);
  EXPECT_THROW(Scenario(17, 2), ValidationError);
  EXPECT_THROW(Scenario(3, 3), ValidationError);
  EXPECT_THROW(Scenario(3, 0), ValidationError);
  EXPECT_THROW(Scenario(3, 258), ValidationError);
  EXPECT_NO_THROW(Scenario(16, 256));
}

TEST(PhaseFromFrequency, examples) {
  EXPECT_EQ(phase_from_frequency(0.0, 1e-12), 0.0);
  EXPECT_NEAR(phase_from_frequency(1e12, 1e-12), 2 * kPiD, 1e-12);
  EXPECT_NEAR(phase_from_frequency(0.5e12, 1e-12), kPiD, 1e-12);
  EXPECT_THROW(phase_from_frequency(NAN, 1e-12), ValidationError);
  EXPECT_THROW(phase_from_frequency(1.0, INFINITY), ValidationError);
}

TEST(Labels, alice_examples) {
  const Scenario s(3, 4);
  const auto l = labels_from_grid_index(6, s, Party::alice);
  EXPECT_EQ(l.outcome, 1);
  EXPECT_EQ(l.basis, 2);
  EXPECT_NEAR(phase_of_label(l, s, Party::alice), kPiD, 1e-12);
  const auto o = labels_from_grid_index(0, s, Party::alice);
  EXPECT_EQ(o.outcome, 0);
  EXPECT_EQ(o.basis, 0);
  EXPECT_EQ(phase_of_label(o, s, Party::alice), 0.0);
}

TEST(Labels, bob_example_from_experimental_scenario) {
  const Scenario s(6, 38);
  EXPECT_NEAR(phase_of_label({0, 19}, s, Party::bob), 2 * kPiD / 6 * 0.25, 1e-12);
}

TEST(Labels, out_of_range_rejected) {
  const Scenario s(3, 4);
  EXPECT_THROW(labels_from_grid_index(-1, s, Party::alice), ValidationError);
  EXPECT_THROW(labels_from_grid_index(12, s, Party::bob), ValidationError);
  EXPECT_THROW(grid_index_from_labels({3, 0}, s, Party::alice), ValidationError);
  EXPECT_THROW(grid_index_from_labels({0, 4}, s, Party::bob), ValidationError);
}

TEST(Labels, round_trip_all_scenarios) {
  for (int d = 2; d <= 16; ++d)
    for (int m = 2; m <= 64; m += 2) {
      const Scenario s(d, m);
      for (Party p : {Party::alice, Party::bob})
        for (int i = 0; i < s.outcomes_per_period(); ++i)
          ASSERT_EQ(grid_index_from_labels(labels_from_grid_index(i, s, p), s, p), i)
              << "d=" << d << " M=" << m << " i=" << i;
    }
}

TEST(Labels, phases_lie_on_the_grid_lattice) {
  for (int d : {2, 3, 6, 8}) {
    for (int m : {2, 4, 38}) {
      const Scenario s(d, m);
      const auto grid = PhaseGrid::cglmp(s);
      for (int i = 0; i < s.outcomes_per_period(); ++i) {
        const double pa = phase_of_label(labels_from_grid_index(i, s, Party::alice), s, Party::alice);
        EXPECT_NEAR(pa, grid.alice_center(i), 1e-12);
        const double pb = phase_of_label(labels_from_grid_index(i, s, Party::bob), s, Party::bob);
        EXPECT_NEAR(pb, grid.bob_center(i), 1e-12);
      }
    }
  }
}

TEST(PhaseGrid, quarter_step_offset_is_enforced) {
  // M = 6: the quarter-period shift is 1.5 bins, so zero offset is off-lattice.
  const Scenario s(3, 6);
  const double w = s.bin_width();
  EXPECT_NO_THROW(PhaseGrid(s, 0.0, -2 * kPiD / 3 / 4, 1));
  EXPECT_NO_THROW(PhaseGrid(s, 0.3, 0.3 - 2 * kPiD / 3 / 4 + 5 * w, 2));
  EXPECT_THROW(PhaseGrid(s, 0.0, 0.0, 1), ValidationError);
  EXPECT_THROW(PhaseGrid(s, 0.0, -2 * kPiD / 3 / 4, 0), ValidationError);
}

TEST(CglmpBases, examples) {
  auto check = [](int d, int m, int half) {
    const auto idx = cglmp_basis_indices(Scenario(d, m));
    EXPECT_EQ(idx.alice[0], 0);
    EXPECT_EQ(idx.alice[1], half);
    // Bob in inequality order: beta = +1/4 first, then beta = -1/4.
    EXPECT_EQ(idx.bob[0], half);
    EXPECT_EQ(idx.bob[1], 0);
  };
  check(3, 4, 2);
  check(6, 38, 19);
  check(2, 2, 1);
}

TEST(CglmpBases, phases_reproduce_alpha_and_beta) {
  for (int d : {2, 3, 5, 6}) {
    for (int m : {2, 4, 38}) {
      const Scenario s(d, m);
      const auto idx = cglmp_basis_indices(s);
      const double unit = 2 * kPiD / d;
      EXPECT_NEAR(phase_of_label({0, idx.alice[0]}, s, Party::alice), 0.0, 1e-12);
      EXPECT_NEAR(phase_of_label({0, idx.alice[1]}, s, Party::alice), 0.5 * unit, 1e-12);
      EXPECT_NEAR(phase_of_label({0, idx.bob[0]}, s, Party::bob), 0.25 * unit, 1e-12);
      EXPECT_NEAR(phase_of_label({0, idx.bob[1]}, s, Party::bob), -0.25 * unit, 1e-12);
    }
  }
}

TEST(OutcomeTable, indexing_and_block_sums) {
  OutcomeTable t(3, 2, 2);
  t(1, 2, 1, 0) = 0.5;
  t(0, 0, 1, 0) = 0.25;
  EXPECT_DOUBLE_EQ(t.block_sum(1, 0), 0.75);
  EXPECT_DOUBLE_EQ(t.block_sum(0, 0), 0.0);
  EXPECT_EQ(t.size(), 36u);
  OutcomeTable u(3, 2, 3);
  EXPECT_FALSE(t.same_shape(u));
  EXPECT_THROW(t.dot(u), ValidationError);
}

TEST(ConditionalProbabilities, validation) {
  OutcomeTable t(2, 1, 1, 0.25);
  EXPECT_NO_THROW(ConditionalProbabilities{t});
  t(0, 0, 0, 0) = 0.3;
  EXPECT_THROW(ConditionalProbabilities{t}, ValidationError);
  OutcomeTable neg(2, 1, 1, 0.5);
  neg(0, 0, 0, 0) = -0.5;
  neg(1, 1, 0, 0) = 0.5;
  EXPECT_THROW(ConditionalProbabilities{neg}, ValidationError);
}

TEST(ConditionalProbabilities, restrict_and_select) {
  OutcomeTable t(2, 3, 3);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) t(x % 2, y % 2, x, y) = 1.0;
  const ConditionalProbabilities p(t, {10, 11, 12}, {20, 21, 22});
  const std::vector<int> xs{2}, ys{1, 0};
  const auto r = p.restrict(xs, ys);
  EXPECT_EQ(r.alice_bases(), std::vector<int>{12});
  EXPECT_EQ(r.bob_bases(), (std::vector<int>{21, 20}));
  EXPECT_EQ(r(0, 1, 0, 0), 1.0);
  EXPECT_EQ(r(0, 0, 0, 1), 1.0);
  const std::vector<int> la{11}, lb{22};
  const auto q = p.select_bases(la, lb);
  EXPECT_EQ(q(1, 0, 0, 0), 1.0);
  const std::vector<int> missing{99};
  EXPECT_THROW(p.select_bases(missing, lb), ValidationError);
}

TEST(JsiRecord, validation) {
  JsiRecord r;
  r.counts = Eigen::MatrixXd::Constant(2, 3, 1.0);
  r.axis_a = {0.0, 1.0};
  r.axis_b = {3.0, 2.0, 1.0};
  EXPECT_NO_THROW(r.validate());
  r.axis_b = {1.0, 1.0, 2.0};
  EXPECT_THROW(r.validate(), ValidationError);
  r.axis_b = {1.0, 2.0, 3.0};
  r.counts(1, 2) = 0.5;
  EXPECT_THROW(r.validate(), ValidationError);
  EXPECT_NO_THROW(r.validate(false));
  r.counts(1, 2) = -1.0;
  EXPECT_THROW(r.validate(false), ValidationError);
  r.counts(1, 2) = 1.0;
  r.axis_a = {0.0};
  EXPECT_THROW(r.validate(), ValidationError);
}

TEST(WrappedDistribution, to_table_uses_labels) {
  const Scenario s(2, 2);
  WrappedDistribution w{Eigen::MatrixXd::Zero(4, 4), DistributionKind::counts};
  // Alice (a=1, x=1) is index 3; Bob (b=1, y=0) is block mod(-1, 2) = 1, index 2.
  w.values(3, 2) = 7.0;
  const std::vector<int> xs{1}, ys{0};
  const auto t = w.to_table(s, xs, ys);
  EXPECT_EQ(t(1, 1, 0, 0), 7.0);
  EXPECT_EQ(w.at(s, 1, 1, 1, 0), 7.0);
  WrappedDistribution bad{Eigen::MatrixXd::Zero(3, 3), DistributionKind::counts};
  EXPECT_THROW(bad.validate(s), ValidationError);
}

}  // namespace
}  // namespace tfbell
