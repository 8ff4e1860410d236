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
#include <random>

#include "test_oracles.hpp"
#include "tfbell/bell.hpp"
#include "tfbell/simulate.hpp"
#include "tfbell/wrapfit.hpp"

namespace tfbell {
namespace {

constexpr double kPiD = std::numbers::pi;

TEST(StateCoefficients, validation) {
  EXPECT_NO_THROW(StateCoefficients::maximally_entangled(5));
  EXPECT_THROW(StateCoefficients({0.5, 0.5}), ValidationError);
  EXPECT_THROW(StateCoefficients({1.0, -0.0001}), ValidationError);
  EXPECT_THROW(StateCoefficients({1.0}), ValidationError);
  const auto s = StateCoefficients::normalized({3.0, 4.0});
  EXPECT_NEAR(s[0], 0.6, 1e-15);
  EXPECT_NEAR(s[1], 0.8, 1e-15);
  EXPECT_THROW(StateCoefficients::normalized({0.0, 0.0}), ValidationError);
}

TEST(JpdContinuous, examples) {
  EXPECT_NEAR(jpd_continuous(3, 0.0, 0.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(jpd_continuous(3, 2 * kPiD / 3, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(jpd_continuous(2, kPiD / 4, kPiD / 4), 0.25, 1e-15);
}

TEST(JpdContinuous, matches_explicit_sum_and_is_periodic) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int d = 2; d <= 10; ++d) {
    const auto lam = oracle::max_entangled(d);
    for (int k = 0; k < 200; ++k) {
      const double a = u(rng), b = u(rng);
      // (1/d^3) |sum_j e^{ij theta}|^2 is the state density at lambda_j = 1/sqrt(d).
      EXPECT_NEAR(jpd_continuous(d, a, b), oracle::state_point(lam, a + b), 1e-12);
      EXPECT_NEAR(jpd_continuous(d, a, b), jpd_continuous(d, a + 2 * kPiD, b), 1e-12);
    }
    // Removable singularity: continuous through multiples of 2 pi.
    EXPECT_NEAR(jpd_continuous(d, 2 * kPiD, 0.0), 1.0 / d, 1e-12);
    EXPECT_NEAR(jpd_continuous(d, 1e-9, 0.0), 1.0 / d, 1e-12);
  }
}

TEST(ConditionalFromState, examples) {
  const Scenario s22(2, 2);
  const auto idx = cglmp_basis_indices(s22);
  const std::vector<int> x0{0}, y0{0};
  const auto p = conditional_from_state(StateCoefficients::maximally_entangled(2), s22, x0, y0);
  EXPECT_NEAR(p(0, 0, 0, 0), 0.426777, 1e-6);
  EXPECT_NEAR(p(0, 0, 0, 0), std::pow(std::sin(kPiD / 4), 2) / std::pow(std::sin(kPiD / 8), 2) / 8, 1e-12);

  const Scenario s34(3, 4);
  const auto all = all_bases(s34);
  const auto flat = conditional_from_state(StateCoefficients({1.0, 0.0, 0.0}), s34, all, all);
  for (double v : flat.table().flat()) EXPECT_NEAR(v, 1.0 / 9.0, 1e-15);

  const auto q = conditional_from_state(StateCoefficients::maximally_entangled(2), s22, idx.alice, idx.bob);
  EXPECT_NEAR(oracle::cglmp(q.table()), 2 * std::sqrt(2.0), 1e-12);
}

TEST(ConditionalFromState, equals_point_formula) {
  for (int d = 2; d <= 8; ++d)
    for (int m : {2, 4, 38}) {
      const Scenario s(d, m);
      const auto all = all_bases(s);
      const auto lam = oracle::max_entangled(d);
      const auto p = conditional_from_state(StateCoefficients::maximally_entangled(d), s, all, all);
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
              ASSERT_NEAR(p(a, b, x, y), oracle::eq5(lam, m, a, b, x, y), 1e-12);
    }
}

TEST(ConditionalFromState, generalized_state_matches_oracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 5;
    std::vector<double> w(d);
    for (double& v : w) v = u(rng);
    const auto lam = StateCoefficients::normalized(w);
    const std::vector<double> lv(lam.values().begin(), lam.values().end());
    const Scenario s(d, 4);
    const auto all = all_bases(s);
    const auto p = conditional_from_state(lam, s, all, all);
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) ASSERT_NEAR(p(a, b, x, y), oracle::eq5(lv, 4, a, b, x, y), 1e-12);
  }
}

TEST(JpdBinned, blocks_normalised_and_raw_blocks_equal) {
  for (int d : {2, 3, 5}) {
    for (int m : {2, 4, 10}) {
      const Scenario s(d, m);
      const auto grid = PhaseGrid::cglmp(s);
      const auto lam = StateCoefficients::maximally_entangled(d);
      const auto w = jpd_binned(s, grid, lam);
      const auto all = all_bases(s);
      const auto t = w.to_table(s, all, all);
      const auto raw = WrappedDistribution{jpd_binned_raw(s, grid, lam), DistributionKind::counts}.to_table(s, all, all);
      const double ref = raw.block_sum(0, 0);
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y) {
          EXPECT_NEAR(t.block_sum(x, y), 1.0, 1e-9);
          EXPECT_NEAR(raw.block_sum(x, y), ref, 1e-9 * ref);
        }
    }
  }
}

TEST(JpdBinned, depends_only_on_phase_sum) {
  const Scenario s(3, 4);
  const auto w = jpd_binned(s, PhaseGrid::cglmp(s), StateCoefficients::maximally_entangled(3));
  const int n = s.outcomes_per_period();
  const auto raw = jpd_binned_raw(s, PhaseGrid::cglmp(s), StateCoefficients::maximally_entangled(3));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i + 1 < n && j > 0) {
        EXPECT_DOUBLE_EQ(raw(i, j), raw(i + 1, j - 1));
      }
  EXPECT_EQ(w.kind, DistributionKind::probabilities);
}

TEST(JpdBinned, converges_to_point_values_at_fine_resolution) {
  // d = 2, N = 512: bin integrals approach midpoint value times bin area,
  // with the error measured against the peak bin mass.
  const Scenario s(2, 256);
  const auto grid = PhaseGrid::cglmp(s);
  const auto raw = jpd_binned_raw(s, grid, StateCoefficients::maximally_entangled(2));
  const double area = s.bin_width() * s.bin_width();
  const auto lam = oracle::max_entangled(2);
  const double peak = oracle::state_point(lam, 0.0) * area;
  double worst = 0.0;
  for (int i = 0; i < 512; i += 7)
    for (int j = 0; j < 512; j += 5) {
      const double mid = oracle::state_point(lam, grid.alice_center(i) + grid.bob_center(j)) * area;
      worst = std::max(worst, std::abs(raw(i, j) - mid) / peak);
    }
  EXPECT_LT(worst, 1e-3);
}

TEST(JpdBinned, quadrature_order_bounds) {
  const Scenario s(2, 2);
  const auto g = PhaseGrid::cglmp(s);
  const auto lam = StateCoefficients::maximally_entangled(2);
  EXPECT_THROW(jpd_binned(s, g, lam, 7), ValidationError);
  EXPECT_THROW(jpd_binned(s, g, lam, 65), ValidationError);
  const auto a = jpd_binned(s, g, lam, 8), b = jpd_binned(s, g, lam, 32);
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Envelope, examples) {
  EXPECT_EQ(envelope_weight(0.0, 0.0, 1e-13, 1e-12), 1.0);
  EXPECT_EQ(envelope_weight(0.7, -1.3, 2e-13, 1e-12), envelope_weight(-0.7, 1.3, 2e-13, 1e-12));
  EXPECT_NEAR(envelope_weight(2 * kPiD, 0.0, 0.1e-12, 1e-12), std::exp(-2 * 0.01 * 4 * kPiD * kPiD), 1e-15);
  EXPECT_NEAR(envelope_weight(2 * kPiD, 0.0, 0.1e-12, 1e-12), 0.4540, 1e-4);
}

TEST(Envelope, matches_fourier_transform_of_gaussian_time_bin) {
  // |integral exp(-t^2 / (4 s^2)) exp(i w t) dt|^2, normalised, by trapezoid rule.
  const double sigma_t = 0.13e-12, delta_t = 1e-12;
  auto spectrum = [&](double omega) {
    std::complex<double> acc = 0.0;
    const double h = sigma_t / 200;
    for (int k = -4000; k <= 4000; ++k) {
      const double t = k * h;
      acc += std::exp(-t * t / (4 * sigma_t * sigma_t)) * std::exp(std::complex<double>(0.0, omega * t)) * h;
    }
    return std::norm(acc);
  };
  const double s0 = spectrum(0.0);
  for (double phi : {0.5, 1.7, 4.0}) {
    const double numeric = spectrum(phi / delta_t) / s0;
    EXPECT_NEAR(envelope_weight(phi, 0.0, sigma_t, delta_t), numeric, 1e-9);
  }
}

TEST(Synthesize, deterministic_for_seed_and_total_is_poisson) {
  const Scenario s(3, 4);
  const auto grid = PhaseGrid::cglmp(s, periods_for_envelope(s, TimeBins{}));
  const auto lam = StateCoefficients::maximally_entangled(3);
  const NoiseModel noise{1.0, 0.0, 5000.0};
  const auto a = synthesize_jsi(s, grid, lam, noise, TimeBins{}, 42);
  const auto b = synthesize_jsi(s, grid, lam, noise, TimeBins{}, 42);
  const auto c = synthesize_jsi(s, grid, lam, noise, TimeBins{}, 43);
  EXPECT_TRUE(a.counts == b.counts);
  EXPECT_FALSE(a.counts == c.counts);
  EXPECT_NO_THROW(a.validate(true));

  double sum = 0.0;
  const int seeds = 100;
  for (int k = 0; k < seeds; ++k) sum += synthesize_jsi(s, grid, lam, noise, TimeBins{}, 1000 + k).total();
  const double mean = sum / seeds;
  EXPECT_LT(std::abs(mean - 5000.0), 5.0 * std::sqrt(5000.0 / seeds));
}

TEST(Synthesize, grid_too_small_is_rejected) {
  const Scenario s(3, 4);
  const auto lam = StateCoefficients::maximally_entangled(3);
  EXPECT_THROW(synthesize_jsi(s, PhaseGrid::cglmp(s, 1), lam, {1.0, 0.0, 100.0}, TimeBins{}, 1),
               ValidationError);
  EXPECT_THROW(NoiseModel({1.5, 0.0, 1.0}).validate(), ValidationError);
  EXPECT_THROW(NoiseModel({0.5, -1.0, 1.0}).validate(), ValidationError);
}

TEST(Synthesize, wrapped_noiseless_record_matches_binned_distribution) {
  // Envelope-only expected counts: wrap-then-normalise equals the binned ideal.
  for (int d : {2, 3, 6}) {
    const Scenario s(d, d == 6 ? 38 : 4);
    const TimeBins bins;
    const auto grid = PhaseGrid::cglmp(s, periods_for_envelope(s, bins));
    ASSERT_LT(envelope_mass_outside(s, grid, bins), 1e-4);
    const auto lam = StateCoefficients::maximally_entangled(d);
    const auto rec = expected_jsi(s, grid, lam, {1.0, 0.0, 1e6}, bins);
    const long long c = synthetic_centre_bin(s, grid);
    const auto wrapped = wrap(apply_calibration(rec, s, {c, c}));
    const auto got = normalize_wrapped(wrapped, s);
    const auto ideal = jpd_binned(s, grid, lam);
    EXPECT_LT((got.values - ideal.values).cwiseAbs().maxCoeff(), 1e-3) << "d=" << d;
  }
}

TEST(Synthesize, pure_white_noise_wraps_flat) {
  const Scenario s(3, 4);
  const TimeBins bins;
  const auto grid = PhaseGrid::cglmp(s, periods_for_envelope(s, bins));
  const auto rec = synthesize_jsi(s, grid, StateCoefficients::maximally_entangled(3), {0.0, 0.0, 1e6}, bins, 9);
  const long long c = synthetic_centre_bin(s, grid);
  const auto w = wrap(apply_calibration(rec, s, {c, c}));
  const double mean = w.values.mean();
  const double sd = std::sqrt(mean);
  EXPECT_LT((w.values.array() - mean).abs().maxCoeff(), 5.0 * sd);
}

TEST(Synthesize, jitter_broadens_fringes) {
  const Scenario s(4, 4);
  const TimeBins bins;
  const auto grid = PhaseGrid::cglmp(s, periods_for_envelope(s, bins));
  const auto lam = StateCoefficients::maximally_entangled(4);
  const long long c = synthetic_centre_bin(s, grid);
  auto value = [&](double jitter) {
    const auto rec = expected_jsi(s, grid, lam, {1.0, jitter, 1e6}, bins);
    const auto w = normalize_wrapped(wrap(apply_calibration(rec, s, {c, c})), s);
    return cglmp_value(w.to_table(s, cglmp_basis_indices(s).alice, cglmp_basis_indices(s).bob));
  };
  const double sharp = value(0.0);
  const double blurred = value(0.02e-12);
  EXPECT_LT(blurred, sharp);
  EXPECT_NEAR(expected_jsi(s, grid, lam, {1.0, 0.02e-12, 1e6}, bins).total(), 1e6, 1e-6);
}

}  // namespace
}  // namespace tfbell
