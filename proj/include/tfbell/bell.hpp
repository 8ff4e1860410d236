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

#ifndef TFBELL_BELL_HPP
#define TFBELL_BELL_HPP

// The CGLMP functional for two settings per party and d outcomes, its value on
// ideal and binned spectral measurements, and state optimisation for the fixed
// CGLMP measurements.
//
//   I_d = sum_{k=0}^{floor(d/2)-1} (1 - 2k/(d-1)) [ P(a1 = b1 + k) + P(b1 = a2 + k + 1)
//         + P(a2 = b2 + k) + P(b2 = a1 + k) - P(a1 = b1 - k - 1) - P(b1 = a2 - k)
//         - P(a2 = b2 - k - 1) - P(b2 = a1 - k - 1) ]  <=  2   (local models)
//
// Setting position 0/1 of Alice is a1/a2 (alpha = 0, 1/2); position 0/1 of
// Bob is b1/b2 (beta = +1/4, -1/4), matching cglmp_basis_indices().

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "tfbell/core.hpp"
#include "tfbell/error.hpp"
#include "tfbell/simulate.hpp"

namespace tfbell {

inline constexpr double kCglmpLocalBound = 2.0;

enum class TermDirection {
  alice_minus_bob,  ///< P(a_x = b_y + shift)
  bob_minus_alice,  ///< P(b_y = a_x + shift)
};

/// sum_{a,b} P(a,b|x,y) [a = b + shift mod d]  (or b = a + shift).
inline double cglmp_term(const OutcomeTable& p, int x, int y, int shift, TermDirection dir) {
  const int d = p.dimension();
  detail::require(shift > -d - 1 && shift < d + 1,
                  "cglmp_term: shift " + std::to_string(shift) + " outside (-d-1, d+1)");
  detail::require(x >= 0 && x < p.alice_settings() && y >= 0 && y < p.bob_settings(),
                  "cglmp_term: setting out of range");
  double acc = 0.0;
  for (int b = 0; b < d; ++b) {
    if (dir == TermDirection::alice_minus_bob)
      acc += p(floor_mod(b + shift, d), b, x, y);
    else
      acc += p(b, floor_mod(b + shift, d), x, y);
  }
  return acc;
}

/// Weight 1 - 2k/(d-1) formed from the exact ratio (d - 1 - 2k)/(d - 1).
inline double cglmp_weight(int d, int k) {
  return static_cast<double>(d - 1 - 2 * k) / static_cast<double>(d - 1);
}

inline double cglmp_value(const OutcomeTable& p) {
  detail::require(p.alice_settings() == 2 && p.bob_settings() == 2,
                  "cglmp_value needs exactly two settings per party");
  const int d = p.dimension();
  detail::require(d >= 2, "cglmp_value needs d >= 2");
  using enum TermDirection;
  double total = 0.0;
  for (int k = 0; k < d / 2; ++k) {
    const double plus = cglmp_term(p, 0, 0, k, alice_minus_bob) +
                        cglmp_term(p, 1, 0, k + 1, bob_minus_alice) +
                        cglmp_term(p, 1, 1, k, alice_minus_bob) +
                        cglmp_term(p, 0, 1, k, bob_minus_alice);
    const double minus = cglmp_term(p, 0, 0, -k - 1, alice_minus_bob) +
                         cglmp_term(p, 1, 0, -k, bob_minus_alice) +
                         cglmp_term(p, 1, 1, -k - 1, alice_minus_bob) +
                         cglmp_term(p, 0, 1, -k - 1, bob_minus_alice);
    total += cglmp_weight(d, k) * (plus - minus);
  }
  return total;
}

inline double cglmp_value(const ConditionalProbabilities& p) { return cglmp_value(p.table()); }

/// The CGLMP functional as a coefficient table with its local bound 2.
inline BellInequality cglmp_inequality(int d) {
  detail::require(d >= 2, "cglmp_inequality needs d >= 2");
  OutcomeTable s(d, 2, 2);
  auto add = [&](int x, int y, int shift, TermDirection dir, double w) {
    for (int b = 0; b < d; ++b) {
      if (dir == TermDirection::alice_minus_bob)
        s(floor_mod(b + shift, d), b, x, y) += w;
      else
        s(b, floor_mod(b + shift, d), x, y) += w;
    }
  };
  using enum TermDirection;
  for (int k = 0; k < d / 2; ++k) {
    const double w = cglmp_weight(d, k);
    add(0, 0, k, alice_minus_bob, w);
    add(1, 0, k + 1, bob_minus_alice, w);
    add(1, 1, k, alice_minus_bob, w);
    add(0, 1, k, bob_minus_alice, w);
    add(0, 0, -k - 1, alice_minus_bob, -w);
    add(1, 0, -k, bob_minus_alice, -w);
    add(1, 1, -k - 1, alice_minus_bob, -w);
    add(0, 1, -k - 1, bob_minus_alice, -w);
  }
  return {std::move(s), kCglmpLocalBound, "CGLMP d=" + std::to_string(d)};
}

/// Bell value, optionally with a bootstrap standard deviation.
struct BellResult {
  double value = 0.0;
  double sigma = 0.0;
  int dimension = 0;
  std::array<int, 2> alice_bases{};
  std::array<int, 2> bob_bases{};
};

/// Restriction of a full-basis table to the CGLMP settings in inequality order.
inline ConditionalProbabilities cglmp_settings(const ConditionalProbabilities& p, const Scenario& s) {
  const auto idx = cglmp_basis_indices(s);
  return p.select_bases(idx.alice, idx.bob);
}

/// I_d of a Schmidt-diagonal state at the exact CGLMP phases.
inline double theoretical_cglmp(const StateCoefficients& lambda) {
  const Scenario s(lambda.dimension(), 2);
  const auto idx = cglmp_basis_indices(s);
  return cglmp_value(conditional_from_state(lambda, s, idx.alice, idx.bob));
}

inline double theoretical_cglmp(int d) { return theoretical_cglmp(StateCoefficients::maximally_entangled(d)); }

/// I_d of the bin-integrated distribution (finite spectral resolution).
inline double binned_cglmp(const Scenario& s, const StateCoefficients& lambda) {
  const auto wrapped = jpd_binned(s, PhaseGrid::cglmp(s), lambda);
  const auto idx = cglmp_basis_indices(s);
  OutcomeTable t = wrapped.to_table(s, idx.alice, idx.bob);
  return cglmp_value(t);
}

/// d^2 x d^2 CGLMP Bell operator for the fixed CGLMP measurement vectors,
/// in the product basis |j>_A |k>_B (index j * d + k).
inline Eigen::MatrixXd cglmp_bell_operator(int d) {
  const Scenario s(d, 2);
  const auto idx = cglmp_basis_indices(s);
  const auto ineq = cglmp_inequality(d);
  auto vec = [&](Party party, int outcome, int basis) {
    Eigen::VectorXcd v(d);
    const double phi = phase_of_label({outcome, basis}, s, party);
    for (int j = 0; j < d; ++j) v[j] = std::polar(1.0 / std::sqrt(static_cast<double>(d)), -j * phi);
    return v;
  };
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const double c = ineq.coefficients(a, b, x, y);
          if (c == 0.0) continue;
          Eigen::VectorXcd ab(d * d);
          const auto va = vec(Party::alice, a, idx.alice[x]);
          const auto vb = vec(Party::bob, b, idx.bob[y]);
          for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) ab[j * d + k] = va[j] * vb[k];
          op.noalias() += c * ab * ab.adjoint();
        }
  if (op.imag().cwiseAbs().maxCoeff() > 1e-9)
    throw ComputationError("CGLMP Bell operator is not real symmetric");
  Eigen::MatrixXd real = op.real();
  return 0.5 * (real + real.transpose());
}

struct OptimalState {
  StateCoefficients lambda;
  double value;
  int iterations;
};

/// Largest eigenpair of the Bell operator by shifted power iteration.
inline OptimalState optimize_state(int d, double tolerance = 1e-10, int max_iterations = 200000) {
  detail::require(d >= 2 && d <= kMaxDimension, "optimize_state: d must lie in [2, 16]");
  const Eigen::MatrixXd op = cglmp_bell_operator(d);
  const int n = d * d;
  // Gershgorin shift makes the operator positive semidefinite.
  const double shift = op.cwiseAbs().rowwise().sum().maxCoeff();
  const Eigen::MatrixXd shifted = op + shift * Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = (i % (d + 1) == 0 ? 1.0 : 0.0) + 1e-3 * std::sin(1.0 + i);
  v.normalize();
  double eig = v.dot(op * v);
  int it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd next = shifted * v;
    next.normalize();
    const double next_eig = next.dot(op * next);
    const double step = (next - v).norm();
    v = std::move(next);
    const bool done = std::abs(next_eig - eig) < tolerance && step < tolerance;
    eig = next_eig;
    if (done) break;
  }
  if (it == max_iterations) throw ComputationError("optimize_state: power iteration did not converge");
  const double residual = (op * v - eig * v).norm();
  if (residual > 1e-6)
    throw ComputationError("optimize_state: eigenvector residual " + std::to_string(residual));

  std::vector<double> lambda(d);
  double off = 0.0;
  const double sign = v[0] >= 0.0 ? 1.0 : -1.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      const double c = sign * v[j * d + k];
      if (j == k) {
        if (c < -1e-8) throw ComputationError("optimize_state: optimal amplitudes change sign");
        lambda[j] = std::max(c, 0.0);
      } else {
        off += c * c;
      }
    }
  if (off > 1e-12) throw ComputationError("optimize_state: optimal state is not Schmidt-diagonal");
  return {StateCoefficients::normalized(std::move(lambda)), eig, it + 1};
}

struct NoiseTolerance {
  double tolerance = 0.0;  ///< 1 - 2 / I_d
  bool violates = false;   ///< I_d > 2
};

/// White noise scores zero on the CGLMP functional, so v_crit = 2 / I_d.
inline NoiseTolerance noise_tolerance(double bell_value) {
  detail::require(std::isfinite(bell_value), "noise_tolerance: non-finite Bell value");
  if (bell_value <= kCglmpLocalBound) return {0.0, false};
  return {1.0 - kCglmpLocalBound / bell_value, true};
}

struct BinarisedReference {
  int dimension = 0;
  double multi_outcome = 0.0;
  double binarised = 0.0;
  std::string source;
};

/// Display constants for the binarised-measurement comparison. Values other
/// than d = 2 come from published prior work and are not computed here.
inline std::optional<BinarisedReference> binarised_reference(int d) {
  if (d == 2) {
    // CHSH is already a binary-outcome test.
    const double t = noise_tolerance(theoretical_cglmp(2)).tolerance;
    return BinarisedReference{2, t, t, "computed (two outcomes, no binarisation gap)"};
  }
  if (d == 8) return BinarisedReference{8, 0.355, 0.149, "from cited prior work, not computed here"};
  return std::nullopt;
}

}  // namespace tfbell

#endif  // TFBELL_BELL_HPP
