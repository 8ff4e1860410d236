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

#ifndef TFBELL_CORE_HPP
#define TFBELL_CORE_HPP

// Scenario descriptors and the index algebra linking detector phases to
// (outcome, basis) labels of a d-outcome Bell test.
//
// Within one 2*pi period a party resolves N = M * d phase bins. Bin index i
// packs outcome and basis as i = outcome * M + basis, so that
//
//   Alice:  phi_A = (2 pi / d) * (a + x / M)
//   Bob:    phi_B = (2 pi / d) * (mod(-b, d) + y / M - 1/4)
//
// Bob's constant -1/4 is carried by PhaseGrid::bob_origin rather than by the
// shared lattice, which keeps the lattice uniform when M is not a multiple
// of 4.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tfbell/error.hpp"

namespace tfbell {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr int kMaxDimension = 16;
inline constexpr int kMaxBases = 256;

enum class Party { alice, bob };

/// Positive modulus for integers.
constexpr int floor_mod(long long value, int modulus) {
  long long r = value % modulus;
  return static_cast<int>(r < 0 ? r + modulus : r);
}

/// d outcomes per basis, M bases per 2*pi period, N = M * d bins per period.
class Scenario {
 public:
  Scenario(int dimension, int bases) : d_(dimension), m_(bases) {
    detail::require(d_ >= 2 && d_ <= kMaxDimension,
                    "dimension d must lie in [2, " + std::to_string(kMaxDimension) +
                        "], got " + std::to_string(d_));
    detail::require(m_ >= 2 && m_ <= kMaxBases,
                    "bases per period M must lie in [2, " + std::to_string(kMaxBases) +
                        "], got " + std::to_string(m_));
    detail::require(m_ % 2 == 0,
                    "bases per period M must be even so that x = M/2 realises alpha = 1/2 "
                    "and y = M/2 realises beta = +1/4; got M = " +
                        std::to_string(m_));
  }

  int dimension() const { return d_; }
  int bases() const { return m_; }
  int outcomes_per_period() const { return m_ * d_; }
  double bin_width() const { return kTwoPi / outcomes_per_period(); }

  friend bool operator==(const Scenario&, const Scenario&) = default;

 private:
  int d_;
  int m_;
};

struct OutcomeLabel {
  int outcome = 0;
  int basis = 0;
  friend bool operator==(const OutcomeLabel&, const OutcomeLabel&) = default;
};

/// Label of bin i (0 <= i < N) within one period.
inline OutcomeLabel labels_from_grid_index(int index, const Scenario& s, Party party) {
  detail::require(index >= 0 && index < s.outcomes_per_period(),
                  "grid index " + std::to_string(index) + " outside [0, " +
                      std::to_string(s.outcomes_per_period()) + ")");
  const int block = index / s.bases();
  const int basis = index % s.bases();
  if (party == Party::alice) return {block, basis};
  return {floor_mod(-block, s.dimension()), basis};
}

inline int grid_index_from_labels(OutcomeLabel label, const Scenario& s, Party party) {
  detail::require(label.outcome >= 0 && label.outcome < s.dimension(),
                  "outcome " + std::to_string(label.outcome) + " outside [0, d)");
  detail::require(label.basis >= 0 && label.basis < s.bases(),
                  "basis " + std::to_string(label.basis) + " outside [0, M)");
  const int block =
      party == Party::alice ? label.outcome : floor_mod(-label.outcome, s.dimension());
  return block * s.bases() + label.basis;
}

/// Phase assigned to a labelled outcome by the CGLMP mapping.
inline double phase_of_label(OutcomeLabel label, const Scenario& s, Party party) {
  const double d = s.dimension();
  const double frac = static_cast<double>(label.basis) / s.bases();
  if (party == Party::alice) return kTwoPi / d * (label.outcome + frac);
  return kTwoPi / d * (floor_mod(-label.outcome, s.dimension()) + frac - 0.25);
}

/// Phase phi = 2*pi * delta_nu * delta_t, with delta_nu an ordinary frequency in Hz.
inline double phase_from_frequency(double delta_nu_hz, double delta_t_s) {
  detail::require(std::isfinite(delta_nu_hz) && std::isfinite(delta_t_s),
                  "phase_from_frequency: non-finite input");
  detail::require(delta_t_s > 0.0, "phase_from_frequency: time-bin spacing must be positive");
  return kTwoPi * delta_nu_hz * delta_t_s;
}

/// Uniform lattice of bin centres on both axes.
///
/// `alice_origin` is the centre of Alice's bin (a=0, x=0); `bob_origin` the
/// centre of Bob's bin with mod(-b,d)=0, y=0. The two differ by the quarter
/// step -(2*pi/d)/4 up to whole bins.
class PhaseGrid {
 public:
  PhaseGrid(const Scenario& s, double alice_origin, double bob_origin, int periods_covered)
      : bin_width_(s.bin_width()),
        alice_origin_(alice_origin),
        bob_origin_(bob_origin),
        periods_(periods_covered) {
    detail::require(periods_ >= 1, "periods_covered must be at least 1");
    detail::require(std::isfinite(alice_origin) && std::isfinite(bob_origin),
                    "phase grid origins must be finite");
    const double offset = (bob_origin - alice_origin + kTwoPi / s.dimension() * 0.25) / bin_width_;
    detail::require(std::abs(offset - std::round(offset)) < 1e-9,
                    "bob_origin - alice_origin must equal -(2 pi / d) / 4 modulo the bin width");
  }

  /// Grid with Alice's origin at zero phase and Bob's at -(2 pi / d) / 4.
  static PhaseGrid cglmp(const Scenario& s, int periods_covered = 1) {
    return {s, 0.0, -kTwoPi / s.dimension() * 0.25, periods_covered};
  }

  double bin_width() const { return bin_width_; }
  double alice_origin() const { return alice_origin_; }
  double bob_origin() const { return bob_origin_; }
  int periods_covered() const { return periods_; }

  double alice_center(long long i) const { return alice_origin_ + static_cast<double>(i) * bin_width_; }
  double bob_center(long long j) const { return bob_origin_ + static_cast<double>(j) * bin_width_; }

 private:
  double bin_width_;
  double alice_origin_;
  double bob_origin_;
  int periods_;
};

/// Setting indices x, y of the two CGLMP bases for each party.
///
/// Ordered as the inequality expects them: alice = {alpha = 0, alpha = 1/2},
/// bob = {beta = +1/4, beta = -1/4}.
struct CglmpBases {
  std::array<int, 2> alice;
  std::array<int, 2> bob;
};

inline CglmpBases cglmp_basis_indices(const Scenario& s) {
  detail::require(s.bases() % 2 == 0, "CGLMP bases need an even number of bases per period");
  const int half = s.bases() / 2;
  return {{0, half}, {half, 0}};
}

/// Dense 4-index table over (a, b, x, y), a,b < d, x < alice settings, y < bob settings.
class OutcomeTable {
 public:
  OutcomeTable() = default;
  OutcomeTable(int dimension, int alice_settings, int bob_settings, double fill = 0.0)
      : d_(dimension), ma_(alice_settings), mb_(bob_settings) {
    detail::require(d_ >= 1 && ma_ >= 1 && mb_ >= 1, "OutcomeTable: empty shape");
    values_.assign(static_cast<std::size_t>(d_) * d_ * ma_ * mb_, fill);
  }

  int dimension() const { return d_; }
  int alice_settings() const { return ma_; }
  int bob_settings() const { return mb_; }
  std::size_t size() const { return values_.size(); }

  std::size_t offset(int a, int b, int x, int y) const {
    return ((static_cast<std::size_t>(x) * mb_ + y) * d_ + a) * d_ + b;
  }
  double& operator()(int a, int b, int x, int y) { return values_[offset(a, b, x, y)]; }
  double operator()(int a, int b, int x, int y) const { return values_[offset(a, b, x, y)]; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  double block_sum(int x, int y) const {
    double s = 0.0;
    for (int a = 0; a < d_; ++a)
      for (int b = 0; b < d_; ++b) s += (*this)(a, b, x, y);
    return s;
  }

  bool same_shape(const OutcomeTable& o) const {
    return d_ == o.d_ && ma_ == o.ma_ && mb_ == o.mb_;
  }

  double dot(const OutcomeTable& o) const {
    detail::require(same_shape(o), "OutcomeTable::dot: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) s += values_[k] * o.values_[k];
    return s;
  }

 private:
  int d_ = 0;
  int ma_ = 0;
  int mb_ = 0;
  std::vector<double> values_;
};

/// P(a, b | x, y) for a retained subset of bases.
///
/// `alice_bases[x]` / `bob_bases[y]` record which of the M phase bases each
/// setting position refers to (informational; the table is indexed by position).
class ConditionalProbabilities {
 public:
  static constexpr double kNormTolerance = 1e-9;

  ConditionalProbabilities(OutcomeTable table, std::vector<int> alice_bases,
                           std::vector<int> bob_bases)
      : table_(std::move(table)),
        alice_bases_(std::move(alice_bases)),
        bob_bases_(std::move(bob_bases)) {
    detail::require(static_cast<int>(alice_bases_.size()) == table_.alice_settings() &&
                        static_cast<int>(bob_bases_.size()) == table_.bob_settings(),
                    "ConditionalProbabilities: basis labels do not match table shape");
    for (double p : table_.flat())
      detail::require(std::isfinite(p) && p >= -kNormTolerance && p <= 1.0 + kNormTolerance,
                      "ConditionalProbabilities: entry outside [0, 1]");
    for (int x = 0; x < table_.alice_settings(); ++x)
      for (int y = 0; y < table_.bob_settings(); ++y)
        detail::require(std::abs(table_.block_sum(x, y) - 1.0) <= kNormTolerance,
                        "ConditionalProbabilities: block (x=" + std::to_string(x) +
                            ", y=" + std::to_string(y) + ") does not sum to 1");
  }

  /// Labels default to positions 0..m-1.
  explicit ConditionalProbabilities(OutcomeTable table)
      : ConditionalProbabilities(table, iota(table.alice_settings()), iota(table.bob_settings())) {}

  const OutcomeTable& table() const { return table_; }
  double operator()(int a, int b, int x, int y) const { return table_(a, b, x, y); }
  int dimension() const { return table_.dimension(); }
  int alice_settings() const { return table_.alice_settings(); }
  int bob_settings() const { return table_.bob_settings(); }
  const std::vector<int>& alice_bases() const { return alice_bases_; }
  const std::vector<int>& bob_bases() const { return bob_bases_; }

  /// Sub-table keeping the listed setting positions, in the given order.
  ConditionalProbabilities restrict(std::span<const int> xs, std::span<const int> ys) const {
    OutcomeTable t(dimension(), static_cast<int>(xs.size()), static_cast<int>(ys.size()));
    std::vector<int> la, lb;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      detail::require(xs[i] >= 0 && xs[i] < alice_settings(), "restrict: Alice setting out of range");
      la.push_back(alice_bases_[xs[i]]);
    }
    for (std::size_t j = 0; j < ys.size(); ++j) {
      detail::require(ys[j] >= 0 && ys[j] < bob_settings(), "restrict: Bob setting out of range");
      lb.push_back(bob_bases_[ys[j]]);
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j)
        for (int a = 0; a < dimension(); ++a)
          for (int b = 0; b < dimension(); ++b)
            t(a, b, static_cast<int>(i), static_cast<int>(j)) = table_(a, b, xs[i], ys[j]);
    return {std::move(t), std::move(la), std::move(lb)};
  }

  /// Restriction to the positions whose basis labels are listed.
  ConditionalProbabilities select_bases(std::span<const int> alice, std::span<const int> bob) const {
    auto position = [](const std::vector<int>& labels, int basis) {
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == basis) return static_cast<int>(i);
      throw ValidationError("basis " + std::to_string(basis) + " not present in table");
    };
    std::vector<int> xs, ys;
    for (int x : alice) xs.push_back(position(alice_bases_, x));
    for (int y : bob) ys.push_back(position(bob_bases_, y));
    return restrict(xs, ys);
  }

 private:
  static std::vector<int> iota(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
  }

  OutcomeTable table_;
  std::vector<int> alice_bases_;
  std::vector<int> bob_bases_;
};

/// sum_{abxy} s(a,b,x,y) P(a,b|x,y) <= local_bound.
struct BellInequality {
  OutcomeTable coefficients;
  double local_bound = 0.0;
  std::string label;

  double value(const OutcomeTable& p) const { return coefficients.dot(p); }
  double value(const ConditionalProbabilities& p) const { return value(p.table()); }
};

enum class AxisUnit { hertz, picoseconds };

struct InstrumentMeta {
  double delta_t = 0.0;  ///< time-bin spacing [s]
  double sigma_t = 0.0;  ///< time-bin intensity std [s]
  double dispersion_ps_per_nm = 0.0;
  double lambda_ref_nm = 0.0;
  double t_ref_ps = 0.0;
  double jitter_sigma = 0.0;  ///< detector impulse-response std [s]
};

/// Coincidence histogram C(axis_a[i], axis_b[j]); rows are Alice, columns Bob.
struct JsiRecord {
  Eigen::MatrixXd counts;
  std::vector<double> axis_a;
  std::vector<double> axis_b;
  AxisUnit unit = AxisUnit::hertz;
  InstrumentMeta meta;

  /// Checks shape, monotone axes, finite non-negative counts; optionally integrality.
  void validate(bool require_integral = true) const {
    detail::require(counts.rows() > 0 && counts.cols() > 0, "JSI: empty count matrix");
    detail::require(static_cast<Eigen::Index>(axis_a.size()) == counts.rows() &&
                        static_cast<Eigen::Index>(axis_b.size()) == counts.cols(),
                    "JSI: axis lengths do not match the count matrix shape");
    check_monotone(axis_a, "axis_a");
    check_monotone(axis_b, "axis_b");
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
      for (Eigen::Index j = 0; j < counts.cols(); ++j) {
        const double c = counts(i, j);
        detail::require(std::isfinite(c) && c >= 0.0,
                        "JSI: invalid count at row " + std::to_string(i) + ", column " +
                            std::to_string(j));
        if (require_integral)
          detail::require(c == std::floor(c), "JSI: non-integral count at row " +
                                                  std::to_string(i) + ", column " +
                                                  std::to_string(j));
      }
  }

  double total() const { return counts.sum(); }

 private:
  static void check_monotone(const std::vector<double>& axis, const char* name) {
    if (axis.size() < 2) return;
    const bool up = axis[1] > axis[0];
    for (std::size_t k = 1; k < axis.size(); ++k) {
      const bool ok = up ? axis[k] > axis[k - 1] : axis[k] < axis[k - 1];
      detail::require(ok && std::isfinite(axis[k]),
                      std::string("JSI: ") + name + " is not strictly monotone");
    }
  }
};

enum class DistributionKind { counts, probabilities };

/// N x N values over one 2*pi x 2*pi cell, rows Alice bins, columns Bob bins.
struct WrappedDistribution {
  Eigen::MatrixXd values;
  DistributionKind kind = DistributionKind::counts;

  void validate(const Scenario& s) const {
    const int n = s.outcomes_per_period();
    detail::require(values.rows() == n && values.cols() == n,
                    "wrapped distribution must be N x N with N = " + std::to_string(n));
    detail::require(values.allFinite() && values.minCoeff() >= 0.0,
                    "wrapped distribution entries must be finite and non-negative");
  }

  /// Value at labelled outcome (a, x) for Alice and (b, y) for Bob.
  double at(const Scenario& s, int a, int b, int x, int y) const {
    return values(grid_index_from_labels({a, x}, s, Party::alice),
                  grid_index_from_labels({b, y}, s, Party::bob));
  }

  /// Tensor N(a, b, x, y) over the listed bases.
  OutcomeTable to_table(const Scenario& s, std::span<const int> xs, std::span<const int> ys) const {
    validate(s);
    OutcomeTable t(s.dimension(), static_cast<int>(xs.size()), static_cast<int>(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j)
        for (int a = 0; a < s.dimension(); ++a)
          for (int b = 0; b < s.dimension(); ++b)
            t(a, b, static_cast<int>(i), static_cast<int>(j)) = at(s, a, b, xs[i], ys[j]);
    return t;
  }
};

namespace detail {

/// Divides each (x, y) block of an N x N grid-layout matrix by its total.
inline void normalize_blocks(Eigen::MatrixXd& values, const Scenario& s) {
  const int m = s.bases(), d = s.dimension();
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      double total = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) total += values(a * m + x, b * m + y);
      detail::require(total > 0.0, "cannot normalise an empty (x, y) block");
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) values(a * m + x, b * m + y) /= total;
    }
}

}  // namespace detail

inline std::vector<int> all_bases(const Scenario& s) {
  std::vector<int> v(s.bases());
  for (int i = 0; i < s.bases(); ++i) v[i] = i;
  return v;
}

}  // namespace tfbell

#endif  // TFBELL_CORE_HPP
