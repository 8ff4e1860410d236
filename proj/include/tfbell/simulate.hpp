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

#ifndef TFBELL_SIMULATE_HPP
#define TFBELL_SIMULATE_HPP

// Theoretical distributions of Schmidt-diagonal two-photon time-bin states in
// the Fourier (spectral) domain, and a forward model producing synthetic joint
// spectral intensities.

#include <Eigen/Dense>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "tfbell/core.hpp"
#include "tfbell/error.hpp"

namespace tfbell {

/// Schmidt coefficients lambda_j of sum_j lambda_j |j>|j>.
class StateCoefficients {
 public:
  static constexpr double kNormTolerance = 1e-12;

  explicit StateCoefficients(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    detail::require(lambda_.size() >= 2, "state needs at least two Schmidt coefficients");
    double norm = 0.0;
    for (double l : lambda_) {
      detail::require(std::isfinite(l) && l >= 0.0, "Schmidt coefficients must be finite and >= 0");
      norm += l * l;
    }
    detail::require(std::abs(norm - 1.0) <= kNormTolerance,
                    "Schmidt coefficients are not normalised (sum of squares must be 1)");
  }

  static StateCoefficients maximally_entangled(int d) {
    detail::require(d >= 2, "dimension must be at least 2");
    return StateCoefficients(std::vector<double>(d, 1.0 / std::sqrt(static_cast<double>(d))));
  }

  /// Rescales arbitrary non-negative weights to unit norm.
  static StateCoefficients normalized(std::vector<double> weights) {
    double norm = 0.0;
    for (double w : weights) norm += w * w;
    detail::require(norm > 0.0 && std::isfinite(norm), "cannot normalise a zero state");
    for (double& w : weights) w /= std::sqrt(norm);
    return StateCoefficients(std::move(weights));
  }

  int dimension() const { return static_cast<int>(lambda_.size()); }
  std::span<const double> values() const { return lambda_; }
  double operator[](int j) const { return lambda_[j]; }

 private:
  std::vector<double> lambda_;
};

struct NoiseModel {
  double visibility = 1.0;
  double jitter_sigma = 0.0;  ///< seconds
  double total_coincidences = 0.0;

  void validate() const {
    detail::require(visibility >= 0.0 && visibility <= 1.0, "visibility must lie in [0, 1]");
    detail::require(jitter_sigma >= 0.0 && std::isfinite(jitter_sigma), "jitter_sigma must be >= 0");
    detail::require(total_coincidences >= 0.0 && std::isfinite(total_coincidences),
                    "total_coincidences must be >= 0");
  }
};

/// Time-bin geometry: spacing delta_t and Gaussian intensity width sigma_t.
struct TimeBins {
  double delta_t = 1e-12;
  double sigma_t = 0.1e-12;
  double width_scale = 1.0;  ///< multiplies sigma_t in the envelope

  double ratio() const { return width_scale * sigma_t / delta_t; }
};

/// (1/d^3) sin^2[d(phi_A + phi_B)/2] / sin^2[(phi_A + phi_B)/2].
inline double jpd_continuous(int d, double phi_a, double phi_b) {
  detail::require(d >= 2, "jpd_continuous: d must be at least 2");
  const double half = 0.5 * (phi_a + phi_b);
  const double s = std::sin(half);
  const double dd = d;
  if (std::abs(s) < 1e-6) {
    // sin(d u)/sin(u) near u = k*pi: d^2 (1 - (d^2 - 1) eps^2 / 3)
    const double eps = half - kPi * std::round(half / kPi);
    return (dd * dd * (1.0 - (dd * dd - 1.0) * eps * eps / 3.0)) / (dd * dd * dd);
  }
  const double num = std::sin(dd * half);
  return num * num / (s * s) / (dd * dd * dd);
}

/// (1/d^2) |sum_j lambda_j e^{i j theta}|^2, theta = phi_A + phi_B.
///
/// For lambda_j = 1/sqrt(d) this equals jpd_continuous.
inline double state_density(const StateCoefficients& lambda, double theta) {
  double re = 0.0, im = 0.0;
  const int d = lambda.dimension();
  for (int j = 0; j < d; ++j) {
    re += lambda[j] * std::cos(j * theta);
    im += lambda[j] * std::sin(j * theta);
  }
  return (re * re + im * im) / (static_cast<double>(d) * d);
}

/// P(a, b | x, y) at the CGLMP phase assignment for the listed bases.
inline ConditionalProbabilities conditional_from_state(const StateCoefficients& lambda,
                                                       const Scenario& s,
                                                       std::span<const int> alice_bases,
                                                       std::span<const int> bob_bases) {
  detail::require(lambda.dimension() == s.dimension(),
                  "state dimension does not match scenario dimension");
  const int d = s.dimension();
  OutcomeTable t(d, static_cast<int>(alice_bases.size()), static_cast<int>(bob_bases.size()));
  for (std::size_t x = 0; x < alice_bases.size(); ++x) {
    detail::require(alice_bases[x] >= 0 && alice_bases[x] < s.bases(), "Alice basis out of range");
    for (std::size_t y = 0; y < bob_bases.size(); ++y) {
      detail::require(bob_bases[y] >= 0 && bob_bases[y] < s.bases(), "Bob basis out of range");
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const double theta = phase_of_label({a, alice_bases[x]}, s, Party::alice) +
                               phase_of_label({b, bob_bases[y]}, s, Party::bob);
          t(a, b, static_cast<int>(x), static_cast<int>(y)) = state_density(lambda, theta);
        }
    }
  }
  return {std::move(t), std::vector<int>(alice_bases.begin(), alice_bases.end()),
          std::vector<int>(bob_bases.begin(), bob_bases.end())};
}

namespace detail {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

inline GaussRule gauss_legendre(int order) {
  GaussRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(order);
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime(order, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes.push_back(x);
    rule.weights.push_back(w);
    if (x != 0.0) {
      rule.nodes.push_back(-x);
      rule.weights.push_back(w);
    }
  }
  return rule;
}

/// Integral of a density depending on theta = phi_A + phi_B over the square
/// bin of side `width` centred at (c_a, c_b), which depends only on c_a + c_b.
template <class Density>
double integrate_bin(const Density& f, double centre_sum, double width, const GaussRule& rule) {
  double acc = 0.0;
  const double h = 0.5 * width;
  for (std::size_t p = 0; p < rule.nodes.size(); ++p)
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      acc += rule.weights[p] * rule.weights[q] * f(centre_sum + h * (rule.nodes[p] + rule.nodes[q]));
  return acc * h * h;
}

}  // namespace detail

inline constexpr int kMinQuadratureOrder = 8;
inline constexpr int kMaxQuadratureOrder = 64;

/// Bin integrals of the state density over one period, sum index s = i + j in [0, 2N-1).
inline std::vector<double> binned_diagonal(const Scenario& s, const PhaseGrid& grid,
                                           const StateCoefficients& lambda,
                                           int order = kMinQuadratureOrder) {
  detail::require(order >= kMinQuadratureOrder && order <= kMaxQuadratureOrder,
                  "quadrature order must lie in [8, 64]");
  detail::require(lambda.dimension() == s.dimension(),
                  "state dimension does not match scenario dimension");
  const auto rule = detail::gauss_legendre(order);
  const int n = s.outcomes_per_period();
  std::vector<double> diag(2 * n - 1);
  for (int k = 0; k < 2 * n - 1; ++k) {
    const double centre = grid.alice_origin() + grid.bob_origin() + k * grid.bin_width();
    diag[k] = detail::integrate_bin([&](double th) { return state_density(lambda, th); }, centre,
                                    grid.bin_width(), rule);
  }
  return diag;
}

/// Unnormalised bin integrals over one 2*pi cell (rows Alice, columns Bob).
inline Eigen::MatrixXd jpd_binned_raw(const Scenario& s, const PhaseGrid& grid,
                                      const StateCoefficients& lambda,
                                      int order = kMinQuadratureOrder) {
  const auto diag = binned_diagonal(s, grid, lambda, order);
  const int n = s.outcomes_per_period();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = diag[i + j];
  return out;
}

/// Bin-integrated distribution over one cell, normalised per (x, y) block.
inline WrappedDistribution jpd_binned(const Scenario& s, const PhaseGrid& grid,
                                      const StateCoefficients& lambda,
                                      int order = kMinQuadratureOrder) {
  WrappedDistribution w{jpd_binned_raw(s, grid, lambda, order), DistributionKind::probabilities};
  detail::normalize_blocks(w.values, s);
  return w;
}

/// exp(-2 (sigma_t/delta_t)^2 phi_A^2) * exp(-2 (sigma_t/delta_t)^2 phi_B^2).
///
/// A time bin with amplitude exp(-t^2 / (4 sigma_t^2)) has intensity std
/// sigma_t and spectral intensity exp(-2 sigma_t^2 omega^2), omega = phi / delta_t.
inline double envelope_weight(double phi_a, double phi_b, double sigma_t, double delta_t) {
  detail::require(sigma_t > 0.0 && delta_t > 0.0, "envelope needs sigma_t > 0 and delta_t > 0");
  const double r = sigma_t / delta_t;
  return std::exp(-2.0 * r * r * phi_a * phi_a) * std::exp(-2.0 * r * r * phi_b * phi_b);
}

namespace detail {

/// Mean of exp(-2 r^2 phi^2) over [c - w/2, c + w/2].
inline double envelope_bin_average(double centre, double width, double r) {
  const double k = std::sqrt(2.0) * r;
  const double hi = std::erf(k * (centre + 0.5 * width));
  const double lo = std::erf(k * (centre - 0.5 * width));
  return std::sqrt(kPi) / (2.0 * k) * (hi - lo) / width;
}

/// Fraction of a per-axis envelope lying outside [lo, hi].
inline double envelope_tail(double lo, double hi, double r) {
  const double k = std::sqrt(2.0) * r;
  return 0.5 * (std::erfc(k * hi) + std::erfc(-k * lo));
}

inline std::vector<double> gaussian_kernel(double sigma_bins) {
  const int half = std::max(1, static_cast<int>(std::ceil(5.0 * sigma_bins)));
  std::vector<double> k(2 * half + 1);
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    k[i + half] = std::exp(-0.5 * (i * i) / (sigma_bins * sigma_bins));
    total += k[i + half];
  }
  for (double& v : k) v /= total;
  return k;
}

inline void convolve_rows(Eigen::MatrixXd& m, const std::vector<double>& kernel) {
  const int half = static_cast<int>(kernel.size() / 2);
  Eigen::VectorXd row(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        const Eigen::Index jj = j + t;
        if (jj >= 0 && jj < m.cols()) acc += kernel[t + half] * m(i, jj);
      }
      row(j) = acc;
    }
    m.row(i) = row.transpose();
  }
}

}  // namespace detail

/// Detector-bin layout of a synthetic record: bin I of Alice sits at lattice
/// index I - centre_bin relative to grid.alice_origin(), likewise for Bob.
inline long long synthetic_centre_bin(const Scenario& s, const PhaseGrid& grid) {
  return static_cast<long long>(grid.periods_covered() / 2) * s.outcomes_per_period();
}

/// Envelope mass (of a flat density) falling outside the synthetic grid.
inline double envelope_mass_outside(const Scenario& s, const PhaseGrid& grid, const TimeBins& bins) {
  const long long len = static_cast<long long>(grid.periods_covered()) * s.outcomes_per_period();
  const long long c = synthetic_centre_bin(s, grid);
  const double w = grid.bin_width();
  const double r = bins.ratio();
  const double ta = detail::envelope_tail(grid.alice_center(-c) - 0.5 * w,
                                          grid.alice_center(len - 1 - c) + 0.5 * w, r);
  const double tb = detail::envelope_tail(grid.bob_center(-c) - 0.5 * w,
                                          grid.bob_center(len - 1 - c) + 0.5 * w, r);
  return 1.0 - (1.0 - ta) * (1.0 - tb);
}

/// Smallest number of periods per axis keeping the envelope mass outside below `target`.
inline int periods_for_envelope(const Scenario& s, const TimeBins& bins, double target = 1e-4) {
  for (int p = 1; p <= 4096; ++p)
    if (envelope_mass_outside(s, PhaseGrid::cglmp(s, p), bins) < target) return p;
  throw ValidationError("envelope too wide for any supported grid");
}

inline constexpr double kEnvelopeMassTarget = 1e-4;

/// Noiseless expected-count JSI.
///
/// intensity = [v * density + (1 - v) / d^2] * envelope, blurred by a
/// Gaussian detector kernel of phase width 2 pi * jitter_sigma / delta_t and
/// scaled to the requested expected total. Within a bin the envelope is
/// replaced by its bin average.
inline JsiRecord expected_jsi(const Scenario& s, const PhaseGrid& grid,
                              const StateCoefficients& lambda, const NoiseModel& noise,
                              const TimeBins& bins) {
  noise.validate();
  detail::require(bins.sigma_t > 0.0 && bins.delta_t > 0.0 && bins.width_scale > 0.0,
                  "time bins need sigma_t > 0, delta_t > 0");
  const double outside = envelope_mass_outside(s, grid, bins);
  detail::require(outside < kEnvelopeMassTarget,
                  "grid too small: envelope mass outside the grid is " + std::to_string(outside) +
                      "; increase periods_covered (need " +
                      std::to_string(periods_for_envelope(s, bins)) + ")");

  const int n = s.outcomes_per_period();
  const long long len = static_cast<long long>(grid.periods_covered()) * n;
  const long long c = synthetic_centre_bin(s, grid);
  const double w = grid.bin_width();
  const double r = bins.ratio();
  const double d = s.dimension();

  // The cell pattern depends only on (I + J) mod N.
  const auto diag = binned_diagonal(s, grid, lambda);
  const std::vector<double> cell(diag.begin(), diag.begin() + n);
  const double flat = w * w / (d * d);

  std::vector<double> env_a(len), env_b(len);
  for (long long i = 0; i < len; ++i) {
    env_a[i] = detail::envelope_bin_average(grid.alice_center(i - c), w, r);
    env_b[i] = detail::envelope_bin_average(grid.bob_center(i - c), w, r);
  }

  JsiRecord rec;
  rec.counts.resize(len, len);
  for (long long i = 0; i < len; ++i)
    for (long long j = 0; j < len; ++j) {
      const double signal = cell[static_cast<std::size_t>((i + j) % n)];
      rec.counts(i, j) = env_a[i] * env_b[j] * (noise.visibility * signal + (1.0 - noise.visibility) * flat);
    }

  if (noise.jitter_sigma > 0.0) {
    const double sigma_bins = kTwoPi * noise.jitter_sigma / bins.delta_t / w;
    const auto kernel = detail::gaussian_kernel(sigma_bins);
    detail::convolve_rows(rec.counts, kernel);
    rec.counts.transposeInPlace();
    detail::convolve_rows(rec.counts, kernel);
    rec.counts.transposeInPlace();
  }

  const double total = rec.counts.sum();
  rec.counts *= total > 0.0 ? noise.total_coincidences / total : 0.0;

  rec.axis_a.resize(len);
  rec.axis_b.resize(len);
  for (long long i = 0; i < len; ++i) {
    rec.axis_a[i] = grid.alice_center(i - c) / (kTwoPi * bins.delta_t);
    rec.axis_b[i] = grid.bob_center(i - c) / (kTwoPi * bins.delta_t);
  }
  rec.unit = AxisUnit::hertz;
  rec.meta.delta_t = bins.delta_t;
  rec.meta.sigma_t = bins.sigma_t;
  rec.meta.jitter_sigma = noise.jitter_sigma;
  return rec;
}

/// Poisson-sampled synthetic JSI; identical seeds give identical counts.
inline JsiRecord synthesize_jsi(const Scenario& s, const PhaseGrid& grid,
                                const StateCoefficients& lambda, const NoiseModel& noise,
                                const TimeBins& bins, std::uint64_t seed) {
  JsiRecord rec = expected_jsi(s, grid, lambda, noise, bins);
  std::mt19937_64 rng(seed);
  for (Eigen::Index j = 0; j < rec.counts.cols(); ++j)
    for (Eigen::Index i = 0; i < rec.counts.rows(); ++i) {
      const double mean = rec.counts(i, j);
      if (mean <= 0.0) {
        rec.counts(i, j) = 0.0;
        continue;
      }
      std::poisson_distribution<std::int64_t> draw(mean);
      rec.counts(i, j) = static_cast<double>(draw(rng));
    }
  return rec;
}

}  // namespace tfbell

#endif  // TFBELL_SIMULATE_HPP
