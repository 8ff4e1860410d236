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

#ifndef TFBELL_WRAPFIT_HPP
#define TFBELL_WRAPFIT_HPP

// Data reduction from a measured joint spectral intensity to P(a,b|x,y):
// locate the principal fringes, label detector bins with phases, stack all
// complete 2*pi x 2*pi cells into one, and normalise per setting pair.

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tfbell/core.hpp"
#include "tfbell/error.hpp"

namespace tfbell {

/// Thrown when the principal fringes cannot be located.
class FitError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Three equally spaced Gaussian ridges along the anti-diagonal marginal,
/// modulated by a Gaussian envelope so the outer ridges are not pulled inward.
///
/// Positions are in units of the sum index s = I + J of detector bins.
struct FringeModel {
  int dimension = 0;
  int outcomes_per_period = 0;      ///< N, an exact multiple of d
  double period_bins = 0.0;         ///< equals outcomes_per_period after constraining
  double unconstrained_period = 0.0;
  double offset_bins = 0.0;         ///< sum index of the central fringe maximum
  std::array<double, 3> amplitudes{};  ///< peak heights at offset - P, offset, offset + P
  double width = 0.0;
  double background = 0.0;          ///< floor under the central fringe
  double reduced_chi2 = 0.0;

  int bases() const { return outcomes_per_period / dimension; }
};

namespace detail {

/// Counts summed along anti-diagonals I + J = s.
inline std::vector<double> antidiagonal_marginal(const Eigen::MatrixXd& counts) {
  std::vector<double> m(static_cast<std::size_t>(counts.rows() + counts.cols() - 1), 0.0);
  for (Eigen::Index j = 0; j < counts.cols(); ++j)
    for (Eigen::Index i = 0; i < counts.rows(); ++i) m[i + j] += counts(i, j);
  return m;
}

struct PeriodEstimate {
  double period = 0.0;
  double strength = 0.0;  ///< autocorrelation peak relative to lag 0
};

/// Dominant repetition length of the marginal, from the autocorrelation of its
/// first difference (which suppresses the slowly varying envelope).
inline PeriodEstimate estimate_period(const std::vector<double>& m) {
  const std::size_t n = m.size();
  if (n < 8) return {};
  std::vector<double> diff(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) diff[k] = m[k + 1] - m[k];
  const std::size_t max_lag = diff.size() / 2;
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag)
    for (std::size_t k = 0; k + lag < diff.size(); ++k) r[lag] += diff[k] * diff[k + lag];
  if (r[0] <= 0.0) return {};
  // Poisson noise makes lag 1 negative, so the first trough of interest is
  // the one after the correlation first turns negative beyond lag 1.
  std::size_t first_min = 2;
  while (first_min <= max_lag && r[first_min] >= 0.0) ++first_min;
  if (first_min > max_lag) return {};
  while (first_min + 1 <= max_lag && r[first_min + 1] < r[first_min]) ++first_min;
  std::size_t best = 0;
  for (std::size_t lag = first_min + 1; lag < max_lag; ++lag)
    if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && (best == 0 || r[lag] > r[best])) best = lag;
  if (best == 0) return {};
  const double y0 = r[best - 1], y1 = r[best], y2 = r[best + 1];
  const double den = y0 - 2.0 * y1 + y2;
  const double shift = den != 0.0 ? 0.5 * (y0 - y2) / den : 0.0;
  return {static_cast<double>(best) + std::clamp(shift, -0.5, 0.5), y1 / r[0]};
}

struct RidgeFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>* data = nullptr;
  int lo = 0;
  int hi = 0;
  double fixed_period = 0.0;  ///< > 0 removes the period from the parameters

  int inputs() const { return fixed_period > 0.0 ? 6 : 7; }
  int values() const { return hi - lo; }

  struct Params {
    double offset, period, amplitude, width, background, env_centre, env_width;
  };

  // Three Gaussian ridges on a constant floor, all under a Gaussian envelope.
  static double envelope(double s, const Params& q) {
    const double z = (s - q.env_centre) / q.env_width;
    return std::exp(-0.5 * z * z);
  }

  static double model(double s, const Params& q) {
    double v = q.background;
    for (int k = -1; k <= 1; ++k) {
      const double z = (s - q.offset - k * q.period) / q.width;
      v += q.amplitude * std::exp(-0.5 * z * z);
    }
    return v * envelope(s, q);
  }

  // p = [offset, period?, amplitude, width, background, env_centre, env_width]
  Params unpack(const Eigen::VectorXd& p) const {
    int k = 0;
    Params q{};
    q.offset = p[k++];
    q.period = fixed_period > 0.0 ? fixed_period : p[k++];
    q.amplitude = p[k++];
    q.width = p[k++];
    q.background = p[k++];
    q.env_centre = p[k++];
    q.env_width = p[k++];
    if (std::abs(q.width) < 1e-9) q.width = 1e-9;
    if (std::abs(q.env_width) < 1e-9) q.env_width = 1e-9;
    return q;
  }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const Params q = unpack(p);
    for (int s = lo; s < hi; ++s) {
      const double y = (*data)[s];
      f[s - lo] = (model(s, q) - y) / std::sqrt(std::max(y, 1.0));
    }
    return 0;
  }
};

inline Eigen::VectorXd run_lm(RidgeFunctor& functor, Eigen::VectorXd p) {
  Eigen::NumericalDiff<RidgeFunctor> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RidgeFunctor>, double> lm(numdiff);
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters)
    throw FitError("fringe fit: improper input parameters");
  return p;
}

}  // namespace detail

/// Fits the three principal fringes of a JSI and constrains their spacing to
/// N = M * d bins per period.
inline FringeModel fit_principal_fringes(const JsiRecord& jsi, int d) {
  detail::require(d >= 2 && d <= kMaxDimension, "fit_principal_fringes: invalid dimension");
  jsi.validate(false);
  const auto m = detail::antidiagonal_marginal(jsi.counts);
  const auto est = detail::estimate_period(m);
  std::ostringstream diag;
  diag << "autocorrelation peak " << est.strength << " at lag " << est.period;
  constexpr double kMinStrength = 0.1;
  if (est.period <= 0.0 || est.strength < kMinStrength)
    throw FitError("fringe fit: no periodic fringe structure found (" + diag.str() +
                   "); the input may be flat or dominated by noise");

  const int len = static_cast<int>(m.size());
  int centre = 0;
  for (int s = 1; s < len; ++s)
    if (m[s] > m[centre]) centre = s;
  const double period0 = est.period;
  const int lo = static_cast<int>(std::floor(centre - 1.5 * period0));
  const int hi = static_cast<int>(std::ceil(centre + 1.5 * period0)) + 1;
  if (lo < 0 || hi > len)
    throw FitError("fringe fit: fewer than 3 principal fringes inside the record (" + diag.str() +
                   ", central fringe at sum index " + std::to_string(centre) + ")");

  // Envelope guesses from the first two moments of the marginal.
  double mass = 0.0, mean = 0.0, second = 0.0;
  for (int s = 0; s < len; ++s) {
    mass += m[s];
    mean += s * m[s];
  }
  mean /= mass;
  for (int s = 0; s < len; ++s) second += (s - mean) * (s - mean) * m[s];
  const double env_width0 = std::sqrt(second / mass);

  double floor_value = m[centre];
  for (int s = lo; s < hi; ++s) floor_value = std::min(floor_value, m[s]);

  detail::RidgeFunctor f;
  f.data = &m;
  f.lo = lo;
  f.hi = hi;
  const double env_at_centre = std::exp(-0.5 * std::pow((centre - mean) / env_width0, 2));
  Eigen::VectorXd p(7);
  p << centre, period0, (m[centre] - floor_value) / env_at_centre, std::max(1.0, 0.37 * period0 / d),
      floor_value / env_at_centre, mean, env_width0;
  p = detail::run_lm(f, p);

  FringeModel model;
  model.dimension = d;
  model.unconstrained_period = p[1];
  const long multiple = std::lround(p[1] / d);
  if (multiple < 2)
    throw FitError("fringe fit: period " + std::to_string(p[1]) +
                   " bins is too short for dimension " + std::to_string(d));
  model.outcomes_per_period = static_cast<int>(multiple * d);
  model.period_bins = model.outcomes_per_period;

  // Re-fit the remaining parameters with the spacing held at N.
  f.fixed_period = model.period_bins;
  Eigen::VectorXd q(6);
  q << p[0], p[2], p[3], p[4], p[5], p[6];
  q = detail::run_lm(f, q);
  const auto params = f.unpack(q);
  model.offset_bins = params.offset;
  for (int k = -1; k <= 1; ++k)
    model.amplitudes[k + 1] =
        params.amplitude * detail::RidgeFunctor::envelope(params.offset + k * params.period, params);
  model.width = std::abs(params.width);
  model.background = params.background * detail::RidgeFunctor::envelope(params.offset, params);

  Eigen::VectorXd resid(f.values());
  f(q, resid);
  model.reduced_chi2 = resid.squaredNorm() / std::max(1, f.values() - f.inputs());

  std::ostringstream fitinfo;
  fitinfo << "period " << model.unconstrained_period << ", offset " << model.offset_bins
          << ", amplitudes (" << model.amplitudes[0] << ", " << model.amplitudes[1] << ", "
          << model.amplitudes[2] << "), width " << model.width << ", background "
          << model.background;
  const double noise = std::sqrt(std::max(1.0, model.background + model.amplitudes[1]));
  const bool resolved = model.amplitudes[1] > 5.0 * noise && model.amplitudes[0] > 0.0 &&
                        model.amplitudes[2] > 0.0 && model.width < 0.5 * model.period_bins &&
                        std::abs(model.offset_bins - centre) < 0.5 * model.period_bins;
  if (!resolved) throw FitError("fringe fit: principal fringes not resolved (" + fitinfo.str() + ")");
  return model;
}

/// Detector bins carrying lattice index 0 for each party.
///
/// Alice bin `alice_zero_bin` has phase 0 (a = 0, x = 0); Bob bin
/// `bob_zero_bin` has phase -(2 pi / d)/4 (b = 0, y = 0).
struct Calibration {
  long long alice_zero_bin = 0;
  long long bob_zero_bin = 0;
};

struct CalibratedCounts {
  Scenario scenario;
  Calibration calibration;
  Eigen::MatrixXd counts;
  std::vector<double> phase_a;  ///< bin-centre phase per Alice detector bin
  std::vector<double> phase_b;
};

inline CalibratedCounts apply_calibration(const JsiRecord& jsi, const Scenario& s, Calibration cal) {
  const double w = s.bin_width();
  CalibratedCounts out{s, cal, jsi.counts, {}, {}};
  out.phase_a.resize(jsi.counts.rows());
  out.phase_b.resize(jsi.counts.cols());
  for (Eigen::Index i = 0; i < jsi.counts.rows(); ++i)
    out.phase_a[i] = static_cast<double>(i - cal.alice_zero_bin) * w;
  for (Eigen::Index j = 0; j < jsi.counts.cols(); ++j)
    out.phase_b[j] = -kTwoPi / s.dimension() * 0.25 + static_cast<double>(j - cal.bob_zero_bin) * w;
  return out;
}

/// Calibration placing the fitted fringe maxima at phi_A + phi_B = 0 (mod 2 pi).
///
/// Only the sum of the two origins is fixed by the fringes; the split between
/// parties puts Alice's origin at half the fringe sum index.
inline CalibratedCounts phase_calibrate(const JsiRecord& jsi, const FringeModel& model,
                                        const Scenario& s) {
  detail::require(model.outcomes_per_period == s.outcomes_per_period() &&
                      model.dimension == s.dimension(),
                  "phase_calibrate: fringe model has N = " + std::to_string(model.outcomes_per_period) +
                      " but scenario has N = " + std::to_string(s.outcomes_per_period()));
  const long long total = std::llround(model.offset_bins - s.bases() / 4.0);
  Calibration cal;
  cal.alice_zero_bin = total >= 0 ? total / 2 : -((-total + 1) / 2);
  cal.bob_zero_bin = total - cal.alice_zero_bin;
  return apply_calibration(jsi, s, cal);
}

namespace detail {

inline long long floor_div(long long a, long long b) {
  long long q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

struct CellRange {
  long long first = 0;
  long long last = -1;  ///< inclusive
  long long count() const { return last - first + 1; }
};

/// Cells fully contained in [0, length).
inline CellRange complete_cells(long long zero_bin, long long length, long long n) {
  return {-floor_div(zero_bin, n), floor_div(length - n - zero_bin, n)};
}

}  // namespace detail

/// Sum of the counts lying in complete cells.
inline double included_cell_total(const CalibratedCounts& c) {
  const long long n = c.scenario.outcomes_per_period();
  const auto ra = detail::complete_cells(c.calibration.alice_zero_bin, c.counts.rows(), n);
  const auto rb = detail::complete_cells(c.calibration.bob_zero_bin, c.counts.cols(), n);
  if (ra.count() <= 0 || rb.count() <= 0) return 0.0;
  const long long i0 = c.calibration.alice_zero_bin + ra.first * n;
  const long long j0 = c.calibration.bob_zero_bin + rb.first * n;
  return c.counts.block(i0, j0, ra.count() * n, rb.count() * n).sum();
}

/// Stacks every complete 2*pi x 2*pi cell into one N x N count matrix.
inline WrappedDistribution wrap(const CalibratedCounts& c) {
  const long long n = c.scenario.outcomes_per_period();
  const auto ra = detail::complete_cells(c.calibration.alice_zero_bin, c.counts.rows(), n);
  const auto rb = detail::complete_cells(c.calibration.bob_zero_bin, c.counts.cols(), n);
  if (ra.count() <= 0 || rb.count() <= 0)
    throw ValidationError("wrap: the record contains no complete 2*pi x 2*pi cell");
  WrappedDistribution out{Eigen::MatrixXd::Zero(n, n), DistributionKind::counts};
  // Fixed cell order keeps the floating-point sum reproducible.
  for (long long ca = ra.first; ca <= ra.last; ++ca)
    for (long long cb = rb.first; cb <= rb.last; ++cb)
      out.values += c.counts.block(c.calibration.alice_zero_bin + ca * n,
                                   c.calibration.bob_zero_bin + cb * n, n, n);
  return out;
}

struct NormalizedDistribution {
  ConditionalProbabilities probabilities;  ///< all M bases for both parties
  Eigen::MatrixXd block_totals;            ///< counts per (x, y)
};

/// Divides each (x, y) block of a wrapped count matrix by its own total.
inline NormalizedDistribution normalize(const WrappedDistribution& wrapped, const Scenario& s) {
  detail::require(wrapped.kind == DistributionKind::counts, "normalize expects wrapped counts");
  wrapped.validate(s);
  const int d = s.dimension(), m = s.bases();
  const auto bases = all_bases(s);
  OutcomeTable table = wrapped.to_table(s, bases, bases);
  Eigen::MatrixXd totals(m, m);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      const double t = table.block_sum(x, y);
      if (!(t > 0.0))
        throw ValidationError("normalize: block (x=" + std::to_string(x) + ", y=" +
                              std::to_string(y) +
                              ") has no counts; P(a,b|x,y) is undefined there");
      totals(x, y) = t;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) table(a, b, x, y) /= t;
    }
  return {ConditionalProbabilities(std::move(table), bases, bases), totals};
}

/// Wrapped counts normalised in place, kept in grid layout.
inline WrappedDistribution normalize_wrapped(const WrappedDistribution& wrapped, const Scenario& s) {
  detail::require(wrapped.kind == DistributionKind::counts, "normalize expects wrapped counts");
  wrapped.validate(s);
  WrappedDistribution out{wrapped.values, DistributionKind::probabilities};
  detail::normalize_blocks(out.values, s);
  return out;
}

}  // namespace tfbell

#endif  // TFBELL_WRAPFIT_HPP
