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


#ifndef TFBELL_STATS_HPP
#define TFBELL_STATS_HPP

// Statistical support for Bell tests: settings-weighted per-round scores, the
// McDiarmid tail bound on the local-model probability of the observed score,
// and a Poisson bootstrap of the CGLMP value.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tfbell/bell.hpp"
#include "tfbell/core.hpp"
#include "tfbell/error.hpp"
#include "tfbell/wrapfit.hpp"

namespace tfbell {

/// P(x, y) estimated as the share of all counts falling in block (x, y).
struct SettingsProbability {
  Eigen::MatrixXd p;                     ///< m_A x m_B
  std::vector<std::array<int, 2>> empty;  ///< setting pairs without counts
};

inline SettingsProbability settings_probability(const OutcomeTable& counts) {
  const int ma = counts.alice_settings(), mb = counts.bob_settings();
  for (double c : counts.flat())
    detail::require(std::isfinite(c) && c >= 0.0, "settings_probability: counts must be finite and >= 0");
  SettingsProbability out{Eigen::MatrixXd(ma, mb), {}};
  double total = 0.0;
  for (int x = 0; x < ma; ++x)
    for (int y = 0; y < mb; ++y) {
      out.p(x, y) = counts.block_sum(x, y);
      total += out.p(x, y);
      if (out.p(x, y) == 0.0) out.empty.push_back({x, y});
    }
  detail::require(total > 0.0, "settings_probability: no counts");
  out.p /= total;
  return out;
}

/// Uniform P(x, y) = 1 / (m_A m_B).
inline Eigen::MatrixXd uniform_settings(int alice_settings, int bob_settings) {
  return Eigen::MatrixXd::Constant(alice_settings, bob_settings,
                                   1.0 / (static_cast<double>(alice_settings) * bob_settings));
}

enum class SettingsMode { estimated, uniform };

struct ScoreModel {
  OutcomeTable scores;  ///< s_abxy = s_ab^xy / P(x, y)
  double s_max = 0.0;
  double s_min = 0.0;
  double beta_l = 0.0;  ///< local bound of the inequality
  double n = 0.0;       ///< total rounds
  double c = 0.0;       ///< total score

  double mean() const { return c / n; }
};

inline ScoreModel score_model(const BellInequality& inequality, const Eigen::MatrixXd& p_settings,
                              const OutcomeTable& counts) {
  const OutcomeTable& s = inequality.coefficients;
  detail::require(s.same_shape(counts), "score_model: inequality and counts differ in shape");
  detail::require(p_settings.rows() == s.alice_settings() && p_settings.cols() == s.bob_settings(),
                  "score_model: settings probability has the wrong shape");
  const int d = s.dimension();
  ScoreModel m{OutcomeTable(d, s.alice_settings(), s.bob_settings()), 0.0, 0.0, inequality.local_bound,
               0.0, 0.0};
  m.s_max = -std::numeric_limits<double>::infinity();
  m.s_min = std::numeric_limits<double>::infinity();
  for (int x = 0; x < s.alice_settings(); ++x)
    for (int y = 0; y < s.bob_settings(); ++y) {
      bool nonzero = false;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) nonzero = nonzero || s(a, b, x, y) != 0.0;
      const double pxy = p_settings(x, y);
      if (nonzero && !(pxy > 0.0))
        throw ValidationError("score_model: setting pair (x=" + std::to_string(x) + ", y=" +
                              std::to_string(y) + ") has nonzero coefficients but probability 0");
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const double v = nonzero ? s(a, b, x, y) / pxy : 0.0;
          m.scores(a, b, x, y) = v;
          m.s_max = std::max(m.s_max, v);
          m.s_min = std::min(m.s_min, v);
        }
    }
  // Neumaier summation keeps c exact enough for c / n to match the plug-in value.
  double sum = 0.0, comp = 0.0, total = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double nk = counts.flat()[k];
    detail::require(std::isfinite(nk) && nk >= 0.0, "score_model: counts must be finite and >= 0");
    total += nk;
    const double term = nk * m.scores.flat()[k];
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  detail::require(total > 0.0, "score_model: no counts");
  m.n = total;
  m.c = sum + comp;
  if (m.s_max == m.s_min)
    throw ValidationError("score_model: degenerate score model (all scores equal " +
                          std::to_string(m.s_max) + ")");
  return m;
}

/// Scores with P(x, y) either estimated from `counts` or taken uniform.
inline ScoreModel score_model(const BellInequality& inequality, const OutcomeTable& counts,
                              SettingsMode mode = SettingsMode::estimated) {
  const Eigen::MatrixXd p = mode == SettingsMode::estimated
                                ? settings_probability(counts).p
                                : uniform_settings(counts.alice_settings(), counts.bob_settings());
  return score_model(inequality, p, counts);
}

struct PValue {
  double log10_p = 0.0;
  double p = 1.0;  ///< 0 when below the double range; log10_p stays exact
};

/// McDiarmid bound on the probability that a local model reaches score c in n rounds.
inline PValue mcdiarmid_pvalue(const ScoreModel& m) {
  const double range = m.s_max - m.s_min;
  if (!(range > 0.0)) throw ValidationError("mcdiarmid_pvalue: s_max equals s_min");
  if (!(m.s_min < m.beta_l && m.beta_l < m.s_max))
    throw ValidationError("mcdiarmid_pvalue: local bound must lie strictly inside (s_min, s_max)");
  detail::require(m.n > 0.0, "mcdiarmid_pvalue: n must be positive");
  const double t = std::clamp(m.c / m.n, m.s_min, m.s_max);
  if (t <= m.beta_l) return {0.0, 1.0};
  // Per-round exponent; the first term vanishes in the limit t -> s_max.
  const double upper = m.s_max - t;
  const double first = upper > 0.0 ? upper / range * std::log1p((t - m.beta_l) / upper) : 0.0;
  const double second = (t - m.s_min) / range * std::log1p((m.beta_l - t) / (t - m.s_min));
  const double ln_p = m.n * (first + second);
  const double log10_p = std::min(0.0, ln_p / std::log(10.0));
  return {log10_p, std::exp(std::min(0.0, ln_p))};
}

struct BootstrapOptions {
  int resamples = 50;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0 picks std::thread::hardware_concurrency
};

struct BootstrapResult {
  double sigma = 0.0;
  double mean = 0.0;
  std::vector<double> values;  ///< I_d per resample, in resample order
};

namespace detail {

inline double resampled_cglmp(const WrappedDistribution& wrapped, const Scenario& s,
                              std::uint64_t seed, int r) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r)};
  std::mt19937_64 rng(seq);
  Eigen::MatrixXd m(wrapped.values.rows(), wrapped.values.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double mu = wrapped.values(i, j);
      m(i, j) = mu > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mu)(rng)) : 0.0;
    }
  const auto idx = cglmp_basis_indices(s);
  OutcomeTable t = WrappedDistribution{std::move(m), DistributionKind::counts}.to_table(s, idx.alice, idx.bob);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double total = t.block_sum(x, y);
      if (!(total > 0.0))
        throw ComputationError("poisson_bootstrap: a resampled CGLMP block is empty; too few counts");
      for (int a = 0; a < s.dimension(); ++a)
        for (int b = 0; b < s.dimension(); ++b) t(a, b, x, y) /= total;
    }
  return cglmp_value(t);
}

}  // namespace detail

/// Sample standard deviation of I_d over Poisson resamples of the wrapped counts.
///
/// Each resample r has its own generator seeded from (seed, r), so the result
/// does not depend on the thread count.
inline BootstrapResult poisson_bootstrap(const WrappedDistribution& wrapped, const Scenario& s,
                                         const BootstrapOptions& opt = {}) {
  detail::require(opt.resamples >= 2, "poisson_bootstrap: need at least 2 resamples");
  detail::require(wrapped.kind == DistributionKind::counts, "poisson_bootstrap expects wrapped counts");
  wrapped.validate(s);
  detail::require(wrapped.values.sum() > 0.0, "poisson_bootstrap: all counts are zero");

  BootstrapResult out;
  out.values.assign(static_cast<std::size_t>(opt.resamples), 0.0);
  unsigned workers = opt.threads > 0 ? static_cast<unsigned>(opt.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(opt.resamples));
  std::vector<std::exception_ptr> errors(workers);
  auto job = [&](unsigned w) {
    try {
      for (int r = static_cast<int>(w); r < opt.resamples; r += static_cast<int>(workers))
        out.values[static_cast<std::size_t>(r)] = detail::resampled_cglmp(wrapped, s, opt.seed, r);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(job, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  double mean = 0.0;
  for (double v : out.values) mean += v;
  mean /= opt.resamples;
  double var = 0.0;
  for (double v : out.values) var += (v - mean) * (v - mean);
  out.mean = mean;
  out.sigma = std::sqrt(var / (opt.resamples - 1));
  return out;
}

}  // namespace tfbell

#endif  // TFBELL_STATS_HPP
