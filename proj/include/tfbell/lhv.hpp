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

#ifndef TFBELL_LHV_HPP
#define TFBELL_LHV_HPP

// Local-hidden-variable analysis of a behaviour P(a,b|x,y):
//   * exact critical visibility by linear programming over the deterministic
//     vertices of the local polytope,
//   * bracketing bounds from a pairwise Frank-Wolfe distance minimisation,
//   * Bell inequality extraction from a separating direction,
//   * Euclidean projection onto the no-signalling subspace.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tfbell/core.hpp"
#include "tfbell/error.hpp"
#include "tfbell/simplex.hpp"

namespace tfbell {

/// Local bound that extracted inequalities are scaled to.
inline constexpr double kCanonicalLocalBound = 2.0;

/// Upper limit on d^(m_A + m_B) for exhaustive vertex enumeration.
inline constexpr double kVertexCap = 1e7;

/// alice[x] = a, bob[y] = b.
struct DeterministicStrategy {
  std::vector<int> alice;
  std::vector<int> bob;
  friend bool operator==(const DeterministicStrategy&, const DeterministicStrategy&) = default;
};

inline double vertex_count(int d, int alice_settings, int bob_settings) {
  return std::pow(static_cast<double>(d), alice_settings + bob_settings);
}

/// Every deterministic strategy exactly once, generated on the fly.
class VertexRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = DeterministicStrategy;
    using difference_type = std::ptrdiff_t;
    using pointer = const DeterministicStrategy*;
    using reference = const DeterministicStrategy&;

    iterator() = default;
    iterator(int d, int ma, int mb, bool end) : d_(d), done_(end) {
      current_.alice.assign(ma, 0);
      current_.bob.assign(mb, 0);
    }
    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++() {
      for (auto* table : {&current_.bob, &current_.alice})
        for (int& v : *table) {
          if (++v < d_) return *this;
          v = 0;
        }
      done_ = true;
      return *this;
    }
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_; }

   private:
    int d_ = 0;
    bool done_ = true;
    DeterministicStrategy current_;
  };

  VertexRange(int d, int ma, int mb) : d_(d), ma_(ma), mb_(mb) {}
  iterator begin() const { return {d_, ma_, mb_, false}; }
  iterator end() const { return {d_, ma_, mb_, true}; }

 private:
  int d_, ma_, mb_;
};

inline VertexRange enumerate_vertices(int d, int alice_settings, int bob_settings) {
  detail::require(d >= 2 && alice_settings >= 1 && bob_settings >= 1,
                  "enumerate_vertices: invalid scenario");
  if (vertex_count(d, alice_settings, bob_settings) > kVertexCap)
    throw ValidationError("enumerate_vertices: " + std::to_string(d) + "^(" +
                          std::to_string(alice_settings + bob_settings) +
                          ") vertices exceed the enumeration cap of 1e7; use fw_visibility, "
                          "whose heuristic linear minimisation oracle has no cap");
  return {d, alice_settings, bob_settings};
}

inline VertexRange enumerate_vertices(int d, int settings_per_party) {
  return enumerate_vertices(d, settings_per_party, settings_per_party);
}

/// The deterministic behaviour [a = alice[x]] [b = bob[y]].
inline OutcomeTable behavior(const DeterministicStrategy& s, int d) {
  OutcomeTable t(d, static_cast<int>(s.alice.size()), static_cast<int>(s.bob.size()));
  for (int x = 0; x < t.alice_settings(); ++x)
    for (int y = 0; y < t.bob_settings(); ++y) t(s.alice[x], s.bob[y], x, y) = 1.0;
  return t;
}

/// <f, V_s> without materialising the vertex.
inline double strategy_value(const OutcomeTable& f, const DeterministicStrategy& s) {
  double v = 0.0;
  for (int x = 0; x < f.alice_settings(); ++x)
    for (int y = 0; y < f.bob_settings(); ++y) v += f(s.alice[x], s.bob[y], x, y);
  return v;
}

/// max over all vertices of <f, V>, by exhaustive enumeration.
inline double local_bound_by_enumeration(const OutcomeTable& f) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : enumerate_vertices(f.dimension(), f.alice_settings(), f.bob_settings()))
    best = std::max(best, strategy_value(f, s));
  return best;
}

namespace detail {

/// Bob's best (minimising) reply to a fixed Alice table.
inline double bob_best_reply(const OutcomeTable& g, const std::vector<int>& alice, std::vector<int>& bob) {
  const int d = g.dimension();
  double total = 0.0;
  for (int y = 0; y < g.bob_settings(); ++y) {
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < d; ++b) {
      double v = 0.0;
      for (int x = 0; x < g.alice_settings(); ++x) v += g(alice[x], b, x, y);
      if (v < best) {
        best = v;
        bob[y] = b;
      }
    }
    total += best;
  }
  return total;
}

inline double alice_best_reply(const OutcomeTable& g, const std::vector<int>& bob, std::vector<int>& alice) {
  const int d = g.dimension();
  double total = 0.0;
  for (int x = 0; x < g.alice_settings(); ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < d; ++a) {
      double v = 0.0;
      for (int y = 0; y < g.bob_settings(); ++y) v += g(a, bob[y], x, y);
      if (v < best) {
        best = v;
        alice[x] = a;
      }
    }
    total += best;
  }
  return total;
}

}  // namespace detail

/// Linear minimisation over the local polytope: argmin_V <g, V>.
///
/// Exact (Alice enumeration plus Bob best reply) under the vertex cap;
/// otherwise alternating best replies from random starts, flagged heuristic.
class LinearOracle {
 public:
  LinearOracle(int d, int ma, int mb, int restarts = 32, std::uint64_t seed = 7)
      : d_(d), ma_(ma), mb_(mb), restarts_(restarts), rng_(seed),
        exact_(vertex_count(d, ma, mb) <= kVertexCap) {}

  bool exact() const { return exact_; }

  DeterministicStrategy minimize(const OutcomeTable& g, double& value) {
    DeterministicStrategy best{std::vector<int>(ma_), std::vector<int>(mb_)};
    value = std::numeric_limits<double>::infinity();
    std::vector<int> alice(ma_, 0), bob(mb_, 0);
    if (exact_) {
      while (true) {
        const double v = detail::bob_best_reply(g, alice, bob);
        if (v < value) {
          value = v;
          best.alice = alice;
          best.bob = bob;
        }
        int x = 0;
        for (; x < ma_; ++x) {
          if (++alice[x] < d_) break;
          alice[x] = 0;
        }
        if (x == ma_) break;
      }
      return best;
    }
    std::uniform_int_distribution<int> pick(0, d_ - 1);
    for (int r = 0; r < restarts_; ++r) {
      for (int& a : alice) a = pick(rng_);
      double v = detail::bob_best_reply(g, alice, bob);
      for (int round = 0; round < 1000; ++round) {
        const double va = detail::alice_best_reply(g, bob, alice);
        const double vb = detail::bob_best_reply(g, alice, bob);
        if (vb >= v - 1e-15 && va >= v - 1e-15) {
          v = std::min(v, vb);
          break;
        }
        v = vb;
      }
      if (v < value) {
        value = v;
        best.alice = alice;
        best.bob = bob;
      }
    }
    return best;
  }

 private:
  int d_, ma_, mb_, restarts_;
  std::mt19937_64 rng_;
  bool exact_;
};

enum class LhvMethod { lp_exact, fw_bounds };

struct LhvResult {
  double v_crit = 0.0;
  double v_lower = 0.0;
  double v_upper = 0.0;
  LhvMethod method = LhvMethod::lp_exact;
  bool heuristic_oracle = false;
  std::optional<OutcomeTable> closest_local;
  std::optional<BellInequality> certificate;
  double gap = 0.0;  ///< final Frank-Wolfe duality gap (FW only)
  long long iterations = 0;
};

/// Normalises a separating direction into a Bell inequality for `target`.
///
/// The coefficients are shifted per setting pair so that white noise scores 0,
/// then scaled so the local bound is 2; the bound stored is the exact maximum
/// over all deterministic strategies of the final coefficients.
inline BellInequality extract_inequality(const OutcomeTable& direction, const OutcomeTable& target,
                                         std::string label = "extracted") {
  detail::require(direction.same_shape(target), "extract_inequality: shape mismatch");
  const int d = direction.dimension();
  OutcomeTable s = direction;
  for (int x = 0; x < s.alice_settings(); ++x)
    for (int y = 0; y < s.bob_settings(); ++y) {
      const double mean = s.block_sum(x, y) / (d * d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) s(a, b, x, y) -= mean;
    }
  const double raw_bound = local_bound_by_enumeration(s);
  if (raw_bound > 1e-12)
    for (double& c : s.flat()) c *= kCanonicalLocalBound / raw_bound;
  const double bound = local_bound_by_enumeration(s);
  const double value = s.dot(target);
  if (!(value > bound + 1e-12 * std::max(1.0, std::abs(bound))))
    throw ValidationError("extract_inequality: target does not violate the separating "
                          "hyperplane (value " + std::to_string(value) + ", local bound " +
                          std::to_string(bound) + "); it may be local");
  return {std::move(s), bound, std::move(label)};
}

namespace detail {

inline void check_pair(const ConditionalProbabilities& target, const ConditionalProbabilities& noise) {
  require(target.table().same_shape(noise.table()),
          "target and noise distributions must have the same shape");
}

}  // namespace detail

/// Maximum visibility v with v P_target + (1 - v) P_noise local, by LP over
/// the enumerated vertices; v_crit is capped at 1.
inline LhvResult lp_visibility(const ConditionalProbabilities& target,
                               const ConditionalProbabilities& noise,
                               const lp::Options& options = {}) {
  detail::check_pair(target, noise);
  const OutcomeTable& pt = target.table();
  const OutcomeTable& pn = noise.table();
  const int d = pt.dimension(), ma = pt.alice_settings(), mb = pt.bob_settings();
  std::vector<DeterministicStrategy> vertices;
  for (const auto& s : enumerate_vertices(d, ma, mb)) vertices.push_back(s);
  const int rows = static_cast<int>(pt.size()) + 1;
  const long long cols = static_cast<long long>(vertices.size()) + 1;
  if (static_cast<double>(rows) * static_cast<double>(cols) > 5e7)
    throw ValidationError("lp_visibility: dense LP with " + std::to_string(rows) + " x " +
                          std::to_string(cols) + " entries is beyond desk scale; use fw_visibility");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b(rows);
  double separation = 0.0;
  for (std::size_t k = 0; k < pt.size(); ++k) {
    a(static_cast<Eigen::Index>(k), 0) = pt.flat()[k] - pn.flat()[k];
    b[static_cast<Eigen::Index>(k)] = -pn.flat()[k];
    separation += std::abs(pt.flat()[k] - pn.flat()[k]);
  }
  detail::require(separation > 1e-12, "lp_visibility: target equals noise distribution");
  for (std::size_t l = 0; l < vertices.size(); ++l) {
    const auto& s = vertices[l];
    for (int x = 0; x < ma; ++x)
      for (int y = 0; y < mb; ++y)
        a(static_cast<Eigen::Index>(pt.offset(s.alice[x], s.bob[y], x, y)),
          static_cast<Eigen::Index>(l + 1)) = -1.0;
    a(rows - 1, static_cast<Eigen::Index>(l + 1)) = 1.0;
  }
  b[rows - 1] = 1.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
  c[0] = 1.0;

  const auto res = lp::maximize(a, b, c, options);
  switch (res.status) {
    case lp::Status::optimal: break;
    case lp::Status::infeasible:
      throw ValidationError("lp_visibility: infeasible; the noise distribution is not local or "
                            "the inputs are malformed");
    case lp::Status::unbounded: throw ComputationError("lp_visibility: LP unbounded");
    case lp::Status::iteration_limit: throw ComputationError("lp_visibility: iteration limit reached");
  }

  LhvResult out;
  out.method = LhvMethod::lp_exact;
  out.iterations = res.iterations;
  out.v_crit = std::min(1.0, res.objective);
  out.v_lower = out.v_upper = out.v_crit;
  OutcomeTable mix(d, ma, mb);
  for (std::size_t k = 0; k < mix.size(); ++k)
    mix.flat()[k] = out.v_crit * pt.flat()[k] + (1.0 - out.v_crit) * pn.flat()[k];
  out.closest_local = std::move(mix);

  if (res.objective < 1.0 - 1e-9) {
    OutcomeTable dir(d, ma, mb);
    for (std::size_t k = 0; k < dir.size(); ++k) dir.flat()[k] = res.dual[static_cast<Eigen::Index>(k)];
    out.certificate = extract_inequality(dir, pt, "extracted (LP dual)");
  }
  return out;
}

struct FwOptions {
  double tolerance = 1e-4;          ///< bisection width in v
  double distance_tolerance = 1e-7;  ///< Euclidean distance treated as local
  long long max_iterations = 400000;  ///< per visibility decision
  int restarts = 32;                 ///< heuristic oracle restarts above the vertex cap
  std::uint64_t seed = 7;
};

namespace detail {

/// Pairwise Frank-Wolfe over the local polytope for min 1/2 ||q - p||^2.
class FrankWolfe {
 public:
  enum class Verdict { local, nonlocal, undecided };

  FrankWolfe(int d, int ma, int mb, const FwOptions& opt)
      : d_(d), ma_(ma), mb_(mb), opt_(opt), oracle_(d, ma, mb, opt.restarts, opt.seed), q_(d, ma, mb) {}

  bool exact_oracle() const { return oracle_.exact(); }
  double gap() const { return gap_; }
  long long iterations() const { return iterations_; }
  const OutcomeTable& separating_direction() const { return direction_; }

  Verdict decide(const OutcomeTable& p) {
    if (active_.empty()) {
      OutcomeTable g(d_, ma_, mb_);
      for (std::size_t k = 0; k < g.size(); ++k) g.flat()[k] = -p.flat()[k];
      double v;
      add_vertex(oracle_.minimize(g, v), 1.0);
      rebuild();
    }
    OutcomeTable g(d_, ma_, mb_);
    OutcomeTable dir(d_, ma_, mb_);
    for (long long it = 0; it < opt_.max_iterations; ++it, ++iterations_) {
      double dist2 = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.flat()[k] = q_.flat()[k] - p.flat()[k];
        dist2 += g.flat()[k] * g.flat()[k];
      }
      if (dist2 <= opt_.distance_tolerance * opt_.distance_tolerance) {
        gap_ = 0.0;
        return Verdict::local;
      }
      double fw_value;
      const auto s = oracle_.minimize(g, fw_value);
      const double gp = g.dot(p);
      const double gq = g.dot(q_);
      gap_ = gq - fw_value;
      if (gp < fw_value - 1e-13 * std::max(1.0, std::abs(fw_value))) {
        direction_ = g;
        return Verdict::nonlocal;
      }
      // Away vertex: the active vertex with largest <g, V>.
      std::size_t away = 0;
      double away_value = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < active_.size(); ++i) {
        const double v = strategy_value(g, active_[i]);
        if (v > away_value) {
          away_value = v;
          away = i;
        }
      }
      if (away_value - fw_value <= 1e-16) return Verdict::undecided;
      const std::size_t toward = add_vertex(s, 0.0);
      if (toward == away) return Verdict::undecided;
      // Direction V_s - V_away; ||.||^2 counts entries where they differ.
      double norm2 = 0.0;
      for (int x = 0; x < ma_; ++x)
        for (int y = 0; y < mb_; ++y)
          if (s.alice[x] != active_[away].alice[x] || s.bob[y] != active_[away].bob[y]) norm2 += 2.0;
      const double gamma_max = weights_[away];
      const double gamma = std::clamp((away_value - fw_value) / norm2, 0.0, gamma_max);
      weights_[toward] += gamma;
      weights_[away] -= gamma;
      const auto& va = active_[away];
      for (int x = 0; x < ma_; ++x)
        for (int y = 0; y < mb_; ++y) {
          q_(s.alice[x], s.bob[y], x, y) += gamma;
          q_(va.alice[x], va.bob[y], x, y) -= gamma;
        }
      if (weights_[away] <= 1e-15) drop(away);
      if ((it + 1) % 5000 == 0) rebuild();
    }
    return Verdict::undecided;
  }

 private:
  std::size_t add_vertex(const DeterministicStrategy& s, double w) {
    for (std::size_t i = 0; i < active_.size(); ++i)
      if (active_[i] == s) {
        weights_[i] += w;
        return i;
      }
    active_.push_back(s);
    weights_.push_back(w);
    return active_.size() - 1;
  }

  void drop(std::size_t i) {
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(i));
    weights_.erase(weights_.begin() + static_cast<std::ptrdiff_t>(i));
    rebuild();
  }

  // Recomputes q from the weights to shed accumulated rounding.
  void rebuild() {
    double total = 0.0;
    for (double w : weights_) total += std::max(w, 0.0);
    for (auto& f : q_.flat()) f = 0.0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      weights_[i] = std::max(weights_[i], 0.0) / total;
      for (int x = 0; x < ma_; ++x)
        for (int y = 0; y < mb_; ++y) q_(active_[i].alice[x], active_[i].bob[y], x, y) += weights_[i];
    }
  }

  int d_, ma_, mb_;
  FwOptions opt_;
  LinearOracle oracle_;
  OutcomeTable q_;
  OutcomeTable direction_;
  std::vector<DeterministicStrategy> active_;
  std::vector<double> weights_;
  double gap_ = 0.0;
  long long iterations_ = 0;
};

inline OutcomeTable mix(const OutcomeTable& pt, const OutcomeTable& pn, double v) {
  OutcomeTable out(pt.dimension(), pt.alice_settings(), pt.bob_settings());
  for (std::size_t k = 0; k < out.size(); ++k) out.flat()[k] = v * pt.flat()[k] + (1.0 - v) * pn.flat()[k];
  return out;
}

}  // namespace detail

/// Bisection on v with Frank-Wolfe distance tests; returns [v_lower, v_upper].
///
/// v is classed nonlocal once the gradient hyperplane strictly separates P_v
/// from every vertex, and local once the distance drops below
/// `distance_tolerance`.
inline LhvResult fw_visibility(const ConditionalProbabilities& target,
                               const ConditionalProbabilities& noise, const FwOptions& opt = {}) {
  detail::check_pair(target, noise);
  detail::require(opt.tolerance > 0.0, "fw_visibility: tolerance must be positive");
  const OutcomeTable& pt = target.table();
  const OutcomeTable& pn = noise.table();
  detail::FrankWolfe fw(pt.dimension(), pt.alice_settings(), pt.bob_settings(), opt);
  using Verdict = detail::FrankWolfe::Verdict;

  LhvResult out;
  out.method = LhvMethod::fw_bounds;
  out.heuristic_oracle = !fw.exact_oracle();

  auto decide = [&](double v) {
    const auto verdict = fw.decide(detail::mix(pt, pn, v));
    if (verdict == Verdict::undecided)
      throw ComputationError("fw_visibility: Frank-Wolfe undecided at v = " + std::to_string(v) +
                             " within the iteration cap (gap " + std::to_string(fw.gap()) + ")");
    return verdict;
  };

  if (decide(1.0) == Verdict::local) {
    out.v_crit = out.v_lower = out.v_upper = 1.0;
    out.gap = fw.gap();
    out.iterations = fw.iterations();
    out.closest_local = pt;
    return out;
  }
  OutcomeTable direction = fw.separating_direction();
  if (decide(0.0) == Verdict::nonlocal)
    throw ValidationError("fw_visibility: the noise distribution is not local");
  double lo = 0.0, hi = 1.0;
  while (hi - lo > opt.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (decide(mid) == Verdict::local) {
      lo = mid;
    } else {
      hi = mid;
      direction = fw.separating_direction();
    }
  }
  out.v_lower = lo;
  out.v_upper = hi;
  out.v_crit = 0.5 * (lo + hi);
  out.gap = fw.gap();
  out.iterations = fw.iterations();
  out.closest_local = detail::mix(pt, pn, lo);
  if (fw.exact_oracle()) {
    OutcomeTable s = direction;
    for (double& c : s.flat()) c = -c;
    out.certificate = extract_inequality(s, pt, "extracted (Frank-Wolfe)");
  }
  return out;
}

struct NoSignalingProjection {
  OutcomeTable values;
  double most_negative = 0.0;  ///< smallest entry (negative entries are reported, not clipped)
  bool in_polytope = true;     ///< all entries >= -1e-12
};

/// Euclidean projection onto the affine set of normalised no-signalling behaviours.
inline NoSignalingProjection project_no_signaling(const ConditionalProbabilities& p) {
  const OutcomeTable& t = p.table();
  const int d = t.dimension(), ma = t.alice_settings(), mb = t.bob_settings();
  const auto dim = static_cast<Eigen::Index>(t.size());
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto row = [&]() { return Eigen::VectorXd::Zero(dim).eval(); };
  for (int x = 0; x < ma; ++x)
    for (int y = 0; y < mb; ++y) {
      auto r = row();
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) r[static_cast<Eigen::Index>(t.offset(a, b, x, y))] = 1.0;
      rows.push_back(r);
      rhs.push_back(1.0);
    }
  for (int x = 0; x < ma; ++x)
    for (int a = 0; a < d; ++a)
      for (int y = 1; y < mb; ++y) {
        auto r = row();
        for (int b = 0; b < d; ++b) {
          r[static_cast<Eigen::Index>(t.offset(a, b, x, y))] += 1.0;
          r[static_cast<Eigen::Index>(t.offset(a, b, x, 0))] -= 1.0;
        }
        rows.push_back(r);
        rhs.push_back(0.0);
      }
  for (int y = 0; y < mb; ++y)
    for (int b = 0; b < d; ++b)
      for (int x = 1; x < ma; ++x) {
        auto r = row();
        for (int a = 0; a < d; ++a) {
          r[static_cast<Eigen::Index>(t.offset(a, b, x, y))] += 1.0;
          r[static_cast<Eigen::Index>(t.offset(a, b, 0, y))] -= 1.0;
        }
        rows.push_back(r);
        rhs.push_back(0.0);
      }
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), dim);
  Eigen::VectorXd r(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    r[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  const Eigen::Map<const Eigen::VectorXd> pv(t.flat().data(), dim);
  const Eigen::VectorXd residual = c * pv - r;
  const Eigen::VectorXd delta = c.completeOrthogonalDecomposition().solve(residual);
  NoSignalingProjection out{OutcomeTable(d, ma, mb), 0.0, true};
  for (Eigen::Index k = 0; k < dim; ++k) out.values.flat()[k] = pv[k] - delta[k];
  out.most_negative = *std::min_element(out.values.flat().begin(), out.values.flat().end());
  out.in_polytope = out.most_negative >= -1e-12;
  return out;
}

/// Largest deviation from no-signalling among the marginals of `t`.
inline double signaling_violation(const OutcomeTable& t) {
  const int d = t.dimension(), ma = t.alice_settings(), mb = t.bob_settings();
  double worst = 0.0;
  for (int x = 0; x < ma; ++x)
    for (int a = 0; a < d; ++a)
      for (int y = 1; y < mb; ++y) {
        double m0 = 0.0, m1 = 0.0;
        for (int b = 0; b < d; ++b) {
          m0 += t(a, b, x, 0);
          m1 += t(a, b, x, y);
        }
        worst = std::max(worst, std::abs(m1 - m0));
      }
  for (int y = 0; y < mb; ++y)
    for (int b = 0; b < d; ++b)
      for (int x = 1; x < ma; ++x) {
        double m0 = 0.0, m1 = 0.0;
        for (int a = 0; a < d; ++a) {
          m0 += t(a, b, 0, y);
          m1 += t(a, b, x, y);
        }
        worst = std::max(worst, std::abs(m1 - m0));
      }
  return worst;
}

/// Uniform (white-noise) behaviour.
inline ConditionalProbabilities uniform_behavior(int d, int ma, int mb) {
  return ConditionalProbabilities(OutcomeTable(d, ma, mb, 1.0 / (d * d)));
}

}  // namespace tfbell

#endif  // TFBELL_LHV_HPP
