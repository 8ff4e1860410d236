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

#ifndef TFBELL_SIMPLEX_HPP
#define TFBELL_SIMPLEX_HPP

// Dense two-phase tableau simplex for small standard-form problems
//
//   maximise c.x  subject to  A x = b,  x >= 0,
//
// returning primal and dual solutions. Redundant equality rows are tolerated.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace tfbell::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Options {
  double pivot_tolerance = 1e-9;
  double optimality_tolerance = 1e-10;
  double feasibility_tolerance = 1e-8;
  int max_iterations = 200000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 50;
};

struct Result {
  Status status = Status::iteration_limit;
  Eigen::VectorXd x;
  Eigen::VectorXd dual;  ///< y with A^T y >= c and b.y = objective at optimum
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Options& opt)
      : m_(static_cast<int>(a.rows())), n_(static_cast<int>(a.cols())), opt_(opt) {
    t_ = Eigen::MatrixXd::Zero(m_, n_ + m_ + 1);
    sign_ = Eigen::VectorXd::Ones(m_);
    for (int i = 0; i < m_; ++i) {
      if (b[i] < 0.0) sign_[i] = -1.0;
      t_.row(i).head(n_) = sign_[i] * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, n_ + m_) = sign_[i] * b[i];
    }
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  int rows() const { return m_; }
  int cols() const { return n_; }
  double rhs(int i) const { return t_(i, n_ + m_); }
  int basic(int i) const { return basis_[i]; }
  bool artificial(int j) const { return j >= n_; }

  /// Reduced costs r_j = c_j - c_B B^{-1} A_j for all columns.
  Eigen::RowVectorXd reduced_costs(const Eigen::VectorXd& cost) const {
    Eigen::RowVectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
    Eigen::RowVectorXd r = cost.transpose() - cb * t_.leftCols(n_ + m_);
    return r;
  }

  double objective(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (int i = 0; i < m_; ++i) v += cost[basis_[i]] * rhs(i);
    return v;
  }

  void pivot(int row, int col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    const Eigen::RowVectorXd pr = t_.row(row);
    Eigen::VectorXd colv = t_.col(col);
    colv[row] = 0.0;
    t_.noalias() -= colv * pr;
    basis_[row] = col;
  }

  /// Runs simplex iterations on `cost` over the allowed columns.
  Status optimise(const Eigen::VectorXd& cost, bool allow_artificial, int& iterations) {
    int degenerate = 0;
    while (iterations < opt_.max_iterations) {
      const Eigen::RowVectorXd r = reduced_costs(cost);
      const int ncols = allow_artificial ? n_ + m_ : n_;
      const bool bland = degenerate >= opt_.degenerate_switch;
      int enter = -1;
      double best = opt_.optimality_tolerance;
      for (int j = 0; j < ncols; ++j) {
        if (r[j] > best) {
          enter = j;
          if (bland) break;
          best = r[j];
        }
      }
      if (enter < 0) return Status::optimal;
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a > opt_.pivot_tolerance) {
          const double q = rhs(i) / a;
          if (q < ratio - 1e-12 || (q <= ratio + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
            ratio = q;
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::unbounded;
      degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
      ++iterations;
    }
    return Status::iteration_limit;
  }

  /// Pivots zero-level artificials out of the basis where possible.
  void expel_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!artificial(basis_[i])) continue;
      int best = -1;
      double mag = opt_.pivot_tolerance;
      for (int j = 0; j < n_; ++j)
        if (std::abs(t_(i, j)) > mag) {
          mag = std::abs(t_(i, j));
          best = j;
        }
      if (best >= 0) pivot(i, best);  // otherwise the row is redundant
    }
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (!artificial(basis_[i])) x[basis_[i]] = rhs(i);
    return x;
  }

  /// y = c_B B^{-1}, read from the artificial columns (which started as I).
  Eigen::VectorXd dual(const Eigen::VectorXd& cost) const {
    Eigen::RowVectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
    Eigen::VectorXd y = (cb * t_.middleCols(n_, m_)).transpose();
    return y.cwiseProduct(sign_);
  }

 private:
  int m_;
  int n_;
  Options opt_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd sign_;
  std::vector<int> basis_;
};

}  // namespace detail

inline Result maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                       const Options& opt = {}) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  detail::Tableau tab(a, b, opt);
  Result res;

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setConstant(-1.0);
  res.status = tab.optimise(phase1, true, res.iterations);
  if (res.status == Status::iteration_limit) return res;
  if (tab.objective(phase1) < -opt.feasibility_tolerance * std::max(1.0, b.cwiseAbs().sum())) {
    res.status = Status::infeasible;
    return res;
  }
  tab.expel_artificials();

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  res.status = tab.optimise(phase2, false, res.iterations);
  if (res.status != Status::optimal) return res;
  res.x = tab.primal();
  res.objective = c.dot(res.x);
  res.dual = tab.dual(phase2);
  return res;
}

}  // namespace tfbell::lp

#endif  // TFBELL_SIMPLEX_HPP
