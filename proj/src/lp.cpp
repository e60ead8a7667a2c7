#include "fmkt/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fmkt {

const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::Optimal: return "optimal";
    case LPStatus::Infeasible: return "infeasible";
    case LPStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

std::size_t LinearProgram::add_variable(double cost, Bound bound) {
  if (!std::isfinite(cost)) throw std::invalid_argument("non-finite objective coefficient");
  cost_.push_back(cost);
  bound_.push_back(bound);
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_row(RowType type, const Terms& terms, double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite right-hand side");
  for (const auto& [j, a] : terms) {
    if (j >= cost_.size()) throw std::invalid_argument("row references unknown variable");
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite constraint coefficient");
  }
  rows_.push_back(terms);
  type_.push_back(type);
  rhs_.push_back(rhs);
  return rows_.size() - 1;
}

void LinearProgram::set_cost(std::size_t j, double cost) {
  if (!std::isfinite(cost)) throw std::invalid_argument("non-finite objective coefficient");
  cost_.at(j) = cost;
}

double LinearProgram::row_activity(std::size_t i, const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& [j, a] : rows_.at(i)) s += a * x.at(j);
  return s;
}

namespace {

// Standard form  min c'z  s.t.  A z + I a = b (b >= 0),  z, a >= 0, held as a
// dense tableau over [structural | slack | artificial | rhs].
class Tableau {
 public:
  Tableau(const LinearProgram& lp, const LPOptions& opt) : lp_(lp), opt_(opt) {
    m_ = lp.num_rows();
    // Structural columns: one per nonnegative variable, two per free one.
    for (std::size_t j = 0; j < lp.num_variables(); ++j) {
      pos_.push_back(ns_++);
      neg_.push_back(lp.bound(j) == Bound::Free ? ns_++ : npos);
    }
    slack_.assign(m_, npos);
    nslack_ = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp.row_type(i) != RowType::Equal) slack_[i] = ns_ + nslack_++;
    }
    art0_ = ns_ + nslack_;
    ncols_ = art0_ + m_;
    width_ = ncols_ + 1;
    t_.assign(m_ * width_, 0.0);
    flip_.assign(m_, 1.0);
    basis_.assign(m_, 0);

    for (std::size_t i = 0; i < m_; ++i) {
      double* r = row(i);
      for (const auto& [j, a] : lp.row(i)) {
        r[pos_[j]] += a;
        if (neg_[j] != npos) r[neg_[j]] -= a;
      }
      if (lp.row_type(i) == RowType::LessEqual) r[slack_[i]] = 1.0;
      if (lp.row_type(i) == RowType::GreaterEqual) r[slack_[i]] = -1.0;
      r[ncols_] = lp.rhs(i);
      if (r[ncols_] < 0.0) {
        flip_[i] = -1.0;
        for (std::size_t k = 0; k < width_; ++k) r[k] = -r[k];
      }
      r[art0_ + i] = 1.0;
      basis_[i] = art0_ + i;
    }
    a0_ = t_;
    cost_.assign(ncols_, 0.0);
  }

  LPSolution run() {
    LPSolution sol;

    // Phase 1: minimize the sum of artificials.
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) cost_[art0_ + i] = 1.0;
    allow_artificial_ = true;
    price();
    if (iterate(sol.iterations) != Step::Optimal) {
      throw std::logic_error("phase 1 cannot be unbounded");
    }
    const double infeas = -d_[ncols_];
    if (infeas > opt_.feas_tol * std::max(1.0, max_rhs())) {
      sol.status = LPStatus::Infeasible;
      sol.ray.assign(m_, 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        sol.ray[i] = flip_[i] * (1.0 - d_[art0_ + i]);
      }
      return sol;
    }
    drive_out_artificials();

    // Phase 2 with the user objective (as a minimization).
    const double sgn = lp_.sense() == Sense::Maximize ? -1.0 : 1.0;
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (std::size_t j = 0; j < lp_.num_variables(); ++j) {
      cost_[pos_[j]] = sgn * lp_.cost(j);
      if (neg_[j] != npos) cost_[neg_[j]] = -sgn * lp_.cost(j);
    }
    allow_artificial_ = false;
    price();
    const Step st = iterate(sol.iterations);
    if (st == Step::Unbounded) {
      sol.status = LPStatus::Unbounded;
      std::vector<double> z(ncols_, 0.0);
      z[entering_] = 1.0;
      for (std::size_t i = 0; i < m_; ++i) z[basis_[i]] = -at(i, entering_);
      sol.ray = to_user(z);
      return sol;
    }

    sol.status = LPStatus::Optimal;
    std::vector<double> z(ncols_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) z[basis_[i]] = std::max(0.0, at(i, ncols_));
    sol.x = to_user(z);
    sol.objective = 0.0;
    for (std::size_t j = 0; j < lp_.num_variables(); ++j) sol.objective += lp_.cost(j) * sol.x[j];
    sol.dual.assign(m_, 0.0);
    sol.dual_objective = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double y = -d_[art0_ + i];
      sol.dual[i] = sgn * flip_[i] * y;
      if (sol.dual[i] == 0.0) sol.dual[i] = 0.0;  // normalize -0
      sol.dual_objective += sol.dual[i] * lp_.rhs(i);
    }
    return sol;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  static constexpr std::size_t kRefactorEvery = 50;
  enum class Step { Optimal, Unbounded };

  double* row(std::size_t i) { return t_.data() + i * width_; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }

  double max_rhs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < m_; ++i) m = std::max(m, std::abs(lp_.rhs(i)));
    return m;
  }

  // Reduced costs d_j = c_j - c_B' B^{-1} A_j; d_[ncols_] holds -objective.
  void price() {
    d_.assign(width_, 0.0);
    for (std::size_t j = 0; j < ncols_; ++j) d_[j] = cost_[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* r = t_.data() + i * width_;
      for (std::size_t k = 0; k < width_; ++k) d_[k] -= cb * r[k];
    }
  }

  // Recomputes B^{-1}[A | b] for the current basis from the original rows,
  // then the reduced costs. Keeps the updated tableau if B looks singular.
  void refactor() {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> a0(a0_.data(), static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(width_));
    Eigen::MatrixXd b(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) b.col(static_cast<Eigen::Index>(i)) = a0.col(static_cast<Eigen::Index>(basis_[i]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
    if (lu.rank() == static_cast<Eigen::Index>(m_)) {
      RowMat x = lu.solve(a0);
      Eigen::Map<RowMat>(t_.data(), static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(width_)) = x;
      for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t k = 0; k < m_; ++k) t_[k * width_ + basis_[i]] = k == i ? 1.0 : 0.0;
      }
    }
    price();
  }

  void pivot(std::size_t pr, std::size_t pc) {
    double* p = row(pr);
    const double inv = 1.0 / p[pc];
    for (std::size_t k = 0; k < width_; ++k) p[k] *= inv;
    p[pc] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == pr) continue;
      double* r = row(i);
      const double f = r[pc];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) {
        if (p[k] != 0.0) r[k] -= f * p[k];
      }
      r[pc] = 0.0;
    }
    const double f = d_[pc];
    if (f != 0.0) {
      for (std::size_t k = 0; k < width_; ++k) {
        if (p[k] != 0.0) d_[k] -= f * p[k];
      }
      d_[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  Step iterate(std::size_t& iterations) {
    const std::size_t limit_cols = allow_artificial_ ? ncols_ : art0_;
    const std::size_t degenerate_limit = 5 * (m_ + ncols_);
    std::size_t degenerate_run = 0;
    bool bland = false;
    // The tableau is updated in place and accumulates error; a verdict is only
    // accepted right after rebuilding it from the original data.
    bool fresh = true;
    std::size_t since_price = 0;
    for (;;) {
      if (++iterations > opt_.max_iterations) {
        throw std::runtime_error("simplex iteration limit exceeded");
      }
      if (++since_price >= kRefactorEvery) {
        refactor();
        fresh = true;
        since_price = 0;
      }
      std::size_t enter = npos;
      double best = -opt_.opt_tol;
      for (std::size_t j = 0; j < limit_cols; ++j) {
        if (d_[j] < best) {
          enter = j;
          if (bland) break;
          best = d_[j];
        }
      }
      if (enter == npos) {
        if (fresh) return Step::Optimal;
        refactor();
        fresh = true;
        since_price = 0;
        continue;
      }

      std::size_t leave = npos;
      double ratio = std::numeric_limits<double>::infinity();
      double piv = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= opt_.pivot_tol) continue;
        const double r = std::max(0.0, at(i, ncols_)) / a;
        if (leave == npos || r < ratio - 1e-12) {
          leave = i;
          ratio = r;
          piv = a;
        } else if (r <= ratio + 1e-12) {
          const bool better = bland ? basis_[i] < basis_[leave] : a > piv;
          if (better) {
            leave = i;
            ratio = std::min(ratio, r);
            piv = a;
          }
        }
      }
      if (leave == npos) {
        if (fresh) {
          entering_ = enter;
          return Step::Unbounded;
        }
        refactor();
        fresh = true;
        since_price = 0;
        continue;
      }
      if (ratio <= 1e-12) {
        if (++degenerate_run >= degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
      fresh = false;
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < art0_) continue;
      std::size_t best = npos;
      double mag = opt_.pivot_tol;
      for (std::size_t j = 0; j < art0_; ++j) {
        const double a = std::abs(at(i, j));
        if (a > mag) {
          mag = a;
          best = j;
        }
      }
      // A row with no usable structural entry is redundant; its artificial
      // stays basic at level zero.
      if (best != npos) pivot(i, best);
    }
  }

  std::vector<double> to_user(const std::vector<double>& z) const {
    std::vector<double> x(lp_.num_variables(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = z[pos_[j]];
      if (neg_[j] != npos) x[j] -= z[neg_[j]];
    }
    return x;
  }

  const LinearProgram& lp_;
  const LPOptions& opt_;
  std::size_t m_ = 0, ns_ = 0, nslack_ = 0, art0_ = 0, ncols_ = 0, width_ = 0;
  std::vector<std::size_t> pos_, neg_, slack_, basis_;
  std::vector<double> t_, a0_, flip_, cost_, d_;
  std::size_t entering_ = 0;
  bool allow_artificial_ = true;
};

}  // namespace

LPSolution solve_lp(const LinearProgram& lp, const LPOptions& opt) {
  Tableau tab(lp, opt);
  return tab.run();
}

}  // namespace fmkt
