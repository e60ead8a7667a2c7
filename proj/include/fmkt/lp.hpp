#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace fmkt {

enum class Sense { Minimize, Maximize };
enum class RowType { Equal, LessEqual, GreaterEqual };
enum class Bound { NonNegative, Free };
enum class LPStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LPStatus s);

using Terms = std::vector<std::pair<std::size_t, double>>;

// Row-oriented builder for a linear program
//   opt c'x  s.t.  a_i'x (=|<=|>=) b_i,  x_j >= 0 or free.
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

  std::size_t add_variable(double cost = 0.0, Bound bound = Bound::NonNegative);
  // Duplicate indices in `terms` are summed.
  std::size_t add_row(RowType type, const Terms& terms, double rhs);

  void set_cost(std::size_t j, double cost);
  void set_sense(Sense s) { sense_ = s; }

  Sense sense() const noexcept { return sense_; }
  std::size_t num_variables() const noexcept { return cost_.size(); }
  std::size_t num_rows() const noexcept { return rows_.size(); }
  double cost(std::size_t j) const { return cost_.at(j); }
  Bound bound(std::size_t j) const { return bound_.at(j); }
  RowType row_type(std::size_t i) const { return type_.at(i); }
  const Terms& row(std::size_t i) const { return rows_.at(i); }
  double rhs(std::size_t i) const { return rhs_.at(i); }

  // Left-hand side a_i'x for a given point.
  double row_activity(std::size_t i, const std::vector<double>& x) const;

 private:
  Sense sense_;
  std::vector<double> cost_;
  std::vector<Bound> bound_;
  std::vector<Terms> rows_;
  std::vector<RowType> type_;
  std::vector<double> rhs_;
};

struct LPOptions {
  double pivot_tol = 1e-10;
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  std::size_t max_iterations = 200000;
};

struct LPSolution {
  LPStatus status = LPStatus::Infeasible;
  std::vector<double> x;     // primal point (Optimal)
  std::vector<double> dual;  // per row: d(objective)/d(rhs) (Optimal)
  double objective = 0.0;
  double dual_objective = 0.0;  // sum of dual_i * rhs_i
  // Unbounded: primal direction d with A d in the recession cone and c'd
  // improving. Infeasible: row multipliers y with y'A "<= 0" on the
  // variable domain and y'b > 0 (Farkas).
  std::vector<double> ray;
  std::size_t iterations = 0;
};

// Two-phase dense primal simplex. Deterministic: identical programs give
// identical pivot sequences. Throws std::invalid_argument on non-finite data.
LPSolution solve_lp(const LinearProgram& lp, const LPOptions& opt = {});

}  // namespace fmkt
