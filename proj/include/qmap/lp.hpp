#pragma once

// Small dense linear programs with few variables and many inequality rows.
//
// The primal  max c·y  s.t.  A y ≤ b  (y free)  is solved through its dual
// min b·λ  s.t.  Aᵀλ = c, λ ≥ 0  with a two-phase tableau simplex under
// Bland's rule. The tableau has one row per primal variable, so thousands of
// constraint rows stay cheap. The primal point is read off the simplex
// multipliers of the final dual basis.

#include <Eigen/Dense>

namespace qmap::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Result {
  Status status = Status::kInfeasible;
  Eigen::VectorXd y;       // primal point (valid when kOptimal)
  double objective = 0.0;  // c·y
  int pivots = 0;
};

Result maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                const Eigen::VectorXd& c);

}  // namespace qmap::lp
