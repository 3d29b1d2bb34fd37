#include "qmap/lp.hpp"

#include <limits>
#include <vector>

#include "qmap/error.hpp"

namespace qmap::lp {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-12;
constexpr double kPhaseOneTol = 1e-9;
constexpr int kMaxPivots = 100000;

// Dense tableau for  min cost·x  s.t.  T x = rhs, x ≥ 0.
struct Tableau {
  Eigen::MatrixXd t;     // rows × cols
  Eigen::VectorXd rhs;   // rows
  std::vector<int> basis;

  void pivot(int row, int col) {
    const double p = t(row, col);
    t.row(row) /= p;
    rhs(row) /= p;
    for (int i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f == 0.0) continue;
      t.row(i) -= f * t.row(row);
      rhs(i) -= f * rhs(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  }

  Eigen::VectorXd reduced_costs(const Eigen::VectorXd& cost) const {
    Eigen::VectorXd cb(t.rows());
    for (int i = 0; i < t.rows(); ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
    return cost.transpose() - cb.transpose() * t;
  }

  // Returns false when the objective is unbounded below.
  bool run(const Eigen::VectorXd& cost, int allowed_cols, int& pivots) {
    while (true) {
      if (++pivots > kMaxPivots) throw InvariantViolation("simplex pivot limit reached");
      Eigen::VectorXd r = reduced_costs(cost);
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        if (r(j) < -kCostEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < t.rows(); ++i) {
        if (t(i, enter) <= kPivotEps) continue;
        const double ratio = rhs(i) / t(i, enter);
        if (ratio < best - 1e-14 ||
            (ratio <= best + 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

Result maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows());  // dual variables
  const int n = static_cast<int>(a.cols());  // dual equality rows
  if (b.size() != m || c.size() != n) throw ValidationError("lp: shape mismatch");

  Result result;
  // Dual rows s_j (Aᵀ)_j λ = s_j c_j with signs chosen so the rhs is ≥ 0.
  Eigen::VectorXd sign(n);
  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(n, m + n);
  tab.rhs.resize(n);
  tab.basis.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    sign(j) = c(j) < 0.0 ? -1.0 : 1.0;
    tab.t.block(j, 0, 1, m) = sign(j) * a.col(j).transpose();
    tab.t(j, m + j) = 1.0;
    tab.rhs(j) = sign(j) * c(j);
    tab.basis[static_cast<std::size_t>(j)] = m + j;
  }

  // Phase one: drive the artificial variables to zero.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(m + n);
  phase1.tail(n).setOnes();
  tab.run(phase1, m + n, result.pivots);
  double infeas = 0.0;
  for (int i = 0; i < n; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] >= m) infeas += tab.rhs(i);
  }
  if (infeas > kPhaseOneTol) {
    // Dual infeasible: the primal is unbounded (or itself infeasible).
    result.status = Status::kUnbounded;
    return result;
  }
  // Pivot remaining zero-level artificials out where possible.
  for (int i = 0; i < n; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < m) continue;
    for (int j = 0; j < m; ++j) {
      if (std::abs(tab.t(i, j)) > kPivotEps) {
        tab.pivot(i, j);
        ++result.pivots;
        break;
      }
    }
  }

  // Phase two on the dual objective b·λ; artificials may not re-enter.
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(m + n);
  cost.head(m) = b;
  if (!tab.run(cost, m, result.pivots)) {
    result.status = Status::kInfeasible;
    return result;
  }

  // Simplex multipliers π' = c_Bᵀ B⁻¹; B⁻¹ sits in the artificial columns.
  Eigen::VectorXd cb(n);
  for (int i = 0; i < n; ++i) cb(i) = cost(tab.basis[static_cast<std::size_t>(i)]);
  Eigen::VectorXd pi = tab.t.rightCols(n).transpose() * cb;
  result.y = sign.cwiseProduct(pi);
  result.objective = c.dot(result.y);
  result.status = Status::kOptimal;
  return result;
}

}  // namespace qmap::lp
