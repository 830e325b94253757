#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>

namespace ctop {

// Convex quadratic program in canonical form:
//   min 0.5 x'Px + q'x   s.t.  A x = b,  G x <= h.
struct QpProblem {
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_eq() const { return static_cast<int>(b.size()); }
  int num_ineq() const { return static_cast<int>(h.size()); }
};

enum class QpStatus { optimal, near_optimal, infeasible, numerical_failure };

struct QpSolution {
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // equality duals
  Eigen::VectorXd z;  // inequality duals, >= 0
  Eigen::VectorXd s;  // inequality slacks, >= 0
  QpStatus status = QpStatus::numerical_failure;
  int iterations = 0;
  double gap = 0.0;       // complementarity measure s'z / mi
  double primal_res = 0.0;
  double dual_res = 0.0;
  double objective = 0.0;
};

struct QpSettings {
  double tol_gap = 1.0e-9;
  double tol_feas = 1.0e-9;
  int max_iters = 150;
  double regularization = 1.0e-8;
};

// Primal-dual interior-point solve (Mehrotra predictor-corrector on a
// regularized sparse augmented KKT system).
QpSolution solve_qp(const QpProblem& prob, const QpSettings& settings = {},
                    const Eigen::VectorXd* x_hint = nullptr);

// Self-describing coordinate text dump for external cross-checks.
void write_qp(const QpProblem& prob, const std::string& path);
QpProblem read_qp(const std::string& path);

}  // namespace ctop
