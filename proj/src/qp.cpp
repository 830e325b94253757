#include "ctop/qp.hpp"

#include "ctop/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace ctop {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Largest step alpha in [0, 1] keeping v + alpha * dv >= 0.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

void append_block(std::vector<Triplet>& trips, const SpMat& m, int row0, int col0,
                  bool transpose = false) {
  for (int outer = 0; outer < m.outerSize(); ++outer) {
    for (SpMat::InnerIterator it(m, outer); it; ++it) {
      if (transpose) {
        trips.emplace_back(row0 + static_cast<int>(it.col()), col0 + static_cast<int>(it.row()),
                           it.value());
      } else {
        trips.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                           it.value());
      }
    }
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& prob, const QpSettings& st, const Eigen::VectorXd* x_hint) {
  const int n = prob.num_vars();
  const int me = prob.num_eq();
  const int mi = prob.num_ineq();
  const int dim = n + me + mi;

  if (prob.P.rows() != n || prob.P.cols() != n || prob.A.cols() != n || prob.A.rows() != me ||
      prob.G.cols() != n || prob.G.rows() != mi) {
    throw Error(ErrorCode::dimension_mismatch, "qp: inconsistent problem dimensions");
  }

  const SpMat At = prob.A.transpose();
  const SpMat Gt = prob.G.transpose();

  QpSolution sol;
  sol.x = x_hint ? *x_hint : Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(me);
  sol.z = Eigen::VectorXd::Ones(mi);
  sol.s = Eigen::VectorXd::Ones(mi);

  // The KKT pattern is fixed; only the slack/dual scaling block changes.
  auto assemble_kkt = [&](const Eigen::VectorXd& w, double reg) {
    std::vector<Triplet> trips;
    trips.reserve(prob.P.nonZeros() + 2 * (prob.A.nonZeros() + prob.G.nonZeros()) + dim);
    append_block(trips, prob.P, 0, 0);
    append_block(trips, prob.A, n, 0);
    append_block(trips, prob.A, 0, n, true);
    append_block(trips, prob.G, n + me, 0);
    append_block(trips, prob.G, 0, n + me, true);
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, reg);
    for (int i = 0; i < me; ++i) trips.emplace_back(n + i, n + i, -reg);
    for (int i = 0; i < mi; ++i) trips.emplace_back(n + me + i, n + me + i, -w(i) - reg);
    SpMat kkt(dim, dim);
    kkt.setFromTriplets(trips.begin(), trips.end());
    return kkt;
  };

  // Residual of the exact (unregularized) augmented system, for refinement.
  auto kkt_apply = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(dim);
    out.head(n) = prob.P * v.head(n) + At * v.segment(n, me) + Gt * v.tail(mi);
    out.segment(n, me) = prob.A * v.head(n);
    out.tail(mi) = prob.G * v.head(n) - w.cwiseProduct(v.tail(mi));
    return out;
  };

  // SparseLU over the unsymmetric-storage KKT: the x-block diagonal is mostly
  // zero (states carry no quadratic cost), which rules out unpivoted LDLT.
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  // Mehrotra starting point: one least-squares KKT solve with unit scaling,
  // then shift slacks and duals positive. A cold unit start leaves the duals
  // orders of magnitude off the penalty coefficients and stalls the method.
  if (mi > 0) {
    SpMat kkt0 = assemble_kkt(Eigen::VectorXd::Ones(mi), st.regularization);
    lu.analyzePattern(kkt0);
    analyzed = true;
    lu.factorize(kkt0);
    if (lu.info() == Eigen::Success) {
      Eigen::VectorXd rhs0(dim);
      rhs0.head(n) = -prob.q;
      rhs0.segment(n, me) = prob.b;
      rhs0.tail(mi) = prob.h;
      const Eigen::VectorXd v = lu.solve(rhs0);
      sol.x = v.head(n);
      sol.y = v.segment(n, me);
      const Eigen::VectorXd z_raw = v.tail(mi);
      const Eigen::VectorXd s_raw = prob.h - prob.G * sol.x;
      const double ds = std::max(0.0, -1.5 * s_raw.minCoeff());
      const double dz = std::max(0.0, -1.5 * z_raw.minCoeff());
      const Eigen::VectorXd s_hat = s_raw + Eigen::VectorXd::Constant(mi, ds);
      const Eigen::VectorXd z_hat = z_raw + Eigen::VectorXd::Constant(mi, dz);
      const double dot = s_hat.dot(z_hat);
      const double shift_s = 0.5 * dot / std::max(z_hat.sum(), 1e-12);
      const double shift_z = 0.5 * dot / std::max(s_hat.sum(), 1e-12);
      sol.s = (s_hat + Eigen::VectorXd::Constant(mi, shift_s)).cwiseMax(1e-8);
      sol.z = (z_hat + Eigen::VectorXd::Constant(mi, shift_z)).cwiseMax(1e-8);
    }
  }

  QpSolution best = sol;
  double best_score = std::numeric_limits<double>::infinity();

  const double b_scale = 1.0 + std::max(inf_norm(prob.b), inf_norm(prob.h));
  const double q_scale = 1.0 + inf_norm(prob.q);

  for (int iter = 0; iter < st.max_iters; ++iter) {
    const Eigen::VectorXd rd = prob.P * sol.x + prob.q + At * sol.y + Gt * sol.z;
    const Eigen::VectorXd rp = prob.A * sol.x - prob.b;
    const Eigen::VectorXd rg = prob.G * sol.x + sol.s - prob.h;
    const double mu = mi > 0 ? sol.s.dot(sol.z) / mi : 0.0;
    sol.objective = 0.5 * sol.x.dot(prob.P * sol.x) + prob.q.dot(sol.x);

    sol.gap = mu;
    sol.primal_res = std::max(inf_norm(rp), inf_norm(rg)) / b_scale;
    sol.dual_res = inf_norm(rd) / q_scale;
    sol.iterations = iter;

    const double gap_rel = mu / (1.0 + std::abs(sol.objective));
    const double score = std::max({gap_rel, sol.primal_res, sol.dual_res});
    if (score < best_score) {
      best_score = score;
      best = sol;
    }
    if (gap_rel <= st.tol_gap && sol.primal_res <= st.tol_feas && sol.dual_res <= st.tol_feas) {
      sol.status = QpStatus::optimal;
      return sol;
    }

    const Eigen::VectorXd w = sol.s.cwiseQuotient(sol.z);

    SpMat kkt = assemble_kkt(w, st.regularization);
    if (!analyzed) {
      lu.analyzePattern(kkt);
      analyzed = true;
    }
    lu.factorize(kkt);
    double reg = st.regularization;
    while (lu.info() != Eigen::Success && reg < 1e-2) {
      reg *= 100.0;
      kkt = assemble_kkt(w, reg);
      lu.factorize(kkt);
    }
    if (lu.info() != Eigen::Success) break;

    auto solve_refined = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd v = lu.solve(rhs);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd resid = rhs - kkt_apply(w, v);
        v += lu.solve(resid);
      }
      return v;
    };

    // Predictor.
    Eigen::VectorXd rhs(dim);
    rhs.head(n) = -rd;
    rhs.segment(n, me) = -rp;
    rhs.tail(mi) = -rg + sol.s;
    const Eigen::VectorXd d_aff = solve_refined(rhs);
    const Eigen::VectorXd dz_aff = d_aff.tail(mi);
    const Eigen::VectorXd ds_aff =
        -(sol.s.cwiseProduct(sol.z) + sol.s.cwiseProduct(dz_aff)).cwiseQuotient(sol.z);

    const double ap_aff = max_step(sol.s, ds_aff);
    const double ad_aff = max_step(sol.z, dz_aff);
    const double mu_aff =
        (sol.s + ap_aff * ds_aff).dot(sol.z + ad_aff * dz_aff) / std::max(mi, 1);
    const double sigma = std::min(1.0, std::pow(mu_aff / std::max(mu, 1e-300), 3.0));

    // Corrector.
    const Eigen::VectorXd rc =
        sol.s.cwiseProduct(sol.z) + ds_aff.cwiseProduct(dz_aff) -
        Eigen::VectorXd::Constant(mi, sigma * mu);
    rhs.tail(mi) = -rg + rc.cwiseQuotient(sol.z);
    const Eigen::VectorXd d = solve_refined(rhs);
    const Eigen::VectorXd dz = d.tail(mi);
    const Eigen::VectorXd ds = -(rc + sol.s.cwiseProduct(dz)).cwiseQuotient(sol.z);

    const double tau = std::max(0.99, 1.0 - mu);
    const double ap = std::min(1.0, tau * max_step(sol.s, ds));
    const double ad = std::min(1.0, tau * max_step(sol.z, dz));

    sol.x += ap * d.head(n);
    sol.s += ap * ds;
    sol.y += ad * d.segment(n, me);
    sol.z += ad * dz;

    if (!sol.x.allFinite() || !sol.s.allFinite() || !sol.z.allFinite()) break;
  }

  sol = best;
  const double gap_rel = sol.gap / (1.0 + std::abs(sol.objective));
  const double loose = 1.0e3;
  if (gap_rel <= loose * st.tol_gap && sol.primal_res <= loose * st.tol_feas &&
      sol.dual_res <= loose * st.tol_feas) {
    sol.status = QpStatus::near_optimal;
  } else {
    sol.status = QpStatus::numerical_failure;
  }
  return sol;
}

namespace {

void write_sparse(std::ostream& os, const char* name, const SpMat& m) {
  os << name << " " << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  for (int outer = 0; outer < m.outerSize(); ++outer) {
    for (SpMat::InnerIterator it(m, outer); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
}

void write_dense(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  os << name << " " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v(i) << "\n";
}

SpMat read_sparse(std::istream& is, const std::string& expect) {
  std::string name;
  int rows = 0, cols = 0;
  long nnz = 0;
  if (!(is >> name >> rows >> cols >> nnz) || name != expect) {
    throw Error(ErrorCode::parse_error, "qp file: expected matrix block " + expect);
  }
  std::vector<Triplet> trips;
  trips.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw Error(ErrorCode::parse_error, "qp file: truncated " + expect);
    trips.emplace_back(i, j, v);
  }
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::VectorXd read_dense(std::istream& is, const std::string& expect) {
  std::string name;
  long size = 0;
  if (!(is >> name >> size) || name != expect) {
    throw Error(ErrorCode::parse_error, "qp file: expected vector block " + expect);
  }
  Eigen::VectorXd v(size);
  for (long i = 0; i < size; ++i) {
    if (!(is >> v(i))) throw Error(ErrorCode::parse_error, "qp file: truncated " + expect);
  }
  return v;
}

}  // namespace

void write_qp(const QpProblem& prob, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
  os.precision(17);
  os << "qp_canonical 1\n";
  write_sparse(os, "P", prob.P);
  write_dense(os, "q", prob.q);
  write_sparse(os, "A", prob.A);
  write_dense(os, "b", prob.b);
  write_sparse(os, "G", prob.G);
  write_dense(os, "h", prob.h);
  if (!os) throw Error(ErrorCode::io_error, "write failed: " + path);
}

QpProblem read_qp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io_error, "cannot open: " + path);
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "qp_canonical") {
    throw Error(ErrorCode::parse_error, "qp file: bad header in " + path);
  }
  QpProblem prob;
  prob.P = read_sparse(is, "P");
  prob.q = read_dense(is, "q");
  prob.A = read_sparse(is, "A");
  prob.b = read_dense(is, "b");
  prob.G = read_sparse(is, "G");
  prob.h = read_dense(is, "h");
  return prob;
}

}  // namespace ctop
