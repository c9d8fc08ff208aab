#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "momentswap/error.hpp"

namespace momentswap {

// minimize  1/2 x'Gx + c'x   subject to   E x = e,   A x >= a
// G must be symmetric positive definite.
struct QuadraticProgram {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq;
  Eigen::VectorXd ineq_rhs;
  std::vector<std::string> ineq_names;
};

struct QpSolution {
  Eigen::VectorXd x;
  std::vector<int> active;  // indices into the inequality rows
  int iterations = 0;
  double objective = 0.0;
};

class QpError : public Error {
 public:
  QpError(std::string constraint, const std::string& what)
      : Error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

// Primal active-set method started from a feasible point. The variables are
// rescaled so the Hessian has a unit diagonal, which keeps the KKT solves
// well conditioned when the blocks of G differ by many orders of magnitude.
inline QpSolution solve_qp(const QuadraticProgram& qp, const Eigen::VectorXd& feasible_start,
                           std::vector<int> working = {}, int max_iterations = 0) {
  const Eigen::Index n = qp.hessian.rows();
  const Eigen::Index n_eq = qp.eq.rows();
  const Eigen::Index n_in = qp.ineq.rows();
  auto name = [&](Eigen::Index i) {
    return i < static_cast<Eigen::Index>(qp.ineq_names.size()) ? qp.ineq_names[i]
                                                               : "inequality " + std::to_string(i);
  };

  const Eigen::VectorXd scale = qp.hessian.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd G = scale.asDiagonal() * qp.hessian * scale.asDiagonal();
  const Eigen::VectorXd c = scale.cwiseProduct(qp.linear);
  const Eigen::MatrixXd E = n_eq ? Eigen::MatrixXd(qp.eq * scale.asDiagonal()) : Eigen::MatrixXd(0, n);
  const Eigen::MatrixXd A = n_in ? Eigen::MatrixXd(qp.ineq * scale.asDiagonal()) : Eigen::MatrixXd(0, n);
  Eigen::VectorXd y = feasible_start.cwiseQuotient(scale);

  const double feas_tol = 1e-9 * (1.0 + feasible_start.lpNorm<Eigen::Infinity>());
  if (n_eq) {
    const Eigen::VectorXd r = qp.eq * feasible_start - qp.eq_rhs;
    if (r.lpNorm<Eigen::Infinity>() > feas_tol)
      throw QpError("equality", "starting point violates the equality constraints");
  }
  for (Eigen::Index i = 0; i < n_in; ++i)
    if (qp.ineq.row(i).dot(feasible_start) - qp.ineq_rhs(i) < -feas_tol)
      throw QpError(name(i), "starting point violates '" + name(i) + "'");

  std::vector<char> in_working(static_cast<std::size_t>(n_in), 0);
  {
    std::vector<int> kept;
    for (int i : working) {
      if (i < 0 || i >= n_in || in_working[i]) continue;
      if (std::abs(A.row(i).dot(y) - qp.ineq_rhs(i)) <= feas_tol) {
        kept.push_back(i);
        in_working[i] = 1;
      }
    }
    working = std::move(kept);
  }

  if (max_iterations <= 0) max_iterations = static_cast<int>(20 * (n + n_in) + 100);
  QpSolution out;
  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    const Eigen::VectorXd grad = G * y + c;
    const Eigen::Index m = n_eq + static_cast<Eigen::Index>(working.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = G;
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::RowVectorXd row =
          r < n_eq ? Eigen::RowVectorXd(E.row(r)) : Eigen::RowVectorXd(A.row(working[r - n_eq]));
      K.block(n + r, 0, 1, n) = row;
      K.block(0, n + r, n, 1) = row.transpose();
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    rhs.head(n) = -grad;
    Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() >
                                1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
      sol = K.fullPivLu().solve(rhs);
    const Eigen::VectorXd p = sol.head(n);

    if (p.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      // Multipliers for A x >= a are -sol at optimality.
      int drop = -1;
      double most_negative = -1e-9 * (1.0 + grad.lpNorm<Eigen::Infinity>());
      for (std::size_t w = 0; w < working.size(); ++w) {
        const double lambda = -sol(n + n_eq + static_cast<Eigen::Index>(w));
        if (lambda < most_negative) {
          most_negative = lambda;
          drop = static_cast<int>(w);
        }
      }
      if (drop < 0) {
        out.x = scale.cwiseProduct(y);
        out.active = working;
        out.objective = 0.5 * out.x.dot(qp.hessian * out.x) + qp.linear.dot(out.x);
        return out;
      }
      in_working[working[drop]] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < n_in; ++i) {
      if (in_working[i]) continue;
      const double ap = A.row(i).dot(p);
      if (ap >= -1e-14 * (1.0 + p.lpNorm<Eigen::Infinity>())) continue;
      const double slack = std::max(A.row(i).dot(y) - qp.ineq_rhs(i), 0.0);
      const double step = slack / -ap;
      if (step < alpha) {
        alpha = step;
        blocking = static_cast<int>(i);
      }
    }
    y += alpha * p;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[blocking] = 1;
    }
  }
  throw QpError("iteration limit", "active-set solver did not converge");
}

}  // namespace momentswap
