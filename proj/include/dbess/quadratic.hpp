#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "dbess/errors.hpp"
#include "dbess/index_set.hpp"

namespace dbess {

/// Dense quadratic objective l(theta) = 1/2 theta' G theta + b' theta.
/// G is symmetrized to (G + G')/2 on construction and the largest relative
/// deviation from symmetry is recorded for diagnostics.
class QuadraticObjective {
 public:
  QuadraticObjective(Eigen::MatrixXd hessian, Eigen::VectorXd linear)
      : g_(std::move(hessian)), b_(std::move(linear)) {
    if (g_.rows() != g_.cols())
      throw DimensionMismatch("QuadraticObjective: Hessian must be square");
    if (b_.size() != g_.rows())
      throw DimensionMismatch("QuadraticObjective: linear term length must match Hessian");
    for (Eigen::Index i = 0; i < g_.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < g_.cols(); ++j) {
        const double dev = std::abs(g_(i, j) - g_(j, i)) / (1.0 + std::abs(g_(i, j)));
        if (dev > sym_dev_) sym_dev_ = dev;
      }
    }
    g_ = ((g_ + g_.transpose()) * 0.5).eval();
  }

  int dim() const { return static_cast<int>(b_.size()); }
  const Eigen::MatrixXd& hessian() const { return g_; }
  const Eigen::VectorXd& linear() const { return b_; }
  double symmetry_deviation() const { return sym_dev_; }

 private:
  Eigen::MatrixXd g_;
  Eigen::VectorXd b_;
  double sym_dev_ = 0.0;
};

/// 1/2 theta' G theta + b' theta.
inline double eval(const QuadraticObjective& obj, const Eigen::VectorXd& theta) {
  if (theta.size() != obj.dim())
    throw DimensionMismatch("eval: theta length does not match objective dimension");
  return 0.5 * theta.dot(obj.hessian() * theta) + obj.linear().dot(theta);
}

/// G theta + b.
inline Eigen::VectorXd gradient(const QuadraticObjective& obj, const Eigen::VectorXd& theta) {
  if (theta.size() != obj.dim())
    throw DimensionMismatch("gradient: theta length does not match objective dimension");
  return obj.hessian() * theta + obj.linear();
}

/// Exact minimizer over {theta : supp(theta) ⊆ active}: solves
/// G[A,A] x = -b[A] by Cholesky and scatters x back, zeros elsewhere.
/// A non-positive-definite submatrix is a hard error.
inline Eigen::VectorXd restricted_minimize(const QuadraticObjective& obj, const IndexSet& active) {
  const int p = obj.dim();
  const int k = active.size();
  if (k == 0) throw DimensionMismatch("restricted_minimize: active set is empty");
  if (active[k - 1] >= p)
    throw IndexOutOfRange("restricted_minimize: active index exceeds dimension");

  Eigen::MatrixXd gaa(k, k);
  Eigen::VectorXd ba(k);
  const auto& idx = active.indices();
  for (int r = 0; r < k; ++r) {
    ba(r) = obj.linear()(idx[static_cast<std::size_t>(r)]);
    for (int c = 0; c < k; ++c)
      gaa(r, c) = obj.hessian()(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gaa);
  if (llt.info() != Eigen::Success)
    throw SingularSubproblem("restricted_minimize: restricted Hessian is not positive definite");
  const Eigen::VectorXd xa = llt.solve(-ba);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (int r = 0; r < k; ++r) theta(idx[static_cast<std::size_t>(r)]) = xa(r);
  return theta;
}

}  // namespace dbess
