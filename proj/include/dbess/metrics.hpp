#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dbess/errors.hpp"
#include "dbess/index_set.hpp"

namespace dbess {

/// Support-recovery confusion counts against a ground-truth active set.
struct Confusion {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;
};

inline Confusion confusion(const IndexSet& estimated, const IndexSet& truth, int p) {
  if ((!estimated.empty() && estimated[estimated.size() - 1] >= p) ||
      (!truth.empty() && truth[truth.size() - 1] >= p))
    throw IndexOutOfRange("confusion: set entry exceeds dimension");
  Confusion c;
  c.tp = intersection_size(estimated, truth);
  c.fp = estimated.size() - c.tp;
  c.fn = truth.size() - c.tp;
  c.tn = p - c.tp - c.fp - c.fn;
  return c;
}

struct Rates {
  double tpr = 0.0;
  double tnr = 0.0;
  double mcc = 0.0;
};

/// TPR, TNR and Matthews correlation; any degenerate denominator yields 0.
inline Rates rates(const Confusion& c) {
  Rates r;
  r.tpr = (c.tp + c.fn > 0) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.tnr = (c.fp + c.tn > 0) ? static_cast<double>(c.tn) / static_cast<double>(c.fp + c.tn) : 0.0;
  const double f1 = static_cast<double>(c.tp + c.fp);
  const double f2 = static_cast<double>(c.tp + c.fn);
  const double f3 = static_cast<double>(c.tn + c.fp);
  const double f4 = static_cast<double>(c.tn + c.fn);
  const double denom = f1 * f2 * f3 * f4;
  if (denom > 0.0) {
    r.mcc = (static_cast<double>(c.tp) * static_cast<double>(c.tn) -
             static_cast<double>(c.fp) * static_cast<double>(c.fn)) /
            std::sqrt(denom);
  }
  return r;
}

struct EstimationErrors {
  double see = 0.0;   // ||theta_hat - theta*||_2
  double reee = 0.0;  // see / ||theta*||_2
};

inline EstimationErrors estimation_errors(const Eigen::VectorXd& theta_hat,
                                          const Eigen::VectorXd& theta_star) {
  if (theta_hat.size() != theta_star.size())
    throw DimensionMismatch("estimation_errors: vector lengths differ");
  const double truth_norm = theta_star.norm();
  if (truth_norm == 0.0) throw ZeroTruth("estimation_errors: theta* is zero");
  EstimationErrors e;
  e.see = (theta_hat - theta_star).norm();
  e.reee = e.see / truth_norm;
  return e;
}

}  // namespace dbess
