#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dbess/errors.hpp"
#include "dbess/index_set.hpp"
#include "dbess/quadratic.hpp"

namespace dbess {

/// One splicing iterate: the active/inactive partition, the primal vector
/// theta (zero off the active set), the dual d = -(G theta + b), and the
/// objective value at theta. After a restricted solve the dual vanishes on
/// the active set up to solver tolerance.
struct SplicingState {
  IndexSet active;
  IndexSet inactive;
  Eigen::VectorXd theta;
  Eigen::VectorXd dual;
  double loss = 0.0;
};

/// Parameters of the splicing solver: target support size s, maximum
/// exchange size c_max (at most s), descent threshold tau, and a cap on the
/// number of accepted splices.
struct SplicingConfig {
  int s;
  int c_max;
  double tau;
  int max_splices;

  SplicingConfig(int s_, int c_max_, double tau_, int max_splices_ = 100)
      : s(s_), c_max(c_max_), tau(tau_), max_splices(max_splices_) {
    if (s < 1) throw InvalidConfig("SplicingConfig: support size s must be >= 1");
    if (c_max < 1 || c_max > s)
      throw InvalidConfig("SplicingConfig: c_max must satisfy 1 <= c_max <= s");
    if (tau < 0.0) throw InvalidConfig("SplicingConfig: tau must be nonnegative");
    if (max_splices < 1) throw InvalidConfig("SplicingConfig: max_splices must be >= 1");
  }
};

/// Default descent threshold, 0.01 * s * log(p) * log(log(N)) / N.
inline double default_tau(int s, int p, long n_total) {
  if (n_total < 3) throw InvalidConfig("default_tau: total sample size must be >= 3");
  return 0.01 * s * std::log(static_cast<double>(p)) *
         std::log(std::log(static_cast<double>(n_total))) / static_cast<double>(n_total);
}

/// Indices of the s largest |v_j|, ties to the lower index. An all-zero v
/// therefore yields {0, ..., s-1}.
inline IndexSet top_s_by_abs(const Eigen::VectorXd& v, int s) {
  const int p = static_cast<int>(v.size());
  if (s < 1 || s > p) throw InvalidConfig("top_s_by_abs: s must lie in [1, p]");
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = std::abs(v(a));
    const double vb = std::abs(v(b));
    if (va != vb) return va > vb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(s));
  return IndexSet::from_unsorted(std::move(order));
}

/// Restricted solve on `active`, packaged with its dual and loss.
inline SplicingState restricted_state(const QuadraticObjective& obj, const IndexSet& active) {
  SplicingState st;
  st.active = active;
  st.inactive = active.complement(obj.dim());
  st.theta = restricted_minimize(obj, active);
  st.dual = -gradient(obj, st.theta);
  st.loss = eval(obj, st.theta);
  return st;
}

/// Backward sacrifices xi_j = G_jj theta_j^2 (aligned with state.active) and
/// forward sacrifices zeta_j = d_j^2 / G_jj (aligned with state.inactive).
/// These are twice the loss changes of deleting/adding one coordinate.
struct Sacrifices {
  Eigen::VectorXd backward;
  Eigen::VectorXd forward;
};

inline Sacrifices sacrifices(const QuadraticObjective& obj, const SplicingState& state) {
  const int p = obj.dim();
  for (int j = 0; j < p; ++j) {
    if (obj.hessian()(j, j) <= 0.0)
      throw NonPositiveDiagonal("sacrifices: Hessian diagonal entry " + std::to_string(j) +
                                " is not positive");
  }
  Sacrifices out;
  out.backward.resize(state.active.size());
  for (int i = 0; i < state.active.size(); ++i) {
    const int j = state.active[i];
    out.backward(i) = obj.hessian()(j, j) * state.theta(j) * state.theta(j);
  }
  out.forward.resize(state.inactive.size());
  for (int i = 0; i < state.inactive.size(); ++i) {
    const int j = state.inactive[i];
    out.forward(i) = state.dual(j) * state.dual(j) / obj.hessian()(j, j);
  }
  return out;
}

/// The exchange candidates for size c: `leave` holds the c active indices of
/// smallest backward sacrifice, `enter` the c inactive indices of largest
/// forward sacrifice. Ties go to the smaller index.
struct SpliceSets {
  IndexSet leave;
  IndexSet enter;
};

inline SpliceSets splice_sets(const Eigen::VectorXd& xi, const IndexSet& active,
                              const Eigen::VectorXd& zeta, const IndexSet& inactive, int c) {
  if (xi.size() != active.size() || zeta.size() != inactive.size())
    throw DimensionMismatch("splice_sets: sacrifice lengths must match set sizes");
  if (c < 1 || c > active.size() || c > inactive.size())
    throw ExchangeTooLarge("splice_sets: exchange size exceeds a set size");

  std::vector<int> pos_a(static_cast<std::size_t>(active.size()));
  std::iota(pos_a.begin(), pos_a.end(), 0);
  std::sort(pos_a.begin(), pos_a.end(), [&](int a, int b) {
    if (xi(a) != xi(b)) return xi(a) < xi(b);
    return active[a] < active[b];
  });

  std::vector<int> pos_i(static_cast<std::size_t>(inactive.size()));
  std::iota(pos_i.begin(), pos_i.end(), 0);
  std::sort(pos_i.begin(), pos_i.end(), [&](int a, int b) {
    if (zeta(a) != zeta(b)) return zeta(a) > zeta(b);
    return inactive[a] < inactive[b];
  });

  std::vector<int> leave(static_cast<std::size_t>(c));
  std::vector<int> enter(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) {
    leave[static_cast<std::size_t>(i)] = active[pos_a[static_cast<std::size_t>(i)]];
    enter[static_cast<std::size_t>(i)] = inactive[pos_i[static_cast<std::size_t>(i)]];
  }
  return {IndexSet::from_unsorted(std::move(leave)), IndexSet::from_unsorted(std::move(enter))};
}

/// Result of one splicing attempt. When no exchange size improves the loss
/// by more than tau, the input state is returned with accepted = false.
struct SpliceStep {
  SplicingState state;
  bool accepted = false;
  int c_used = 0;
};

/// Try exchange sizes c = 1, ..., c_max in order and accept the first whose
/// restricted re-solve drops the loss by more than tau.
inline SpliceStep splice_once(const QuadraticObjective& obj, const SplicingState& state,
                              const SplicingConfig& config) {
  const int c_hi = std::min({config.c_max, state.active.size(), state.inactive.size()});
  if (c_hi < 1) return {state, false, 0};

  const Sacrifices sac = sacrifices(obj, state);
  for (int c = 1; c <= c_hi; ++c) {
    const SpliceSets sets = splice_sets(sac.backward, state.active, sac.forward, state.inactive, c);
    const IndexSet trial = set_union(set_difference(state.active, sets.leave), sets.enter);
    SplicingState candidate = restricted_state(obj, trial);
    if (state.loss - candidate.loss > config.tau) return {std::move(candidate), true, c};
  }
  return {state, false, 0};
}

struct QuadSpliceResult {
  SplicingState state;
  int splices = 0;
  bool hit_iteration_cap = false;
};

/// The splicing solver for min 1/2 theta'G theta + b'theta s.t. ||theta||_0 = s:
/// restricted solve on the initial set, then repeated splices until no
/// exchange size improves the loss by more than tau.
inline QuadSpliceResult quad_splice(const QuadraticObjective& obj, const IndexSet& init_active,
                                    const SplicingConfig& config) {
  if (init_active.size() != config.s)
    throw InvalidConfig("quad_splice: initial active set size must equal config.s");

  QuadSpliceResult out;
  out.state = restricted_state(obj, init_active);
  while (out.splices < config.max_splices) {
    SpliceStep step = splice_once(obj, out.state, config);
    if (!step.accepted) return out;
    out.state = std::move(step.state);
    ++out.splices;
  }
  out.hit_iteration_cap = true;
  return out;
}

/// Half-open/closed interval of penalty values rho; +/-infinity encoded as
/// the usual IEEE infinities.
struct RhoInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_open = true;
  bool upper_open = false;
};

namespace detail {

/// r(c) = (c-th largest |d_j| over the inactive set) divided by
/// (c-th smallest |theta_i| over the active set).
inline double rho_threshold(const SplicingState& state, int c) {
  std::vector<double> abs_theta;
  abs_theta.reserve(static_cast<std::size_t>(state.active.size()));
  for (int j : state.active) abs_theta.push_back(std::abs(state.theta(j)));
  std::sort(abs_theta.begin(), abs_theta.end());

  std::vector<double> abs_dual;
  abs_dual.reserve(static_cast<std::size_t>(state.inactive.size()));
  for (int j : state.inactive) abs_dual.push_back(std::abs(state.dual(j)));
  std::sort(abs_dual.begin(), abs_dual.end(), std::greater<double>());

  const double num = abs_dual[static_cast<std::size_t>(c - 1)];
  const double den = abs_theta[static_cast<std::size_t>(c - 1)];
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace detail

/// Interval of rho values for which the rank-rule update exchanges exactly
/// `c` elements: (r(1), inf) for c = 0, (r(c+1), r(c)] for 1 <= c < s, and
/// (0, r(s)] for c = s. The s+1 intervals tile (0, inf).
inline RhoInterval rho_interval(const SplicingState& state, int c) {
  const int s = state.active.size();
  if (c < 0 || c > s) throw ExchangeTooLarge("rho_interval: c must lie in [0, s]");
  const int needed = (c == 0) ? 1 : std::min(c + 1, s);
  if (needed > state.inactive.size())
    throw ExchangeTooLarge("rho_interval: inactive set smaller than exchange size");

  const double inf = std::numeric_limits<double>::infinity();
  if (c == 0) return {detail::rho_threshold(state, 1), inf, true, true};
  if (c == s) return {0.0, detail::rho_threshold(state, s), true, false};
  return {detail::rho_threshold(state, c + 1), detail::rho_threshold(state, c), true, false};
}

/// Active set picked by the rank rule at penalty rho: the s indices with the
/// largest |theta_j + d_j / rho|, ties to the smaller index.
inline IndexSet rank_rule_active(const SplicingState& state, double rho) {
  const int p = static_cast<int>(state.theta.size());
  const int s = state.active.size();
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> score(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    score[static_cast<std::size_t>(j)] = std::abs(state.theta(j) + state.dual(j) / rho);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(s));
  return IndexSet::from_unsorted(std::move(order));
}

/// Brute-force reference: enumerate all size-s supports, solve each
/// restricted problem, return the best support (ties lexicographic) and its
/// objective value. Guarded against combinatorial blowup.
inline std::pair<IndexSet, double> exhaustive_min(const QuadraticObjective& obj, int s) {
  const int p = obj.dim();
  if (s < 1 || s > p) throw InvalidConfig("exhaustive_min: s must lie in [1, p]");

  double count = 1.0;
  for (int i = 0; i < s; ++i) count = count * static_cast<double>(p - i) / static_cast<double>(i + 1);
  if (count > 1e6) throw TooManySubsets("exhaustive_min: C(p, s) exceeds 1e6");

  std::vector<int> comb(static_cast<std::size_t>(s));
  std::iota(comb.begin(), comb.end(), 0);

  IndexSet best_set;
  double best_loss = std::numeric_limits<double>::infinity();
  while (true) {
    const IndexSet candidate{std::vector<int>(comb)};
    const double loss = eval(obj, restricted_minimize(obj, candidate));
    if (loss < best_loss) {
      best_loss = loss;
      best_set = candidate;
    }
    // next lexicographic combination
    int i = s - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == p - s + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < s; ++j)
      comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  return {best_set, best_loss};
}

}  // namespace dbess
