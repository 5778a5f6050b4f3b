#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dbess/cluster.hpp"
#include "dbess/errors.hpp"
#include "dbess/index_set.hpp"
#include "dbess/splicing.hpp"

namespace dbess {

/// Splicing knobs carried by FixConfig; tau < 0 selects the default
/// threshold default_tau(s, p, N).
struct SplicingOptions {
  int c_max = 2;
  double tau = -1.0;
  int max_splices = 100;
};

struct FixConfig {
  int s = 1;
  int max_rounds = 10;
  SplicingOptions splicing;
  bool warm_start = true;
};

/// One stage-1 round of the fixed-s procedure.
struct RoundRecord {
  int round = 0;
  IndexSet active;
  double surrogate_loss = 0.0;
  double l2_error = std::numeric_limits<double>::quiet_NaN();  // vs theta*, when supplied
  long comm_floats_cum = 0;  // float slots moved so far within this run
};

struct FixResult {
  Eigen::VectorXd theta_hat;
  IndexSet active;
  int rounds_used = 0;
  bool stabilized = false;
  std::vector<RoundRecord> trace;
  CommLedger comm;  // only the records appended by this run
  double init_error = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline SplicingConfig make_splicing_config(const FixConfig& config, int p, long n_total) {
  const int c_max = std::min(config.splicing.c_max, config.s);
  const double tau = config.splicing.tau < 0.0 ? default_tau(config.s, p, n_total)
                                               : config.splicing.tau;
  return SplicingConfig(config.s, c_max, tau, config.splicing.max_splices);
}

inline long ledger_floats_since(const ClusterSim& cluster, std::size_t first) {
  long total = 0;
  for (const auto& r : cluster.ledger().records_since(first))
    total += r.payload_floats;
  return total;
}

}  // namespace detail

/// Two-stage fixed-s procedure. Stage 1 rebuilds the surrogate at each
/// iterate and re-solves it by splicing until the active set stabilizes (or
/// max_rounds is hit; that is reported, not an error). Stage 2 broadcasts
/// the stabilized set, runs restricted least squares on every machine and
/// averages. theta_star, when given, only enriches the trace.
inline FixResult dbess_fix(ClusterSim& cluster, const Eigen::VectorXd& theta0,
                           const FixConfig& config, const Eigen::VectorXd* theta_star = nullptr) {
  const int p = cluster.dim();
  const int m = cluster.machines();
  if (theta0.size() != p)
    throw DimensionMismatch("dbess_fix: theta0 length does not match cluster dimension");
  if (config.s < 1 || config.s > p) throw InvalidConfig("dbess_fix: s must lie in [1, p]");
  if (config.max_rounds < 1) throw InvalidConfig("dbess_fix: max_rounds must be >= 1");

  const SplicingConfig scfg = detail::make_splicing_config(config, p, cluster.total_rows());
  const std::size_t run_start = cluster.ledger().size();

  FixResult result;
  if (theta_star != nullptr) result.init_error = (theta0 - *theta_star).norm();

  const IndexSet init_active = top_s_by_abs(theta0, config.s);
  IndexSet active = init_active;
  Eigen::VectorXd anchor = theta0;

  for (int t = 0; t < config.max_rounds; ++t) {
    const QuadraticObjective surrogate = surrogate_objective(cluster, anchor);
    const IndexSet start = config.warm_start ? active : init_active;
    const QuadSpliceResult solved = quad_splice(surrogate, start, scfg);

    result.rounds_used = t + 1;
    RoundRecord rec;
    rec.round = t + 1;
    rec.active = solved.state.active;
    rec.surrogate_loss = solved.state.loss;
    if (theta_star != nullptr) rec.l2_error = (solved.state.theta - *theta_star).norm();
    rec.comm_floats_cum = detail::ledger_floats_since(cluster, run_start);
    result.trace.push_back(rec);

    const bool same_set = solved.state.active == active;
    active = solved.state.active;
    anchor = solved.state.theta;
    if (same_set) {
      result.stabilized = true;
      break;
    }
  }

  // Stage 2: broadcast the active set, fit restricted least squares on each
  // machine, collect and average.
  const int round = cluster.next_round();
  for (int k = 1; k < m; ++k)
    cluster.ledger().append({round, Direction::Down, k, 0, active.size(), PayloadKind::ActiveSet});

  std::vector<Eigen::VectorXd> estimates;
  estimates.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) estimates.push_back(local_restricted_ols(cluster.shard(k), active));
  for (int k = 1; k < m; ++k)
    cluster.ledger().append({round, Direction::Up, k, active.size(), 0, PayloadKind::LocalEstimate});

  result.theta_hat = average_estimates(estimates);
  result.active = active;
  result.comm = CommLedger(cluster.ledger().records_since(run_start));
  return result;
}

/// Generalized information criterion N log RSS + ||theta||_0 log(p) loglog(N)
/// (natural logarithms). The residual sum of squares is aggregated across
/// machines as one metered scalar per non-coordinator. RSS below the
/// relative interpolation floor 1e-18 * ||Y||^2 is clamped to it so that the
/// criterion stays finite and comparable on (near-)interpolating fits;
/// an exactly nonpositive RSS is DegenerateResidual.
inline double gic(ClusterSim& cluster, const Eigen::VectorXd& theta) {
  const long n_total = cluster.total_rows();
  if (n_total < 3) throw InvalidConfig("gic: needs N >= 3");
  if (theta.size() != cluster.dim())
    throw DimensionMismatch("gic: theta length does not match cluster dimension");

  const int round = cluster.next_round();
  double rss = 0.0;
  double y_sq = 0.0;
  for (int k = 0; k < cluster.machines(); ++k) {
    rss += (cluster.shard(k).y - cluster.shard(k).X * theta).squaredNorm();
    y_sq += 2.0 * static_cast<double>(cluster.shard_rows()) * cluster.stats(k).yss;
    if (k != 0) cluster.ledger().append({round, Direction::Up, k, 1, 0, PayloadKind::Loss});
  }
  if (rss <= 0.0) throw DegenerateResidual("gic: residual sum of squares is not positive");

  const double floor = 1e-18 * y_sq;
  const double rss_eff = std::max(rss, floor);
  const long support = (theta.array() != 0.0).count();
  const double n = static_cast<double>(n_total);
  const double p = static_cast<double>(cluster.dim());
  return n * std::log(rss_eff) + static_cast<double>(support) * std::log(p) * std::log(std::log(n));
}

struct SweepEntry {
  int s = 0;
  double gic = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
  FixResult fit;
};

struct SweepResult {
  std::vector<SweepEntry> path;
  int s_min = 0;
  Eigen::VectorXd theta_selected;
};

/// Run the fixed-s procedure for s = 1..s_max, score each fit by GIC and
/// pick the minimizer (ties to the smaller s). A degenerate residual counts
/// as -inf; per-s errors become failure entries, and the sweep itself fails
/// only if every s fails.
inline SweepResult dbess_sweep(ClusterSim& cluster, const Eigen::VectorXd& theta0, int s_max,
                               const FixConfig& fix_template) {
  const int p = cluster.dim();
  if (s_max < 1 || s_max > p - 1)
    throw InvalidConfig("dbess_sweep: s_max must lie in [1, p - 1]");

  SweepResult result;
  result.path.reserve(static_cast<std::size_t>(s_max));
  for (int s = 1; s <= s_max; ++s) {
    SweepEntry entry;
    entry.s = s;
    FixConfig cfg = fix_template;
    cfg.s = s;
    try {
      entry.fit = dbess_fix(cluster, theta0, cfg);
      try {
        entry.gic = gic(cluster, entry.fit.theta_hat);
      } catch (const DegenerateResidual&) {
        entry.gic = -std::numeric_limits<double>::infinity();
      }
    } catch (const Error& e) {
      entry.failed = true;
      entry.error = std::string(e.name()) + ": " + e.what();
    }
    result.path.push_back(std::move(entry));
  }

  int best = -1;
  for (const auto& entry : result.path) {
    if (entry.failed) continue;
    if (best < 0 || entry.gic < result.path[static_cast<std::size_t>(best)].gic)
      best = entry.s - 1;
  }
  if (best < 0)
    throw Error("dbess_sweep: every support size failed; first: " + result.path.front().error);

  result.s_min = best + 1;
  result.theta_selected = result.path[static_cast<std::size_t>(best)].fit.theta_hat;
  return result;
}

/// One-shot initializer: average of the per-machine unrestricted OLS
/// solutions; p float slots metered up per non-coordinator machine.
inline Eigen::VectorXd oneshot_init(ClusterSim& cluster) {
  const int p = cluster.dim();
  if (cluster.shard_rows() <= p)
    throw RankDeficient("oneshot_init: shards need n > p for unrestricted least squares");

  const int round = cluster.next_round();
  std::vector<Eigen::VectorXd> estimates;
  estimates.reserve(static_cast<std::size_t>(cluster.machines()));
  for (int k = 0; k < cluster.machines(); ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(cluster.stats(k).sigma);
    if (llt.info() != Eigen::Success)
      throw RankDeficient("oneshot_init: shard normal matrix is singular");
    estimates.push_back(llt.solve(cluster.stats(k).w));
    if (k != 0)
      cluster.ledger().append({round, Direction::Up, k, static_cast<long>(p), 0,
                               PayloadKind::LocalEstimate});
  }
  return average_estimates(estimates);
}

}  // namespace dbess
