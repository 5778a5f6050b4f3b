#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <utility>
#include <vector>

#include "dbess/errors.hpp"
#include "dbess/index_set.hpp"
#include "dbess/quadratic.hpp"
#include "dbess/rng.hpp"

namespace dbess {

/// One machine's slice of the data.
struct Shard {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  int machine_id = 0;
};

/// Sufficient statistics of one machine's quadratic loss
/// f_k(theta) = 1/2 theta' Sigma_k theta - w_k' theta + yss.
struct LocalStats {
  Eigen::MatrixXd sigma;  // X'X / n
  Eigen::VectorXd w;      // X'y / n
  double yss = 0.0;       // sum(y^2) / (2n)
};

enum class Direction { Up, Down };
enum class PayloadKind { Gradient, Theta, ActiveSet, LocalEstimate, Loss };

inline const char* to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }
inline const char* to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::Gradient: return "gradient";
    case PayloadKind::Theta: return "theta";
    case PayloadKind::ActiveSet: return "active_set";
    case PayloadKind::LocalEstimate: return "local_estimate";
    case PayloadKind::Loss: return "loss";
  }
  return "unknown";
}

/// One metered message between the coordinator and a machine. Float and
/// integer slots are counted separately.
struct CommRecord {
  int round = 0;
  Direction direction = Direction::Up;
  int machine_id = 0;
  long payload_floats = 0;
  long payload_ints = 0;
  PayloadKind kind = PayloadKind::Gradient;
};

/// Append-only communication ledger; appends are thread-safe and keep a
/// total order.
class CommLedger {
 public:
  CommLedger() = default;
  explicit CommLedger(std::vector<CommRecord> records) : records_(std::move(records)) {}

  CommLedger(const CommLedger& other) : records_(other.records()) {}
  CommLedger& operator=(const CommLedger& other) {
    if (this != &other) {
      auto copy = other.records();
      std::lock_guard<std::mutex> lock(mu_);
      records_ = std::move(copy);
    }
    return *this;
  }

  void append(const CommRecord& rec) {
    std::lock_guard<std::mutex> lock(mu_);
    records_.push_back(rec);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
  }

  std::vector<CommRecord> records() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_;
  }

  std::vector<CommRecord> records_since(std::size_t first) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (first >= records_.size()) return {};
    return std::vector<CommRecord>(records_.begin() + static_cast<std::ptrdiff_t>(first),
                                   records_.end());
  }

  long total_floats(Direction dir) const {
    std::lock_guard<std::mutex> lock(mu_);
    long total = 0;
    for (const auto& r : records_)
      if (r.direction == dir) total += r.payload_floats;
    return total;
  }

  long total_floats(Direction dir, PayloadKind kind) const {
    std::lock_guard<std::mutex> lock(mu_);
    long total = 0;
    for (const auto& r : records_)
      if (r.direction == dir && r.kind == kind) total += r.payload_floats;
    return total;
  }

  long total_ints(Direction dir) const {
    std::lock_guard<std::mutex> lock(mu_);
    long total = 0;
    for (const auto& r : records_)
      if (r.direction == dir) total += r.payload_ints;
    return total;
  }

  long total_ints(Direction dir, PayloadKind kind) const {
    std::lock_guard<std::mutex> lock(mu_);
    long total = 0;
    for (const auto& r : records_)
      if (r.direction == dir && r.kind == kind) total += r.payload_ints;
    return total;
  }

 private:
  mutable std::mutex mu_;
  std::vector<CommRecord> records_;
};

/// Per-machine sufficient statistics from raw data.
inline LocalStats local_stats(const Shard& shard) {
  const auto n = shard.X.rows();
  if (n < 1) throw EmptyInput("local_stats: shard has no rows");
  if (shard.y.size() != n) throw DimensionMismatch("local_stats: X and y row counts differ");
  LocalStats out;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.sigma = (shard.X.transpose() * shard.X) * inv_n;
  out.w = (shard.X.transpose() * shard.y) * inv_n;
  out.yss = shard.y.squaredNorm() * 0.5 * inv_n;
  return out;
}

/// Shuffle rows by a seeded permutation, then split into m equal contiguous
/// blocks. Every row lands in exactly one shard.
inline std::vector<Shard> partition(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int m,
                                    std::uint64_t seed) {
  const long n_total = X.rows();
  if (y.size() != n_total) throw DimensionMismatch("partition: X and y row counts differ");
  if (m < 1) throw InvalidConfig("partition: m must be >= 1");
  if (n_total % m != 0) throw IndivisibleN("partition: m does not divide N");

  std::vector<long> perm(static_cast<std::size_t>(n_total));
  std::iota(perm.begin(), perm.end(), 0L);
  Rng rng(seed);
  for (long i = n_total - 1; i > 0; --i) {
    const long j = static_cast<long>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  const long n = n_total / m;
  std::vector<Shard> shards(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    Shard& s = shards[static_cast<std::size_t>(k)];
    s.machine_id = k;
    s.X.resize(n, X.cols());
    s.y.resize(n);
    for (long r = 0; r < n; ++r) {
      const long src = perm[static_cast<std::size_t>(k * n + r)];
      s.X.row(r) = X.row(src);
      s.y(r) = y(src);
    }
  }
  return shards;
}

/// Simulated m-machine cluster over disjoint equal shards. Machine 0 is the
/// coordinator; its Gram matrix seeds the surrogate Hessian. The ledger is
/// the only mutable state.
class ClusterSim {
 public:
  explicit ClusterSim(std::vector<Shard> shards) : shards_(std::move(shards)) {
    if (shards_.empty()) throw EmptyInput("ClusterSim: no shards");
    const auto p = shards_.front().X.cols();
    const auto n = shards_.front().X.rows();
    stats_.reserve(shards_.size());
    for (const auto& s : shards_) {
      if (s.X.cols() != p) throw DimensionMismatch("ClusterSim: shards disagree on dimension p");
      if (s.X.rows() != n) throw DimensionMismatch("ClusterSim: shards must have equal sizes");
      stats_.push_back(local_stats(s));
    }
  }

  int machines() const { return static_cast<int>(shards_.size()); }
  int dim() const { return static_cast<int>(shards_.front().X.cols()); }
  long shard_rows() const { return shards_.front().X.rows(); }
  long total_rows() const { return shard_rows() * machines(); }

  const Shard& shard(int k) const { return shards_.at(static_cast<std::size_t>(k)); }
  const LocalStats& stats(int k) const { return stats_.at(static_cast<std::size_t>(k)); }

  CommLedger& ledger() { return ledger_; }
  const CommLedger& ledger() const { return ledger_; }

  int next_round() { return round_++; }

 private:
  std::vector<Shard> shards_;
  std::vector<LocalStats> stats_;
  CommLedger ledger_;
  int round_ = 0;
};

/// Gradient of one machine's loss, Sigma_k theta - w_k.
inline Eigen::VectorXd local_gradient(const LocalStats& stats, const Eigen::VectorXd& theta) {
  if (theta.size() != stats.w.size())
    throw DimensionMismatch("local_gradient: theta length does not match statistics");
  return stats.sigma * theta - stats.w;
}

/// Average of the machine gradients at theta. Meters one sparse theta
/// broadcast (index/value pairs, 2*nnz float slots) down and one dense
/// gradient (p float slots) up per non-coordinator machine.
inline Eigen::VectorXd aggregate_gradient(ClusterSim& cluster, const Eigen::VectorXd& theta,
                                          int round) {
  const int p = cluster.dim();
  if (theta.size() != p)
    throw DimensionMismatch("aggregate_gradient: theta length does not match cluster dimension");
  const long nnz = (theta.array() != 0.0).count();

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < cluster.machines(); ++k) {
    sum += local_gradient(cluster.stats(k), theta);
    if (k != 0) {
      cluster.ledger().append({round, Direction::Down, k, 2 * nnz, 0, PayloadKind::Theta});
      cluster.ledger().append({round, Direction::Up, k, static_cast<long>(p), 0, PayloadKind::Gradient});
    }
  }
  return sum / static_cast<double>(cluster.machines());
}

/// Gradient-enhanced surrogate anchored at theta0: Hessian is the
/// coordinator's Gram matrix, the linear term shifts it so the surrogate
/// gradient matches the global gradient at the anchor. Costs one metered
/// gradient round.
inline QuadraticObjective surrogate_objective(ClusterSim& cluster, const Eigen::VectorXd& theta0) {
  if (theta0.size() != cluster.dim())
    throw DimensionMismatch("surrogate_objective: theta0 length does not match cluster dimension");
  const Eigen::VectorXd global_grad = aggregate_gradient(cluster, theta0, cluster.next_round());
  const Eigen::VectorXd b = global_grad - cluster.stats(0).sigma * theta0;
  return QuadraticObjective(cluster.stats(0).sigma, b);
}

/// Least-squares fit of one shard restricted to the active columns; zeros
/// elsewhere.
inline Eigen::VectorXd local_restricted_ols(const Shard& shard, const IndexSet& active) {
  const int p = static_cast<int>(shard.X.cols());
  const long n = shard.X.rows();
  const int k = active.size();
  if (k == 0) throw DimensionMismatch("local_restricted_ols: active set is empty");
  if (active[k - 1] >= p)
    throw IndexOutOfRange("local_restricted_ols: active index exceeds dimension");
  if (n < k) throw RankDeficient("local_restricted_ols: fewer rows than active columns");

  Eigen::MatrixXd xa(n, k);
  for (int c = 0; c < k; ++c) xa.col(c) = shard.X.col(active[c]);
  const Eigen::MatrixXd gram = xa.transpose() * xa;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw RankDeficient("local_restricted_ols: restricted normal matrix is singular");
  const Eigen::VectorXd coef = llt.solve(xa.transpose() * shard.y);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (int c = 0; c < k; ++c) out(active[c]) = coef(c);
  return out;
}

/// Coordinate-wise mean of equal-length vectors.
inline Eigen::VectorXd average_estimates(const std::vector<Eigen::VectorXd>& estimates) {
  if (estimates.empty()) throw EmptyInput("average_estimates: no estimates");
  const auto p = estimates.front().size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  for (const auto& e : estimates) {
    if (e.size() != p) throw DimensionMismatch("average_estimates: estimate lengths differ");
    sum += e;
  }
  return sum / static_cast<double>(estimates.size());
}

}  // namespace dbess
