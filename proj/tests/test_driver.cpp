#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dbess/datagen.hpp"
#include "dbess/driver.hpp"
#include "dbess/experiment.hpp"
#include "dbess/metrics.hpp"
#include "test_helpers.hpp"

using dbess::ClusterSim;
using dbess::Direction;
using dbess::FixConfig;
using dbess::IndexSet;
using dbess::PayloadKind;

namespace {

ClusterSim noiseless_cluster(std::uint64_t seed, long n, int p, int s_star, int m,
                             Eigen::VectorXd* theta_star_out = nullptr) {
  const auto data = testutil::noiseless_data(seed, n, p, s_star);
  if (theta_star_out != nullptr) *theta_star_out = data.theta_star;
  return ClusterSim(dbess::partition(data.X, data.y, m, dbess::derive_seed(seed, 3)));
}

}  // namespace

TEST_CASE("top_s_by_abs ranking and zero input", "[driver]") {
  Eigen::VectorXd v(5);
  v << 0.1, -3.0, 0.0, 2.0, -2.0;
  CHECK(dbess::top_s_by_abs(v, 2) == IndexSet({1, 3}));
  CHECK(dbess::top_s_by_abs(v, 3) == IndexSet({1, 3, 4}));
  CHECK(dbess::top_s_by_abs(Eigen::VectorXd::Zero(5), 3) == IndexSet({0, 1, 2}));

  Eigen::VectorXd ties(4);
  ties << 1.0, -1.0, 1.0, 0.5;
  CHECK(dbess::top_s_by_abs(ties, 2) == IndexSet({0, 1}));
}

TEST_CASE("noiseless data with the true anchor stabilizes in one round", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(61, 400, 12, 3, 4, &theta_star);

  FixConfig config;
  config.s = 3;
  const auto fit = dbess::dbess_fix(cluster, theta_star, config, &theta_star);

  CHECK(fit.stabilized);
  CHECK(fit.rounds_used == 1);
  CHECK(fit.active == dbess::top_s_by_abs(theta_star, 3));
  CHECK((fit.theta_hat - theta_star).norm() <= 1e-9);
  CHECK(fit.init_error == 0.0);
}

TEST_CASE("single machine reduces to centralized splicing plus OLS refit", "[driver]") {
  dbess::Rng rng(67);
  const int p = 15, s = 4;
  const Eigen::MatrixXd x = testutil::random_matrix(rng, 300, p);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  coef(2) = 1.5;
  coef(7) = -1.0;
  coef(9) = 2.0;
  coef(12) = 0.5;
  Eigen::VectorXd y = x * coef;
  for (long i = 0; i < y.size(); ++i) y(i) += 0.8 * rng.normal();

  ClusterSim solo(dbess::partition(x, y, 1, 71));
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(p);
  FixConfig config;
  config.s = s;
  config.splicing.tau = 0.0;
  config.splicing.c_max = s;
  const auto fit = dbess::dbess_fix(solo, theta0, config);

  // centralized reference on the same pooled rows
  const Eigen::MatrixXd& xs = solo.shard(0).X;
  const Eigen::VectorXd& ys = solo.shard(0).y;
  dbess::QuadraticObjective pooled(xs.transpose() * xs / 300.0, -xs.transpose() * ys / 300.0);
  const auto central = dbess::quad_splice(pooled, dbess::top_s_by_abs(theta0, s),
                                          dbess::SplicingConfig(s, s, 0.0));
  CHECK(fit.active == central.state.active);
  const Eigen::VectorXd refit = dbess::local_restricted_ols(solo.shard(0), central.state.active);
  CHECK((fit.theta_hat - refit).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("spiked-design configuration stabilizes and improves on the initializer", "[driver]") {
  // one desk-scale replicate of the convergence-trace setting
  dbess::RunConfig cfg;
  cfg.N = 2000;
  cfg.m = 10;
  cfg.p = 50;
  cfg.s_star = 5;
  cfg.structure = "uncorrelated";
  cfg.seed = 910;
  const auto synth = dbess::make_synthetic(cfg, cfg.seed);
  ClusterSim cluster = dbess::build_cluster(synth.data, cfg.m, cfg.seed);
  const Eigen::VectorXd theta_star = synth.meta.theta_star();

  const Eigen::VectorXd theta0 = dbess::oneshot_init(cluster);
  const auto fit = dbess::dbess_fix(cluster, theta0, cfg.fix_config(cfg.s_star), &theta_star);

  CHECK(fit.stabilized);
  CHECK(fit.rounds_used <= 10);
  CHECK((fit.theta_hat - theta_star).norm() < fit.init_error);
  for (std::size_t i = 0; i < fit.trace.size(); ++i) CHECK(fit.trace[i].round == static_cast<int>(i) + 1);
}

TEST_CASE("stage-1 fixed point is idempotent", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(73, 600, 10, 3, 3, &theta_star);
  FixConfig config;
  config.s = 3;
  const auto fit = dbess::dbess_fix(cluster, theta_star, config);
  REQUIRE(fit.stabilized);

  // rerunning a round from the stabilized iterate reproduces the set
  const auto again = dbess::dbess_fix(cluster, fit.theta_hat, config);
  CHECK(again.stabilized);
  CHECK(again.rounds_used == 1);
  CHECK(again.active == fit.active);
}

TEST_CASE("output support is bounded by s", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(79, 500, 10, 2, 5, &theta_star);
  for (int s = 1; s <= 4; ++s) {
    FixConfig config;
    config.s = s;
    const auto fit = dbess::dbess_fix(cluster, Eigen::VectorXd::Zero(10), config);
    CHECK(fit.active.size() == s);
    CHECK((fit.theta_hat.array() != 0.0).count() <= s);
    for (int j = 0; j < 10; ++j)
      if (!fit.active.contains(j)) CHECK(fit.theta_hat(j) == 0.0);
  }
}

TEST_CASE("fixed-s communication accounting is exact", "[driver]") {
  dbess::Rng seeds(83);
  for (int rep = 0; rep < 5; ++rep) {
    const int m = 2 + static_cast<int>(seeds.below(5));
    const int p = 10 + static_cast<int>(seeds.below(20));
    const int s = 1 + static_cast<int>(seeds.below(4));
    const long n_total = static_cast<long>(m) * (p + 20);

    dbess::Rng rng(seeds.next_u64());
    const Eigen::MatrixXd x = testutil::random_matrix(rng, n_total, p);
    const Eigen::VectorXd y = testutil::random_vector(rng, static_cast<int>(n_total));
    ClusterSim cluster(dbess::partition(x, y, m, 5));

    FixConfig config;
    config.s = s;
    const auto fit = dbess::dbess_fix(cluster, Eigen::VectorXd::Zero(p), config);

    const long t1 = fit.rounds_used;
    CHECK(fit.comm.total_floats(Direction::Up, PayloadKind::Gradient) ==
          t1 * static_cast<long>(m - 1) * p);
    CHECK(fit.comm.total_floats(Direction::Up, PayloadKind::LocalEstimate) ==
          static_cast<long>(m - 1) * fit.active.size());
    CHECK(fit.comm.total_ints(Direction::Down, PayloadKind::ActiveSet) ==
          static_cast<long>(m - 1) * fit.active.size());
  }
}

TEST_CASE("gic formula and degenerate handling", "[driver]") {
  dbess::Rng rng(89);

  SECTION("zero support gives N log ||Y||^2 exactly") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 8, 3);
    const Eigen::VectorXd y = testutil::random_vector(rng, 8);
    ClusterSim cluster(dbess::partition(x, y, 2, 1));
    double y_sq = 0.0;
    for (int k = 0; k < 2; ++k) y_sq += cluster.shard(k).y.squaredNorm();
    CHECK(dbess::gic(cluster, Eigen::VectorXd::Zero(3)) ==
          Catch::Approx(8.0 * std::log(y_sq)).margin(1e-12));
  }

  SECTION("hand-sized instance matches the pooled formula") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 8, 3);
    const Eigen::VectorXd y = testutil::random_vector(rng, 8);
    ClusterSim cluster(dbess::partition(x, y, 2, 1));
    Eigen::VectorXd theta(3);
    theta << 0.5, 0.0, -1.0;

    Eigen::MatrixXd pooled_x(8, 3);
    Eigen::VectorXd pooled_y(8);
    pooled_x << cluster.shard(0).X, cluster.shard(1).X;
    pooled_y << cluster.shard(0).y, cluster.shard(1).y;
    const double rss = (pooled_y - pooled_x * theta).squaredNorm();
    const double expected = 8.0 * std::log(rss) + 2.0 * std::log(3.0) * std::log(std::log(8.0));
    CHECK(dbess::gic(cluster, theta) == Catch::Approx(expected).epsilon(1e-12));

    // one metered scalar per non-coordinator machine
    CHECK(cluster.ledger().total_floats(Direction::Up, PayloadKind::Loss) == 1);
  }

  SECTION("scaling y shifts GIC by 2N log c and keeps the argmin") {
    Eigen::VectorXd theta_star;
    const auto data = testutil::noiseless_data(97, 200, 8, 2);
    Eigen::VectorXd y_noisy = data.y;
    dbess::Rng noise(7);
    for (long i = 0; i < y_noisy.size(); ++i) y_noisy(i) += 0.5 * noise.normal();

    const double c = 3.0;
    ClusterSim base(dbess::partition(data.X, y_noisy, 2, 1));
    ClusterSim scaled(dbess::partition(data.X, (c * y_noisy).eval(), 2, 1));

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
    FixConfig config;
    std::vector<double> gic_base, gic_scaled;
    for (int s = 1; s <= 4; ++s) {
      config.s = s;
      const auto fit = dbess::dbess_fix(base, zero, config);
      const auto fit_scaled = dbess::dbess_fix(scaled, zero, config);
      gic_base.push_back(dbess::gic(base, fit.theta_hat));
      gic_scaled.push_back(dbess::gic(scaled, fit_scaled.theta_hat));
    }
    const double shift = 2.0 * 200.0 * std::log(c);
    for (std::size_t i = 0; i < gic_base.size(); ++i)
      CHECK(gic_scaled[i] - gic_base[i] == Catch::Approx(shift).epsilon(1e-9));
    const auto argmin = [](const std::vector<double>& v) {
      return std::min_element(v.begin(), v.end()) - v.begin();
    };
    CHECK(argmin(gic_base) == argmin(gic_scaled));
  }
}

TEST_CASE("sweep selects the true sparsity on noiseless data", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(101, 600, 12, 3, 3, &theta_star);

  const auto sweep = dbess::dbess_sweep(cluster, Eigen::VectorXd::Zero(12), 6, FixConfig{});
  CHECK(sweep.s_min == 3);
  CHECK(sweep.path.size() == 6);

  // GIC strictly drops up to s*; beyond s* the clamped criterion rises with
  // the penalty
  for (int s = 1; s < 3; ++s)
    CHECK(sweep.path[static_cast<std::size_t>(s)].gic <
          sweep.path[static_cast<std::size_t>(s - 1)].gic);
  for (int s = 3; s < 6; ++s)
    CHECK(sweep.path[static_cast<std::size_t>(s)].gic >
          sweep.path[static_cast<std::size_t>(s - 1)].gic);

  const auto fit_errors =
      dbess::estimation_errors(sweep.theta_selected, theta_star);
  CHECK(fit_errors.see <= 1e-8);
}

TEST_CASE("gic preconditions and degenerate residuals", "[driver]") {
  dbess::Rng rng(113);

  SECTION("N < 3 is rejected") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 2, 2);
    const Eigen::VectorXd y = testutil::random_vector(rng, 2);
    ClusterSim tiny(dbess::partition(x, y, 1, 1));
    CHECK_THROWS_AS(dbess::gic(tiny, Eigen::VectorXd::Zero(2)), dbess::InvalidConfig);
  }

  SECTION("exactly zero residuals are DegenerateResidual; sweeps treat them as -inf") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 12, 3);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(12);
    ClusterSim cluster(dbess::partition(x, y, 2, 1));
    CHECK_THROWS_AS(dbess::gic(cluster, Eigen::VectorXd::Zero(3)), dbess::DegenerateResidual);
  }
}

TEST_CASE("warm-start ablation still reaches the same fit here", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(127, 500, 10, 3, 5, &theta_star);
  FixConfig warm;
  warm.s = 3;
  FixConfig cold = warm;
  cold.warm_start = false;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(10);
  const auto fit_warm = dbess::dbess_fix(cluster, zero, warm);
  const auto fit_cold = dbess::dbess_fix(cluster, zero, cold);
  CHECK(fit_warm.active == fit_cold.active);
  CHECK((fit_warm.theta_hat - fit_cold.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("sweep with a single candidate picks it", "[driver]") {
  Eigen::VectorXd theta_star;
  ClusterSim cluster = noiseless_cluster(103, 300, 6, 1, 3, &theta_star);
  const auto sweep = dbess::dbess_sweep(cluster, Eigen::VectorXd::Zero(6), 1, FixConfig{});
  CHECK(sweep.s_min == 1);
}

TEST_CASE("oneshot initializer", "[driver]") {
  dbess::Rng rng(107);

  SECTION("single machine equals the global OLS") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 50, 6);
    const Eigen::VectorXd y = testutil::random_vector(rng, 50);
    ClusterSim solo(dbess::partition(x, y, 1, 2));
    const Eigen::VectorXd init = dbess::oneshot_init(solo);
    const Eigen::VectorXd ols = (x.transpose() * x).llt().solve(x.transpose() * y);
    CHECK((init - ols).lpNorm<Eigen::Infinity>() <= 1e-10);
  }

  SECTION("noiseless data recovers theta*") {
    Eigen::VectorXd theta_star;
    ClusterSim cluster = noiseless_cluster(109, 400, 8, 3, 4, &theta_star);
    const Eigen::VectorXd init = dbess::oneshot_init(cluster);
    CHECK((init - theta_star).norm() <= 1e-9);
    CHECK(cluster.ledger().total_floats(Direction::Up, PayloadKind::LocalEstimate) == 3 * 8);
  }

  SECTION("n <= p is rank deficient") {
    const Eigen::MatrixXd x = testutil::random_matrix(rng, 8, 4);
    const Eigen::VectorXd y = testutil::random_vector(rng, 8);
    ClusterSim cluster(dbess::partition(x, y, 2, 2));  // n = 4 = p
    CHECK_THROWS_AS(dbess::oneshot_init(cluster), dbess::RankDeficient);
  }
}

TEST_CASE("estimation error halves when N doubles", "[driver]") {
  // desk-scale check of the error-rate scaling; the acceptance suite runs
  // the full-size version
  const int reps = 20, m = 5, p = 30, s_star = 4;
  std::vector<double> see_sq_small, see_sq_large;
  for (int r = 0; r < reps; ++r) {
    for (const long n_total : {1500L, 3000L}) {
      dbess::RunConfig cfg;
      cfg.N = n_total;
      cfg.m = m;
      cfg.p = p;
      cfg.s_star = s_star;
      cfg.structure = "uncorrelated";
      cfg.seed = 3000 + static_cast<std::uint64_t>(r);
      const auto synth = dbess::make_synthetic(cfg, dbess::derive_seed(cfg.seed, 77));
      ClusterSim cluster = dbess::build_cluster(synth.data, m, cfg.seed);
      const Eigen::VectorXd theta_star = synth.meta.theta_star();
      const Eigen::VectorXd theta0 = dbess::oneshot_init(cluster);
      const auto fit = dbess::dbess_fix(cluster, theta0, cfg.fix_config(s_star), &theta_star);
      const double see = (fit.theta_hat - theta_star).norm();
      (n_total == 1500L ? see_sq_small : see_sq_large).push_back(see * see);
    }
  }
  double mean_small = 0.0, mean_large = 0.0;
  for (double v : see_sq_small) mean_small += v;
  for (double v : see_sq_large) mean_large += v;
  const double ratio = mean_large / mean_small;
  CHECK(ratio > 0.25);
  CHECK(ratio < 0.85);
}
