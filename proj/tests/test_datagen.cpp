#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>

#include "dbess/datagen.hpp"
#include "dbess/io.hpp"
#include "test_helpers.hpp"

using dbess::CovStructure;
using dbess::DesignSpec;
using dbess::TruthSpec;

TEST_CASE("uncorrelated design reproduces the spiked variances", "[datagen]") {
  DesignSpec spec;
  spec.p = 6;
  spec.structure = CovStructure::Uncorrelated;
  const Eigen::MatrixXd x = dbess::gen_design(spec, 100000, 12345);

  const Eigen::VectorXd expected = (Eigen::VectorXd(6) << 10, 5, 2, 1, 1, 1).finished();
  for (int j = 0; j < 6; ++j) {
    const Eigen::VectorXd col = x.col(j);
    const double var = (col.array() - col.mean()).square().sum() / (col.size() - 1.0);
    CHECK(var == Catch::Approx(expected(j)).epsilon(0.05));
  }
}

TEST_CASE("correlated design reproduces the adjacent correlation", "[datagen]") {
  DesignSpec spec;
  spec.p = 8;
  spec.structure = CovStructure::Correlated;
  const Eigen::MatrixXd x = dbess::gen_design(spec, 100000, 999);

  for (int j = 0; j + 1 < 8; ++j) {
    const Eigen::VectorXd a = x.col(j).array() - x.col(j).mean();
    const Eigen::VectorXd b = x.col(j + 1).array() - x.col(j + 1).mean();
    const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    CHECK(std::abs(corr - 0.8) <= 0.02);
  }
}

TEST_CASE("generators are deterministic in the seed", "[datagen]") {
  DesignSpec spec;
  spec.p = 5;
  spec.structure = CovStructure::Correlated;
  CHECK(dbess::gen_design(spec, 50, 77) == dbess::gen_design(spec, 50, 77));
  CHECK(dbess::gen_design(spec, 50, 77) != dbess::gen_design(spec, 50, 78));
  CHECK(dbess::gen_truth(TruthSpec{3}, 10, 5) == dbess::gen_truth(TruthSpec{3}, 10, 5));
}

TEST_CASE("truth vector has the required sign split", "[datagen]") {
  const Eigen::VectorXd two = dbess::gen_truth(TruthSpec{2}, 12, 41);
  CHECK((two.array() == 1.0).count() == 1);
  CHECK((two.array() == -1.0).count() == 1);

  const Eigen::VectorXd one = dbess::gen_truth(TruthSpec{1}, 12, 41);
  CHECK((one.array() == 1.0).count() == 1);
  CHECK((one.array() != 0.0).count() == 1);

  const Eigen::VectorXd five = dbess::gen_truth(TruthSpec{5}, 12, 43);
  CHECK((five.array() == 1.0).count() == 3);
  CHECK((five.array() == -1.0).count() == 2);

  for (int s = 1; s <= 12; ++s)
    CHECK((dbess::gen_truth(TruthSpec{s}, 12, 47).array() != 0.0).count() == s);
  CHECK_THROWS_AS(dbess::gen_truth(TruthSpec{13}, 12, 1), dbess::InvalidConfig);
}

TEST_CASE("response calibration fixes SNR at one", "[datagen]") {
  DesignSpec spec;
  spec.p = 8;
  spec.structure = CovStructure::Uncorrelated;

  SECTION("trailing unit-variance support gives noise_sd = 2") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
    theta(4) = 1.0;
    theta(5) = -1.0;
    theta(6) = 1.0;
    theta(7) = -1.0;
    const Eigen::MatrixXd x = dbess::gen_design(spec, 10, 3);
    const auto resp = dbess::gen_response(x, theta, spec, 3);
    CHECK(resp.noise_sd == 2.0);
  }

  SECTION("zero signal is rejected") {
    const Eigen::MatrixXd x = dbess::gen_design(spec, 10, 3);
    CHECK_THROWS_AS(dbess::gen_response(x, Eigen::VectorXd::Zero(8), spec, 3), dbess::ZeroSignal);
  }

  SECTION("empirical SNR is near one at large N") {
    const Eigen::MatrixXd x = dbess::gen_design(spec, 100000, 11);
    const Eigen::VectorXd theta = dbess::gen_truth(TruthSpec{4}, 8, 13);
    const auto resp = dbess::gen_response(x, theta, spec, 17);
    const Eigen::VectorXd signal = x * theta;
    const Eigen::VectorXd noise = resp.y - signal;
    const auto var = [](const Eigen::VectorXd& v) {
      return (v.array() - v.mean()).square().sum() / (v.size() - 1.0);
    };
    const double snr = var(signal) / var(noise);
    CHECK(snr >= 0.9);
    CHECK(snr <= 1.1);
  }
}

TEST_CASE("correlated covariance is PD for any rho in [0,1)", "[datagen]") {
  for (double rho : {0.0, 0.5, 0.8, 0.99}) {
    DesignSpec spec;
    spec.p = 20;
    spec.structure = CovStructure::Correlated;
    spec.rho = rho;
    Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance());
    CHECK(llt.info() == Eigen::Success);
  }
  DesignSpec bad;
  bad.p = 4;
  bad.structure = CovStructure::Correlated;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), dbess::InvalidConfig);
}

TEST_CASE("design spec validation", "[datagen]") {
  DesignSpec spec;
  spec.p = 3;  // needs >= spike size + 1 = 4
  spec.structure = CovStructure::Uncorrelated;
  CHECK_THROWS_AS(spec.validate(), dbess::InvalidConfig);
  spec.p = 4;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("quadform agrees with the dense covariance", "[datagen]") {
  dbess::Rng rng(53);
  for (auto structure : {CovStructure::Uncorrelated, CovStructure::Correlated}) {
    DesignSpec spec;
    spec.p = 9;
    spec.structure = structure;
    const Eigen::MatrixXd sigma = spec.covariance();
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd v = testutil::random_vector(rng, 9);
      CHECK(spec.quadform(v) == Catch::Approx(v.dot(sigma * v)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dataset CSV round-trips bit-exactly", "[datagen]") {
  dbess::Rng rng(59);
  const Eigen::MatrixXd x = testutil::random_matrix(rng, 25, 4);
  const Eigen::VectorXd y = testutil::random_vector(rng, 25);

  const std::string path = "roundtrip_test_dataset.csv";
  dbess::write_dataset_csv(path, x, y);
  const auto loaded = dbess::read_dataset_csv(path);
  CHECK(loaded.X == x);
  CHECK(loaded.y == y);
  std::remove(path.c_str());
}

TEST_CASE("metadata JSON round-trips", "[datagen]") {
  dbess::DatasetMeta meta;
  meta.n = 100;
  meta.p = 7;
  meta.structure = "correlated";
  meta.rho = 0.8;
  meta.spike = {10, 5, 2};
  meta.s_star = 2;
  meta.support = {1, 5};
  meta.signs = {1, -1};
  meta.noise_sd = 1.875;
  meta.seed = 424242;

  const std::string path = "roundtrip_test_meta.json";
  dbess::write_metadata_json(path, meta);
  const auto loaded = dbess::read_metadata_json(path);
  CHECK(loaded.n == meta.n);
  CHECK(loaded.support == meta.support);
  CHECK(loaded.signs == meta.signs);
  CHECK(loaded.noise_sd == meta.noise_sd);
  CHECK(loaded.seed == meta.seed);

  const Eigen::VectorXd theta = loaded.theta_star();
  CHECK(theta(1) == 1.0);
  CHECK(theta(5) == -1.0);
  CHECK((theta.array() != 0.0).count() == 2);
  std::remove(path.c_str());
}
