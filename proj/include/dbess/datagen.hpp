#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dbess/errors.hpp"
#include "dbess/rng.hpp"

namespace dbess {

enum class CovStructure { Uncorrelated, Correlated };

inline const char* to_string(CovStructure s) {
  return s == CovStructure::Uncorrelated ? "uncorrelated" : "correlated";
}

inline CovStructure cov_structure_from_string(const std::string& s) {
  if (s == "uncorrelated") return CovStructure::Uncorrelated;
  if (s == "correlated") return CovStructure::Correlated;
  throw InvalidConfig("structure must be 'uncorrelated' or 'correlated', got '" + s + "'");
}

/// Design covariance: either the spiked diagonal diag(spike..., 1, ..., 1)
/// or the AR-type correlation sigma_ij = rho^|i-j|.
struct DesignSpec {
  int p = 0;
  CovStructure structure = CovStructure::Uncorrelated;
  double rho = 0.8;
  std::vector<double> spike = {10.0, 5.0, 2.0};

  void validate() const {
    if (p < 1) throw InvalidConfig("DesignSpec: p must be >= 1");
    if (structure == CovStructure::Uncorrelated) {
      if (p < static_cast<int>(spike.size()) + 1)
        throw InvalidConfig("DesignSpec: uncorrelated structure needs p >= spike length + 1");
      for (double v : spike)
        if (v <= 0.0) throw InvalidConfig("DesignSpec: spike entries must be positive");
    } else {
      if (rho < 0.0 || rho >= 1.0) throw InvalidConfig("DesignSpec: rho must lie in [0, 1)");
    }
  }

  Eigen::MatrixXd covariance() const {
    validate();
    Eigen::MatrixXd sigma(p, p);
    if (structure == CovStructure::Uncorrelated) {
      sigma.setZero();
      for (int j = 0; j < p; ++j)
        sigma(j, j) = j < static_cast<int>(spike.size()) ? spike[static_cast<std::size_t>(j)] : 1.0;
    } else {
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
    }
    return sigma;
  }

  /// theta' Sigma theta without materializing Sigma.
  double quadform(const Eigen::VectorXd& theta) const {
    validate();
    if (theta.size() != p) throw DimensionMismatch("DesignSpec::quadform: theta length != p");
    double out = 0.0;
    if (structure == CovStructure::Uncorrelated) {
      for (int j = 0; j < p; ++j) {
        const double d = j < static_cast<int>(spike.size()) ? spike[static_cast<std::size_t>(j)] : 1.0;
        out += d * theta(j) * theta(j);
      }
    } else {
      std::vector<int> nz;
      for (int j = 0; j < p; ++j)
        if (theta(j) != 0.0) nz.push_back(j);
      for (int a : nz)
        for (int b : nz) out += theta(a) * theta(b) * std::pow(rho, std::abs(a - b));
    }
    return out;
  }
};

/// Sparse truth: s_star seeded-random positions, signs alternating +1/-1 in
/// ascending position order (one extra +1 when s_star is odd).
struct TruthSpec {
  int s_star = 1;
};

/// N x p design with i.i.d. N(0, Sigma) rows: seeded standard normals pushed
/// through the lower-triangular Cholesky factor of Sigma.
inline Eigen::MatrixXd gen_design(const DesignSpec& spec, long n_rows, std::uint64_t seed) {
  spec.validate();
  if (n_rows < 1) throw InvalidConfig("gen_design: N must be >= 1");

  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance());
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure("gen_design: covariance is not positive definite");
  const Eigen::MatrixXd chol_lower = llt.matrixL();

  Rng rng(seed);
  Eigen::MatrixXd z(n_rows, spec.p);
  for (long i = 0; i < n_rows; ++i)
    for (int j = 0; j < spec.p; ++j) z(i, j) = rng.normal();
  return z * chol_lower.transpose();
}

inline Eigen::VectorXd gen_truth(const TruthSpec& spec, int p, std::uint64_t seed) {
  if (spec.s_star < 1 || spec.s_star > p)
    throw InvalidConfig("gen_truth: s_star must lie in [1, p]");

  std::vector<int> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < spec.s_star; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  std::vector<int> support(pool.begin(), pool.begin() + spec.s_star);
  std::sort(support.begin(), support.end());

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < spec.s_star; ++i)
    theta(support[static_cast<std::size_t>(i)]) = (i % 2 == 0) ? 1.0 : -1.0;
  return theta;
}

struct Response {
  Eigen::VectorXd y;
  double noise_sd = 0.0;
};

/// y = X theta* + eps with eps ~ N(0, sigma^2) and sigma^2 = theta*' Sigma
/// theta*, the population calibration that fixes SNR = 1.
inline Response gen_response(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta_star,
                             const DesignSpec& design, std::uint64_t seed) {
  if (x.cols() != theta_star.size())
    throw DimensionMismatch("gen_response: X columns do not match theta* length");
  const double signal_var = design.quadform(theta_star);
  if (signal_var <= 0.0) throw ZeroSignal("gen_response: theta*' Sigma theta* is zero");

  Response out;
  out.noise_sd = std::sqrt(signal_var);
  out.y = x * theta_star;
  Rng rng(seed);
  for (long i = 0; i < out.y.size(); ++i) out.y(i) += out.noise_sd * rng.normal();
  return out;
}

}  // namespace dbess
