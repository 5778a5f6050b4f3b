#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbess/datagen.hpp"
#include "dbess/errors.hpp"

namespace dbess {

/// 17 significant digits: the shortest fixed precision that round-trips
/// every 64-bit float exactly.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// Dataset CSV: header "y,x1,...,xp", one observation per line, floats with
/// 17 significant digits.
inline void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw DimensionMismatch("write_dataset_csv: X and y row counts differ");
  std::ostringstream out;
  out << "y";
  for (int j = 0; j < x.cols(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (long i = 0; i < x.rows(); ++i) {
    out << format_double(y(i));
    for (int j = 0; j < x.cols(); ++j) out << ',' << format_double(x(i, j));
    out << "\n";
  }
  write_text_file(path, out.str());
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset '" + path + "' is empty");
  int p = 0;
  for (char ch : line)
    if (ch == ',') ++p;
  if (p < 1 || line.rfind("y,", 0) != 0)
    throw IoError("dataset '" + path + "' has an unexpected header");

  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* cursor = line.c_str();
    for (int j = 0; j <= p; ++j) {
      char* end = nullptr;
      values.push_back(std::strtod(cursor, &end));
      if (end == cursor) throw IoError("dataset '" + path + "': malformed number in row " +
                                       std::to_string(rows + 1));
      cursor = (*end == ',') ? end + 1 : end;
    }
    ++rows;
  }

  Dataset out;
  out.X.resize(rows, p);
  out.y.resize(rows);
  for (long i = 0; i < rows; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(p + 1);
    out.y(i) = values[base];
    for (int j = 0; j < p; ++j) out.X(i, j) = values[base + 1 + static_cast<std::size_t>(j)];
  }
  return out;
}

/// Companion metadata of a generated dataset; enough to rebuild theta* and
/// the design spec.
struct DatasetMeta {
  long n = 0;
  int p = 0;
  std::string structure = "uncorrelated";
  double rho = 0.8;
  std::vector<double> spike = {10.0, 5.0, 2.0};
  int s_star = 0;
  std::vector<int> support;
  std::vector<int> signs;
  double noise_sd = 0.0;
  double snr = 1.0;
  std::uint64_t seed = 0;

  DesignSpec design() const {
    DesignSpec d;
    d.p = p;
    d.structure = cov_structure_from_string(structure);
    d.rho = rho;
    d.spike = spike;
    return d;
  }

  Eigen::VectorXd theta_star() const {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < support.size(); ++i)
      theta(support[i]) = static_cast<double>(signs[i]);
    return theta;
  }
};

inline void write_metadata_json(const std::string& path, const DatasetMeta& meta) {
  nlohmann::json j;
  j["n"] = meta.n;
  j["p"] = meta.p;
  j["structure"] = meta.structure;
  j["rho"] = meta.rho;
  j["spike"] = meta.spike;
  j["s_star"] = meta.s_star;
  j["support"] = meta.support;
  j["signs"] = meta.signs;
  j["noise_sd"] = meta.noise_sd;
  j["snr"] = meta.snr;
  j["seed"] = meta.seed;
  write_text_file(path, j.dump(2) + "\n");
}

inline DatasetMeta read_metadata_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metadata '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("metadata '" + path + "' is not valid JSON: " + e.what());
  }
  DatasetMeta meta;
  try {
    meta.n = j.at("n").get<long>();
    meta.p = j.at("p").get<int>();
    meta.structure = j.at("structure").get<std::string>();
    meta.rho = j.at("rho").get<double>();
    meta.spike = j.at("spike").get<std::vector<double>>();
    meta.s_star = j.at("s_star").get<int>();
    meta.support = j.at("support").get<std::vector<int>>();
    meta.signs = j.at("signs").get<std::vector<int>>();
    meta.noise_sd = j.at("noise_sd").get<double>();
    meta.snr = j.at("snr").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("metadata '" + path + "' is missing fields: " + e.what());
  }
  return meta;
}

}  // namespace dbess
