#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dbess/cluster.hpp"
#include "dbess/datagen.hpp"
#include "dbess/driver.hpp"
#include "dbess/errors.hpp"
#include "dbess/io.hpp"
#include "dbess/metrics.hpp"
#include "dbess/parallel.hpp"
#include "dbess/rng.hpp"

namespace dbess {

/// Full run description shared by every CLI command. Values can come from a
/// JSON config file with the same keys; explicit flags win over file values.
struct RunConfig {
  long N = 1000;
  int m = 1;
  int p = 10;
  int s_star = 1;
  std::string structure = "correlated";
  double rho = 0.8;
  std::vector<double> spike = {10.0, 5.0, 2.0};
  std::uint64_t seed = 1;
  int replicates = 1;
  std::string init = "oneshot";  // zero | oneshot | both (convergence only)
  int s = 0;                     // 0 = unset; fixed-s commands fall back to s_star
  int s_max = 0;                 // 0 = unset; sweep falls back to min(p-1, n/ln p, 50)
  int max_rounds = 10;           // T
  int c_max = 2;
  double tau = -1.0;  // < 0 = default threshold
  int max_splices = 100;

  // execution details, not part of the experiment identity
  int jobs = 1;
  std::string out_dir = ".";
  std::string data_path;
  std::string meta_path;

  void validate_common() const {
    if (m < 1) throw InvalidConfig("config: m must be >= 1");
    if (replicates < 1) throw InvalidConfig("config: replicates must be >= 1");
    if (init != "zero" && init != "oneshot" && init != "both")
      throw InvalidConfig("config: init must be 'zero', 'oneshot' or 'both'");
    if (max_rounds < 1) throw InvalidConfig("config: T must be >= 1");
    if (c_max < 1) throw InvalidConfig("config: c_max must be >= 1");
    if (max_splices < 1) throw InvalidConfig("config: max_splices must be >= 1");
    if (jobs < 1) throw InvalidConfig("config: jobs must be >= 1");
  }

  /// Consistency of the synthetic-generation fields.
  void validate_generation() const {
    validate_common();
    if (N < 1) throw InvalidConfig("config: N must be >= 1");
    if (p < 1) throw InvalidConfig("config: p must be >= 1");
    if (N % m != 0) throw InvalidConfig("config: m must divide N");
    if (s_star < 1 || s_star > p) throw InvalidConfig("config: s_star must lie in [1, p]");
    if (s < 0 || s > p) throw InvalidConfig("config: s must lie in [1, p] when set");
    if (s_max < 0 || s_max > p - 1)
      throw InvalidConfig("config: s_max must lie in [1, p - 1] when set");
    design_spec().validate();
  }

  DesignSpec design_spec() const {
    DesignSpec d;
    d.p = p;
    d.structure = cov_structure_from_string(structure);
    d.rho = rho;
    d.spike = spike;
    return d;
  }

  FixConfig fix_config(int support_size) const {
    FixConfig f;
    f.s = support_size;
    f.max_rounds = max_rounds;
    f.splicing.c_max = c_max;
    f.splicing.tau = tau;
    f.splicing.max_splices = max_splices;
    return f;
  }

  /// Experiment-defining fields only; out_dir/jobs/paths are excluded so the
  /// hash identifies the computation, not where it ran.
  nlohmann::json experiment_json() const {
    nlohmann::json j;
    j["N"] = N;
    j["m"] = m;
    j["p"] = p;
    j["s_star"] = s_star;
    j["structure"] = structure;
    j["rho"] = rho;
    j["spike"] = spike;
    j["snr"] = 1.0;
    j["seed"] = seed;
    j["replicates"] = replicates;
    j["init"] = init;
    j["s"] = s;
    j["s_max"] = s_max;
    j["T"] = max_rounds;
    j["c_max"] = c_max;
    j["tau"] = tau;
    j["max_splices"] = max_splices;
    return j;
  }

  std::string config_digest() const;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string RunConfig::config_digest() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(experiment_json().dump())));
  return std::string(buf);
}

/// Parse a JSON config file into `cfg`. Unknown keys are an error so typos
/// cannot silently fall back to defaults.
inline void load_config_json(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config '" + path + "' is not valid JSON: " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "N") cfg.N = value.get<long>();
      else if (key == "m") cfg.m = value.get<int>();
      else if (key == "p") cfg.p = value.get<int>();
      else if (key == "s_star") cfg.s_star = value.get<int>();
      else if (key == "structure") cfg.structure = value.get<std::string>();
      else if (key == "rho") cfg.rho = value.get<double>();
      else if (key == "spike") cfg.spike = value.get<std::vector<double>>();
      else if (key == "snr") { if (value.get<double>() != 1.0) throw InvalidConfig("config: snr is fixed at 1"); }
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "replicates") cfg.replicates = value.get<int>();
      else if (key == "init") cfg.init = value.get<std::string>();
      else if (key == "s") cfg.s = value.get<int>();
      else if (key == "s_max") cfg.s_max = value.get<int>();
      else if (key == "T") cfg.max_rounds = value.get<int>();
      else if (key == "c_max") cfg.c_max = value.get<int>();
      else if (key == "tau") cfg.tau = value.get<double>();
      else if (key == "max_splices") cfg.max_splices = value.get<int>();
      else if (key == "jobs") cfg.jobs = value.get<int>();
      else if (key == "out") cfg.out_dir = value.get<std::string>();
      else if (key == "data") cfg.data_path = value.get<std::string>();
      else if (key == "meta") cfg.meta_path = value.get<std::string>();
      else throw InvalidConfig("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig("config: bad value for key '" + key + "': " + e.what());
    }
  }
}

struct SyntheticData {
  Dataset data;
  DatasetMeta meta;
};

/// One seeded dataset: design, truth and response use sub-streams 0..2 of
/// `dataset_seed`; stream 3 is reserved for partitioning.
inline SyntheticData make_synthetic(const RunConfig& cfg, std::uint64_t dataset_seed) {
  const DesignSpec spec = cfg.design_spec();
  SyntheticData out;
  out.data.X = gen_design(spec, cfg.N, derive_seed(dataset_seed, 0));
  const Eigen::VectorXd theta_star = gen_truth(TruthSpec{cfg.s_star}, cfg.p,
                                               derive_seed(dataset_seed, 1));
  const Response resp = gen_response(out.data.X, theta_star, spec, derive_seed(dataset_seed, 2));
  out.data.y = resp.y;

  out.meta.n = cfg.N;
  out.meta.p = cfg.p;
  out.meta.structure = cfg.structure;
  out.meta.rho = cfg.rho;
  out.meta.spike = cfg.spike;
  out.meta.s_star = cfg.s_star;
  for (int j = 0; j < cfg.p; ++j) {
    if (theta_star(j) != 0.0) {
      out.meta.support.push_back(j);
      out.meta.signs.push_back(theta_star(j) > 0.0 ? 1 : -1);
    }
  }
  out.meta.noise_sd = resp.noise_sd;
  out.meta.snr = 1.0;
  out.meta.seed = dataset_seed;
  return out;
}

inline ClusterSim build_cluster(const Dataset& data, int m, std::uint64_t dataset_seed) {
  return ClusterSim(partition(data.X, data.y, m, derive_seed(dataset_seed, 3)));
}

inline Eigen::VectorXd make_init(ClusterSim& cluster, const std::string& mode) {
  if (mode == "zero") return Eigen::VectorXd::Zero(cluster.dim());
  if (mode == "oneshot") return oneshot_init(cluster);
  throw InvalidConfig("init mode '" + mode + "' is not a single-run mode");
}

namespace detail {

inline std::string report_preamble(const RunConfig& cfg) {
  std::ostringstream out;
  out << "# seed=" << cfg.seed << "\n";
  out << "# config_hash=" << cfg.config_digest() << "\n";
  out << "# config=" << cfg.experiment_json().dump() << "\n";
  return out.str();
}

inline std::string csv_sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::string default_data_path(const RunConfig& cfg) {
  return cfg.data_path.empty() ? cfg.out_dir + "/dataset.csv" : cfg.data_path;
}

inline std::string default_meta_path(const RunConfig& cfg, const std::string& data_path) {
  if (!cfg.meta_path.empty()) return cfg.meta_path;
  std::string base = data_path;
  const std::string ext = ".csv";
  if (base.size() > ext.size() && base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
    base.resize(base.size() - ext.size());
  return base + ".meta.json";
}

inline bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace detail

/// gen: write one seeded dataset (CSV) and its metadata (JSON).
inline std::vector<std::string> cmd_gen(const RunConfig& cfg) {
  cfg.validate_generation();
  const SyntheticData synth = make_synthetic(cfg, cfg.seed);
  const std::string data_path = detail::default_data_path(cfg);
  const std::string meta_path = detail::default_meta_path(cfg, data_path);
  write_dataset_csv(data_path, synth.data.X, synth.data.y);
  write_metadata_json(meta_path, synth.meta);
  return {data_path, meta_path};
}

/// fit: load a dataset, run the fixed-s two-stage procedure, write a
/// field/index/value report (sparse coefficients, active set, rounds, comm
/// totals, and recovery metrics when truth metadata is present).
inline std::vector<std::string> cmd_fit(const RunConfig& cfg) {
  cfg.validate_common();
  const std::string data_path = detail::default_data_path(cfg);
  const std::string meta_path = detail::default_meta_path(cfg, data_path);
  const Dataset data = read_dataset_csv(data_path);

  bool have_meta = detail::file_exists(meta_path);
  DatasetMeta meta;
  if (have_meta) meta = read_metadata_json(meta_path);

  int s_fit = cfg.s;
  if (s_fit == 0 && have_meta) s_fit = meta.s_star;
  if (s_fit < 1) throw InvalidConfig("fit: a fixed support size s is required (flag --s)");

  ClusterSim cluster = build_cluster(data, cfg.m, cfg.seed);
  const Eigen::VectorXd theta0 = make_init(cluster, cfg.init);
  Eigen::VectorXd theta_star;
  if (have_meta) theta_star = meta.theta_star();
  const FixResult fit = dbess_fix(cluster, theta0, cfg.fix_config(s_fit),
                                  have_meta ? &theta_star : nullptr);

  std::ostringstream out;
  out << detail::report_preamble(cfg);
  out << "field,index,value\n";
  out << "s,," << s_fit << "\n";
  out << "rounds_used,," << fit.rounds_used << "\n";
  out << "stabilized,," << (fit.stabilized ? 1 : 0) << "\n";
  out << "comm_up_floats,," << fit.comm.total_floats(Direction::Up) << "\n";
  out << "comm_down_floats,," << fit.comm.total_floats(Direction::Down) << "\n";
  out << "comm_up_ints,," << fit.comm.total_ints(Direction::Up) << "\n";
  out << "comm_down_ints,," << fit.comm.total_ints(Direction::Down) << "\n";
  for (int j : fit.active) out << "active," << j << ",1\n";
  for (int j : fit.active) out << "coef," << j << "," << format_double(fit.theta_hat(j)) << "\n";
  if (have_meta) {
    const Confusion conf =
        confusion(fit.active, IndexSet(std::vector<int>(meta.support)), meta.p);
    const Rates r = rates(conf);
    const EstimationErrors err = estimation_errors(fit.theta_hat, theta_star);
    out << "tpr,," << format_double(r.tpr) << "\n";
    out << "tnr,," << format_double(r.tnr) << "\n";
    out << "mcc,," << format_double(r.mcc) << "\n";
    out << "see,," << format_double(err.see) << "\n";
    out << "see_squared,," << format_double(err.see * err.see) << "\n";
    out << "reee,," << format_double(err.reee) << "\n";
  }

  const std::string report_path = cfg.out_dir + "/fit.csv";
  write_text_file(report_path, out.str());
  return {report_path};
}

/// sweep: GIC path over s = 1..s_max on a loaded dataset (--data) or a
/// dataset generated from the config. One row per s; the selected s is
/// flagged in the is_smin column.
inline std::vector<std::string> cmd_sweep(const RunConfig& cfg) {
  Dataset data;
  bool have_truth = false;
  Eigen::VectorXd theta_star;
  int truth_p = 0;
  std::vector<int> truth_support;

  if (!cfg.data_path.empty()) {
    cfg.validate_common();
    data = read_dataset_csv(cfg.data_path);
    const std::string meta_path = detail::default_meta_path(cfg, cfg.data_path);
    if (detail::file_exists(meta_path)) {
      const DatasetMeta meta = read_metadata_json(meta_path);
      theta_star = meta.theta_star();
      truth_support = meta.support;
      truth_p = meta.p;
      have_truth = true;
    }
  } else {
    cfg.validate_generation();
    const SyntheticData synth = make_synthetic(cfg, cfg.seed);
    data = synth.data;
    theta_star = synth.meta.theta_star();
    truth_support = synth.meta.support;
    truth_p = synth.meta.p;
    have_truth = true;
  }

  ClusterSim cluster = build_cluster(data, cfg.m, cfg.seed);
  const int p = cluster.dim();
  int s_max = cfg.s_max;
  if (s_max == 0) {
    const double by_rows = std::floor(static_cast<double>(cluster.shard_rows()) /
                                      std::log(static_cast<double>(std::max(p, 2))));
    s_max = static_cast<int>(std::min({static_cast<double>(p - 1), by_rows, 50.0}));
    s_max = std::max(s_max, 1);
  }

  const Eigen::VectorXd theta0 = make_init(cluster, cfg.init);
  const SweepResult sweep = dbess_sweep(cluster, theta0, s_max, cfg.fix_config(1));

  std::ostringstream out;
  out << detail::report_preamble(cfg);
  out << "s,failed,gic,is_smin,rounds,stabilized,tpr,tnr,mcc,see,see_squared,reee,"
         "comm_up_floats,comm_down_floats,comm_up_ints,comm_down_ints,error\n";
  for (const auto& entry : sweep.path) {
    out << entry.s << ",";
    if (entry.failed) {
      out << "1,,,,,,,,,,,,,," << detail::csv_sanitize(entry.error) << "\n";
      continue;
    }
    out << "0," << format_double(entry.gic) << "," << (entry.s == sweep.s_min ? 1 : 0) << ","
        << entry.fit.rounds_used << "," << (entry.fit.stabilized ? 1 : 0) << ",";
    if (have_truth) {
      const Confusion conf =
          confusion(entry.fit.active, IndexSet(std::vector<int>(truth_support)), truth_p);
      const Rates r = rates(conf);
      const EstimationErrors err = estimation_errors(entry.fit.theta_hat, theta_star);
      out << format_double(r.tpr) << "," << format_double(r.tnr) << "," << format_double(r.mcc)
          << "," << format_double(err.see) << "," << format_double(err.see * err.see) << ","
          << format_double(err.reee) << ",";
    } else {
      out << ",,,,,,";
    }
    out << entry.fit.comm.total_floats(Direction::Up) << ","
        << entry.fit.comm.total_floats(Direction::Down) << ","
        << entry.fit.comm.total_ints(Direction::Up) << ","
        << entry.fit.comm.total_ints(Direction::Down) << ",\n";
  }

  const std::string report_path = cfg.out_dir + "/sweep.csv";
  write_text_file(report_path, out.str());
  return {report_path};
}

namespace detail {

struct ReplicateOutcome {
  bool failed = false;
  std::string error;
  Rates rates;
  EstimationErrors errors;
  double rounds = 0.0;
  double stabilized = 0.0;
  long comm_up_floats = 0;
};

inline ReplicateOutcome run_bench_replicate(const RunConfig& cfg, int replicate) {
  ReplicateOutcome out;
  try {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(replicate));
    const SyntheticData synth = make_synthetic(cfg, rep_seed);
    ClusterSim cluster = build_cluster(synth.data, cfg.m, rep_seed);
    const Eigen::VectorXd theta0 = make_init(cluster, cfg.init);
    const Eigen::VectorXd theta_star = synth.meta.theta_star();

    const int s_fit = cfg.s > 0 ? cfg.s : cfg.s_star;
    const FixResult fit = dbess_fix(cluster, theta0, cfg.fix_config(s_fit), &theta_star);

    out.rates = rates(confusion(fit.active, IndexSet(std::vector<int>(synth.meta.support)), cfg.p));
    out.errors = estimation_errors(fit.theta_hat, theta_star);
    out.rounds = fit.rounds_used;
    out.stabilized = fit.stabilized ? 1.0 : 0.0;
    out.comm_up_floats = cluster.ledger().total_floats(Direction::Up);
  } catch (const Error& e) {
    out.failed = true;
    out.error = std::string(e.name()) + ": " + e.what();
  }
  return out;
}

}  // namespace detail

/// bench: seeded replicates of the fixed-s run, aggregated to the mean and
/// standard deviation of each recovery metric. Failed replicates are counted
/// and excluded; the command still succeeds unless config parsing fails.
inline std::vector<std::string> cmd_bench(const RunConfig& cfg) {
  cfg.validate_generation();

  std::vector<detail::ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cfg.jobs, cfg.replicates,
               [&](int r) { outcomes[static_cast<std::size_t>(r)] = detail::run_bench_replicate(cfg, r); });

  std::vector<double> tpr, tnr, mcc, see, see_sq, reee, rounds, stabilized, up_floats;
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++failures;
      continue;
    }
    tpr.push_back(o.rates.tpr);
    tnr.push_back(o.rates.tnr);
    mcc.push_back(o.rates.mcc);
    see.push_back(o.errors.see);
    see_sq.push_back(o.errors.see * o.errors.see);
    reee.push_back(o.errors.reee);
    rounds.push_back(o.rounds);
    stabilized.push_back(o.stabilized);
    up_floats.push_back(static_cast<double>(o.comm_up_floats));
  }

  using detail::mean_of;
  using detail::sd_of;
  std::ostringstream out;
  out << detail::report_preamble(cfg);
  out << "m,method,replicates,failures,tpr_mean,tpr_sd,tnr_mean,tnr_sd,mcc_mean,mcc_sd,"
         "see_mean,see_sd,see_sq_mean,see_sq_sd,reee_mean,reee_sd,rounds_mean,"
         "stabilized_rate,comm_up_floats_mean\n";
  out << cfg.m << ",DBESS," << cfg.replicates << "," << failures << ","
      << format_double(mean_of(tpr)) << "," << format_double(sd_of(tpr)) << ","
      << format_double(mean_of(tnr)) << "," << format_double(sd_of(tnr)) << ","
      << format_double(mean_of(mcc)) << "," << format_double(sd_of(mcc)) << ","
      << format_double(mean_of(see)) << "," << format_double(sd_of(see)) << ","
      << format_double(mean_of(see_sq)) << "," << format_double(sd_of(see_sq)) << ","
      << format_double(mean_of(reee)) << "," << format_double(sd_of(reee)) << ","
      << format_double(mean_of(rounds)) << "," << format_double(mean_of(stabilized)) << ","
      << format_double(mean_of(up_floats)) << "\n";

  const std::string report_path = cfg.out_dir + "/bench.csv";
  write_text_file(report_path, out.str());
  return {report_path};
}

/// convergence: per-round estimation-error traces. Round 0 carries the
/// initializer's error; rounds 1..T come from stage 1. init="both" emits a
/// zero-init and a oneshot-init trace per replicate.
inline std::vector<std::string> cmd_convergence(const RunConfig& cfg) {
  cfg.validate_generation();

  std::vector<std::string> modes;
  if (cfg.init == "both") {
    modes = {"zero", "oneshot"};
  } else {
    modes = {cfg.init};
  }

  struct TraceBlock {
    std::ostringstream rows;
  };
  const int tasks = cfg.replicates * static_cast<int>(modes.size());
  std::vector<TraceBlock> blocks(static_cast<std::size_t>(tasks));

  parallel_for(cfg.jobs, tasks, [&](int task) {
    const int r = task / static_cast<int>(modes.size());
    const std::string& mode = modes[static_cast<std::size_t>(task) % modes.size()];
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    const SyntheticData synth = make_synthetic(cfg, rep_seed);
    ClusterSim cluster = build_cluster(synth.data, cfg.m, rep_seed);
    const Eigen::VectorXd theta0 = make_init(cluster, mode);
    const long init_floats = cluster.ledger().total_floats(Direction::Up) +
                             cluster.ledger().total_floats(Direction::Down);
    const Eigen::VectorXd theta_star = synth.meta.theta_star();

    const int s_fit = cfg.s > 0 ? cfg.s : cfg.s_star;
    const FixResult fit = dbess_fix(cluster, theta0, cfg.fix_config(s_fit), &theta_star);

    auto& rows = blocks[static_cast<std::size_t>(task)].rows;
    rows << r << "," << mode << ",0," << format_double(fit.init_error) << ",,"
         << init_floats << "\n";
    for (const auto& rec : fit.trace) {
      rows << r << "," << mode << "," << rec.round << "," << format_double(rec.l2_error) << ","
           << format_double(rec.surrogate_loss) << "," << (init_floats + rec.comm_floats_cum)
           << "\n";
    }
  });

  std::ostringstream out;
  out << detail::report_preamble(cfg);
  out << "replicate,init,round,l2_error,surrogate_loss,comm_floats_cum\n";
  for (const auto& block : blocks) out << block.rows.str();

  const std::string report_path = cfg.out_dir + "/convergence.csv";
  write_text_file(report_path, out.str());
  return {report_path};
}

}  // namespace dbess
