#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "decsaddle/compression.hpp"
#include "decsaddle/data.hpp"
#include "decsaddle/problem.hpp"
#include "decsaddle/solvers.hpp"
#include "decsaddle/topology.hpp"

namespace decsaddle {

/// Malformed or inconsistent configuration; the message starts with the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { kCrdpsg, kCdpsvrg, kReference };

struct TopologyConfig {
  std::string kind = "ring";  // ring | torus | single
  Index m = 0;
  Index rows = 0;
  Index cols = 0;

  [[nodiscard]] Index nodes() const;
};

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | libsvm
  std::string path;
  Index N = 0;
  Index d = 0;
  std::uint64_t seed = 0;
};

struct PartitionConfig {
  Index m = 0;
  Index n = 1;
  PartitionMode mode = PartitionMode::kShuffled;
};

struct CompressionConfig {
  bool identity = true;
  int bits = 0;
  std::optional<double> delta;  // empty: estimate
  int delta_trials = 10000;
};

struct OracleConfig {
  std::string p_rule = "1/n";  // 1/n | 1/kappa_f | value
  double p = 0;
  std::vector<std::vector<double>> distribution;  // empty: uniform
};

struct BudgetConfig {
  std::int64_t iterations = 0;
  int stages = 0;
  std::optional<std::int64_t> stage_iterations;
};

struct LogConfig {
  std::int64_t stride = 0;
  std::string output;
  bool phi = false;
};

struct ReferenceConfig {
  std::string mode = "compute";  // compute | load
  std::string path;
  std::int64_t iterations = 50000;
  double tolerance = 1e-14;
};

struct InitConfig {
  std::string kind = "zero";  // zero | gaussian
  double scale = 1;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::kCdpsvrg;
  TopologyConfig topology;
  DatasetConfig dataset;
  PartitionConfig partition;
  RobustLRParams<double> problem;
  CompressionConfig compression;
  OracleConfig oracle;
  BudgetConfig budget;
  LogConfig log;
  ReferenceConfig reference;
  InitConfig init;
  std::optional<SaddleConstants<double>> constants;
  std::uint64_t seed = 0;
};

/// Relative paths inside the config resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Everything a run needs, built from a config.
struct Experiment {
  RunConfig config;
  Dataset dataset;
  Partition partition;
  RobustLRProblem<double> problem;
  DecGraph<double> graph;
  SpectralInfo<double> spec;
  SaddleConstants<double> constants;
  Compressor<double> compressor;
  double p = 1;
  PrimalDualPoint<double> z0;
};

Experiment build_experiment(const RunConfig& cfg);

/// Single-node version of the experiment's problem on the same samples.
RobustLRProblem<double> single_node_problem(const Experiment& ex);

ReferenceResult<double> reference_for(const Experiment& ex);

struct StoredReference {
  PrimalDualPoint<double> z;
  double residual = 0;
};

void write_reference(const std::string& path, const PrimalDualPoint<double>& z, double residual);
StoredReference read_reference(const std::string& path);

void write_trace_csv(std::ostream& out, const Trace<double>& trace, bool with_phi);

/// Exit codes shared by the CLI subcommands.
enum ExitCode : int { kOk = 0, kConfigError = 2, kInfeasible = 3, kNumericalFailure = 4 };

int command_run(const std::string& config_path, std::ostream& out, std::ostream& err);
int command_validate(const std::string& config_path, std::ostream& out, std::ostream& err);
int command_reference(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace decsaddle
