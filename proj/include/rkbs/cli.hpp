#ifndef RKBS_CLI_HPP
#define RKBS_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rkbs/admm.hpp"
#include "rkbs/data.hpp"
#include "rkbs/kernels.hpp"
#include "rkbs/losses.hpp"

namespace rkbs::cli {

// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kDomain = 4,
  kSolver = 5,
  kModelFormat = 6,
  kAssumptionNotMet = 7,
  kBenchmarkFailed = 8,
};

enum class Command { Train, Predict, Evaluate, Check, Benchmark };
enum class ReportFormat { Text, Csv, Json };

struct RunConfig {
  Command command = Command::Train;

  std::string kernel = "gaussian";
  double sigma = 1.0;
  std::string loss = "hinge";
  std::string loss_file;  // JSON loss definition; overrides `loss`
  std::size_t M = 0;      // 0: default_truncation(N)
  SolverConfig solver;

  std::string train_path;
  std::string test_path;
  std::string model_path;
  std::string out_path;
  std::string trace_path;
  std::string label_column = "label";
  std::string generate;  // "squares:n_train:n_test"
  ReportFormat format = ReportFormat::Text;

  // Benchmark grid.
  std::vector<std::string> losses;
  std::vector<int> m_values{1, 2, 3};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string trace_dir;
};

struct SquaresSpec {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

// Parses "squares:n_train:n_test"; throws ConfigError.
SquaresSpec parse_generate(const std::string& text);

KernelSpec make_kernel(const RunConfig& config, int dimension);
LossSpec make_loss(const RunConfig& config);

struct TrainOutcome {
  SolveResult result;
  std::size_t M = 0;
  RankCheck rank;
  bool rank_checked = false;
};

// Builds the features and runs the multi-start solver on `train`.
TrainOutcome train_on(const RunConfig& config, const KernelSpec& kernel, const LossSpec& loss, const Dataset& train);

struct BenchmarkCell {
  std::string loss;
  int m = 1;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the cell failed
  std::vector<TraceRecord> trace;
};

/// Every (loss, m, seed) cell, in that nesting order. Data comes from
/// `generate` (one draw per seed) or from train_path/test_path; the seed also
/// drives the restarts. Failures are recorded per cell, never thrown.
std::vector<BenchmarkCell> run_benchmark(const RunConfig& config);

// loss,m,seed,accuracy,objective,iterations,converged
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkCell>& cells);
// Mean accuracy per cell, m down the rows and losses across.
void write_benchmark_table(std::ostream& out, const std::vector<BenchmarkCell>& cells);
std::string cell_trace_name(const BenchmarkCell& cell);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace rkbs::cli

#endif  // RKBS_CLI_HPP
