#include "rkbs/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkbs/error.hpp"
#include "rkbs/model.hpp"
#include "rkbs/tensor.hpp"

namespace rkbs::cli {

namespace {

// Above this many unknowns the rank test in `train` is skipped; `check` always runs it.
constexpr std::size_t kAdvisoryRankLimit = 2080;

std::string format_fixed(double value, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << value;
  return s.str();
}

std::string format_exact(double value) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << value;
  return s.str();
}

// Flat key/value report rendered as text lines, a two-row CSV, or JSON.
class Report {
 public:
  Report& add(const std::string& key, nlohmann::ordered_json value) {
    fields_[key] = std::move(value);
    return *this;
  }

  void write(std::ostream& out, ReportFormat format) const {
    switch (format) {
      case ReportFormat::Json:
        out << fields_.dump(2) << '\n';
        return;
      case ReportFormat::Csv: {
        bool first = true;
        for (const auto& [key, value] : fields_.items()) {
          out << (first ? "" : ",") << key;
          first = false;
        }
        out << '\n';
        first = true;
        for (const auto& [key, value] : fields_.items()) {
          out << (first ? "" : ",") << render(value);
          first = false;
        }
        out << '\n';
        return;
      }
      case ReportFormat::Text:
        for (const auto& [key, value] : fields_.items()) out << key << ": " << render(value) << '\n';
        return;
    }
  }

 private:
  static std::string render(const nlohmann::ordered_json& value) {
    return value.is_string() ? value.get<std::string>() : value.dump();
  }

  nlohmann::ordered_json fields_ = nlohmann::ordered_json::object();
};

CsvOptions csv_options(const RunConfig& config) {
  CsvOptions options;
  options.label_column = config.label_column;
  return options;
}

std::pair<Dataset, Dataset> generated_split(const RunConfig& config, std::uint64_t seed) {
  const SquaresSpec spec = parse_generate(config.generate);
  return generate_overlapping_squares(spec.n_train, spec.n_test, seed);
}

Dataset training_data(const RunConfig& config) {
  if (!config.generate.empty()) return generated_split(config, config.solver.seed).first;
  if (config.train_path.empty()) throw ConfigError("no training data: pass --train or --generate");
  return load_csv(config.train_path, csv_options(config));
}

std::optional<Dataset> test_data(const RunConfig& config) {
  if (!config.test_path.empty()) return load_csv(config.test_path, csv_options(config));
  if (!config.generate.empty()) return generated_split(config, config.solver.seed).second;
  return std::nullopt;
}

void require_path(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string("missing required ") + flag);
}

std::string rank_summary(const RankCheck& rank, std::size_t M, bool checked) {
  if (!checked) return "skipped (N(N+1)/2 = " + std::to_string(rank.required) + " is too large for the advisory)";
  if (!rank.numeric_rank)
    return "not satisfied (M = " + std::to_string(M) + " < N(N+1)/2 = " + std::to_string(rank.required) + ")";
  return std::string(rank.satisfied ? "satisfied" : "not satisfied") + " (rank " + std::to_string(*rank.numeric_rank) +
         " of " + std::to_string(rank.required) + ")";
}

void write_confusion(std::ostream& out, const ConfusionCounts& counts) {
  out << "             pred +1  pred -1\n";
  out << "  label +1 " << std::setw(9) << counts.true_positive << std::setw(9) << counts.false_negative << '\n';
  out << "  label -1 " << std::setw(9) << counts.false_positive << std::setw(9) << counts.true_negative << '\n';
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  require_path(config.model_path, "--model");
  const Dataset train = training_data(config);
  const KernelSpec kernel = make_kernel(config, train.dimension());
  const LossSpec loss = make_loss(config);
  const TrainOutcome outcome = train_on(config, kernel, loss, train);
  const SolveResult& result = outcome.result;

  TrainedModel model(kernel, outcome.M, config.solver.m, result.c_star, train.points, config.solver.lambda,
                     config.solver.beta, result.objective);
  save_model(model, config.model_path);

  const std::string trace_path = config.trace_path.empty() ? config.model_path + ".trace.csv" : config.trace_path;
  {
    std::ofstream trace(trace_path);
    if (!trace) throw DataError("cannot open '" + trace_path + "' for writing");
    write_trace_csv(trace, result.trace);
  }

  Report report;
  report.add("N", train.size())
      .add("M", outcome.M)
      .add("objective", format_exact(result.objective))
      .add("iterations", result.iterations)
      .add("converged", result.converged)
      .add("restart", result.restart_index)
      .add("final_residual", result.trace.empty() ? 0.0 : result.trace.back().primal_residual)
      .add("assumption", rank_summary(outcome.rank, outcome.M, outcome.rank_checked))
      .add("train_accuracy", format_fixed(evaluate_accuracy(model, train), 3));
  if (auto test = test_data(config)) report.add("test_accuracy", format_fixed(evaluate_accuracy(model, *test), 3));
  report.add("model", config.model_path).add("trace", trace_path);
  report.write(out, config.format);
  return kOk;
}

int cmd_predict(const RunConfig& config, std::ostream& out) {
  require_path(config.model_path, "--model");
  require_path(config.test_path, "--test");
  const TrainedModel model = load_model(config.model_path);
  const Eigen::MatrixXd points = load_points_csv(config.test_path, csv_options(config));
  if (points.cols() != model.kernel().dimension)
    throw DataError("'" + config.test_path + "' has " + std::to_string(points.cols()) +
                    " feature columns but the model expects " + std::to_string(model.kernel().dimension));

  std::ofstream file;
  if (!config.out_path.empty()) {
    file.open(config.out_path);
    if (!file) throw DataError("cannot open '" + config.out_path + "' for writing");
  }
  std::ostream& sink = config.out_path.empty() ? out : file;
  sink << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index k = 0; k < points.cols(); ++k) sink << 'x' << k << ',';
  sink << "decision,label\n";
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) x[static_cast<std::size_t>(k)] = points(i, k);
    const double value = decision_value(model, x);
    for (double xk : x) sink << xk << ',';
    sink << value << ',' << (value >= 0.0 ? 1 : -1) << '\n';
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  require_path(config.model_path, "--model");
  const TrainedModel model = load_model(config.model_path);
  auto data = test_data(config);
  if (!data) throw ConfigError("no evaluation data: pass --test or --generate");
  const ConfusionCounts counts = confusion(model, *data);
  if (config.format == ReportFormat::Text) {
    out << "accuracy: " << format_fixed(counts.accuracy(), 3) << '\n';
    write_confusion(out, counts);
    return kOk;
  }
  Report report;
  report.add("accuracy", format_fixed(counts.accuracy(), 3))
      .add("tp", counts.true_positive)
      .add("fn", counts.false_negative)
      .add("fp", counts.false_positive)
      .add("tn", counts.true_negative);
  report.write(out, config.format);
  return kOk;
}

int cmd_check(const RunConfig& config, std::ostream& out) {
  const Dataset train = training_data(config);
  const KernelSpec kernel = make_kernel(config, train.dimension());
  const std::size_t M = config.M > 0 ? config.M : default_truncation(train.size());
  const FeatureMatrix fm = build_feature_matrix(kernel, M, train.points);
  const RankCheck rank = check_rank_assumption(fm);

  Report report;
  report.add("M", M).add("N", train.size()).add("required", rank.required);
  if (rank.numeric_rank)
    report.add("rank", *rank.numeric_rank);
  else
    report.add("rank", "not computed");
  report.add("satisfied", rank.satisfied);
  if (!rank.numeric_rank)
    report.add("note", "M = " + std::to_string(M) + " is below the bound N(N+1)/2 = " + std::to_string(rank.required));
  report.write(out, config.format);
  return rank.satisfied ? kOk : kAssumptionNotMet;
}

int cmd_benchmark(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const std::vector<BenchmarkCell> cells = run_benchmark(config);

  if (!config.trace_dir.empty()) {
    std::filesystem::create_directories(config.trace_dir);
    for (const auto& cell : cells) {
      if (!cell.error.empty()) continue;
      const auto path = std::filesystem::path(config.trace_dir) / cell_trace_name(cell);
      std::ofstream trace(path);
      if (!trace) throw DataError("cannot open '" + path.string() + "' for writing");
      write_trace_csv(trace, cell.trace);
    }
  }

  if (config.out_path.empty()) {
    write_benchmark_csv(out, cells);
  } else {
    std::ofstream file(config.out_path);
    if (!file) throw DataError("cannot open '" + config.out_path + "' for writing");
    write_benchmark_csv(file, cells);
    out << "M = " << (config.M > 0 ? std::to_string(config.M) : std::string("max(N(N+1)/2, 64)")) << '\n';
    write_benchmark_table(out, cells);
  }
  for (const auto& cell : cells)
    if (!cell.error.empty())
      err << "cell " << cell.loss << " m=" << cell.m << " seed=" << cell.seed << " failed: " << cell.error << '\n';

  const bool any_ok = std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.error.empty(); });
  return any_ok ? kOk : kBenchmarkFailed;
}

}  // namespace

SquaresSpec parse_generate(const std::string& text) {
  SquaresSpec spec;
  char tail = 0;
  unsigned long long n_train = 0;
  unsigned long long n_test = 0;
  if (std::sscanf(text.c_str(), "squares:%llu:%llu%c", &n_train, &n_test, &tail) != 2)
    throw ConfigError("--generate expects squares:n_train:n_test, got '" + text + "'");
  spec.n_train = n_train;
  spec.n_test = n_test;
  return spec;
}

KernelSpec make_kernel(const RunConfig& config, int dimension) {
  KernelSpec kernel{kernel_family_from_string(config.kernel), dimension, config.sigma};
  kernel.validate();
  return kernel;
}

LossSpec make_loss(const RunConfig& config) {
  if (config.loss_file.empty()) return LossSpec::by_name(config.loss);
  std::ifstream in(config.loss_file);
  if (!in) throw DataError("cannot open loss file '" + config.loss_file + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("loss file '" + config.loss_file + "' is not valid JSON: " + e.what());
  }
  return LossSpec::from_json(j);
}

TrainOutcome train_on(const RunConfig& config, const KernelSpec& kernel, const LossSpec& loss, const Dataset& train) {
  config.solver.validate();
  train.validate();
  TrainOutcome outcome;
  outcome.M = config.M > 0 ? config.M : default_truncation(train.size());
  auto fm = std::make_shared<const FeatureMatrix>(build_feature_matrix(kernel, outcome.M, train.points));
  outcome.rank.required = train.size() * (train.size() + 1) / 2;
  if (outcome.M < outcome.rank.required || outcome.rank.required <= kAdvisoryRankLimit) {
    outcome.rank = check_rank_assumption(*fm);
    outcome.rank_checked = true;
  }
  outcome.result = multi_start_solve(TensorHandle(fm, config.solver.m), loss, train, config.solver);
  return outcome;
}

std::vector<BenchmarkCell> run_benchmark(const RunConfig& config) {
  config.solver.validate();
  const std::vector<std::string> losses = config.losses.empty() ? LossSpec::builtin_names() : config.losses;
  std::vector<LossSpec> specs;
  for (const auto& name : losses) specs.push_back(LossSpec::by_name(name));
  if (config.m_values.empty() || config.seeds.empty()) throw ConfigError("benchmark needs at least one m and one seed");
  for (int m : config.m_values)
    if (m < 1) throw ConfigError("benchmark m values must be >= 1");

  std::optional<std::pair<Dataset, Dataset>> fixed;
  if (config.generate.empty()) {
    if (config.train_path.empty() || config.test_path.empty())
      throw ConfigError("benchmark needs --generate or both --train and --test");
    fixed.emplace(load_csv(config.train_path, csv_options(config)), load_csv(config.test_path, csv_options(config)));
  }

  const std::size_t n_loss = losses.size();
  const std::size_t n_m = config.m_values.size();
  const std::size_t n_seed = config.seeds.size();
  std::vector<BenchmarkCell> cells(n_loss * n_m * n_seed);

  for (std::size_t s = 0; s < n_seed; ++s) {
    const std::uint64_t seed = config.seeds[s];
    const auto [train, test] = fixed ? *fixed : generated_split(config, seed);
    const KernelSpec kernel = make_kernel(config, train.dimension());
    const std::size_t M = config.M > 0 ? config.M : default_truncation(train.size());
    auto fm = std::make_shared<const FeatureMatrix>(build_feature_matrix(kernel, M, train.points));

    for (std::size_t l = 0; l < n_loss; ++l) {
      for (std::size_t q = 0; q < n_m; ++q) {
        BenchmarkCell& cell = cells[(l * n_m + q) * n_seed + s];
        cell.loss = losses[l];
        cell.m = config.m_values[q];
        cell.seed = seed;
        SolverConfig solver = config.solver;
        solver.m = cell.m;
        solver.seed = seed;
        try {
          SolveResult result = multi_start_solve(TensorHandle(fm, cell.m), specs[l], train, solver);
          const TrainedModel model(kernel, M, cell.m, result.c_star, train.points, solver.lambda, solver.beta,
                                   result.objective);
          cell.accuracy = evaluate_accuracy(model, test);
          cell.objective = result.objective;
          cell.iterations = result.iterations;
          cell.converged = result.converged;
          cell.trace = std::move(result.trace);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
    }
  }
  return cells;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkCell>& cells) {
  const auto old_precision = out.precision();
  out << "loss,m,seed,accuracy,objective,iterations,converged\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& cell : cells) {
    out << cell.loss << ',' << cell.m << ',' << cell.seed << ',';
    if (cell.error.empty())
      out << cell.accuracy << ',' << cell.objective << ',' << cell.iterations << ',' << (cell.converged ? 1 : 0);
    else
      out << "nan,nan,0,0";
    out << '\n';
  }
  out.precision(old_precision);
}

void write_benchmark_table(std::ostream& out, const std::vector<BenchmarkCell>& cells) {
  std::vector<std::string> losses;
  std::vector<int> ms;
  std::map<std::pair<std::string, int>, std::pair<double, int>> sums;
  for (const auto& cell : cells) {
    if (std::find(losses.begin(), losses.end(), cell.loss) == losses.end()) losses.push_back(cell.loss);
    if (std::find(ms.begin(), ms.end(), cell.m) == ms.end()) ms.push_back(cell.m);
    auto& [sum, count] = sums[{cell.loss, cell.m}];
    if (cell.error.empty()) {
      sum += cell.accuracy;
      ++count;
    }
  }
  out << std::left << std::setw(8) << "m";
  for (const auto& loss : losses) out << std::right << std::setw(15) << loss;
  out << '\n';
  for (int m : ms) {
    out << std::left << std::setw(8) << m;
    for (const auto& loss : losses) {
      const auto& [sum, count] = sums[{loss, m}];
      out << std::right << std::setw(15) << (count > 0 ? format_fixed(sum / count, 3) : std::string("failed"));
    }
    out << '\n';
  }
}

std::string cell_trace_name(const BenchmarkCell& cell) {
  return cell.loss + "_m" + std::to_string(cell.m) + "_seed" + std::to_string(cell.seed) + ".csv";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Support vector machines in 2m/(2m-1)-norm RKBS, trained by ADMM splitting", "rkbs_svm"};
  app.set_config("--config", "", "TOML/INI file of option values; command-line flags take precedence");
  app.require_subcommand(1);

  RunConfig config;
  SolverConfig& solver = config.solver;
  std::string format = "text";

  app.add_option("--kernel", config.kernel, "Kernel family")->check(CLI::IsMember({"gaussian", "min"}))->capture_default_str();
  app.add_option("--sigma", config.sigma, "Gaussian kernel width")->capture_default_str();
  app.add_option("--m", solver.m, "Space exponent: the RKBS norm is 2m/(2m-1)")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--loss", config.loss, "Built-in loss")->check(CLI::IsMember(LossSpec::builtin_names()))->capture_default_str();
  app.add_option("--loss-file", config.loss_file, "JSON piecewise loss definition (overrides --loss)");
  app.add_option("--lambda", solver.lambda, "Regularization weight")->capture_default_str();
  app.add_option("--beta", solver.beta, "Augmented Lagrangian penalty")->capture_default_str();
  app.add_option("--M", config.M, "Feature truncation (0: max(N(N+1)/2, 64))")->capture_default_str();
  app.add_option("--eps1", solver.eps1, "Newton step-length tolerance")->capture_default_str();
  app.add_option("--eps2", solver.eps2, "Primal residual tolerance")->capture_default_str();
  app.add_option("--max-outer", solver.max_outer, "Outer iteration limit")->capture_default_str();
  app.add_option("--max-newton", solver.max_newton, "Newton iteration limit per outer step")->capture_default_str();
  app.add_option("--restarts", solver.restarts, "Random initial points")->capture_default_str();
  app.add_option("--seed", solver.seed, "Seed for restarts and generated data")->capture_default_str();
  app.add_option("--init-lo", solver.init_lo, "Lower bound of the initial box")->capture_default_str();
  app.add_option("--init-hi", solver.init_hi, "Upper bound of the initial box")->capture_default_str();
  app.add_option("--train", config.train_path, "Training CSV");
  app.add_option("--test", config.test_path, "Test CSV");
  app.add_option("--model", config.model_path, "Model file (JSON)");
  app.add_option("--out", config.out_path, "Output file");
  app.add_option("--trace", config.trace_path, "Trace CSV path for train (default: <model>.trace.csv)");
  app.add_option("--trace-dir", config.trace_dir, "Per-cell trace directory for benchmark");
  app.add_option("--label-column", config.label_column, "Label column name or index")->capture_default_str();
  app.add_option("--generate", config.generate, "Generated data instead of CSV: squares:n_train:n_test");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "csv", "json"}))->capture_default_str();
  app.add_option("--losses", config.losses, "Benchmark losses (default: all built-ins)")->delimiter(',');
  app.add_option("--m-values", config.m_values, "Benchmark m values")->delimiter(',')->capture_default_str();
  app.add_option("--seeds", config.seeds, "Benchmark seeds")->delimiter(',')->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a model; writes the model file and a trace CSV")->fallthrough();
  auto* predict = app.add_subcommand("predict", "Decision values and labels for the points in --test")->fallthrough();
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy and confusion counts on labeled data")->fallthrough();
  auto* check = app.add_subcommand("check", "Rank test of the features against N(N+1)/2")->fallthrough();
  auto* benchmark = app.add_subcommand("benchmark", "Loss x m x seed accuracy grid")->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfig;
  }

  config.format = format == "json" ? ReportFormat::Json : format == "csv" ? ReportFormat::Csv : ReportFormat::Text;
  if (train->parsed()) config.command = Command::Train;
  if (predict->parsed()) config.command = Command::Predict;
  if (evaluate->parsed()) config.command = Command::Evaluate;
  if (check->parsed()) config.command = Command::Check;
  if (benchmark->parsed()) config.command = Command::Benchmark;

  try {
    solver.validate();
    switch (config.command) {
      case Command::Train:
        return cmd_train(config, out);
      case Command::Predict:
        return cmd_predict(config, out);
      case Command::Evaluate:
        return cmd_evaluate(config, out);
      case Command::Check:
        return cmd_check(config, out);
      case Command::Benchmark:
        return cmd_benchmark(config, out, err);
    }
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const ModelFormatError& e) {
    err << "model format error: " << e.what() << '\n';
    return kModelFormat;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const UnsupportedPiece& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const DimensionError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace rkbs::cli
