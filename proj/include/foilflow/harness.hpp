#pragma once

#include <optional>
#include <string>
#include <vector>

#include "foilflow/dflow.hpp"
#include "foilflow/diagnostics.hpp"
#include "foilflow/guidance.hpp"

namespace foilflow::harness {

enum class Strategy { kUnconditional, kConditional, kEnergy, kDflow };
enum class EvaluatorKind { kOracle, kSurrogate };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
std::string evaluator_name(EvaluatorKind e);
EvaluatorKind evaluator_from_name(const std::string& name);

// Flat experiment description; loadable from a key=value text file with
// CLI flags overriding individual entries.
struct ExperimentConfig {
  Strategy strategy = Strategy::kUnconditional;
  EvaluatorKind evaluator = EvaluatorKind::kOracle;
  double lambda = 10.0;
  double t_c = 0.0;
  int steps = 1000;         // inference steps T
  int iterations = 200;     // dflow optimization budget K
  double tau = 0.1;
  double tolerance = 1e-8;
  double target_cl = 0.7;
  int batch = 200;
  std::uint64_t seed = 0;
  double alpha_deg = 2.0;
  int threads = 1;
  bool keep_records = true;
  std::string model_path;
  std::string surrogate_path;
  std::string output_dir = "out";

  static ExperimentConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

// Applies the FOILFLOW_OUT_DIR environment override, the only setting the
// environment may change.
std::string resolve_output_dir(const std::string& configured);

struct RunRow {
  int run_id = 0;
  bool failed = false;
  std::string fail_reason;
  double final_loss = 0.0;  // under the guiding evaluator
  double oracle_cl = 0.0;   // always re-evaluated by the oracle
  int iterations = 0;       // dflow iterations used; T elsewhere
};

struct StrategyResult {
  Strategy strategy = Strategy::kUnconditional;
  EvaluatorKind evaluator = EvaluatorKind::kOracle;
  double lambda = 0.0;
  double t_c = 0.0;
  int steps = 0;
  int n = 0;
  int fails = 0;
  double loss_mean = 0.0, loss_std = 0.0;
  double cl_mean = 0.0, cl_std = 0.0;
  double wall_seconds = 0.0;  // generation only, excludes loading and I/O
  std::vector<RunRow> runs;
  std::vector<std::vector<guidance::StepRecord>> step_records;  // energy
  std::vector<std::vector<double>> loss_histories;              // dflow

  std::vector<double> surviving_losses() const;
  std::vector<double> surviving_cls() const;
};

// Executes the configured batch against an already-loaded model. The model
// must be conditional exactly when the strategy is kConditional.
StrategyResult run_strategy(const ExperimentConfig& config,
                            const flow::VelocityModel& model,
                            const physics::ClEvaluator& evaluator);

struct ExperimentReport {
  std::vector<StrategyResult> rows;
};

// Loads the referenced model (and surrogate when configured), runs the
// strategy, and writes report.csv/report.json plus runs.csv and the
// per-step record tables under the resolved output directory.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Comparison protocol: energy rows over t_c in {0, 0.2, 0.6, 0.8} and T in
// {200, 1000, 2000} at the configured lambda, plus one dflow row (T = 50),
// plus a conditional row when a conditional checkpoint is supplied.
ExperimentReport run_comparison(const ExperimentConfig& base,
                                const std::string& conditional_model_path = "");

void emit_report(const ExperimentReport& report, const std::string& out_dir);
void write_runs_csv(const StrategyResult& result, const std::string& path);
void write_step_records_csv(const StrategyResult& result, const std::string& path);
void write_loss_histories_csv(const StrategyResult& result, const std::string& path);

// Formats a double at six significant digits; report tables use this so
// repeated emission is byte-identical.
std::string format_number(double v);

}  // namespace foilflow::harness
