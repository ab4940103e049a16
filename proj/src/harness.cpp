#include "foilflow/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "foilflow/checkpoint.hpp"

namespace foilflow::harness {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kUnconditional: return "uncond";
    case Strategy::kConditional: return "conditional";
    case Strategy::kEnergy: return "energy";
    case Strategy::kDflow: return "dflow";
  }
  throw ConfigError("unknown strategy enum value");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "uncond") return Strategy::kUnconditional;
  if (name == "conditional") return Strategy::kConditional;
  if (name == "energy") return Strategy::kEnergy;
  if (name == "dflow") return Strategy::kDflow;
  throw ConfigError("unknown strategy: " + name +
                    " (expected uncond|conditional|energy|dflow)");
}

std::string evaluator_name(EvaluatorKind e) {
  return e == EvaluatorKind::kOracle ? "oracle" : "surrogate";
}

EvaluatorKind evaluator_from_name(const std::string& name) {
  if (name == "oracle") return EvaluatorKind::kOracle;
  if (name == "surrogate") return EvaluatorKind::kSurrogate;
  throw ConfigError("unknown evaluator: " + name + " (expected oracle|surrogate)");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto as_double = [&](const char* name) {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad value for ") + name + ": " + value);
    }
  };
  auto as_int = [&](const char* name) {
    try {
      return std::stoi(value);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad value for ") + name + ": " + value);
    }
  };
  if (key == "strategy") strategy = strategy_from_name(value);
  else if (key == "evaluator") evaluator = evaluator_from_name(value);
  else if (key == "lambda") lambda = as_double("lambda");
  else if (key == "tc") t_c = as_double("tc");
  else if (key == "steps") steps = as_int("steps");
  else if (key == "iters") iterations = as_int("iters");
  else if (key == "tau") tau = as_double("tau");
  else if (key == "tol") tolerance = as_double("tol");
  else if (key == "target") target_cl = as_double("target");
  else if (key == "n") batch = as_int("n");
  else if (key == "seed") seed = std::strtoull(value.c_str(), nullptr, 10);
  else if (key == "alpha-deg") alpha_deg = as_double("alpha-deg");
  else if (key == "threads") threads = as_int("threads");
  else if (key == "records") keep_records = (value == "1" || value == "true");
  else if (key == "model") model_path = value;
  else if (key == "surrogate") surrogate_path = value;
  else if (key == "out") output_dir = value;
  else throw ConfigError("unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    std::string key = line.substr(start, eq - start);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    std::string value = line.substr(eq + 1);
    const auto vstart = value.find_first_not_of(' ');
    value = (vstart == std::string::npos) ? "" : value.substr(vstart);
    config.set(key, value);
  }
  return config;
}

void ExperimentConfig::validate() const {
  if (batch < 1) throw ConfigError("batch size n must be >= 1");
  if (steps < 1) throw ConfigError("steps T must be >= 1");
  if (!std::isfinite(target_cl)) throw ConfigError("target C_L must be finite");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (strategy == Strategy::kEnergy) {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (!(t_c >= 0.0 && t_c <= 1.0)) throw ConfigError("tc must lie in [0, 1]");
  }
  if (strategy == Strategy::kDflow) {
    if (iterations < 1) throw ConfigError("iters K must be >= 1");
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    if (tolerance < 0.0) throw ConfigError("tol must be >= 0");
  }
  if (evaluator == EvaluatorKind::kSurrogate && surrogate_path.empty())
    throw ConfigError("surrogate evaluator selected but no surrogate path given");
}

std::string resolve_output_dir(const std::string& configured) {
  if (const char* env = std::getenv("FOILFLOW_OUT_DIR"); env && *env)
    return env;
  return configured;
}

std::vector<double> StrategyResult::surviving_losses() const {
  std::vector<double> out;
  for (const auto& r : runs)
    if (!r.failed) out.push_back(r.final_loss);
  return out;
}

std::vector<double> StrategyResult::surviving_cls() const {
  std::vector<double> out;
  for (const auto& r : runs)
    if (!r.failed) out.push_back(r.oracle_cl);
  return out;
}

namespace {

struct RunOutput {
  RunRow row;
  std::vector<guidance::StepRecord> step_records;
  std::vector<double> loss_history;
};

void mean_std(const std::vector<double>& values, double& mean, double& sd) {
  if (values.empty()) {
    mean = std::numeric_limits<double>::quiet_NaN();
    sd = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double acc = 0.0;
  for (double v : values) acc += v;
  mean = acc / static_cast<double>(values.size());
  if (values.size() < 2) {
    sd = 0.0;
    return;
  }
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  sd = std::sqrt(var / (static_cast<double>(values.size()) - 1.0));
}

RunOutput execute_run(const ExperimentConfig& config,
                      const flow::VelocityModel& model,
                      const physics::ClEvaluator& evaluator,
                      const physics::ThinAirfoilOracle& oracle, int run_id) {
  RunOutput out;
  out.row.run_id = run_id;

  Rng run_rng = Rng(config.seed).split(static_cast<std::uint64_t>(run_id));
  Eigen::VectorXd x0(model.dim);
  for (int i = 0; i < model.dim; ++i) x0[i] = run_rng.normal();

  const physics::PhysicalTarget target{config.target_cl};

  switch (config.strategy) {
    case Strategy::kUnconditional:
    case Strategy::kConditional: {
      std::optional<double> condition;
      if (config.strategy == Strategy::kConditional) condition = config.target_cl;
      try {
        const flow::Trajectory traj =
            flow::sample_unconditional(model, config.steps, x0, condition);
        const geom::DesignVector design =
            geom::DesignVector::from_flat(traj.terminal_raw);
        out.row.final_loss =
            physics::physical_loss(evaluator, design, target).loss;
        out.row.oracle_cl = oracle.predict(design);
        out.row.iterations = config.steps;
      } catch (const NumericError& e) {
        out.row.failed = true;
        out.row.fail_reason = e.what();
      }
      break;
    }
    case Strategy::kEnergy: {
      guidance::GuidanceConfig gc;
      gc.lambda = config.lambda;
      gc.t_c = config.t_c;
      gc.T = config.steps;
      gc.target = target;
      guidance::GuidedTrajectory guided =
          guidance::sample_energy_guided(model, evaluator, gc, x0);
      out.row.failed = guided.failed;
      out.row.fail_reason = guided.fail_reason;
      out.row.iterations = config.steps;
      if (!guided.failed) {
        out.row.final_loss = guided.final_loss;
        out.row.oracle_cl = oracle.predict(
            geom::DesignVector::from_flat(guided.trajectory.terminal_raw));
      }
      if (config.keep_records) out.step_records = std::move(guided.records);
      break;
    }
    case Strategy::kDflow: {
      dflow::DflowConfig dc;
      dc.max_iterations = config.iterations;
      dc.tau = config.tau;
      dc.solve_steps = config.steps;
      dc.tolerance = config.tolerance;
      dc.target = target;
      dflow::DflowResult result = dflow::dflow_sur(model, evaluator, x0, dc);
      out.row.failed = result.failed;
      out.row.fail_reason = result.fail_reason;
      out.row.iterations = result.iterations;
      if (!result.failed) {
        out.row.final_loss = result.best_loss;
        out.row.oracle_cl = oracle.predict(result.terminal);
      }
      if (config.keep_records) out.loss_history = std::move(result.loss_history);
      break;
    }
  }
  return out;
}

}  // namespace

StrategyResult run_strategy(const ExperimentConfig& config,
                            const flow::VelocityModel& model,
                            const physics::ClEvaluator& evaluator) {
  config.validate();
  if (model.dim != geom::kDesignDim)
    throw ConfigError("experiment needs a dim-" + std::to_string(geom::kDesignDim) +
                      " model, checkpoint has dim " + std::to_string(model.dim));
  if ((config.strategy == Strategy::kConditional) != model.conditional)
    throw ConfigError(config.strategy == Strategy::kConditional
                          ? "conditional strategy needs a conditional model"
                          : "unconditional strategies need an unconditional model");

  const physics::ThinAirfoilOracle oracle(
      physics::OperatingPoint::from_degrees(config.alpha_deg));

  StrategyResult result;
  result.strategy = config.strategy;
  result.evaluator = config.evaluator;
  result.lambda = config.strategy == Strategy::kEnergy ? config.lambda : 0.0;
  result.t_c = config.strategy == Strategy::kEnergy ? config.t_c : 0.0;
  result.steps = config.steps;
  result.n = config.batch;

  std::vector<RunOutput> outputs(config.batch);
  const auto start = std::chrono::steady_clock::now();
  if (config.threads <= 1) {
    for (int j = 0; j < config.batch; ++j)
      outputs[j] = execute_run(config, model, evaluator, oracle, j);
  } else {
    // Batch samples are independent; results land in their slot so the
    // aggregate is schedule-independent.
    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    const int workers_n = std::min(config.threads, config.batch);
    for (int w = 0; w < workers_n; ++w) {
      workers.emplace_back([&] {
        for (int j = next.fetch_add(1); j < config.batch; j = next.fetch_add(1))
          outputs[j] = execute_run(config, model, evaluator, oracle, j);
      });
    }
    for (auto& t : workers) t.join();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  for (auto& out : outputs) {
    if (out.row.failed) ++result.fails;
    result.runs.push_back(std::move(out.row));
    if (config.keep_records) {
      if (config.strategy == Strategy::kEnergy)
        result.step_records.push_back(std::move(out.step_records));
      if (config.strategy == Strategy::kDflow)
        result.loss_histories.push_back(std::move(out.loss_history));
    }
  }
  mean_std(result.surviving_losses(), result.loss_mean, result.loss_std);
  mean_std(result.surviving_cls(), result.cl_mean, result.cl_std);
  return result;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

namespace {

nlohmann::json row_to_json(const StrategyResult& r) {
  nlohmann::json j;
  j["method"] = strategy_name(r.strategy);
  j["evaluator"] = evaluator_name(r.evaluator);
  j["T"] = r.steps;
  j["lambda"] = r.lambda;
  j["tc"] = r.t_c;
  j["n"] = r.n;
  j["fails"] = r.fails;
  j["loss_mean"] = format_number(r.loss_mean);
  j["loss_std"] = format_number(r.loss_std);
  j["cl_mean"] = format_number(r.cl_mean);
  j["cl_std"] = format_number(r.cl_std);
  j["wall_seconds"] = format_number(r.wall_seconds);
  return j;
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/report.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write report: " + csv_path);
  csv << "method,evaluator,T,lambda,tc,n,fails,loss_mean,loss_std,cl_mean,"
         "cl_std,wall_seconds\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    csv << strategy_name(r.strategy) << ',' << evaluator_name(r.evaluator) << ','
        << r.steps << ',' << format_number(r.lambda) << ','
        << format_number(r.t_c) << ',' << r.n << ',' << r.fails << ','
        << format_number(r.loss_mean) << ',' << format_number(r.loss_std) << ','
        << format_number(r.cl_mean) << ',' << format_number(r.cl_std) << ','
        << format_number(r.wall_seconds) << '\n';
    rows.push_back(row_to_json(r));
  }
  if (!csv) throw IoError("write failed: " + csv_path);

  const std::string json_path = out_dir + "/report.json";
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write report: " + json_path);
  js << rows.dump(1) << '\n';
  if (!js) throw IoError("write failed: " + json_path);
}

void write_runs_csv(const StrategyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write runs table: " + path);
  out << "run_id,failed,final_loss,oracle_cl,iterations,fail_reason\n";
  for (const auto& r : result.runs) {
    out << r.run_id << ',' << (r.failed ? 1 : 0) << ','
        << (r.failed ? "nan" : format_number(r.final_loss)) << ','
        << (r.failed ? "nan" : format_number(r.oracle_cl)) << ','
        << r.iterations << ',' << r.fail_reason << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_step_records_csv(const StrategyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write step records: " + path);
  out << "run_id,step,t,loss,grad_norm,velocity_norm,active\n";
  for (std::size_t j = 0; j < result.step_records.size(); ++j) {
    for (const auto& rec : result.step_records[j]) {
      out << j << ',' << rec.step << ',' << format_number(rec.t) << ','
          << format_number(rec.loss) << ',' << format_number(rec.grad_norm)
          << ',' << format_number(rec.velocity_norm) << ','
          << (rec.active ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_loss_histories_csv(const StrategyResult& result,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss histories: " + path);
  out << "run_id,iteration,loss\n";
  for (std::size_t j = 0; j < result.loss_histories.size(); ++j)
    for (std::size_t k = 0; k < result.loss_histories[j].size(); ++k)
      out << j << ',' << k + 1 << ',' << format_number(result.loss_histories[j][k])
          << '\n';
  if (!out) throw IoError("write failed: " + path);
}

namespace {

flow::VelocityModel load_model_checked(const std::string& path) {
  if (path.empty()) throw ConfigError("no model checkpoint configured");
  if (!std::filesystem::exists(path)) throw IoError("missing model file: " + path);
  return io::load_velocity_model(path);
}

struct EvaluatorHolder {
  std::optional<physics::ThinAirfoilOracle> oracle;
  std::optional<physics::SurrogateModel> surrogate_model;
  std::optional<physics::SurrogateEvaluator> surrogate;

  const physics::ClEvaluator& get() const {
    if (surrogate) return *surrogate;
    return *oracle;
  }
};

EvaluatorHolder build_evaluator(const ExperimentConfig& config) {
  EvaluatorHolder holder;
  if (config.evaluator == EvaluatorKind::kSurrogate) {
    if (!std::filesystem::exists(config.surrogate_path))
      throw IoError("missing surrogate file: " + config.surrogate_path);
    holder.surrogate_model = io::load_surrogate_model(config.surrogate_path);
    holder.surrogate.emplace(*holder.surrogate_model);
  } else {
    holder.oracle.emplace(physics::OperatingPoint::from_degrees(config.alpha_deg));
  }
  return holder;
}

void write_strategy_files(const StrategyResult& result, const std::string& out_dir,
                          const std::string& tag) {
  write_runs_csv(result, out_dir + "/runs_" + tag + ".csv");
  if (result.strategy == Strategy::kEnergy && !result.step_records.empty())
    write_step_records_csv(result, out_dir + "/records_" + tag + ".csv");
  if (result.strategy == Strategy::kDflow && !result.loss_histories.empty())
    write_loss_histories_csv(result, out_dir + "/history_" + tag + ".csv");
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const flow::VelocityModel model = load_model_checked(config.model_path);
  const EvaluatorHolder evaluator = build_evaluator(config);

  ExperimentReport report;
  report.rows.push_back(run_strategy(config, model, evaluator.get()));

  const std::string out_dir = resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(out_dir);
  emit_report(report, out_dir);
  write_strategy_files(report.rows.front(), out_dir,
                       strategy_name(config.strategy));
  return report;
}

ExperimentReport run_comparison(const ExperimentConfig& base,
                                const std::string& conditional_model_path) {
  base.validate();
  const flow::VelocityModel model = load_model_checked(base.model_path);
  const EvaluatorHolder evaluator = build_evaluator(base);
  const std::string out_dir = resolve_output_dir(base.output_dir);
  std::filesystem::create_directories(out_dir);

  ExperimentReport report;

  if (!conditional_model_path.empty()) {
    const flow::VelocityModel conditional = load_model_checked(conditional_model_path);
    ExperimentConfig cfg = base;
    cfg.strategy = Strategy::kConditional;
    cfg.steps = 200;
    StrategyResult row = run_strategy(cfg, conditional, evaluator.get());
    write_strategy_files(row, out_dir, "conditional");
    report.rows.push_back(std::move(row));
  }

  const double cutoffs[] = {0.0, 0.2, 0.6, 0.8};
  const int step_grid[] = {200, 1000, 2000};
  for (double tc : cutoffs) {
    for (int T : step_grid) {
      ExperimentConfig cfg = base;
      cfg.strategy = Strategy::kEnergy;
      cfg.t_c = tc;
      cfg.steps = T;
      StrategyResult row = run_strategy(cfg, model, evaluator.get());
      char tag[64];
      std::snprintf(tag, sizeof(tag), "energy_tc%02d_T%d",
                    static_cast<int>(std::lround(tc * 100)), T);
      write_strategy_files(row, out_dir, tag);
      report.rows.push_back(std::move(row));
    }
  }

  {
    ExperimentConfig cfg = base;
    cfg.strategy = Strategy::kDflow;
    cfg.steps = 50;
    StrategyResult row = run_strategy(cfg, model, evaluator.get());
    write_strategy_files(row, out_dir, "dflow");
    report.rows.push_back(std::move(row));
  }

  emit_report(report, out_dir);
  return report;
}

}  // namespace foilflow::harness
