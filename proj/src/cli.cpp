#include "foilflow/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "foilflow/checkpoint.hpp"
#include "foilflow/dataset_io.hpp"
#include "foilflow/harness.hpp"

namespace foilflow::cli {

namespace {

std::vector<int> parse_hidden(const std::string& spec) {
  std::vector<int> hidden;
  std::stringstream ss(spec);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      hidden.push_back(std::stoi(field));
    } catch (const std::exception&) {
      throw ConfigError("bad hidden layer width: " + field);
    }
  }
  if (hidden.empty()) throw ConfigError("empty hidden layer spec");
  return hidden;
}

int cmd_gen_data(int n, std::uint64_t seed, double sigma, const std::string& out) {
  geom::SynthesisInfo info;
  const geom::DesignDataset dataset =
      geom::synthesize_dataset(static_cast<std::size_t>(n), seed, sigma, &info);
  io::save_dataset(dataset, out);
  std::cout << "wrote " << dataset.size() << " designs to " << out
            << " (acceptance rate " << harness::format_number(info.acceptance_rate)
            << ")\n";
  return 0;
}

int cmd_train_flow(const std::string& data_path, int epochs, int batch, double lr,
                   std::uint64_t seed, const std::string& hidden_spec,
                   bool conditional, double alpha_deg, const std::string& out) {
  const geom::DesignDataset dataset = io::load_dataset(data_path);
  flow::FlowTrainConfig config;
  config.epochs = epochs;
  config.batch_size = batch;
  config.learning_rate = lr;
  config.seed = seed;
  config.hidden = parse_hidden(hidden_spec);

  flow::VelocityModel model;
  if (conditional) {
    const physics::OperatingPoint op = physics::OperatingPoint::from_degrees(alpha_deg);
    std::vector<double> labels;
    labels.reserve(dataset.size());
    for (const auto& d : dataset.designs)
      labels.push_back(physics::oracle_cl(d, op));
    model = flow::train_conditional_flow(dataset.rows(), labels, config);
  } else {
    model = flow::train_flow(dataset.rows(), config);
  }
  io::save_velocity_model(model, out);
  std::cout << "wrote " << (conditional ? "conditional" : "unconditional")
            << " velocity model to " << out << "\n";
  return 0;
}

int cmd_train_surrogate(const std::string& data_path, double alpha_deg, int epochs,
                        int batch, double lr, double dropout, std::uint64_t seed,
                        const std::string& out) {
  const geom::DesignDataset dataset = io::load_dataset(data_path);
  physics::SurrogateTrainConfig config;
  config.max_epochs = epochs;
  config.batch_size = batch;
  config.learning_rate = lr;
  config.dropout_rate = dropout;
  const physics::SurrogateModel model = physics::train_surrogate(
      dataset, physics::OperatingPoint::from_degrees(alpha_deg), config, seed);
  io::save_surrogate_model(model, out);
  std::cout << "wrote surrogate to " << out << " (validation MSE "
            << harness::format_number(model.validation_mse) << ")\n";
  return 0;
}

int cmd_generate(const harness::ExperimentConfig& config) {
  const harness::ExperimentReport report = harness::run_experiment(config);
  const auto& row = report.rows.front();
  std::cout << harness::strategy_name(row.strategy) << ": n=" << row.n
            << " fails=" << row.fails
            << " loss_mean=" << harness::format_number(row.loss_mean)
            << " cl_mean=" << harness::format_number(row.cl_mean)
            << " wall=" << harness::format_number(row.wall_seconds) << "s\n";
  if (row.fails == row.n) {
    std::cerr << "all samples failed\n";
    return 4;
  }
  return 0;
}

int cmd_report(const harness::ExperimentConfig& base,
               const std::string& conditional_model) {
  const harness::ExperimentReport report =
      harness::run_comparison(base, conditional_model);
  std::cout << "wrote " << report.rows.size() << " report rows to "
            << harness::resolve_output_dir(base.output_dir) << "\n";
  return 0;
}

struct DiagnoseArgs {
  std::string model_path, surrogate_path, data_path, out_dir = "out";
  std::string evaluator = "oracle";
  double lambda = 10.0, t_c = 0.0, target = 0.7, alpha_deg = 2.0;
  double desired_loss = 1e-4, rate = 0.01;
  int steps = 1000, n = 20, passes = 20, profile_steps = 12;
  std::uint64_t seed = 0;
};

harness::ExperimentConfig diag_base_config(const DiagnoseArgs& args) {
  harness::ExperimentConfig config;
  config.model_path = args.model_path;
  config.surrogate_path = args.surrogate_path;
  config.evaluator = harness::evaluator_from_name(args.evaluator);
  config.lambda = args.lambda;
  config.t_c = args.t_c;
  config.steps = args.steps;
  config.batch = args.n;
  config.seed = args.seed;
  config.target_cl = args.target;
  config.alpha_deg = args.alpha_deg;
  config.output_dir = args.out_dir;
  return config;
}

int cmd_diagnose_alignment(const DiagnoseArgs& args) {
  const flow::VelocityModel model = io::load_velocity_model(args.model_path);
  physics::ThinAirfoilOracle oracle(
      physics::OperatingPoint::from_degrees(args.alpha_deg));
  std::optional<physics::SurrogateModel> surrogate_model;
  std::optional<physics::SurrogateEvaluator> surrogate;
  if (args.evaluator == "surrogate") {
    surrogate_model = io::load_surrogate_model(args.surrogate_path);
    surrogate.emplace(*surrogate_model);
  }
  const physics::ClEvaluator& evaluator =
      surrogate ? static_cast<const physics::ClEvaluator&>(*surrogate)
                : static_cast<const physics::ClEvaluator&>(oracle);

  guidance::GuidanceConfig gc;
  gc.lambda = args.lambda;
  gc.t_c = args.t_c;
  gc.T = args.steps;
  gc.target = physics::PhysicalTarget{args.target};

  const std::string out_dir = harness::resolve_output_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/alignment.csv");
  if (!out) throw IoError("cannot write alignment table");
  out << "run_id,step,t,score,defined\n";

  const Rng base(args.seed);
  for (int j = 0; j < args.n; ++j) {
    Rng run_rng = base.split(static_cast<std::uint64_t>(j));
    Eigen::VectorXd x0(model.dim);
    for (int i = 0; i < model.dim; ++i) x0[i] = run_rng.normal();
    const guidance::GuidedTrajectory guided =
        guidance::sample_energy_guided(model, evaluator, gc, x0);
    if (guided.failed) continue;
    const auto series = diag::trajectory_alignment(
        model, evaluator, gc.target, guided.trajectory,
        args.t_c > 0.0 ? std::optional<double>(args.t_c) : std::nullopt);
    for (const auto& p : series)
      out << j << ',' << p.step << ',' << harness::format_number(p.t) << ','
          << (p.defined ? harness::format_number(p.score) : "") << ','
          << (p.defined ? 1 : 0) << '\n';
  }
  std::cout << "wrote " << out_dir << "/alignment.csv\n";
  return 0;
}

int cmd_diagnose_uq(const DiagnoseArgs& args) {
  const flow::VelocityModel model = io::load_velocity_model(args.model_path);
  const physics::SurrogateModel surrogate =
      io::load_surrogate_model(args.surrogate_path);
  const geom::DesignDataset dataset = io::load_dataset(args.data_path);

  const Rng base(args.seed);
  std::vector<flow::Trajectory> trajectories;
  trajectories.reserve(args.n);
  for (int j = 0; j < args.n; ++j) {
    Rng run_rng = base.split(static_cast<std::uint64_t>(j));
    Eigen::VectorXd x0(model.dim);
    for (int i = 0; i < model.dim; ++i) x0[i] = run_rng.normal();
    trajectories.push_back(flow::sample_unconditional(model, args.steps, x0));
  }
  const diag::UqProfile profile = diag::trajectory_uq_profile(
      surrogate, model.stats, trajectories, dataset, args.passes, args.rate,
      base.split(0xD1A6), args.profile_steps);

  const std::string out_dir = harness::resolve_output_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/uq.csv");
  if (!out) throw IoError("cannot write uq table");
  out << "step,t,sample_id,sigma\n";
  for (std::size_t k = 0; k < profile.steps.size(); ++k)
    for (std::size_t j = 0; j < profile.sigmas[k].size(); ++j)
      out << profile.steps[k] << ',' << harness::format_number(profile.times[k])
          << ',' << j << ',' << harness::format_number(profile.sigmas[k][j])
          << '\n';

  nlohmann::json meta;
  meta["reference_mean"] = profile.reference_mean;
  meta["n_passes"] = profile.n_passes;
  meta["dropout_rate"] = args.rate;
  std::ofstream meta_out(out_dir + "/uq_meta.json");
  meta_out << meta.dump(1) << '\n';
  std::cout << "wrote " << out_dir << "/uq.csv (reference mean "
            << harness::format_number(profile.reference_mean) << ")\n";
  return 0;
}

int cmd_diagnose_gap(const DiagnoseArgs& args) {
  harness::ExperimentConfig guided_cfg = diag_base_config(args);
  guided_cfg.strategy = harness::Strategy::kEnergy;
  guided_cfg.keep_records = false;

  harness::ExperimentConfig uncond_cfg = guided_cfg;
  uncond_cfg.strategy = harness::Strategy::kUnconditional;

  const flow::VelocityModel model = io::load_velocity_model(args.model_path);
  physics::ThinAirfoilOracle oracle(
      physics::OperatingPoint::from_degrees(args.alpha_deg));
  std::optional<physics::SurrogateModel> surrogate_model;
  std::optional<physics::SurrogateEvaluator> surrogate;
  if (guided_cfg.evaluator == harness::EvaluatorKind::kSurrogate) {
    surrogate_model = io::load_surrogate_model(args.surrogate_path);
    surrogate.emplace(*surrogate_model);
  }
  const physics::ClEvaluator& evaluator =
      surrogate ? static_cast<const physics::ClEvaluator&>(*surrogate)
                : static_cast<const physics::ClEvaluator&>(oracle);

  const harness::StrategyResult guided =
      harness::run_strategy(guided_cfg, model, evaluator);
  const harness::StrategyResult uncond =
      harness::run_strategy(uncond_cfg, model, evaluator);

  auto to_finals = [](const harness::StrategyResult& r) {
    std::vector<diag::FinalLoss> finals;
    for (const auto& run : r.runs) finals.push_back({run.final_loss, run.failed});
    return finals;
  };
  const diag::AsyncGapReport report =
      diag::async_gap(to_finals(guided), to_finals(uncond), args.desired_loss);

  const std::string out_dir = harness::resolve_output_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/gap.csv");
  if (!out) throw IoError("cannot write gap table");
  out << "strategy,L_uncon,L_achieved,L_desired,synchronized\n";
  out << "energy," << harness::format_number(report.l_uncon) << ','
      << harness::format_number(report.l_achieved) << ','
      << harness::format_number(report.l_desired) << ','
      << (report.synchronized ? 1 : 0) << '\n';
  std::cout << "wrote " << out_dir << "/gap.csv\n";
  return 0;
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Physics-guided flow-matching airfoil design"};
  app.require_subcommand(1);

  // gen-data
  int gd_n = 200;
  std::uint64_t gd_seed = 1;
  double gd_sigma = 0.05;
  std::string gd_out = "data.csv";
  auto* gen = app.add_subcommand("gen-data", "Synthesize a design dataset");
  gen->add_option("--n", gd_n, "number of designs");
  gen->add_option("--seed", gd_seed, "random seed");
  gen->add_option("--sigma", gd_sigma, "per-coefficient perturbation");
  gen->add_option("--out", gd_out, "output CSV path")->required();

  // train-flow
  std::string tf_data, tf_out = "velocity.json", tf_hidden = "128,128";
  int tf_epochs = 2000, tf_batch = 64;
  double tf_lr = 1e-3, tf_alpha = 2.0;
  std::uint64_t tf_seed = 0;
  bool tf_conditional = false;
  auto* train_flow_cmd =
      app.add_subcommand("train-flow", "Train a velocity field");
  train_flow_cmd->add_option("--data", tf_data, "dataset CSV")->required();
  train_flow_cmd->add_option("--epochs", tf_epochs, "training epochs");
  train_flow_cmd->add_option("--batch", tf_batch, "batch size");
  train_flow_cmd->add_option("--lr", tf_lr, "learning rate");
  train_flow_cmd->add_option("--seed", tf_seed, "random seed");
  train_flow_cmd->add_option("--hidden", tf_hidden, "hidden widths, comma separated");
  train_flow_cmd->add_option("--alpha-deg", tf_alpha,
                             "angle of attack for conditional labels");
  train_flow_cmd->add_flag("--conditional", tf_conditional,
                           "append oracle labels as a conditioning input");
  train_flow_cmd->add_option("--out", tf_out, "checkpoint path")->required();

  // train-surrogate
  std::string ts_data, ts_out = "surrogate.json";
  int ts_epochs = 800, ts_batch = 32;
  double ts_lr = 2e-3, ts_alpha = 2.0, ts_dropout = 0.01;
  std::uint64_t ts_seed = 0;
  auto* train_sur = app.add_subcommand("train-surrogate",
                                       "Fit the dropout surrogate to oracle labels");
  train_sur->add_option("--data", ts_data, "dataset CSV")->required();
  train_sur->add_option("--alpha-deg", ts_alpha, "angle of attack (degrees)");
  train_sur->add_option("--epochs", ts_epochs, "max training epochs");
  train_sur->add_option("--batch", ts_batch, "batch size");
  train_sur->add_option("--lr", ts_lr, "learning rate");
  train_sur->add_option("--dropout", ts_dropout, "training dropout rate");
  train_sur->add_option("--seed", ts_seed, "random seed");
  train_sur->add_option("--out", ts_out, "checkpoint path")->required();

  // generate
  harness::ExperimentConfig gen_config;
  std::string gen_config_file, gen_strategy, gen_evaluator;
  auto* generate = app.add_subcommand("generate", "Run a generation batch");
  generate->add_option("--config", gen_config_file, "key=value config file");
  generate->add_option("--strategy", gen_strategy, "uncond|conditional|energy|dflow");
  auto* g_model = generate->add_option("--model", gen_config.model_path, "velocity checkpoint");
  auto* g_sur = generate->add_option("--surrogate", gen_config.surrogate_path, "surrogate checkpoint");
  generate->add_option("--evaluator", gen_evaluator, "oracle|surrogate");
  auto* g_lambda = generate->add_option("--lambda", gen_config.lambda, "energy coefficient");
  auto* g_tc = generate->add_option("--tc", gen_config.t_c, "guidance cutoff time");
  auto* g_steps = generate->add_option("--steps", gen_config.steps, "inference steps T");
  auto* g_iters = generate->add_option("--iters", gen_config.iterations, "dflow iterations K");
  auto* g_tau = generate->add_option("--tau", gen_config.tau, "dflow step size");
  auto* g_tol = generate->add_option("--tol", gen_config.tolerance, "dflow stop tolerance");
  auto* g_target = generate->add_option("--target", gen_config.target_cl, "target C_L");
  auto* g_n = generate->add_option("--n", gen_config.batch, "batch size");
  auto* g_seed = generate->add_option("--seed", gen_config.seed, "batch seed");
  auto* g_alpha = generate->add_option("--alpha-deg", gen_config.alpha_deg, "angle of attack");
  auto* g_threads = generate->add_option("--threads", gen_config.threads,
                                         "worker threads (timing studies use 1)");
  auto* g_out = generate->add_option("--out", gen_config.output_dir, "output directory");

  // report
  harness::ExperimentConfig rep_config;
  rep_config.batch = 200;
  std::string rep_conditional, rep_evaluator = "oracle";
  auto* report_cmd =
      app.add_subcommand("report", "Run the full strategy comparison");
  report_cmd->add_option("--model", rep_config.model_path, "velocity checkpoint")
      ->required();
  report_cmd->add_option("--conditional-model", rep_conditional,
                         "conditional velocity checkpoint");
  report_cmd->add_option("--surrogate", rep_config.surrogate_path, "surrogate checkpoint");
  report_cmd->add_option("--evaluator", rep_evaluator, "oracle|surrogate");
  report_cmd->add_option("--lambda", rep_config.lambda, "energy coefficient");
  report_cmd->add_option("--target", rep_config.target_cl, "target C_L");
  report_cmd->add_option("--n", rep_config.batch, "batch size per row");
  report_cmd->add_option("--seed", rep_config.seed, "batch seed");
  report_cmd->add_option("--alpha-deg", rep_config.alpha_deg, "angle of attack");
  report_cmd->add_option("--threads", rep_config.threads, "worker threads");
  report_cmd->add_option("--out", rep_config.output_dir, "output directory");

  // diagnose
  DiagnoseArgs diag_args;
  auto* diagnose = app.add_subcommand("diagnose", "Analysis instruments");
  diagnose->require_subcommand(1);
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", diag_args.model_path, "velocity checkpoint")->required();
    cmd->add_option("--surrogate", diag_args.surrogate_path, "surrogate checkpoint");
    cmd->add_option("--evaluator", diag_args.evaluator, "oracle|surrogate");
    cmd->add_option("--target", diag_args.target, "target C_L");
    cmd->add_option("--alpha-deg", diag_args.alpha_deg, "angle of attack");
    cmd->add_option("--steps", diag_args.steps, "inference steps T");
    cmd->add_option("--n", diag_args.n, "batch size");
    cmd->add_option("--seed", diag_args.seed, "batch seed");
    cmd->add_option("--out", diag_args.out_dir, "output directory");
  };
  auto* d_align = diagnose->add_subcommand("alignment",
                                           "Velocity vs physical-gradient scores");
  add_common(d_align);
  d_align->add_option("--lambda", diag_args.lambda, "energy coefficient");
  d_align->add_option("--tc", diag_args.t_c, "guidance cutoff time");
  auto* d_uq = diagnose->add_subcommand("uq", "MC-dropout trajectory profile");
  add_common(d_uq);
  d_uq->add_option("--data", diag_args.data_path, "reference dataset CSV")->required();
  d_uq->add_option("--passes", diag_args.passes, "dropout passes per sample");
  d_uq->add_option("--rate", diag_args.rate, "dropout rate");
  d_uq->add_option("--profile-steps", diag_args.profile_steps, "profiled steps");
  auto* d_gap = diagnose->add_subcommand("gap", "Asynchronous-gap report");
  add_common(d_gap);
  d_gap->add_option("--lambda", diag_args.lambda, "energy coefficient");
  d_gap->add_option("--tc", diag_args.t_c, "guidance cutoff time");
  d_gap->add_option("--desired", diag_args.desired_loss, "desired loss threshold");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) return cmd_gen_data(gd_n, gd_seed, gd_sigma, gd_out);
  if (train_flow_cmd->parsed())
    return cmd_train_flow(tf_data, tf_epochs, tf_batch, tf_lr, tf_seed, tf_hidden,
                          tf_conditional, tf_alpha, tf_out);
  if (train_sur->parsed())
    return cmd_train_surrogate(ts_data, ts_alpha, ts_epochs, ts_batch, ts_lr,
                               ts_dropout, ts_seed, ts_out);
  if (generate->parsed()) {
    harness::ExperimentConfig config;
    if (!gen_config_file.empty())
      config = harness::ExperimentConfig::from_file(gen_config_file);
    // CLI flags override file entries.
    if (!gen_strategy.empty()) config.strategy = harness::strategy_from_name(gen_strategy);
    if (!gen_evaluator.empty()) config.evaluator = harness::evaluator_from_name(gen_evaluator);
    if (*g_model) config.model_path = gen_config.model_path;
    if (*g_sur) config.surrogate_path = gen_config.surrogate_path;
    if (*g_lambda) config.lambda = gen_config.lambda;
    if (*g_tc) config.t_c = gen_config.t_c;
    if (*g_steps) config.steps = gen_config.steps;
    if (*g_iters) config.iterations = gen_config.iterations;
    if (*g_tau) config.tau = gen_config.tau;
    if (*g_tol) config.tolerance = gen_config.tolerance;
    if (*g_target) config.target_cl = gen_config.target_cl;
    if (*g_n) config.batch = gen_config.batch;
    if (*g_seed) config.seed = gen_config.seed;
    if (*g_alpha) config.alpha_deg = gen_config.alpha_deg;
    if (*g_threads) config.threads = gen_config.threads;
    if (*g_out) config.output_dir = gen_config.output_dir;
    return cmd_generate(config);
  }
  if (report_cmd->parsed()) {
    rep_config.evaluator = harness::evaluator_from_name(rep_evaluator);
    return cmd_report(rep_config, rep_conditional);
  }
  if (diagnose->parsed()) {
    if (d_align->parsed()) return cmd_diagnose_alignment(diag_args);
    if (d_uq->parsed()) return cmd_diagnose_uq(diag_args);
    if (d_gap->parsed()) return cmd_diagnose_gap(diag_args);
  }
  return 2;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 4;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace foilflow::cli
