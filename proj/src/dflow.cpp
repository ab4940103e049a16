#include "foilflow/dflow.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace foilflow::dflow {

void DflowConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("dflow: K must be >= 1");
  if (!(tau > 0.0) && tau != 0.0) throw ConfigError("dflow: tau must be >= 0");
  if (solve_steps < 1) throw ConfigError("dflow: T must be >= 1");
  if (tolerance < 0.0) throw ConfigError("dflow: tolerance must be >= 0");
  if (!std::isfinite(target.cl)) throw ConfigError("dflow: target must be finite");
}

namespace {

struct CachedSolve {
  flow::Trajectory trajectory;
  std::vector<nn::ForwardCache> caches;  // one per Euler step
  bool finite = true;
};

// Forward Euler storing the per-step forward caches so the reverse sweep
// can run without re-evaluating the network.
CachedSolve solve_with_caches(const flow::VelocityModel& model, int T,
                              const Eigen::VectorXd& x0) {
  CachedSolve out;
  out.trajectory.dt = 1.0 / T;
  out.trajectory.states.reserve(T + 1);
  out.trajectory.states.push_back(x0);
  out.caches.resize(T);

  Eigen::VectorXd x = x0;
  for (int i = 0; i < T; ++i) {
    const double t = static_cast<double>(i) / T;
    const Eigen::VectorXd u = model.velocity(x, t, std::nullopt, out.caches[i]);
    x = x + out.trajectory.dt * u;
    if (!x.allFinite()) {
      out.finite = false;
      return out;
    }
    out.trajectory.states.push_back(x);
  }
  out.trajectory.terminal_raw = model.stats.denormalize(x);
  return out;
}

Eigen::VectorXd reverse_sweep(const flow::VelocityModel& model,
                              const CachedSolve& solve,
                              const Eigen::VectorXd& terminal_cotangent) {
  const double dt = solve.trajectory.dt;
  Eigen::VectorXd v = terminal_cotangent;
  for (std::size_t i = solve.caches.size(); i-- > 0;)
    v += dt * model.velocity_vjp(solve.caches[i], v);
  return v;
}

}  // namespace

Eigen::VectorXd unrolled_vjp(const flow::VelocityModel& model, int T,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& terminal_cotangent) {
  if (T < 1) throw ConfigError("unrolled_vjp needs T >= 1");
  if (terminal_cotangent.size() != model.dim)
    throw ShapeError("unrolled_vjp: cotangent dimension mismatch");
  const CachedSolve solve = solve_with_caches(model, T, x0);
  if (!solve.finite)
    throw NumericError("unrolled_vjp: forward solve produced non-finite state");
  return reverse_sweep(model, solve, terminal_cotangent);
}

DflowResult dflow_sur(const flow::VelocityModel& model,
                      const physics::ClEvaluator& evaluator,
                      const Eigen::VectorXd& x0_init, const DflowConfig& config) {
  config.validate();
  if (model.dim != geom::kDesignDim)
    throw ShapeError("dflow_sur expects a design-space model (dim 16)");
  if (x0_init.size() != model.dim)
    throw ShapeError("dflow_sur: x0 dimension mismatch");
  if (!x0_init.allFinite()) throw NumericError("dflow_sur: non-finite x0");

  const auto start_time = std::chrono::steady_clock::now();

  DflowResult result;
  result.best_loss = std::numeric_limits<double>::infinity();

  Eigen::VectorXd x0 = x0_init;
  Eigen::VectorXd best_x0 = x0_init;
  double tau = config.tau;
  bool tau_halved = false;

  for (int k = 1; k <= config.max_iterations; ++k) {
    const CachedSolve solve = solve_with_caches(model, config.solve_steps, x0);
    if (!solve.finite) {
      result.failed = true;
      result.fail_reason = "non-finite state during forward solve";
      break;
    }
    const geom::DesignVector terminal =
        geom::DesignVector::from_flat(solve.trajectory.terminal_raw);
    const physics::LossResult loss =
        physics::physical_loss(evaluator, terminal, config.target);

    result.loss_history.push_back(loss.loss);
    result.iterations = k;
    if (loss.loss < result.best_loss) {
      result.best_loss = loss.loss;
      best_x0 = x0;
    }
    if (loss.loss <= config.tolerance) {
      result.converged = true;
      break;
    }
    if (k == config.max_iterations) break;

    const Eigen::VectorXd terminal_cot =
        Eigen::VectorXd(loss.gradient).cwiseProduct(model.stats.std);
    const Eigen::VectorXd v0 = reverse_sweep(model, solve, terminal_cot);

    Eigen::VectorXd x0_next = x0 - tau * v0;
    if (!x0_next.allFinite() && !tau_halved) {
      tau *= 0.5;
      tau_halved = true;
      x0_next = x0 - tau * v0;
    }
    if (!x0_next.allFinite()) {
      result.failed = true;
      result.fail_reason = "non-finite x0 after gradient step";
      break;
    }
    x0 = x0_next;
  }

  result.x0 = best_x0;
  if (!result.failed && result.iterations > 0) {
    // The reported terminal design is a fresh solve from the returned x0.
    const CachedSolve final_solve =
        solve_with_caches(model, config.solve_steps, best_x0);
    if (final_solve.finite) {
      result.terminal =
          geom::DesignVector::from_flat(final_solve.trajectory.terminal_raw);
      result.final_cl = evaluator.predict(result.terminal);
    } else {
      result.failed = true;
      result.fail_reason = "non-finite state during final solve";
    }
  } else if (result.iterations == 0) {
    result.failed = true;
    if (result.fail_reason.empty())
      result.fail_reason = "no finite solve completed";
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
          .count();
  return result;
}

std::vector<DflowResult> dflow_batch(const flow::VelocityModel& model,
                                     const physics::ClEvaluator& evaluator,
                                     int n, const DflowConfig& config,
                                     std::uint64_t seed) {
  if (n < 1) throw ConfigError("dflow_batch needs n >= 1");
  const Rng base(seed);
  std::vector<DflowResult> results;
  results.reserve(n);
  for (int j = 0; j < n; ++j) {
    Rng run_rng = base.split(static_cast<std::uint64_t>(j));
    Eigen::VectorXd x0(model.dim);
    for (int i = 0; i < model.dim; ++i) x0[i] = run_rng.normal();
    results.push_back(dflow_sur(model, evaluator, x0, config));
  }
  return results;
}

}  // namespace foilflow::dflow
