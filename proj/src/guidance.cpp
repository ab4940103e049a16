#include "foilflow/guidance.hpp"

#include <cmath>

namespace foilflow::guidance {

void GuidanceConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("energy coefficient lambda must be >= 0");
  if (!(t_c >= 0.0 && t_c <= 1.0)) throw ConfigError("cutoff t_c must lie in [0, 1]");
  if (T < 1) throw ConfigError("inference steps T must be >= 1");
  if (!std::isfinite(target.cl)) throw ConfigError("target C_L must be finite");
}

GuidedTrajectory sample_energy_guided(const flow::VelocityModel& model,
                                      const physics::ClEvaluator& evaluator,
                                      const GuidanceConfig& config,
                                      const Eigen::VectorXd& x0) {
  config.validate();
  if (model.dim != geom::kDesignDim)
    throw ShapeError("energy guidance expects a design-space model (dim 16)");
  if (x0.size() != model.dim)
    throw ShapeError("sample_energy_guided: x0 dimension mismatch");

  GuidedTrajectory out;
  out.trajectory.dt = 1.0 / config.T;
  out.trajectory.states.reserve(config.T + 1);
  out.trajectory.states.push_back(x0);
  out.records.reserve(config.T);

  const double dt = out.trajectory.dt;
  Eigen::VectorXd x = x0;
  for (int i = 0; i < config.T; ++i) {
    const double t = static_cast<double>(i) / config.T;
    const bool active = t >= config.t_c;

    const geom::DesignVector design =
        geom::DesignVector::from_flat(model.stats.denormalize(x));
    const physics::LossResult loss =
        physics::physical_loss(evaluator, design, config.target);
    // Pull the raw-coordinate gradient back into normalized coordinates.
    const Eigen::VectorXd grad_norm_space =
        Eigen::VectorXd(loss.gradient).cwiseProduct(model.stats.std);

    const Eigen::VectorXd u = model.velocity(x, t);

    StepRecord record;
    record.step = i;
    record.t = t;
    record.loss = loss.loss;
    record.grad_norm = grad_norm_space.norm();
    record.velocity_norm = u.norm();
    record.active = active;
    out.records.push_back(record);

    Eigen::VectorXd drift = u;
    if (active) drift -= config.lambda * grad_norm_space;
    x = x + dt * drift;
    if (!x.allFinite()) {
      out.failed = true;
      out.fail_step = i;
      out.fail_reason = "non-finite state";
      return out;
    }
    out.trajectory.states.push_back(x);
  }

  out.trajectory.terminal_raw = model.stats.denormalize(x);
  const geom::DesignVector terminal =
      geom::DesignVector::from_flat(out.trajectory.terminal_raw);
  const physics::LossResult final_loss =
      physics::physical_loss(evaluator, terminal, config.target);
  out.final_loss = final_loss.loss;
  out.final_cl = final_loss.cl;
  if (terminal.coef.cwiseAbs().maxCoeff() > geom::kCoefBound) {
    out.failed = true;
    out.fail_step = config.T;
    out.fail_reason = "terminal coefficient outside validity bound";
  }
  return out;
}

BudgetReport physics_budget(const GuidanceConfig& config) {
  config.validate();
  BudgetReport report;
  report.physics_iterations =
      static_cast<int>(std::lround((1.0 - config.t_c) * config.T));
  report.iteration_dt = 1.0 / config.T;
  return report;
}

std::vector<double> pseudo_loss_curve(const flow::VelocityModel& model,
                                      const physics::ClEvaluator& evaluator,
                                      physics::PhysicalTarget target, int T,
                                      const Eigen::VectorXd& x0) {
  if (model.dim != geom::kDesignDim)
    throw ShapeError("pseudo-loss expects a design-space model (dim 16)");
  const flow::Trajectory traj = flow::sample_unconditional(model, T, x0);
  std::vector<double> losses;
  losses.reserve(traj.states.size());
  for (const auto& state : traj.states) {
    const geom::DesignVector design =
        geom::DesignVector::from_flat(model.stats.denormalize(state));
    losses.push_back(physics::physical_loss(evaluator, design, target).loss);
  }
  return losses;
}

}  // namespace foilflow::guidance
