#pragma once

#include <string>
#include <vector>

#include "foilflow/flowmatch.hpp"
#include "foilflow/physics.hpp"

namespace foilflow::dflow {

struct DflowConfig {
  int max_iterations = 200;  // K
  double tau = 0.1;          // noise-space step size
  int solve_steps = 50;      // T per forward solve
  double tolerance = 1e-8;   // early-stop loss threshold
  physics::PhysicalTarget target;

  void validate() const;
};

struct DflowResult {
  Eigen::VectorXd x0;            // best-loss iterate
  geom::DesignVector terminal;   // fresh solve from x0, raw coordinates
  std::vector<double> loss_history;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string fail_reason;
  double best_loss = 0.0;
  double final_cl = 0.0;         // evaluator reading at the terminal design
  double wall_seconds = 0.0;
};

// Reverse sweep over the Euler chain:
//   v_i = v_{i+1} + dt * (du/dx at (x_i, t_i))^T v_{i+1}
// returning the cotangent at x0.
Eigen::VectorXd unrolled_vjp(const flow::VelocityModel& model, int T,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& terminal_cotangent);

// Optimize the initial noise by plain gradient descent with fixed tau:
// solve forward, evaluate the terminal loss, pull the gradient back through
// the unrolled chain, step x0. Stops at max_iterations or loss <= tolerance.
DflowResult dflow_sur(const flow::VelocityModel& model,
                      const physics::ClEvaluator& evaluator,
                      const Eigen::VectorXd& x0_init, const DflowConfig& config);

// Independent runs from per-run split seeds; individual failures are
// recorded, never aborting the batch.
std::vector<DflowResult> dflow_batch(const flow::VelocityModel& model,
                                     const physics::ClEvaluator& evaluator,
                                     int n, const DflowConfig& config,
                                     std::uint64_t seed);

}  // namespace foilflow::dflow
