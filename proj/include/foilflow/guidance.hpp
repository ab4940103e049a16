#pragma once

#include <string>
#include <vector>

#include "foilflow/flowmatch.hpp"
#include "foilflow/physics.hpp"

namespace foilflow::guidance {

struct GuidanceConfig {
  double lambda = 10.0;  // energy coefficient
  double t_c = 0.0;      // cutoff time: guidance active for t >= t_c
  int T = 1000;          // inference steps
  physics::PhysicalTarget target;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;      // physical gradient in normalized coordinates
  double velocity_norm = 0.0;
  bool active = false;
};

struct GuidedTrajectory {
  flow::Trajectory trajectory;
  std::vector<StepRecord> records;  // one per Euler step taken
  double final_loss = 0.0;
  double final_cl = 0.0;
  bool failed = false;
  int fail_step = -1;
  std::string fail_reason;
};

struct BudgetReport {
  int physics_iterations = 0;  // K at terminal time t = 1
  double iteration_dt = 0.0;   // one optimization step equals one Euler step
};

// Euler sampling with the drift u - lambda * grad E for t >= t_c, where
// E(x) is the physical loss evaluated on the de-normalized design and the
// gradient is mapped back through the affine normalization. Non-finite
// states or terminal coefficients beyond the validity bound produce a Fail
// record instead of throwing.
GuidedTrajectory sample_energy_guided(const flow::VelocityModel& model,
                                      const physics::ClEvaluator& evaluator,
                                      const GuidanceConfig& config,
                                      const Eigen::VectorXd& x0);

BudgetReport physics_budget(const GuidanceConfig& config);

// Physical loss traced along an unguided trajectory; T + 1 values.
std::vector<double> pseudo_loss_curve(const flow::VelocityModel& model,
                                      const physics::ClEvaluator& evaluator,
                                      physics::PhysicalTarget target, int T,
                                      const Eigen::VectorXd& x0);

}  // namespace foilflow::guidance
