#pragma once

#include <optional>
#include <vector>

#include "foilflow/flowmatch.hpp"
#include "foilflow/physics.hpp"

namespace foilflow::diag {

// Norm threshold below which a cosine score is reported as missing.
inline constexpr double kScoreEpsilon = 1e-12;

// Sign applied to the physical-loss gradient before scoring. The guided
// drift adds -lambda * grad E, so the applied physical update direction is
// -grad L; with this sign a negative score means the velocity field and the
// guidance push in opposing directions.
inline constexpr double kGuidanceSign = -1.0;

// Cosine of the angle between two vectors; missing when either norm is
// below kScoreEpsilon.
std::optional<double> alignment_score(const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b);

struct AlignmentPoint {
  int step = 0;
  double t = 0.0;      // re-zeroed to the injection onset when t_c is given
  double score = 0.0;
  bool defined = false;
};

// Scores the velocity update direction u(x_i, t_i) against the applied
// physical direction kGuidanceSign * grad L at every step of a trajectory,
// both in normalized coordinates. With t_c given, only steps at t >= t_c are
// emitted and their time axis starts at zero.
std::vector<AlignmentPoint> trajectory_alignment(
    const flow::VelocityModel& model, const physics::ClEvaluator& evaluator,
    physics::PhysicalTarget target, const flow::Trajectory& trajectory,
    std::optional<double> t_c = {});

struct UqProfile {
  std::vector<int> steps;
  std::vector<double> times;
  std::vector<std::vector<double>> sigmas;  // [profiled step][trajectory]
  double reference_mean = 0.0;              // mean sigma over dataset designs
  int n_passes = 0;

  double mean_sigma_at(std::size_t idx) const;
};

// MC-dropout sigma of de-normalized intermediates at profile_steps evenly
// spaced steps, against the dataset-mean reference.
UqProfile trajectory_uq_profile(const physics::SurrogateModel& surrogate,
                                const flow::NormStats& stats,
                                const std::vector<flow::Trajectory>& trajectories,
                                const geom::DesignDataset& reference,
                                int n_passes, double rate, const Rng& rng,
                                int profile_steps = 12);

struct FinalLoss {
  double value = 0.0;
  bool failed = false;
};

struct AsyncGapReport {
  double l_uncon = 0.0;     // median final unconditional loss
  double l_achieved = 0.0;  // median final guided loss
  double l_desired = 0.0;
  double gap = 0.0;         // l_achieved - l_desired
  bool synchronized = false;
  bool failed = false;      // a run set had no finite entries
};

AsyncGapReport async_gap(const std::vector<FinalLoss>& guided_runs,
                         const std::vector<FinalLoss>& unconditional_runs,
                         double desired_loss);

double median(std::vector<double> values);

}  // namespace foilflow::diag
