#include "foilflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace foilflow::diag {

std::optional<double> alignment_score(const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw ShapeError("alignment_score: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kScoreEpsilon || nb < kScoreEpsilon) return std::nullopt;
  return a.dot(b) / (na * nb);
}

std::vector<AlignmentPoint> trajectory_alignment(
    const flow::VelocityModel& model, const physics::ClEvaluator& evaluator,
    physics::PhysicalTarget target, const flow::Trajectory& trajectory,
    std::optional<double> t_c) {
  if (model.dim != geom::kDesignDim)
    throw ShapeError("trajectory_alignment expects a design-space model");
  const int T = trajectory.steps();
  std::vector<AlignmentPoint> series;
  series.reserve(T);
  for (int i = 0; i < T; ++i) {
    const double t = static_cast<double>(i) / T;
    if (t_c && t < *t_c) continue;

    const Eigen::VectorXd& state = trajectory.states[i];
    const Eigen::VectorXd u = model.velocity(state, t);
    const geom::DesignVector design =
        geom::DesignVector::from_flat(model.stats.denormalize(state));
    const physics::LossResult loss =
        physics::physical_loss(evaluator, design, target);
    const Eigen::VectorXd g_phys =
        kGuidanceSign *
        Eigen::VectorXd(loss.gradient).cwiseProduct(model.stats.std);

    AlignmentPoint point;
    point.step = i;
    point.t = t_c ? t - *t_c : t;
    const auto score = alignment_score(u, g_phys);
    point.defined = score.has_value();
    point.score = score.value_or(0.0);
    series.push_back(point);
  }
  return series;
}

double UqProfile::mean_sigma_at(std::size_t idx) const {
  const auto& v = sigmas.at(idx);
  double acc = 0.0;
  for (double s : v) acc += s;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

UqProfile trajectory_uq_profile(const physics::SurrogateModel& surrogate,
                                const flow::NormStats& stats,
                                const std::vector<flow::Trajectory>& trajectories,
                                const geom::DesignDataset& reference,
                                int n_passes, double rate, const Rng& rng,
                                int profile_steps) {
  if (n_passes < 2) throw ConfigError("trajectory_uq_profile needs n_passes >= 2");
  if (trajectories.empty())
    throw ConfigError("trajectory_uq_profile needs at least one trajectory");
  const int T = trajectories.front().steps();
  for (const auto& traj : trajectories)
    if (traj.steps() != T)
      throw ConfigError("trajectory_uq_profile: trajectories have mismatched grids");
  profile_steps = std::min(profile_steps, T + 1);
  if (profile_steps < 2)
    throw ConfigError("trajectory_uq_profile needs at least two profile steps");

  UqProfile profile;
  profile.n_passes = n_passes;
  for (int k = 0; k < profile_steps; ++k) {
    const int step = static_cast<int>(
        std::lround(static_cast<double>(k) * T / (profile_steps - 1)));
    if (!profile.steps.empty() && profile.steps.back() == step) continue;
    profile.steps.push_back(step);
    profile.times.push_back(static_cast<double>(step) / T);
  }

  profile.sigmas.resize(profile.steps.size());
  for (std::size_t k = 0; k < profile.steps.size(); ++k) {
    profile.sigmas[k].reserve(trajectories.size());
    for (std::size_t j = 0; j < trajectories.size(); ++j) {
      const geom::DesignVector design = geom::DesignVector::from_flat(
          stats.denormalize(trajectories[j].states[profile.steps[k]]));
      Rng cell_rng = rng.split(1 + k * 0x10001ULL + j);
      profile.sigmas[k].push_back(
          physics::surrogate_uq(surrogate, design, n_passes, rate, cell_rng)
              .sigma);
    }
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    Rng ref_rng = rng.split(0xFEED0000ULL + i);
    acc += physics::surrogate_uq(surrogate, reference.designs[i], n_passes, rate,
                                 ref_rng)
               .sigma;
  }
  profile.reference_mean = acc / static_cast<double>(reference.size());
  return profile;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AsyncGapReport async_gap(const std::vector<FinalLoss>& guided_runs,
                         const std::vector<FinalLoss>& unconditional_runs,
                         double desired_loss) {
  if (guided_runs.empty() || unconditional_runs.empty())
    throw ConfigError("async_gap needs non-empty run sets");

  auto surviving = [](const std::vector<FinalLoss>& runs) {
    std::vector<double> out;
    for (const auto& r : runs)
      if (!r.failed && std::isfinite(r.value)) out.push_back(r.value);
    return out;
  };

  AsyncGapReport report;
  report.l_desired = desired_loss;
  const auto guided = surviving(guided_runs);
  const auto uncond = surviving(unconditional_runs);
  if (guided.empty() || uncond.empty()) {
    report.failed = true;
    return report;
  }
  report.l_achieved = median(guided);
  report.l_uncon = median(uncond);
  report.gap = report.l_achieved - desired_loss;
  report.synchronized = report.gap <= 0.0;
  return report;
}

}  // namespace foilflow::diag
