#include "foilflow/flowmatch.hpp"

#include <algorithm>
#include <cmath>

namespace foilflow::flow {

Eigen::VectorXd NormStats::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size())
    throw ShapeError("normalize: dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

Eigen::VectorXd NormStats::denormalize(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size())
    throw ShapeError("denormalize: dimension mismatch");
  return mean + std.cwiseProduct(x);
}

NormStats NormStats::from_rows(const std::vector<Eigen::VectorXd>& rows) {
  if (rows.empty()) throw ConfigError("normalization needs at least one row");
  const Eigen::Index d = rows.front().size();
  NormStats stats;
  stats.mean = Eigen::VectorXd::Zero(d);
  for (const auto& r : rows) {
    if (r.size() != d) throw ShapeError("normalization rows differ in length");
    stats.mean += r;
  }
  stats.mean /= static_cast<double>(rows.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& r : rows) var += (r - stats.mean).cwiseAbs2();
  var /= std::max<double>(static_cast<double>(rows.size()) - 1.0, 1.0);
  stats.std = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j)
    if (stats.std[j] < 1e-12) stats.std[j] = 1.0;
  return stats;
}

NormStats NormStats::from_dataset(const geom::DesignDataset& dataset) {
  NormStats stats;
  stats.mean = dataset.mean;
  stats.std = dataset.std;
  return stats;
}

namespace {

Eigen::VectorXd assemble_input(const Eigen::VectorXd& x, double t,
                               std::optional<double> condition, bool conditional,
                               int dim) {
  if (x.size() != dim) throw ShapeError("velocity: state dimension mismatch");
  if (conditional != condition.has_value())
    throw ConfigError(conditional
                          ? "conditional model requires a condition value"
                          : "unconditional model given a condition value");
  Eigen::VectorXd input(dim + (conditional ? 2 : 1));
  input.head(dim) = x;
  input[dim] = t;
  if (conditional) input[dim + 1] = *condition;
  return input;
}

}  // namespace

Eigen::VectorXd VelocityModel::velocity(const Eigen::VectorXd& x, double t,
                                        std::optional<double> condition) const {
  return nn::net_forward(net, assemble_input(x, t, condition, conditional, dim));
}

Eigen::VectorXd VelocityModel::velocity(const Eigen::VectorXd& x, double t,
                                        std::optional<double> condition,
                                        nn::ForwardCache& cache) const {
  return nn::net_forward(net, assemble_input(x, t, condition, conditional, dim),
                         &cache);
}

Eigen::VectorXd VelocityModel::velocity_vjp(const nn::ForwardCache& cache,
                                            const Eigen::VectorXd& cotangent) const {
  return nn::net_vjp_input(net, cache, cotangent).head(dim);
}

Eigen::VectorXd interpolate(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                            double t) {
  if (x0.size() != x1.size()) throw ShapeError("interpolate: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0))
    throw ConfigError("interpolate: t outside [0, 1]");
  return (1.0 - t) * x0 + t * x1;
}

namespace {

VelocityModel train_impl(const std::vector<Eigen::VectorXd>& rows,
                         const std::vector<double>* labels,
                         const FlowTrainConfig& config,
                         TrainDiagnostics* diagnostics) {
  if (rows.empty()) throw ConfigError("train_flow: empty dataset");
  if (labels && labels->size() != rows.size())
    throw ConfigError("train_conditional_flow: label count does not match designs");
  if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0.0)
    throw ConfigError("train_flow: epochs, batch size and learning rate must be positive");

  const int d = static_cast<int>(rows.front().size());
  VelocityModel model;
  model.dim = d;
  model.conditional = labels != nullptr;
  model.stats = NormStats::from_rows(rows);

  std::vector<Eigen::VectorXd> normalized;
  normalized.reserve(rows.size());
  for (const auto& r : rows) normalized.push_back(model.stats.normalize(r));

  std::vector<int> sizes;
  sizes.push_back(d + (model.conditional ? 2 : 1));
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(d);

  Rng rng(config.seed);
  model.net = nn::net_init(sizes, rng.next_u64());

  nn::OptimizerState opt =
      nn::make_optimizer_state(model.net, config.learning_rate);
  nn::Gradients batch_grads = nn::make_zero_gradients(model.net);

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Eigen::VectorXd x0(d);
  long iteration = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.lr_decay_epochs > 0)
      opt.learning_rate =
          config.learning_rate *
          std::pow(config.lr_decay_factor, epoch / config.lr_decay_epochs);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      batch_grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const Eigen::VectorXd& x1 = normalized[order[k]];
        for (int j = 0; j < d; ++j) x0[j] = rng.normal();
        const double t = rng.uniform();  // U[0, 1): the target stays finite
        const Eigen::VectorXd xt = (1.0 - t) * x0 + t * x1;
        const Eigen::VectorXd target = x1 - x0;

        Eigen::VectorXd input(sizes.front());
        input.head(d) = xt;
        input[d] = t;
        if (model.conditional) input[d + 1] = (*labels)[order[k]];

        nn::ForwardCache cache;
        const Eigen::VectorXd out = nn::net_forward(model.net, input, &cache);
        const Eigen::VectorXd residual = out - target;
        batch_loss += residual.squaredNorm();
        const Eigen::VectorXd cot =
            2.0 / static_cast<double>(end - start) * residual;
        batch_grads.accumulate(nn::net_backward_params(model.net, cache, cot));
      }
      batch_loss /= static_cast<double>(end - start);
      ++iteration;
      if (!std::isfinite(batch_loss))
        throw NumericError("train_flow: NaN loss at iteration " +
                           std::to_string(iteration));
      if (diagnostics) diagnostics->batch_loss.push_back(batch_loss);
      nn::optimizer_step(opt, model.net, batch_grads);
    }
  }
  return model;
}

}  // namespace

VelocityModel train_flow(const std::vector<Eigen::VectorXd>& rows,
                         const FlowTrainConfig& config,
                         TrainDiagnostics* diagnostics) {
  return train_impl(rows, nullptr, config, diagnostics);
}

VelocityModel train_conditional_flow(const std::vector<Eigen::VectorXd>& rows,
                                     const std::vector<double>& labels,
                                     const FlowTrainConfig& config,
                                     TrainDiagnostics* diagnostics) {
  return train_impl(rows, &labels, config, diagnostics);
}

Trajectory sample_unconditional(const VelocityModel& model, int T,
                                const Eigen::VectorXd& x0,
                                std::optional<double> condition) {
  if (T < 1) throw ConfigError("sample_unconditional needs T >= 1");
  if (x0.size() != model.dim)
    throw ShapeError("sample_unconditional: x0 dimension mismatch");

  Trajectory traj;
  traj.dt = 1.0 / T;
  traj.states.reserve(T + 1);
  traj.states.push_back(x0);

  Eigen::VectorXd x = x0;
  for (int i = 0; i < T; ++i) {
    const double t = static_cast<double>(i) / T;
    const Eigen::VectorXd u = model.velocity(x, t, condition);
    x = x + traj.dt * u;
    if (!x.allFinite())
      throw NumericError("sample_unconditional: non-finite state at step " +
                         std::to_string(i));
    traj.states.push_back(x);
  }
  traj.terminal_raw = model.stats.denormalize(x);
  return traj;
}

}  // namespace foilflow::flow
