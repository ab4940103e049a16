#include "foilflow/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace foilflow::physics {

using geom::Coef16;
using geom::Coef8;
using geom::DesignVector;
using geom::kCoefPerSurface;
using geom::kDesignDim;

OperatingPoint OperatingPoint::from_degrees(double alpha_deg) {
  OperatingPoint op;
  op.alpha_rad = alpha_deg * std::numbers::pi / 180.0;
  op.validate();
  return op;
}

void OperatingPoint::validate() const {
  if (!(std::abs(alpha_rad) < 0.35))
    throw ConfigError("angle of attack outside the thin-airfoil regime");
}

namespace {

Eigen::VectorXd midpoint_thetas(int nodes) {
  Eigen::VectorXd thetas(nodes);
  for (int j = 0; j < nodes; ++j)
    thetas[j] = (j + 0.5) * std::numbers::pi / nodes;
  return thetas;
}

}  // namespace

double oracle_zero_lift_alpha(const DesignVector& design, int nodes) {
  if (!design.finite())
    throw NumericError("oracle: non-finite design");
  const Eigen::VectorXd thetas = midpoint_thetas(nodes);
  const Eigen::VectorXd slope = geom::camber_slope(design, thetas);
  if (!slope.allFinite())
    throw NumericError("oracle: non-finite camber slope");
  // alpha_L0 = -(1/pi) int_0^pi dz/dx (cos(theta) - 1) dtheta, midpoint rule.
  double acc = 0.0;
  for (int j = 0; j < nodes; ++j) acc += slope[j] * (std::cos(thetas[j]) - 1.0);
  return -acc / nodes;
}

double oracle_cl(const DesignVector& design, OperatingPoint op, int nodes) {
  op.validate();
  return 2.0 * std::numbers::pi * (op.alpha_rad - oracle_zero_lift_alpha(design, nodes));
}

Coef16 oracle_cl_gradient(int nodes) {
  // The camber slope is linear in the coefficients with the same basis for
  // both surfaces, so the quadrature differentiates termwise and the upper
  // and lower entries coincide.
  const Eigen::VectorXd thetas = midpoint_thetas(nodes);
  Coef8 per_surface = Coef8::Zero();
  for (int j = 0; j < nodes; ++j) {
    const double psi = 0.5 * (1.0 - std::cos(thetas[j]));
    const double weight = std::cos(thetas[j]) - 1.0;
    per_surface += 0.5 * weight * geom::cst_slope_basis(psi);
  }
  per_surface *= 2.0 * std::numbers::pi / nodes;  // 2*pi * (1/pi) * (pi/nodes)
  Coef16 grad;
  grad.head<kCoefPerSurface>() = per_surface;
  grad.tail<kCoefPerSurface>() = per_surface;
  return grad;
}

ThinAirfoilOracle::ThinAirfoilOracle(OperatingPoint op, int nodes)
    : op_(op), nodes_(nodes), grad_(oracle_cl_gradient(nodes)) {
  op_.validate();
}

double ThinAirfoilOracle::predict(const DesignVector& design) const {
  return oracle_cl(design, op_, nodes_);
}

Coef16 ThinAirfoilOracle::gradient(const DesignVector&) const { return grad_; }

double SurrogateModel::predict(const DesignVector& design,
                               const nn::DropoutMask* mask) const {
  const Coef16 normalized =
      (design.coef - input_mean).cwiseQuotient(input_std);
  const nn::Vector out = nn::net_forward(net, normalized, nullptr, mask);
  return out[0];
}

Coef16 SurrogateModel::prediction_gradient(const DesignVector& design) const {
  const Coef16 normalized =
      (design.coef - input_mean).cwiseQuotient(input_std);
  nn::ForwardCache cache;
  nn::net_forward(net, normalized, &cache);
  nn::Vector cot = nn::Vector::Ones(1);
  const nn::Vector g = nn::net_vjp_input(net, cache, cot);
  // Chain rule through the affine normalization.
  return Coef16(g).cwiseQuotient(input_std);
}

UqReport surrogate_uq(const SurrogateModel& model, const DesignVector& design,
                      int n_passes, double rate, Rng& rng) {
  if (n_passes < 2) throw ConfigError("surrogate_uq needs n_passes >= 2");
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("surrogate_uq dropout rate must lie in [0, 1)");

  const std::vector<int> hidden = model.net.hidden_sizes();
  std::vector<double> preds(n_passes);
  for (int i = 0; i < n_passes; ++i) {
    Rng pass_rng = rng.split(static_cast<std::uint64_t>(i));
    const nn::DropoutMask mask = nn::sample_dropout_mask(rate, hidden, pass_rng);
    preds[i] = model.predict(design, &mask);
  }
  UqReport report;
  report.n_passes = n_passes;
  // Shifted mean: identical passes yield exactly zero spread.
  const double shift = preds[0];
  double mu_offset = 0.0;
  for (double p : preds) mu_offset += p - shift;
  mu_offset /= n_passes;
  double acc = 0.0;
  for (double p : preds) {
    const double d = (p - shift) - mu_offset;
    acc += d * d;
  }
  report.mu = shift + mu_offset;
  report.sigma = std::sqrt(acc / (n_passes - 1));
  return report;
}

LossResult physical_loss(const ClEvaluator& evaluator, const DesignVector& design,
                         PhysicalTarget target) {
  LossResult result;
  result.cl = evaluator.predict(design);
  const double residual = result.cl - target.cl;
  result.loss = residual * residual;
  result.gradient = 2.0 * residual * evaluator.gradient(design);
  return result;
}

SurrogateModel train_surrogate(const geom::DesignDataset& dataset,
                               OperatingPoint op,
                               const SurrogateTrainConfig& config,
                               std::uint64_t seed) {
  op.validate();
  const std::size_t n = dataset.size();
  if (n < 64) throw ConfigError("train_surrogate needs at least 64 designs");
  if (config.batch_size < 1 || config.max_epochs < 1)
    throw ConfigError("train_surrogate: batch size and epochs must be positive");

  SurrogateModel model;
  model.input_mean = dataset.mean;
  model.input_std = dataset.std;
  model.dropout_rate = config.dropout_rate;
  model.op_point = op;

  std::vector<int> sizes;
  sizes.push_back(kDesignDim);
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);

  Rng rng(seed);
  model.net = nn::net_init(sizes, rng.next_u64());
  // The design cloud is strongly correlated along the camber direction, so
  // standard-scale first-layer weights start deep in tanh saturation; a
  // gentler start keeps the fit in the near-linear regime it needs.
  model.net.weights.front() *= 0.3;
  const std::vector<int> hidden = model.net.hidden_sizes();

  // Precompute normalized inputs and oracle labels. Labels are standardized
  // for training and the affine transform is folded back into the identity
  // output layer afterwards, so the stored network predicts raw C_L.
  std::vector<Coef16> inputs(n);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i] = (dataset.designs[i].coef - dataset.mean).cwiseQuotient(dataset.std);
    labels[i] = oracle_cl(dataset.designs[i], op);
  }
  double label_mean = 0.0;
  for (double y : labels) label_mean += y;
  label_mean /= static_cast<double>(n);
  double label_var = 0.0;
  for (double y : labels) label_var += (y - label_mean) * (y - label_mean);
  label_var /= std::max<double>(static_cast<double>(n) - 1.0, 1.0);
  const double label_std = label_var > 1e-24 ? std::sqrt(label_var) : 1.0;
  for (double& y : labels) y = (y - label_mean) / label_std;
  // Validation thresholds are stated in raw C_L units.
  const double mse_scale = label_std * label_std;

  // Deterministic shuffled split into train and validation.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.validation_fraction * n)));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());

  auto validation_mse = [&] {
    double acc = 0.0;
    for (std::size_t i : val_idx) {
      const nn::Vector out = nn::net_forward(model.net, inputs[i]);
      const double r = out[0] - labels[i];
      acc += r * r;
    }
    return mse_scale * acc / static_cast<double>(val_idx.size());
  };

  nn::OptimizerState opt = nn::make_optimizer_state(model.net, config.learning_rate);
  nn::Gradients batch_grads = nn::make_zero_gradients(model.net);
  double val_mse = validation_mse();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (config.lr_decay_epochs > 0)
      opt.learning_rate =
          config.learning_rate *
          std::pow(config.lr_decay_factor, epoch / config.lr_decay_epochs);
    for (std::size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[rng.index(i)]);
    for (std::size_t start = 0; start < train_idx.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(train_idx.size(), start + config.batch_size);
      batch_grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = train_idx[k];
        const nn::DropoutMask mask =
            nn::sample_dropout_mask(config.dropout_rate, hidden, rng);
        nn::ForwardCache cache;
        const nn::Vector out = nn::net_forward(model.net, inputs[i], &cache, &mask);
        nn::Vector cot(1);
        cot[0] = 2.0 * (out[0] - labels[i]) / static_cast<double>(end - start);
        batch_grads.accumulate(nn::net_backward_params(model.net, cache, cot));
      }
      nn::optimizer_step(opt, model.net, batch_grads);
    }
    val_mse = validation_mse();
    if (val_mse < config.stop_validation_mse) break;
  }

  if (val_mse > config.fail_validation_mse)
    throw NumericError("train_surrogate did not converge: validation MSE " +
                       std::to_string(val_mse));
  model.validation_mse = val_mse;
  // Fold the label standardization into the linear output layer.
  model.net.weights.back() *= label_std;
  model.net.biases.back() =
      label_std * model.net.biases.back() +
      nn::Vector::Constant(1, label_mean);
  return model;
}

}  // namespace foilflow::physics
