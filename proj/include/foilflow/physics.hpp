#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "foilflow/geometry.hpp"
#include "foilflow/nncore.hpp"
#include "foilflow/rng.hpp"

namespace foilflow::physics {

// Inviscid thin-airfoil operating condition. Mach and Reynolds do not enter
// the analytic model.
struct OperatingPoint {
  double alpha_rad = 0.0;

  static OperatingPoint from_degrees(double alpha_deg);
  void validate() const;  // thin-airfoil regime: |alpha| < 0.35 rad
};

struct PhysicalTarget {
  double cl = 0.7;
};

inline constexpr int kQuadratureNodes = 256;

// Zero-lift angle from the Glauert camber integral, evaluated with midpoint
// quadrature in theta. Midpoint nodes avoid the leading-edge slope
// singularity at theta = 0.
double oracle_zero_lift_alpha(const geom::DesignVector& design,
                              int nodes = kQuadratureNodes);

// C_L = 2 pi (alpha - alpha_L0).
double oracle_cl(const geom::DesignVector& design, OperatingPoint op,
                 int nodes = kQuadratureNodes);

// dC_L/d(design): constant because C_L is affine in the CST coefficients.
// Computed once by differentiating the quadrature weights.
geom::Coef16 oracle_cl_gradient(int nodes = kQuadratureNodes);

// Common surface for the physical loss: anything that predicts C_L from a
// design and exposes the prediction gradient.
class ClEvaluator {
 public:
  virtual ~ClEvaluator() = default;
  virtual double predict(const geom::DesignVector& design) const = 0;
  virtual geom::Coef16 gradient(const geom::DesignVector& design) const = 0;
  virtual std::string name() const = 0;
};

class ThinAirfoilOracle : public ClEvaluator {
 public:
  explicit ThinAirfoilOracle(OperatingPoint op, int nodes = kQuadratureNodes);

  double predict(const geom::DesignVector& design) const override;
  geom::Coef16 gradient(const geom::DesignVector& design) const override;
  std::string name() const override { return "oracle"; }
  OperatingPoint operating_point() const { return op_; }

 private:
  OperatingPoint op_;
  int nodes_;
  geom::Coef16 grad_;
};

// Dropout-capable C_L regressor over normalized designs.
struct SurrogateModel {
  nn::NetworkParams net;  // 16-64-64-1 by default
  geom::Coef16 input_mean = geom::Coef16::Zero();
  geom::Coef16 input_std = geom::Coef16::Ones();
  double dropout_rate = 0.01;
  OperatingPoint op_point;
  double validation_mse = 0.0;

  double predict(const geom::DesignVector& design,
                 const nn::DropoutMask* mask = nullptr) const;
  geom::Coef16 prediction_gradient(const geom::DesignVector& design) const;
};

class SurrogateEvaluator : public ClEvaluator {
 public:
  explicit SurrogateEvaluator(const SurrogateModel& model) : model_(&model) {}

  double predict(const geom::DesignVector& design) const override {
    return model_->predict(design);
  }
  geom::Coef16 gradient(const geom::DesignVector& design) const override {
    return model_->prediction_gradient(design);
  }
  std::string name() const override { return "surrogate"; }

 private:
  const SurrogateModel* model_;
};

// Monte-Carlo dropout uncertainty: sigma is the sample standard deviation
// (divisor N-1) over n_passes stochastic forward passes.
struct UqReport {
  double mu = 0.0;
  double sigma = 0.0;
  int n_passes = 0;
};

UqReport surrogate_uq(const SurrogateModel& model, const geom::DesignVector& design,
                      int n_passes, double rate, Rng& rng);

struct LossResult {
  double loss = 0.0;
  geom::Coef16 gradient = geom::Coef16::Zero();
  double cl = 0.0;
};

// L(x) = (C_L_hat - y)^2 with its gradient in raw design coordinates.
LossResult physical_loss(const ClEvaluator& evaluator,
                         const geom::DesignVector& design, PhysicalTarget target);

struct SurrogateTrainConfig {
  int max_epochs = 1000;
  int batch_size = 32;
  double learning_rate = 3e-3;
  int lr_decay_epochs = 150;     // halve the learning rate this often
  double lr_decay_factor = 0.5;
  double dropout_rate = 0.01;
  double validation_fraction = 0.2;
  double stop_validation_mse = 1e-5;
  double fail_validation_mse = 1e-2;
  std::vector<int> hidden = {64, 64};
};

// Fits the surrogate to oracle labels by mean squared error on normalized
// inputs, with dropout active during training. Deterministic given seed.
SurrogateModel train_surrogate(const geom::DesignDataset& dataset,
                               OperatingPoint op,
                               const SurrogateTrainConfig& config,
                               std::uint64_t seed);

}  // namespace foilflow::physics
