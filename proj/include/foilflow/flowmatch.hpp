#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "foilflow/geometry.hpp"
#include "foilflow/nncore.hpp"

namespace foilflow::flow {

// Per-dimension affine normalization. Dimensions without spread get unit
// scale so the round trip stays exact.
struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& x) const;

  static NormStats from_rows(const std::vector<Eigen::VectorXd>& rows);
  static NormStats from_dataset(const geom::DesignDataset& dataset);
};

// Learned velocity field over normalized coordinates. The network input is
// (x, t), with the conditioning scalar appended as a third block when the
// model is conditional.
struct VelocityModel {
  nn::NetworkParams net;
  NormStats stats;
  bool conditional = false;
  int dim = 0;

  Eigen::VectorXd velocity(const Eigen::VectorXd& x, double t,
                           std::optional<double> condition = {}) const;
  Eigen::VectorXd velocity(const Eigen::VectorXd& x, double t,
                           std::optional<double> condition,
                           nn::ForwardCache& cache) const;
  // Cotangent pulled back through the network, restricted to the design
  // coordinates (the time and condition slots are discarded).
  Eigen::VectorXd velocity_vjp(const nn::ForwardCache& cache,
                               const Eigen::VectorXd& cotangent) const;
};

struct FlowTrainConfig {
  int epochs = 2000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int lr_decay_epochs = 0;  // 0 disables the stepwise decay
  double lr_decay_factor = 0.5;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {128, 128};
};

struct TrainDiagnostics {
  std::vector<double> batch_loss;  // mean squared residual per optimizer step
};

// Straight-path interpolant (1 - t) x0 + t x1.
Eigen::VectorXd interpolate(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                            double t);

// Flow-matching regression: sample x0 ~ N(0, I), x1 from the normalized
// data, t ~ U[0, 1), and fit u(x_t, t) to the straight-path velocity x1 - x0.
VelocityModel train_flow(const std::vector<Eigen::VectorXd>& rows,
                         const FlowTrainConfig& config,
                         TrainDiagnostics* diagnostics = nullptr);

// Same regression with the design's own scalar label appended to the input;
// inference conditions on a caller-supplied label.
VelocityModel train_conditional_flow(const std::vector<Eigen::VectorXd>& rows,
                                     const std::vector<double>& labels,
                                     const FlowTrainConfig& config,
                                     TrainDiagnostics* diagnostics = nullptr);

// Uniform time grid t_i = i / T with states in normalized coordinates and
// the terminal point de-normalized.
struct Trajectory {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> states;  // T + 1 entries
  Eigen::VectorXd terminal_raw;

  int steps() const { return static_cast<int>(states.size()) - 1; }
};

// Plain forward Euler: x_{i+1} = x_i + dt * u(x_i, t_i).
Trajectory sample_unconditional(const VelocityModel& model, int T,
                                const Eigen::VectorXd& x0,
                                std::optional<double> condition = {});

}  // namespace foilflow::flow
