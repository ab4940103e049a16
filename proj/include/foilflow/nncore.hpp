#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "foilflow/errors.hpp"
#include "foilflow/rng.hpp"

namespace foilflow::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Hidden layers use tanh; the output layer is always identity.
enum class Activation { kTanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Dense feed-forward parameters. weights[l] maps layer l to layer l+1 and
// has shape layer_sizes[l+1] x layer_sizes[l].
struct NetworkParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::kTanh;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::vector<int> hidden_sizes() const;
  bool finite() const;
};

// Per-hidden-layer keep vectors (entries 0 or 1) with inverted scaling:
// kept units are multiplied by 1/(1-rate) so the masked expectation matches
// the mask-free forward pass.
struct DropoutMask {
  double rate = 0.0;
  std::vector<Vector> keep;

  double scale() const { return rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0; }
};

DropoutMask sample_dropout_mask(double rate, const std::vector<int>& hidden_widths,
                                Rng& rng);

// Everything needed to replay one forward pass in reverse: the input, the
// tanh outputs before dropout, and the activations actually fed forward.
struct ForwardCache {
  Vector input;
  std::vector<Vector> hidden;       // tanh(z), per hidden layer
  std::vector<Vector> activations;  // after dropout (== hidden without mask)
  Vector output;
  std::optional<DropoutMask> mask;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void set_zero();
  void accumulate(const Gradients& other);
  void scale(double s);
  bool finite() const;
};

NetworkParams net_init(const std::vector<int>& layer_sizes, std::uint64_t seed,
                       Activation activation = Activation::kTanh);

Gradients make_zero_gradients(const NetworkParams& params);

// Forward pass; fills `cache` when given. `mask` applies dropout to the
// hidden activations.
Vector net_forward(const NetworkParams& params, const Vector& input,
                   ForwardCache* cache = nullptr,
                   const DropoutMask* mask = nullptr);

// Gradient of <output, output_cotangent> with respect to every weight/bias.
Gradients net_backward_params(const NetworkParams& params, const ForwardCache& cache,
                              const Vector& output_cotangent);

// (d output / d input)^T * output_cotangent.
Vector net_vjp_input(const NetworkParams& params, const ForwardCache& cache,
                     const Vector& output_cotangent);

// Single reverse sweep producing parameter gradients and, when
// `input_cotangent` is non-null, the input cotangent as well.
Gradients net_backward(const NetworkParams& params, const ForwardCache& cache,
                       const Vector& output_cotangent, Vector* input_cotangent);

// Adaptive-moment first-order optimizer state (one slot per parameter).
struct OptimizerState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

OptimizerState make_optimizer_state(const NetworkParams& params,
                                    double learning_rate = 1e-3);

void optimizer_step(OptimizerState& state, NetworkParams& params,
                    const Gradients& grads);

}  // namespace foilflow::nn
