#include "foilflow/nncore.hpp"

#include <cmath>

namespace foilflow::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
  }
  throw ConfigError("unknown activation enum value");
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  throw FormatError("unknown activation name: " + name);
}

std::vector<int> NetworkParams::hidden_sizes() const {
  if (layer_sizes.size() < 2) return {};
  return {layer_sizes.begin() + 1, layer_sizes.end() - 1};
}

bool NetworkParams::finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

void Gradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

bool Gradients::finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

static void check_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw ConfigError("layer_sizes needs at least an input and an output width");
  for (int w : layer_sizes)
    if (w <= 0) throw ConfigError("layer widths must be positive");
}

NetworkParams net_init(const std::vector<int>& layer_sizes, std::uint64_t seed,
                       Activation activation) {
  check_layer_sizes(layer_sizes);
  NetworkParams params;
  params.layer_sizes = layer_sizes;
  params.activation = activation;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = scale * rng.normal();
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(fan_out));
  }
  return params;
}

Gradients make_zero_gradients(const NetworkParams& params) {
  Gradients grads;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    grads.weights.push_back(
        Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    grads.biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return grads;
}

DropoutMask sample_dropout_mask(double rate, const std::vector<int>& hidden_widths,
                                Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate must lie in [0, 1)");
  DropoutMask mask;
  mask.rate = rate;
  mask.keep.reserve(hidden_widths.size());
  for (int width : hidden_widths) {
    Vector keep(width);
    for (int i = 0; i < width; ++i)
      keep[i] = (rate > 0.0 && rng.uniform() < rate) ? 0.0 : 1.0;
    mask.keep.push_back(std::move(keep));
  }
  return mask;
}

static void check_mask(const NetworkParams& params, const DropoutMask& mask) {
  const auto hidden = params.hidden_sizes();
  if (mask.keep.size() != hidden.size())
    throw ShapeError("dropout mask layer count does not match hidden layers");
  for (std::size_t l = 0; l < hidden.size(); ++l)
    if (mask.keep[l].size() != hidden[l])
      throw ShapeError("dropout mask width does not match hidden layer width");
}

Vector net_forward(const NetworkParams& params, const Vector& input,
                   ForwardCache* cache, const DropoutMask* mask) {
  if (input.size() != params.input_size())
    throw ShapeError("net_forward: input has length " +
                     std::to_string(input.size()) + ", expected " +
                     std::to_string(params.input_size()));
  if (!input.allFinite()) throw NumericError("net_forward: non-finite input");
  if (mask) check_mask(params, *mask);

  const std::size_t layers = params.layer_count();
  const double drop_scale = mask ? mask->scale() : 1.0;

  if (cache) {
    cache->input = input;
    cache->hidden.clear();
    cache->activations.clear();
    cache->hidden.reserve(layers - 1);
    cache->activations.reserve(layers - 1);
    cache->mask = mask ? std::optional<DropoutMask>(*mask) : std::nullopt;
  }

  Vector a = input;
  for (std::size_t l = 0; l < layers; ++l) {
    Vector z = params.weights[l] * a + params.biases[l];
    if (l + 1 == layers) {
      a = std::move(z);  // identity on the output layer
      break;
    }
    Vector h = z.array().tanh();
    if (cache) cache->hidden.push_back(h);
    if (mask) h = (h.array() * mask->keep[l].array() * drop_scale).matrix();
    if (cache) cache->activations.push_back(h);
    a = std::move(h);
  }
  if (cache) cache->output = a;
  return a;
}

static void check_cache(const NetworkParams& params, const ForwardCache& cache,
                        const Vector& output_cotangent) {
  if (output_cotangent.size() != params.output_size())
    throw ShapeError("output cotangent length does not match network output");
  if (cache.input.size() != params.input_size() ||
      cache.hidden.size() != params.layer_count() - 1)
    throw ShapeError("forward cache does not match network shape");
}

Gradients net_backward(const NetworkParams& params, const ForwardCache& cache,
                       const Vector& output_cotangent, Vector* input_cotangent) {
  check_cache(params, cache, output_cotangent);

  const std::size_t layers = params.layer_count();
  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  const double drop_scale = cache.mask ? cache.mask->scale() : 1.0;

  // delta holds dL/dz for the layer being processed, starting from the
  // identity output layer.
  Vector delta = output_cotangent;
  for (std::size_t l = layers; l-- > 0;) {
    const Vector& below = (l == 0) ? cache.input : cache.activations[l - 1];
    grads.weights[l] = delta * below.transpose();
    grads.biases[l] = delta;
    Vector g = params.weights[l].transpose() * delta;
    if (l == 0) {
      if (input_cotangent) *input_cotangent = std::move(g);
      break;
    }
    if (cache.mask)
      g = (g.array() * cache.mask->keep[l - 1].array() * drop_scale).matrix();
    // tanh'(z) = 1 - tanh(z)^2, recovered from the cached tanh output.
    delta = (g.array() * (1.0 - cache.hidden[l - 1].array().square())).matrix();
  }
  return grads;
}

Gradients net_backward_params(const NetworkParams& params, const ForwardCache& cache,
                              const Vector& output_cotangent) {
  return net_backward(params, cache, output_cotangent, nullptr);
}

Vector net_vjp_input(const NetworkParams& params, const ForwardCache& cache,
                     const Vector& output_cotangent) {
  check_cache(params, cache, output_cotangent);

  const std::size_t layers = params.layer_count();
  const double drop_scale = cache.mask ? cache.mask->scale() : 1.0;

  Vector delta = output_cotangent;
  for (std::size_t l = layers; l-- > 0;) {
    Vector g = params.weights[l].transpose() * delta;
    if (l == 0) return g;
    if (cache.mask)
      g = (g.array() * cache.mask->keep[l - 1].array() * drop_scale).matrix();
    delta = (g.array() * (1.0 - cache.hidden[l - 1].array().square())).matrix();
  }
  return delta;  // unreachable for valid networks
}

OptimizerState make_optimizer_state(const NetworkParams& params,
                                    double learning_rate) {
  OptimizerState state;
  state.learning_rate = learning_rate;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    state.m_weights.push_back(Matrix::Zero(params.weights[l].rows(),
                                           params.weights[l].cols()));
    state.v_weights.push_back(Matrix::Zero(params.weights[l].rows(),
                                           params.weights[l].cols()));
    state.m_biases.push_back(Vector::Zero(params.biases[l].size()));
    state.v_biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return state;
}

void optimizer_step(OptimizerState& state, NetworkParams& params,
                    const Gradients& grads) {
  if (grads.weights.size() != params.layer_count())
    throw ShapeError("optimizer_step: gradient layer count mismatch");
  if (!grads.finite())
    throw NumericError("optimizer_step: non-finite gradients");

  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    auto update = [&](auto& m, auto& v, auto& p, const auto& g) {
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      p.array() -= lr * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + eps);
    };
    update(state.m_weights[l], state.v_weights[l], params.weights[l],
           grads.weights[l]);
    update(state.m_biases[l], state.v_biases[l], params.biases[l],
           grads.biases[l]);
  }
}

}  // namespace foilflow::nn
