#include "foilflow/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace foilflow::io {

using nlohmann::json;

namespace {

json network_to_json(const nn::NetworkParams& net) {
  json j;
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = nn::activation_name(net.activation);
  json weights = json::array();
  for (const auto& w : net.weights) {
    std::vector<double> flat(w.size());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        flat[static_cast<std::size_t>(r * w.cols() + c)] = w(r, c);
    weights.push_back(flat);
  }
  j["weights"] = std::move(weights);
  json biases = json::array();
  for (const auto& b : net.biases)
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  j["biases"] = std::move(biases);
  return j;
}

nn::NetworkParams network_from_json(const json& j) {
  nn::NetworkParams net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  net.activation = nn::activation_from_name(j.at("activation").get<std::string>());
  if (net.layer_sizes.size() < 2)
    throw FormatError("checkpoint: layer_sizes too short");
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.layer_sizes.size() - 1 ||
      biases.size() != net.layer_sizes.size() - 1)
    throw FormatError("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int rows = net.layer_sizes[l + 1];
    const int cols = net.layer_sizes[l];
    const auto flat = weights[l].get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(rows) * cols)
      throw FormatError("checkpoint: weight array size mismatch");
    nn::Matrix w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
    net.weights.push_back(std::move(w));
    const auto bias = biases[l].get<std::vector<double>>();
    if (bias.size() != static_cast<std::size_t>(rows))
      throw FormatError("checkpoint: bias array size mismatch");
    net.biases.push_back(
        Eigen::Map<const nn::Vector>(bias.data(), static_cast<Eigen::Index>(bias.size())));
  }
  return net;
}

json stats_to_json(const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
  json j;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  j["std"] = std::vector<double>(std.data(), std.data() + std.size());
  return j;
}

void stats_from_json(const json& j, Eigen::VectorXd& mean, Eigen::VectorXd& std) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  if (m.size() != s.size()) throw FormatError("checkpoint: mean/std size mismatch");
  mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  std = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

void write_document(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint parse error in " + path + ": " + e.what());
  }
  const auto version = j.value("schema_version", -1);
  if (version != kCheckpointSchemaVersion)
    throw FormatError("checkpoint " + path + " has schema version " +
                      std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointSchemaVersion) +
                      "; no migration available");
  return j;
}

}  // namespace

void save_velocity_model(const flow::VelocityModel& model, const std::string& path) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["kind"] = "velocity";
  j["design_dim"] = model.dim;
  j["conditional"] = model.conditional;
  j["network"] = network_to_json(model.net);
  j["normalization"] = stats_to_json(model.stats.mean, model.stats.std);
  write_document(j, path);
}

flow::VelocityModel load_velocity_model(const std::string& path) {
  const json j = read_document(path);
  if (j.value("kind", "") != "velocity")
    throw FormatError("checkpoint " + path + " is not a velocity model");
  flow::VelocityModel model;
  model.dim = j.at("design_dim").get<int>();
  model.conditional = j.at("conditional").get<bool>();
  model.net = network_from_json(j.at("network"));
  stats_from_json(j.at("normalization"), model.stats.mean, model.stats.std);
  if (model.stats.mean.size() != model.dim)
    throw FormatError("checkpoint: normalization dimension mismatch");
  const int expected_input = model.dim + (model.conditional ? 2 : 1);
  if (model.net.input_size() != expected_input ||
      model.net.output_size() != model.dim)
    throw FormatError("checkpoint: network shape inconsistent with design_dim");
  return model;
}

void save_surrogate_model(const physics::SurrogateModel& model,
                          const std::string& path) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["kind"] = "surrogate";
  j["dropout_rate"] = model.dropout_rate;
  j["alpha_rad"] = model.op_point.alpha_rad;
  j["validation_mse"] = model.validation_mse;
  j["network"] = network_to_json(model.net);
  Eigen::VectorXd mean = model.input_mean;
  Eigen::VectorXd std = model.input_std;
  j["normalization"] = stats_to_json(mean, std);
  write_document(j, path);
}

physics::SurrogateModel load_surrogate_model(const std::string& path) {
  const json j = read_document(path);
  if (j.value("kind", "") != "surrogate")
    throw FormatError("checkpoint " + path + " is not a surrogate model");
  physics::SurrogateModel model;
  model.dropout_rate = j.at("dropout_rate").get<double>();
  model.op_point.alpha_rad = j.at("alpha_rad").get<double>();
  model.validation_mse = j.value("validation_mse", 0.0);
  model.net = network_from_json(j.at("network"));
  Eigen::VectorXd mean, std;
  stats_from_json(j.at("normalization"), mean, std);
  if (mean.size() != geom::kDesignDim)
    throw FormatError("surrogate checkpoint: expected 16 input dimensions, got " +
                      std::to_string(mean.size()));
  model.input_mean = mean;
  model.input_std = std;
  if (model.net.input_size() != geom::kDesignDim || model.net.output_size() != 1)
    throw FormatError("surrogate checkpoint: network must map 16 inputs to 1 output");
  return model;
}

std::string checkpoint_kind(const std::string& path) {
  const json j = read_document(path);
  const std::string kind = j.value("kind", "");
  if (kind != "velocity" && kind != "surrogate")
    throw FormatError("checkpoint " + path + " has unknown kind: " + kind);
  return kind;
}

}  // namespace foilflow::io
