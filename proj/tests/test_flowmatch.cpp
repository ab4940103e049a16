#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "foilflow/flowmatch.hpp"
#include "testing/oracles.hpp"

using namespace foilflow;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

std::vector<VectorXd> two_gaussian_rows(int n, Rng& rng) {
  std::vector<VectorXd> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const bool left = (i % 2) == 0;
    rows.push_back(vec2((left ? -2.0 : 2.0) + 0.3 * rng.normal(),
                        (left ? 1.0 : -1.0) + 0.3 * rng.normal()));
  }
  return rows;
}

// Velocity model with a hand-built network; stats default to identity.
flow::VelocityModel rigged_model(nn::NetworkParams net, int dim) {
  flow::VelocityModel model;
  model.net = std::move(net);
  model.dim = dim;
  model.stats.mean = VectorXd::Zero(dim);
  model.stats.std = VectorXd::Ones(dim);
  return model;
}

flow::VelocityModel zero_model(int dim) {
  auto net = nn::net_init({dim + 1, 4, dim}, 0);
  for (auto& w : net.weights) w.setZero();
  return rigged_model(std::move(net), dim);
}

}  // namespace

TEST_CASE("interpolate endpoints and midpoints") {
  const VectorXd x0 = vec2(0.0, 0.0);
  const VectorXd x1 = vec2(2.0, 4.0);
  CHECK(flow::interpolate(x0, x1, 0.0) == x0);
  CHECK(flow::interpolate(x0, x1, 1.0) == x1);
  const VectorXd mid = flow::interpolate(x0, x1, 0.25);
  CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(flow::interpolate(x0, x1, 1.5), ConfigError);
  CHECK_THROWS_AS(flow::interpolate(x0, VectorXd::Zero(3), 0.5), ShapeError);
}

TEST_CASE("target velocity identity: (x1 - x_t)/(1 - t) == x1 - x0") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(6));
    VectorXd x0(d), x1(d);
    for (int j = 0; j < d; ++j) {
      x0[j] = rng.normal();
      x1[j] = rng.normal();
    }
    const double t = 0.999 * rng.uniform();
    const VectorXd xt = flow::interpolate(x0, x1, t);
    const VectorXd lhs = (x1 - xt) / (1.0 - t);
    const VectorXd rhs = x1 - x0;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("normalization round trip is exact to machine precision") {
  Rng rng(6);
  std::vector<VectorXd> rows;
  for (int i = 0; i < 40; ++i)
    rows.push_back(vec2(3.0 + rng.normal(), -1.0 + 0.2 * rng.normal()));
  const auto stats = flow::NormStats::from_rows(rows);
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = vec2(rng.normal(), rng.normal());
    const VectorXd back = stats.denormalize(stats.normalize(x));
    CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("sampler: zero network leaves the state unchanged") {
  const auto model = zero_model(3);
  Rng rng(7);
  VectorXd x0(3);
  for (int j = 0; j < 3; ++j) x0[j] = rng.normal();
  const auto traj = flow::sample_unconditional(model, 17, x0);
  CHECK(traj.states.back() == x0);
  CHECK(traj.terminal_raw == x0);
}

TEST_CASE("sampler: constant drift integrates to x0 + c") {
  nn::NetworkParams net;
  net.layer_sizes = {3, 2};
  net.weights.push_back(nn::Matrix::Zero(2, 3));
  net.biases.push_back(vec2(0.7, -1.3));
  const auto model = rigged_model(std::move(net), 2);
  const VectorXd x0 = vec2(0.25, 0.5);
  for (int T : {1, 8, 100, 333}) {
    const auto traj = flow::sample_unconditional(model, T, x0);
    CHECK((traj.states.back() - (x0 + vec2(0.7, -1.3))).lpNorm<Eigen::Infinity>() <
          1e-13);
  }
}

TEST_CASE("sampler: trajectory has T + 1 states on a uniform grid") {
  const auto model = zero_model(2);
  const auto traj = flow::sample_unconditional(model, 12, vec2(0, 0));
  CHECK(traj.states.size() == 13);
  CHECK(traj.dt == doctest::Approx(1.0 / 12).epsilon(1e-15));
  CHECK(traj.steps() == 12);
}

TEST_CASE("training loss decreases over the run") {
  Rng rng(8);
  const auto rows = two_gaussian_rows(64, rng);
  flow::FlowTrainConfig config;
  config.epochs = 200;
  config.batch_size = 32;
  config.hidden = {32, 32};
  config.seed = 4;
  flow::TrainDiagnostics diag;
  flow::train_flow(rows, config, &diag);
  REQUIRE(diag.batch_loss.size() >= 200);
  const std::size_t window = 100;
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += diag.batch_loss[i];
    tail += diag.batch_loss[diag.batch_loss.size() - 1 - i];
  }
  CHECK(tail < head);
}

TEST_CASE("training is deterministic given the seed") {
  Rng rng(9);
  const auto rows = two_gaussian_rows(32, rng);
  flow::FlowTrainConfig config;
  config.epochs = 20;
  config.batch_size = 16;
  config.hidden = {16};
  config.seed = 11;
  const auto a = flow::train_flow(rows, config);
  const auto b = flow::train_flow(rows, config);
  for (std::size_t l = 0; l < a.net.layer_count(); ++l)
    CHECK(a.net.weights[l] == b.net.weights[l]);
}

TEST_CASE("single-point dataset collapses to the point") {
  // The single design is replicated so each epoch still batches fresh
  // (noise, time) draws. The late-time field is steep, so this test wants
  // depth and a long decayed schedule.
  const std::vector<VectorXd> rows(64, vec2(1.5, -0.75));
  flow::FlowTrainConfig config;
  config.epochs = 16000;
  config.batch_size = 64;
  config.hidden = {64, 64, 64};
  config.learning_rate = 3e-3;
  config.lr_decay_epochs = 800;
  config.seed = 3;
  const auto model = flow::train_flow(rows, config);

  // Degenerate per-dimension spread floors to unit scale, so the point sits
  // at the origin of normalized space.
  Rng rng(21);
  int hits = 0;
  const int draws = 100;
  for (int k = 0; k < draws; ++k) {
    VectorXd x0(2);
    x0 << rng.normal(), rng.normal();
    const auto traj = flow::sample_unconditional(model, 400, x0);
    if (traj.states.back().lpNorm<Eigen::Infinity>() <= 0.05) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("two-Gaussian toy: generated moments track data moments") {
  Rng rng(10);
  const auto rows = two_gaussian_rows(256, rng);
  flow::FlowTrainConfig config;
  config.epochs = 1200;
  config.batch_size = 64;
  config.hidden = {64, 64};
  config.seed = 5;
  const auto model = flow::train_flow(rows, config);

  VectorXd data_mean = VectorXd::Zero(2);
  for (const auto& r : rows) data_mean += r;
  data_mean /= static_cast<double>(rows.size());
  VectorXd data_var = VectorXd::Zero(2);
  for (const auto& r : rows) data_var += (r - data_mean).cwiseAbs2();
  data_var /= static_cast<double>(rows.size() - 1);

  Rng sample_rng(22);
  const int draws = 800;
  std::vector<VectorXd> terminals;
  for (int k = 0; k < draws; ++k) {
    VectorXd x0(2);
    x0 << sample_rng.normal(), sample_rng.normal();
    terminals.push_back(flow::sample_unconditional(model, 200, x0).terminal_raw);
  }
  VectorXd gen_mean = VectorXd::Zero(2);
  for (const auto& t : terminals) gen_mean += t;
  gen_mean /= draws;
  VectorXd gen_var = VectorXd::Zero(2);
  for (const auto& t : terminals) gen_var += (t - gen_mean).cwiseAbs2();
  gen_var /= draws - 1;

  for (int j = 0; j < 2; ++j) {
    const double sd = std::sqrt(data_var[j]);
    CHECK(std::abs(gen_mean[j] - data_mean[j]) < 0.15 * std::max(sd, 1.0));
    CHECK(std::sqrt(gen_var[j]) / sd > 0.85);
    CHECK(std::sqrt(gen_var[j]) / sd < 1.15);
  }
}

TEST_CASE("discretization refinement: T=200 vs T=2000 stay close") {
  Rng rng(12);
  const auto rows = two_gaussian_rows(64, rng);
  flow::FlowTrainConfig config;
  config.epochs = 300;
  config.batch_size = 32;
  config.hidden = {32, 32};
  config.seed = 6;
  const auto model = flow::train_flow(rows, config);
  Rng sample_rng(23);
  for (int k = 0; k < 5; ++k) {
    VectorXd x0(2);
    x0 << sample_rng.normal(), sample_rng.normal();
    const auto coarse = flow::sample_unconditional(model, 200, x0);
    const auto fine = flow::sample_unconditional(model, 2000, x0);
    CHECK((coarse.states.back() - fine.states.back()).lpNorm<Eigen::Infinity>() <
          0.05);
  }
}

TEST_CASE("sampling determinism: identical inputs give identical trajectories") {
  Rng rng(13);
  const auto rows = two_gaussian_rows(32, rng);
  flow::FlowTrainConfig config;
  config.epochs = 50;
  config.batch_size = 16;
  config.hidden = {16};
  config.seed = 7;
  const auto model = flow::train_flow(rows, config);
  const VectorXd x0 = vec2(0.4, -1.1);
  const auto a = flow::sample_unconditional(model, 64, x0);
  const auto b = flow::sample_unconditional(model, 64, x0);
  for (std::size_t i = 0; i < a.states.size(); ++i)
    CHECK(a.states[i] == b.states[i]);
}

TEST_CASE("conditional training: constant label behaves unconditionally") {
  Rng rng(14);
  const auto rows = two_gaussian_rows(128, rng);
  const std::vector<double> labels(rows.size(), 0.7);
  flow::FlowTrainConfig config;
  config.epochs = 600;
  config.batch_size = 32;
  config.hidden = {48, 48};
  config.seed = 8;
  const auto cond = flow::train_conditional_flow(rows, labels, config);
  const auto uncond = flow::train_flow(rows, config);

  Rng sample_rng(24);
  VectorXd cond_mean = VectorXd::Zero(2), uncond_mean = VectorXd::Zero(2);
  const int draws = 300;
  for (int k = 0; k < draws; ++k) {
    VectorXd x0(2);
    x0 << sample_rng.normal(), sample_rng.normal();
    cond_mean += flow::sample_unconditional(cond, 100, x0, 0.7).terminal_raw;
    uncond_mean += flow::sample_unconditional(uncond, 100, x0).terminal_raw;
  }
  cond_mean /= draws;
  uncond_mean /= draws;
  // Same data, same target distribution: first moments agree within
  // sampling and training tolerance.
  CHECK((cond_mean - uncond_mean).lpNorm<Eigen::Infinity>() < 0.5);
}

TEST_CASE("conditional training: conditioning selects the labeled mode") {
  Rng rng(15);
  std::vector<VectorXd> rows;
  std::vector<double> labels;
  for (int i = 0; i < 128; ++i) {
    const bool left = (i % 2) == 0;
    rows.push_back(vec2((left ? -2.0 : 2.0) + 0.25 * rng.normal(),
                        0.25 * rng.normal()));
    labels.push_back(left ? 0.0 : 1.0);
  }
  flow::FlowTrainConfig config;
  config.epochs = 800;
  config.batch_size = 32;
  config.hidden = {48, 48};
  config.seed = 9;
  const auto model = flow::train_conditional_flow(rows, labels, config);

  Rng sample_rng(25);
  double mean_x = 0.0;
  const int draws = 100;
  for (int k = 0; k < draws; ++k) {
    VectorXd x0(2);
    x0 << sample_rng.normal(), sample_rng.normal();
    mean_x += flow::sample_unconditional(model, 100, x0, 1.0).terminal_raw[0];
  }
  mean_x /= draws;
  CHECK(mean_x > 1.0);  // the y=1 cluster sits at x = +2
}

TEST_CASE("conditional model demands a condition and vice versa") {
  Rng rng(16);
  const auto rows = two_gaussian_rows(32, rng);
  flow::FlowTrainConfig config;
  config.epochs = 5;
  config.batch_size = 16;
  config.hidden = {8};
  const auto uncond = flow::train_flow(rows, config);
  const auto cond =
      flow::train_conditional_flow(rows, std::vector<double>(32, 0.0), config);
  CHECK_THROWS_AS(flow::sample_unconditional(uncond, 4, vec2(0, 0), 0.5),
                  ConfigError);
  CHECK_THROWS_AS(flow::sample_unconditional(cond, 4, vec2(0, 0)), ConfigError);
}

TEST_CASE("conditional training rejects label count mismatch") {
  Rng rng(17);
  const auto rows = two_gaussian_rows(16, rng);
  flow::FlowTrainConfig config;
  CHECK_THROWS_AS(
      flow::train_conditional_flow(rows, std::vector<double>(5, 0.0), config),
      ConfigError);
}
