#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "foilflow/physics.hpp"
#include "testing/oracles.hpp"

using namespace foilflow;
using geom::Coef16;
using geom::DesignVector;

namespace {

DesignVector random_design(Rng& rng, double scale = 0.2) {
  DesignVector d;
  for (int j = 0; j < geom::kDesignDim; ++j) d.coef[j] = scale * rng.normal();
  return d;
}

// Evaluator with a fixed affine response; lets loss tests use a closed form.
class LinearEvaluator : public physics::ClEvaluator {
 public:
  LinearEvaluator(Coef16 gradient, double offset)
      : gradient_(std::move(gradient)), offset_(offset) {}

  double predict(const DesignVector& d) const override {
    return gradient_.dot(d.coef) + offset_;
  }
  Coef16 gradient(const DesignVector&) const override { return gradient_; }
  std::string name() const override { return "linear-test"; }

 private:
  Coef16 gradient_;
  double offset_;
};

}  // namespace

TEST_CASE("oracle: flat plate at 2 degrees") {
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  const double cl = physics::oracle_cl(DesignVector{}, op);
  CHECK(std::abs(cl - 0.219325) < 1e-6);
}

TEST_CASE("oracle: symmetric design at zero alpha has zero lift") {
  Rng rng(21);
  DesignVector d;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    d.upper(i) = 0.25 * rng.normal();
    d.lower(i) = -d.upper(i);
  }
  const double cl = physics::oracle_cl(d, physics::OperatingPoint{0.0});
  CHECK(std::abs(cl) < 1e-12);
}

TEST_CASE("oracle: parabolic camber via the quadrature matches 4 pi eps") {
  // z_c = 4 eps x (1 - x) has slope 4 eps cos(theta) at the Glauert
  // abscissae; run the same midpoint rule on that slope directly.
  const double eps = 0.02;
  const int nodes = physics::kQuadratureNodes;
  double acc = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double theta = (j + 0.5) * std::numbers::pi / nodes;
    acc += 4.0 * eps * std::cos(theta) * (std::cos(theta) - 1.0);
  }
  const double alpha_l0 = -acc / nodes;
  const double cl = 2.0 * std::numbers::pi * (0.0 - alpha_l0);
  CHECK(std::abs(cl - 0.251327) < 1e-4);
  CHECK(alpha_l0 == doctest::Approx(-2.0 * eps).epsilon(1e-10));
}

TEST_CASE("oracle gradient: upper and lower entries coincide") {
  // Camber averages the two surfaces with the same sign, so each coefficient
  // pair contributes identically.
  const Coef16 grad = physics::oracle_cl_gradient();
  for (int i = 0; i < geom::kCoefPerSurface; ++i)
    CHECK(grad[i] == doctest::Approx(grad[geom::kCoefPerSurface + i]).epsilon(1e-15));
}

TEST_CASE("oracle gradient: finite differences agree to 1e-8") {
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  const Coef16 grad = physics::oracle_cl_gradient();
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const DesignVector d = random_design(rng);
    for (int j = 0; j < geom::kDesignDim; ++j) {
      auto f = [&](const Eigen::VectorXd& x) {
        return physics::oracle_cl(DesignVector::from_flat(x), op);
      };
      const double fd = testing_oracles::central_diff(f, d.coef, j, 1e-5);
      CHECK(testing_oracles::rel_error(grad[j], fd) < 1e-8);
    }
  }
}

TEST_CASE("oracle gradient: exact affinity") {
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  const Coef16 grad = physics::oracle_cl_gradient();
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const DesignVector d = random_design(rng, 0.4);
    const DesignVector v = random_design(rng, 0.4);
    const double lhs = physics::oracle_cl(DesignVector::from_flat(d.coef + v.coef), op) -
                       physics::oracle_cl(d, op);
    const double rhs = grad.dot(v.coef);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("oracle: quadrature converges, 256 vs 512 nodes") {
  const auto dataset = geom::synthesize_dataset(64, 1);
  for (const auto& d : dataset.designs) {
    const double a256 = physics::oracle_zero_lift_alpha(d, 256);
    const double a512 = physics::oracle_zero_lift_alpha(d, 512);
    CHECK(std::abs(a256 - a512) < 1e-7);
  }
}

TEST_CASE("operating point validates the thin-airfoil regime") {
  CHECK_THROWS_AS(physics::OperatingPoint::from_degrees(25.0), ConfigError);
}

TEST_CASE("physical loss: zero residual gives zero loss and gradient") {
  Coef16 g = Coef16::Ones();
  const LinearEvaluator eval(g, 0.7);
  const auto result =
      physics::physical_loss(eval, DesignVector{}, physics::PhysicalTarget{0.7});
  CHECK(result.loss == 0.0);
  CHECK(result.gradient.isZero(0.0));
}

TEST_CASE("physical loss: flat plate against target 0.7") {
  const physics::ThinAirfoilOracle oracle(physics::OperatingPoint::from_degrees(2.0));
  const auto result =
      physics::physical_loss(oracle, DesignVector{}, physics::PhysicalTarget{0.7});
  CHECK(std::abs(result.loss - 0.231048) < 1e-5);
}

TEST_CASE("physical loss gradient: 2 * residual * evaluator gradient") {
  const physics::ThinAirfoilOracle oracle(physics::OperatingPoint::from_degrees(2.0));
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const DesignVector d = random_design(rng);
    const physics::PhysicalTarget target{0.7};
    const auto result = physics::physical_loss(oracle, d, target);
    const Coef16 expected =
        2.0 * (oracle.predict(d) - target.cl) * oracle.gradient(d);
    CHECK(result.gradient.isApprox(expected, 1e-13));

    auto f = [&](const Eigen::VectorXd& x) {
      return physics::physical_loss(oracle, DesignVector::from_flat(x), target).loss;
    };
    for (int j = 0; j < geom::kDesignDim; ++j) {
      const double fd = testing_oracles::central_diff(f, d.coef, j, 1e-5);
      if (std::abs(fd) > 1e-8)
        CHECK(testing_oracles::rel_error(result.gradient[j], fd) < 1e-4);
    }
  }
}

namespace {

// A lightly trained surrogate for tests that exercise mechanics rather than
// fit quality.
const physics::SurrogateModel& quick_surrogate() {
  static const physics::SurrogateModel model = [] {
    const auto dataset = geom::synthesize_dataset(96, 8);
    physics::SurrogateTrainConfig config;
    config.max_epochs = 60;
    config.fail_validation_mse = 1e9;
    return physics::train_surrogate(
        dataset, physics::OperatingPoint::from_degrees(2.0), config, 3);
  }();
  return model;
}

}  // namespace

TEST_CASE("surrogate training: constant dataset fits the constant") {
  std::vector<DesignVector> designs(64, geom::base_shapes()[2]);
  const auto dataset = geom::DesignDataset::from_designs(designs);
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  physics::SurrogateTrainConfig config;
  config.max_epochs = 400;
  config.stop_validation_mse = 1e-9;
  const auto model = physics::train_surrogate(dataset, op, config, 5);
  const double truth = physics::oracle_cl(geom::base_shapes()[2], op);
  CHECK(std::abs(model.predict(geom::base_shapes()[2]) - truth) < 1e-3);
}

TEST_CASE("surrogate training: deterministic given seed") {
  const auto dataset = geom::synthesize_dataset(96, 3);
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  physics::SurrogateTrainConfig config;
  config.max_epochs = 30;
  config.stop_validation_mse = 0.0;  // run all epochs both times
  config.fail_validation_mse = 1e9;
  const auto a = physics::train_surrogate(dataset, op, config, 12);
  const auto b = physics::train_surrogate(dataset, op, config, 12);
  for (std::size_t l = 0; l < a.net.layer_count(); ++l)
    CHECK(a.net.weights[l] == b.net.weights[l]);
}

TEST_CASE("surrogate training on 500 designs reaches validation MSE < 1e-4") {
  const auto dataset = geom::synthesize_dataset(500, 2);
  const auto op = physics::OperatingPoint::from_degrees(2.0);
  const auto model =
      physics::train_surrogate(dataset, op, physics::SurrogateTrainConfig{}, 7);
  CHECK(model.validation_mse < 1e-4);

  // Predictions on training designs stay within 3 sqrt(val MSE) of the
  // oracle for most points; check a subsample.
  const double band = 3.0 * std::sqrt(std::max(model.validation_mse, 1e-8));
  int inside = 0;
  for (int i = 0; i < 50; ++i) {
    const auto& d = dataset.designs[i];
    if (std::abs(model.predict(d) - physics::oracle_cl(d, op)) < band) ++inside;
  }
  CHECK(inside >= 45);

  // The prediction gradient tracks the analytic constant gradient.
  const Coef16 truth = physics::oracle_cl_gradient();
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const auto& d = dataset.designs[rng.index(dataset.size())];
    const Coef16 g = model.prediction_gradient(d);
    const double cosine = g.dot(truth) / (g.norm() * truth.norm());
    CHECK(cosine >= 0.99);
  }
}

TEST_CASE("surrogate predict: rate-0 mask equals mask-free output") {
  const auto& model = quick_surrogate();
  const auto dataset = geom::synthesize_dataset(96, 8);
  Rng rng(4);
  const auto mask = nn::sample_dropout_mask(0.0, model.net.hidden_sizes(), rng);
  const auto& d = dataset.designs[0];
  CHECK(model.predict(d, &mask) == model.predict(d));
}

TEST_CASE("surrogate uq: rate 0 gives exactly zero sigma") {
  const auto& model = quick_surrogate();
  const auto dataset = geom::synthesize_dataset(96, 8);
  Rng rng(6);
  const auto report = physics::surrogate_uq(model, dataset.designs[0], 20, 0.0, rng);
  CHECK(report.sigma == 0.0);
  CHECK(report.n_passes == 20);
}

TEST_CASE("surrogate uq: two passes give |a - b| / sqrt(2)") {
  const auto& model = quick_surrogate();
  const auto dataset = geom::synthesize_dataset(96, 8);

  Rng rng(77);
  const auto report = physics::surrogate_uq(model, dataset.designs[1], 2, 0.05, rng);
  // Reproduce the two dropout passes to get a and b.
  const auto hidden = model.net.hidden_sizes();
  Rng r0 = rng.split(0), r1 = rng.split(1);
  const auto m0 = nn::sample_dropout_mask(0.05, hidden, r0);
  const auto m1 = nn::sample_dropout_mask(0.05, hidden, r1);
  const double a = model.predict(dataset.designs[1], &m0);
  const double b = model.predict(dataset.designs[1], &m1);
  CHECK(report.sigma ==
        doctest::Approx(std::abs(a - b) / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("surrogate uq: deterministic given seed and non-negative") {
  const auto& model = quick_surrogate();
  const auto dataset = geom::synthesize_dataset(96, 8);
  Rng a(13), b(13);
  const auto ra = physics::surrogate_uq(model, dataset.designs[2], 20, 0.01, a);
  const auto rb = physics::surrogate_uq(model, dataset.designs[2], 20, 0.01, b);
  CHECK(ra.sigma == rb.sigma);
  CHECK(ra.sigma >= 0.0);
}

TEST_CASE("surrogate uq rejects bad arguments") {
  const auto& model = quick_surrogate();
  const auto dataset = geom::synthesize_dataset(96, 8);
  Rng rng(1);
  CHECK_THROWS_AS(physics::surrogate_uq(model, dataset.designs[0], 1, 0.01, rng),
                  ConfigError);
  CHECK_THROWS_AS(physics::surrogate_uq(model, dataset.designs[0], 5, 1.0, rng),
                  ConfigError);
}

TEST_CASE("surrogate training rejects small datasets") {
  const auto dataset = geom::synthesize_dataset(32, 5);
  CHECK_THROWS_AS(physics::train_surrogate(dataset,
                                           physics::OperatingPoint::from_degrees(2.0),
                                           physics::SurrogateTrainConfig{}, 1),
                  ConfigError);
}
