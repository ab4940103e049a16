#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/rational.hpp>

#include "foilflow/geometry.hpp"
#include "testing/oracles.hpp"

using namespace foilflow;
using geom::Coef8;
using geom::DesignVector;

namespace {

DesignVector random_design(Rng& rng, double scale = 0.2) {
  DesignVector d;
  for (int j = 0; j < geom::kDesignDim; ++j) d.coef[j] = scale * rng.normal();
  return d;
}

Eigen::VectorXd linspace01(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = static_cast<double>(i) / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("cst: zero coefficients give the zero surface") {
  const DesignVector d;
  const auto surface = geom::cst_evaluate(d, linspace01(33));
  CHECK(surface.y_upper.isZero(0.0));
  CHECK(surface.y_lower.isZero(0.0));
}

TEST_CASE("cst: equal coefficients reproduce c * class function") {
  // Bernstein partition of unity: S(psi) = c when all coefficients equal c.
  DesignVector d;
  const double c = 0.37;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) d.upper(i) = c;
  const auto stations = linspace01(57);
  const auto surface = geom::cst_evaluate(d, stations);
  for (int k = 0; k < stations.size(); ++k) {
    const double expected = c * geom::class_function(stations[k]);
    CHECK(surface.y_upper[k] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("cst: endpoint closure is exact for arbitrary coefficients") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const DesignVector d = random_design(rng, 1.0);
    Eigen::VectorXd ends(2);
    ends << 0.0, 1.0;
    const auto surface = geom::cst_evaluate(d, ends);
    CHECK(surface.y_upper[0] == 0.0);
    CHECK(surface.y_upper[1] == 0.0);
    CHECK(surface.y_lower[0] == 0.0);
    CHECK(surface.y_lower[1] == 0.0);
  }
}

TEST_CASE("cst: matches exact rational Bernstein evaluation at psi = 1/2") {
  // The shape function with rational coefficients at a rational station is
  // computed exactly with boost::rational; the class-function factor is a
  // shared scalar.
  using Rat = boost::rational<long long>;
  const std::array<Rat, 8> coefs = {Rat(1, 5),  Rat(-3, 8), Rat(7, 16),
                                    Rat(2, 3),  Rat(-1, 4), Rat(5, 6),
                                    Rat(-7, 9), Rat(11, 12)};
  // B_{i,7}(1/2) = binom(7,i) / 128 exactly.
  const std::array<long long, 8> binom = {1, 7, 21, 35, 35, 21, 7, 1};
  Rat shape(0);
  for (int i = 0; i < 8; ++i) shape += coefs[i] * Rat(binom[i], 128);

  DesignVector d;
  for (int i = 0; i < 8; ++i)
    d.upper(i) = boost::rational_cast<double>(coefs[i]);
  Eigen::VectorXd station(1);
  station << 0.5;
  const auto surface = geom::cst_evaluate(d, station);
  const double expected =
      geom::class_function(0.5) * boost::rational_cast<double>(shape);
  CHECK(surface.y_upper[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("cst rejects stations outside [0, 1]") {
  Eigen::VectorXd bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(geom::cst_evaluate(DesignVector{}, bad), ConfigError);
}

TEST_CASE("camber slope: symmetric design has zero slope everywhere") {
  Rng rng(7);
  DesignVector d;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    d.upper(i) = 0.3 * rng.normal();
    d.lower(i) = -d.upper(i);
  }
  Eigen::VectorXd thetas(5);
  thetas << 0.3, 0.9, 1.5708, 2.2, 2.9;
  const auto slope = geom::camber_slope(d, thetas);
  CHECK(slope.isZero(1e-15));
}

TEST_CASE("camber slope: zero design has zero slope") {
  Eigen::VectorXd thetas(3);
  thetas << 0.5, 1.5, 2.5;
  CHECK(geom::camber_slope(DesignVector{}, thetas).isZero(0.0));
}

TEST_CASE("camber slope matches finite differences of the camber line") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const DesignVector d = random_design(rng);
    Eigen::VectorXd thetas(32);
    for (int k = 0; k < 32; ++k)
      thetas[k] = 0.05 + (std::numbers::pi - 0.1) * rng.uniform();
    const auto slope = geom::camber_slope(d, thetas);

    auto camber = [&](double psi) {
      return 0.5 * (geom::cst_ordinate(d.upper_coefs(), psi) +
                    geom::cst_ordinate(d.lower_coefs(), psi));
    };
    for (int k = 0; k < 32; ++k) {
      const double psi = 0.5 * (1.0 - std::cos(thetas[k]));
      const double h = 1e-6;
      const double fd = (camber(psi + h) - camber(psi - h)) / (2 * h);
      CHECK(testing_oracles::rel_error(slope[k], fd) < 1e-6);
    }
  }
}

TEST_CASE("camber slope rejects endpoint thetas") {
  Eigen::VectorXd zero(1), pi(1);
  zero << 0.0;
  pi << std::numbers::pi;
  CHECK_THROWS_AS(geom::camber_slope(DesignVector{}, zero), ConfigError);
  CHECK_THROWS_AS(geom::camber_slope(DesignVector{}, pi), ConfigError);
}

TEST_CASE("validate: zero design is too thin") {
  const auto report = geom::validate_airfoil(DesignVector{});
  CHECK_FALSE(report.valid);
  CHECK(report.thickness_out_of_range);
  CHECK(report.max_thickness == 0.0);
}

TEST_CASE("validate: constant +/-0.15 surfaces are valid") {
  DesignVector d;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    d.upper(i) = 0.15;
    d.lower(i) = -0.15;
  }
  const auto report = geom::validate_airfoil(d);
  CHECK(report.valid);
  // max thickness = 0.3 * max psi^0.5 (1 - psi) ~ 0.1155
  CHECK(report.max_thickness == doctest::Approx(0.11547).epsilon(1e-3));
}

TEST_CASE("validate: crossed surfaces are flagged") {
  DesignVector d;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    d.upper(i) = -0.1;
    d.lower(i) = 0.1;
  }
  const auto report = geom::validate_airfoil(d);
  CHECK_FALSE(report.valid);
  CHECK(report.surfaces_cross);
}

TEST_CASE("validate: coefficient bound") {
  DesignVector d;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    d.upper(i) = 0.15;
    d.lower(i) = -0.15;
  }
  d.upper(3) = 1.6;
  const auto report = geom::validate_airfoil(d);
  CHECK_FALSE(report.valid);
  CHECK(report.coef_out_of_range);
}

TEST_CASE("base shapes are all valid") {
  for (const auto& base : geom::base_shapes())
    CHECK(geom::validate_airfoil(base).valid);
}

TEST_CASE("synthesize: produces n valid designs with recorded acceptance") {
  geom::SynthesisInfo info;
  const auto dataset = geom::synthesize_dataset(200, 1, 0.05, &info);
  CHECK(dataset.size() == 200);
  CHECK(info.acceptance_rate > 0.5);
  for (const auto& d : dataset.designs) CHECK(geom::validate_airfoil(d).valid);
  for (int j = 0; j < geom::kDesignDim; ++j) CHECK(dataset.std[j] > 0.0);
}

TEST_CASE("synthesize: deterministic given seed") {
  const auto a = geom::synthesize_dataset(32, 9);
  const auto b = geom::synthesize_dataset(32, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.designs[i].coef == b.designs[i].coef);
}

TEST_CASE("synthesize: sigma 0 repeats the base shapes") {
  const auto dataset = geom::synthesize_dataset(40, 4, 0.0);
  const auto& bases = geom::base_shapes();
  for (const auto& d : dataset.designs) {
    bool is_base = false;
    for (const auto& b : bases)
      if (d.coef == b.coef) is_base = true;
    CHECK(is_base);
  }
}

TEST_CASE("synthesize rejects tiny n") {
  CHECK_THROWS_AS(geom::synthesize_dataset(8, 1), ConfigError);
}

TEST_CASE("dataset statistics floor degenerate dimensions to unit scale") {
  std::vector<DesignVector> copies(5, geom::base_shapes()[0]);
  const auto ds = geom::DesignDataset::from_designs(copies);
  for (int j = 0; j < geom::kDesignDim; ++j) CHECK(ds.std[j] == 1.0);
}
