#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "foilflow/errors.hpp"
#include "foilflow/rng.hpp"

namespace foilflow::geom {

inline constexpr int kCoefPerSurface = 8;
inline constexpr int kDesignDim = 16;
inline constexpr int kBernsteinDegree = kCoefPerSurface - 1;

using Coef8 = Eigen::Matrix<double, kCoefPerSurface, 1>;
using Coef16 = Eigen::Matrix<double, kDesignDim, 1>;

// 16 CST shape coefficients: upper surface first, then lower. Lower-surface
// ordinates use the lower coefficients directly, so a conventional airfoil
// has negative lower coefficients.
struct DesignVector {
  Coef16 coef = Coef16::Zero();

  double upper(int i) const { return coef[i]; }
  double& upper(int i) { return coef[i]; }
  double lower(int i) const { return coef[kCoefPerSurface + i]; }
  double& lower(int i) { return coef[kCoefPerSurface + i]; }
  Coef8 upper_coefs() const { return coef.head<kCoefPerSurface>(); }
  Coef8 lower_coefs() const { return coef.tail<kCoefPerSurface>(); }
  bool finite() const { return coef.allFinite(); }

  static DesignVector from_flat(const Eigen::VectorXd& flat);
};

// Chord-normalized surface ordinates at increasing stations in [0, 1].
struct AirfoilSurface {
  Eigen::VectorXd stations;
  Eigen::VectorXd y_upper;
  Eigen::VectorXd y_lower;
};

// Class function psi^0.5 * (1 - psi); zero at both endpoints, which pins the
// leading edge and gives a sharp (zero-thickness) trailing edge.
double class_function(double psi);

double bernstein(int i, double psi);  // degree 7

double shape_function(const Coef8& coefs, double psi);

// Single-surface ordinate C(psi) * S(psi).
double cst_ordinate(const Coef8& coefs, double psi);

AirfoilSurface cst_evaluate(const DesignVector& design,
                            const Eigen::VectorXd& stations);

// d/dpsi [ C(psi) * B_i(psi) ] for all i; the per-coefficient slope basis.
Coef8 cst_slope_basis(double psi);

// Camber-line slope dz_c/dx at x = (1 - cos(theta)) / 2 for theta in the
// open interval (0, pi); the endpoint slope is singular.
Eigen::VectorXd camber_slope(const DesignVector& design,
                             const Eigen::VectorXd& theta_nodes);

inline constexpr int kValidityStations = 128;
inline constexpr double kMinThickness = 0.02;
inline constexpr double kMaxThickness = 0.30;
inline constexpr double kCoefBound = 1.5;

struct ValidityReport {
  bool valid = false;
  bool surfaces_cross = false;
  bool thickness_out_of_range = false;
  bool coef_out_of_range = false;
  double max_thickness = 0.0;

  std::string reason() const;
};

// Reports, never throws: checks surface ordering at 128 interior stations,
// maximum thickness in [0.02, 0.30] chord, and |coef| <= 1.5.
ValidityReport validate_airfoil(const DesignVector& design);

struct DesignDataset {
  std::vector<DesignVector> designs;
  Coef16 mean = Coef16::Zero();
  Coef16 std = Coef16::Ones();

  std::size_t size() const { return designs.size(); }
  Eigen::MatrixXd matrix() const;  // n x 16, raw coordinates
  std::vector<Eigen::VectorXd> rows() const;

  // Computes per-dimension mean and sample standard deviation; dimensions
  // with no spread get unit scale so normalization stays well defined.
  static DesignDataset from_designs(std::vector<DesignVector> designs);
};

// The five hand-coded bases behind the synthetic dataset: a thickness taper
// per surface plus a uniform camber offset applied to all 16 coefficients.
// The offsets span strongly negative to strongly positive camber so the
// dataset carries a wide lift range around the usual design targets.
const std::array<DesignVector, 5>& base_shapes();

struct SynthesisInfo {
  std::size_t attempts = 0;
  double acceptance_rate = 1.0;
};

DesignDataset synthesize_dataset(std::size_t n, std::uint64_t seed,
                                 double sigma = 0.05,
                                 SynthesisInfo* info = nullptr);

}  // namespace foilflow::geom
