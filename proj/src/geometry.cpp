#include "foilflow/geometry.hpp"

#include <cmath>

namespace foilflow::geom {

DesignVector DesignVector::from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != kDesignDim)
    throw ShapeError("design vector needs " + std::to_string(kDesignDim) +
                     " entries, got " + std::to_string(flat.size()));
  DesignVector d;
  d.coef = flat;
  return d;
}

namespace {

constexpr std::array<double, kCoefPerSurface> kBinomial7 = {1, 7, 21, 35,
                                                            35, 21, 7, 1};

void check_station(double psi) {
  if (!(psi >= 0.0 && psi <= 1.0))
    throw ConfigError("station outside [0, 1]: " + std::to_string(psi));
}

}  // namespace

double class_function(double psi) {
  return std::sqrt(psi) * (1.0 - psi);
}

double bernstein(int i, double psi) {
  return kBinomial7[i] * std::pow(psi, i) *
         std::pow(1.0 - psi, kBernsteinDegree - i);
}

double shape_function(const Coef8& coefs, double psi) {
  double s = 0.0;
  for (int i = 0; i < kCoefPerSurface; ++i) s += coefs[i] * bernstein(i, psi);
  return s;
}

double cst_ordinate(const Coef8& coefs, double psi) {
  return class_function(psi) * shape_function(coefs, psi);
}

AirfoilSurface cst_evaluate(const DesignVector& design,
                            const Eigen::VectorXd& stations) {
  AirfoilSurface surface;
  surface.stations = stations;
  surface.y_upper.resize(stations.size());
  surface.y_lower.resize(stations.size());
  const Coef8 upper = design.upper_coefs();
  const Coef8 lower = design.lower_coefs();
  for (Eigen::Index k = 0; k < stations.size(); ++k) {
    const double psi = stations[k];
    check_station(psi);
    const double c = class_function(psi);
    surface.y_upper[k] = c * shape_function(upper, psi);
    surface.y_lower[k] = c * shape_function(lower, psi);
  }
  return surface;
}

Coef8 cst_slope_basis(double psi) {
  // d/dpsi [C * B_i] = C' B_i + C B_i' with
  //   C'(psi) = 0.5 psi^-0.5 (1 - psi) - psi^0.5
  //   B_i'    = binom(7,i) [i psi^(i-1) (1-psi)^(7-i) - (7-i) psi^i (1-psi)^(6-i)]
  const double c = class_function(psi);
  const double cp = 0.5 / std::sqrt(psi) * (1.0 - psi) - std::sqrt(psi);
  Coef8 basis;
  for (int i = 0; i < kCoefPerSurface; ++i) {
    const double b = bernstein(i, psi);
    double bp = 0.0;
    if (i > 0)
      bp += i * std::pow(psi, i - 1) * std::pow(1.0 - psi, kBernsteinDegree - i);
    if (i < kBernsteinDegree)
      bp -= (kBernsteinDegree - i) * std::pow(psi, i) *
            std::pow(1.0 - psi, kBernsteinDegree - i - 1);
    bp *= kBinomial7[i];
    basis[i] = cp * b + c * bp;
  }
  return basis;
}

Eigen::VectorXd camber_slope(const DesignVector& design,
                             const Eigen::VectorXd& theta_nodes) {
  Eigen::VectorXd slope(theta_nodes.size());
  const Coef8 sum = design.upper_coefs() + design.lower_coefs();
  for (Eigen::Index k = 0; k < theta_nodes.size(); ++k) {
    const double theta = theta_nodes[k];
    if (!(theta > 0.0 && theta < std::numbers::pi))
      throw ConfigError("camber slope requires theta in the open interval (0, pi)");
    const double psi = 0.5 * (1.0 - std::cos(theta));
    // camber z_c = (y_u + y_l)/2, so the slope shares one basis evaluation.
    slope[k] = 0.5 * cst_slope_basis(psi).dot(sum);
  }
  return slope;
}

std::string ValidityReport::reason() const {
  if (valid) return "valid";
  std::string r;
  if (surfaces_cross) r += "surfaces cross; ";
  if (thickness_out_of_range) r += "max thickness outside [0.02, 0.30]; ";
  if (coef_out_of_range) r += "coefficient outside [-1.5, 1.5]; ";
  if (!r.empty()) r.resize(r.size() - 2);
  return r;
}

ValidityReport validate_airfoil(const DesignVector& design) {
  ValidityReport report;
  if (!design.finite()) {
    report.surfaces_cross = true;
    report.thickness_out_of_range = true;
    report.coef_out_of_range = true;
    return report;
  }

  const Coef8 upper = design.upper_coefs();
  const Coef8 lower = design.lower_coefs();
  double max_thickness = 0.0;
  bool cross = false;
  for (int j = 0; j < kValidityStations; ++j) {
    const double psi = (j + 0.5) / kValidityStations;
    const double c = class_function(psi);
    const double yu = c * shape_function(upper, psi);
    const double yl = c * shape_function(lower, psi);
    if (yu < yl) cross = true;
    max_thickness = std::max(max_thickness, yu - yl);
  }
  report.surfaces_cross = cross;
  report.max_thickness = max_thickness;
  report.thickness_out_of_range =
      max_thickness < kMinThickness || max_thickness > kMaxThickness;
  report.coef_out_of_range = design.coef.cwiseAbs().maxCoeff() > kCoefBound;
  report.valid = !report.surfaces_cross && !report.thickness_out_of_range &&
                 !report.coef_out_of_range;
  return report;
}

Eigen::MatrixXd DesignDataset::matrix() const {
  Eigen::MatrixXd m(designs.size(), kDesignDim);
  for (std::size_t i = 0; i < designs.size(); ++i)
    m.row(i) = designs[i].coef.transpose();
  return m;
}

std::vector<Eigen::VectorXd> DesignDataset::rows() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(designs.size());
  for (const auto& d : designs) out.emplace_back(d.coef);
  return out;
}

DesignDataset DesignDataset::from_designs(std::vector<DesignVector> designs) {
  if (designs.empty()) throw ConfigError("dataset needs at least one design");
  DesignDataset ds;
  ds.designs = std::move(designs);
  const auto n = static_cast<double>(ds.designs.size());
  Coef16 mean = Coef16::Zero();
  for (const auto& d : ds.designs) mean += d.coef;
  mean /= n;
  Coef16 var = Coef16::Zero();
  for (const auto& d : ds.designs) var += (d.coef - mean).cwiseAbs2();
  var /= std::max(n - 1.0, 1.0);
  ds.mean = mean;
  ds.std = var.cwiseSqrt();
  for (int j = 0; j < kDesignDim; ++j)
    if (ds.std[j] < 1e-12) ds.std[j] = 1.0;  // degenerate dims: unit scale
  return ds;
}

const std::array<DesignVector, 5>& base_shapes() {
  static const std::array<DesignVector, 5> bases = [] {
    // Thickness taper per surface; a round-nose profile that thins slightly
    // toward the trailing edge.
    const std::array<double, kCoefPerSurface> taper = {1.00, 0.95, 0.90, 0.88,
                                                       0.86, 0.85, 0.85, 0.86};
    // Camber applied equally to both surfaces leaves the thickness
    // distribution untouched. The leading coefficient carries no camber:
    // the Glauert integrand's endpoint derivative is proportional to
    // upper0 + lower0, and keeping it small keeps the 256-node midpoint
    // quadrature inside its convergence budget.
    const std::array<double, kCoefPerSurface> camber_mode = {0.0, 1.0, 1.0, 1.0,
                                                             1.0, 1.0, 1.0, 1.0};
    const std::array<double, 5> thickness = {0.09, 0.13, 0.06, 0.15, 0.11};
    const std::array<double, 5> camber = {-0.65, -0.30, 0.05, 0.40, 0.75};
    std::array<DesignVector, 5> out;
    for (int k = 0; k < 5; ++k) {
      for (int i = 0; i < kCoefPerSurface; ++i) {
        out[k].upper(i) = thickness[k] * taper[i] + camber[k] * camber_mode[i];
        out[k].lower(i) = -thickness[k] * taper[i] + camber[k] * camber_mode[i];
      }
    }
    return out;
  }();
  return bases;
}

DesignDataset synthesize_dataset(std::size_t n, std::uint64_t seed, double sigma,
                                 SynthesisInfo* info) {
  if (n < 16) throw ConfigError("synthesize_dataset needs n >= 16");
  if (sigma < 0.0) throw ConfigError("perturbation sigma must be non-negative");

  const auto& bases = base_shapes();
  Rng rng(seed);
  std::vector<DesignVector> accepted;
  accepted.reserve(n);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 200 * n;
  while (accepted.size() < n) {
    if (attempts >= max_attempts)
      throw NumericError(
          "synthesize_dataset: rejection rate above 99%, bases misconfigured");
    ++attempts;
    DesignVector candidate = bases[rng.index(bases.size())];
    for (int j = 0; j < kDesignDim; ++j) candidate.coef[j] += sigma * rng.normal();
    if (validate_airfoil(candidate).valid) accepted.push_back(candidate);
  }
  if (info) {
    info->attempts = attempts;
    info->acceptance_rate = static_cast<double>(n) / static_cast<double>(attempts);
  }
  return DesignDataset::from_designs(std::move(accepted));
}

}  // namespace foilflow::geom
