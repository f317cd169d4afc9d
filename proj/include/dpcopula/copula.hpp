#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dpcopula/dataset.hpp"
#include "dpcopula/privacy.hpp"

namespace dpcopula {

/// Quasi-inverse of a binary marginal CDF with mass `a` at 0: 0 on [0, a], 1 on (a, 1].
struct QuasiInverse {
  double a = 0.5;

  int operator()(double t) const { return t <= a ? 0 : 1; }
  bool degenerate() const { return a <= 0.0 || a >= 1.0; }
};

/// How E{F_i^-1(Phi(Y_i)) F_j^-1(Phi(Y_j))} is evaluated.
enum class IntegrationMethod {
  /// Midpoint rule on a 0.01 grid over [-10, 10]^2.
  quadrature,
  /// Closed form for binary margins: P(Y_i > Phi^-1(a_i), Y_j > Phi^-1(a_j)).
  orthant,
};

struct QuadratureGrid {
  double step = 0.01;
  double limit = 10.0;
};

/// Midpoint-rule double integral of the quasi-inverse product against the binormal
/// density. The density is sampled at cell midpoints; the quasi-inverse step is
/// weighted by the fraction of its cell lying above the threshold so that the
/// result does not depend on where Phi^-1(a) falls relative to the grid.
double expected_product_quadrature(double rho, QuasiInverse qi, QuasiInverse qj, QuadratureGrid grid = {});
double expected_product_orthant(double rho, QuasiInverse qi, QuasiInverse qj);
double expected_product(double rho, QuasiInverse qi, QuasiInverse qj, IntegrationMethod method);

/// Gaussian correlation rho whose dichotomised pair reproduces E{Xi Xj} = r sqrt(var_i var_j) + mu_i mu_j.
///
/// Bisection on [-1 + 1e-6, 1 - 1e-6] until the expectation residual is below 1e-6
/// or 100 iterations pass. The target is first clamped into the range reachable at
/// the interval ends (evaluated in closed form). Degenerate margins give 0.
double rho_from_r(double r, const NoisyMarginal& mi, const NoisyMarginal& mj,
                  IntegrationMethod method = IntegrationMethod::orthant);

/// Nearest correlation matrix by alternating projections with Dykstra's correction.
/// Stops after `max_iterations` or when no entry moves by more than `tolerance`.
/// The input is symmetrised and given a unit diagonal first.
Eigen::MatrixXd nearest_correlation_matrix(const Eigen::MatrixXd& p, std::size_t max_iterations = 100,
                                           double tolerance = 1e-7);

/// Raises eigenvalues below `floor` to `floor` and rescales to a unit diagonal.
/// Inputs whose smallest eigenvalue is already >= floor are returned unchanged.
Eigen::MatrixXd ensure_positive_definite(const Eigen::MatrixXd& p, double floor = 1e-8);

/// Lower-triangular L with L L^T = p. Throws NumericalError if p is not positive definite.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& p);

struct CopulaOptions {
  IntegrationMethod integration = IntegrationMethod::orthant;
  std::size_t ncm_iterations = 100;
  double ncm_tolerance = 1e-7;
  double eigen_floor = 1e-8;
};

/// Everything needed to sample: repaired Gaussian correlation, its Cholesky factor and
/// the binary margins.
///
/// Rows are sampled as y = L z, so E{y y^T} = L L^T = correlation. (Written with row
/// vectors, Y = Z L^T; L^T is the upper factor U with U^T U = correlation.)
struct CopulaModel {
  GroupMap groups;
  std::size_t rows = 0;
  std::vector<QuasiInverse> marginals;
  Eigen::MatrixXd correlation;
  Eigen::MatrixXd cholesky;

  static CopulaModel from_correlation(GroupMap groups, std::size_t rows, std::vector<QuasiInverse> marginals,
                                      Eigen::MatrixXd correlation);
  std::size_t width() const { return marginals.size(); }
  nlohmann::json to_json() const;
};

/// The raw Gaussian correlation matrix P: one rho_from_r per off-diagonal pair of R~.
Eigen::MatrixXd gaussian_correlation(const NoisyStatistics& stats, IntegrationMethod method, unsigned threads = 1);

std::vector<QuasiInverse> quasi_inverses(const std::vector<NoisyMarginal>& marginals);

/// P -> NCM(P) -> positive-definite repair -> Cholesky. Uses only the released statistics.
CopulaModel build_copula_model(const NoisyStatistics& stats, const CopulaOptions& options = {}, unsigned threads = 1);

struct SyntheticSample {
  BinaryDataset data;
  /// Gaussian latent rows (n x d, row-major); empty unless requested.
  std::vector<double> latent;
};

/// Draws n rows: z ~ N(0, I) from a dedicated substream of `seed` (element (r, c) uses
/// counter r*d + c), y = L z, x_c = F_c^-1(Phi(y_c)). Rows need not be one-hot per attribute.
SyntheticSample sample_synthetic(const CopulaModel& model, std::size_t n, std::uint64_t seed, unsigned threads = 1,
                                 bool keep_latent = false);

enum class DecodeMode { strict, repair };

struct DecodeResult {
  /// Decoded rows; in strict mode rows with an inconsistent group are left out.
  std::vector<std::vector<std::uint32_t>> rows;
  std::size_t inconsistent_groups = 0;
  std::size_t inconsistent_rows = 0;

  /// Decoded rows as a dataset; throws DataError if no row survived.
  TabularDataset to_dataset(const AttributeSchema& schema) const;
};

/// Maps binary rows back to attribute values. A group with exactly one set bit decodes to
/// that value in both modes. Otherwise strict mode counts it as inconsistent and drops
/// the row; repair mode picks the set column with the largest latent value (any column
/// if none is set), ties going to the lowest column index. Repair needs `latent`.
DecodeResult decode_rows(const BinaryDataset& bds, std::span<const double> latent, DecodeMode mode);

}  // namespace dpcopula
