#include "dpcopula/copula.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "dpcopula/errors.hpp"
#include "dpcopula/normal.hpp"
#include "dpcopula/parallel.hpp"
#include "dpcopula/random.hpp"

namespace dpcopula {

namespace {

constexpr double kRhoBound = 1.0 - 1e-6;
constexpr double kResidualTolerance = 1e-6;
constexpr int kMaxBisection = 100;

using Index = Eigen::Index;

void check_rho(double rho) {
  if (!(std::fabs(rho) < 1.0)) throw ConfigError("Gaussian correlation must satisfy |rho| < 1");
}

// Fraction of [lo, lo + step] lying above the threshold.
double coverage_above(double lo, double step, double threshold) {
  return std::clamp((lo + step - threshold) / step, 0.0, 1.0);
}

Eigen::MatrixXd symmetrize_unit_diagonal(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols()) throw ConfigError("correlation matrix must be square");
  if (!p.allFinite()) throw NumericalError("correlation matrix has non-finite entries");
  Eigen::MatrixXd out = 0.5 * (p + p.transpose());
  out.diagonal().setOnes();
  return out;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd x = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (x + x.transpose());
}

}  // namespace

double expected_product_quadrature(double rho, QuasiInverse qi, QuasiInverse qj, QuadratureGrid grid) {
  check_rho(rho);
  const double hi = normal_quantile(qi.a);
  const double hj = normal_quantile(qj.a);
  const auto cells = static_cast<std::size_t>(std::llround(2.0 * grid.limit / grid.step));
  const double s = std::sqrt(1.0 - rho * rho);

  // only cells (at least partly) above each threshold contribute
  std::vector<double> weight_j(cells);
  std::vector<double> mid(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double lo = -grid.limit + static_cast<double>(c) * grid.step;
    mid[c] = lo + 0.5 * grid.step;
    weight_j[c] = coverage_above(lo, grid.step, hj);
  }
  const std::size_t first_j =
      static_cast<std::size_t>(std::find_if(weight_j.begin(), weight_j.end(), [](double w) { return w > 0.0; }) -
                               weight_j.begin());

  double total = 0.0;
  for (std::size_t c1 = 0; c1 < cells; ++c1) {
    const double lo = -grid.limit + static_cast<double>(c1) * grid.step;
    const double w1 = coverage_above(lo, grid.step, hi);
    if (w1 == 0.0) continue;
    const double y1 = mid[c1];
    // Phi_2(y1, y2) = phi(y1) * phi((y2 - rho y1) / s) / s
    const double outer = normal_pdf(y1) / s;
    double inner = 0.0;
    for (std::size_t c2 = first_j; c2 < cells; ++c2) {
      const double z = (mid[c2] - rho * y1) / s;
      inner += weight_j[c2] * std::exp(-0.5 * z * z);
    }
    total += w1 * outer * inner * 0.3989422804014327;  // 1/sqrt(2 pi)
  }
  return total * grid.step * grid.step;
}

double expected_product_orthant(double rho, QuasiInverse qi, QuasiInverse qj) {
  check_rho(rho);
  return upper_orthant_probability(normal_quantile(qi.a), normal_quantile(qj.a), rho);
}

double expected_product(double rho, QuasiInverse qi, QuasiInverse qj, IntegrationMethod method) {
  return method == IntegrationMethod::quadrature ? expected_product_quadrature(rho, qi, qj)
                                                 : expected_product_orthant(rho, qi, qj);
}

double rho_from_r(double r, const NoisyMarginal& mi, const NoisyMarginal& mj, IntegrationMethod method) {
  const QuasiInverse qi{mi.f0};
  const QuasiInverse qj{mj.f0};
  if (qi.degenerate() || qj.degenerate()) return 0.0;

  double target = r * std::sqrt(mi.variance() * mj.variance()) + mi.mean() * mj.mean();
  target = std::clamp(target, expected_product_orthant(-kRhoBound, qi, qj), expected_product_orthant(kRhoBound, qi, qj));

  double lo = -kRhoBound;
  double hi = kRhoBound;
  double mid = 0.0;
  for (int iter = 0; iter < kMaxBisection; ++iter) {
    mid = 0.5 * (lo + hi);
    const double e = expected_product(mid, qi, qj, method);
    if (std::fabs(e - target) < kResidualTolerance) break;
    // E is increasing in rho
    if (e < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

Eigen::MatrixXd nearest_correlation_matrix(const Eigen::MatrixXd& p, std::size_t max_iterations, double tolerance) {
  Eigen::MatrixXd y = symmetrize_unit_diagonal(p);
  Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(y.rows(), y.cols());
  for (std::size_t k = 0; k < max_iterations; ++k) {
    const Eigen::MatrixXd r = y - correction;
    const Eigen::MatrixXd x = project_psd(r);
    correction = x - r;
    Eigen::MatrixXd next = x;
    next.diagonal().setOnes();
    const double change = (next - y).cwiseAbs().maxCoeff();
    y = std::move(next);
    if (change < tolerance) break;
  }
  // the change test can stop ~tolerance short of feasibility; finish with one PSD
  // projection and a diagonal rescale, which keeps the result PSD with a unit diagonal
  Eigen::MatrixXd x = project_psd(y);
  if (x.diagonal().minCoeff() <= 0.0) throw NumericalError("nearest correlation matrix has a zero diagonal entry");
  const Eigen::VectorXd inv_sqrt = x.diagonal().cwiseSqrt().cwiseInverse();
  x = inv_sqrt.asDiagonal() * x * inv_sqrt.asDiagonal();
  x = 0.5 * (x + x.transpose());
  x.diagonal().setOnes();
  return x;
}

Eigen::MatrixXd ensure_positive_definite(const Eigen::MatrixXd& p, double floor) {
  if (!(floor > 0.0)) throw ConfigError("eigenvalue floor must be positive");
  if (!p.allFinite()) throw NumericalError("correlation matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= floor) return p;

  const Eigen::VectorXd raised = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd q = eig.eigenvectors() * raised.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd inv_sqrt = q.diagonal().cwiseSqrt().cwiseInverse();
  q = inv_sqrt.asDiagonal() * q * inv_sqrt.asDiagonal();
  q = 0.5 * (q + q.transpose());
  q.diagonal().setOnes();
  return q;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed: matrix is not positive definite");
  return llt.matrixL();
}

CopulaModel CopulaModel::from_correlation(GroupMap groups, std::size_t rows, std::vector<QuasiInverse> marginals,
                                          Eigen::MatrixXd correlation) {
  if (correlation.rows() != static_cast<Index>(marginals.size()) || marginals.size() != groups.width()) {
    throw ConfigError("copula model dimensions disagree");
  }
  CopulaModel model;
  model.groups = std::move(groups);
  model.rows = rows;
  model.marginals = std::move(marginals);
  model.cholesky = cholesky_lower(correlation);
  model.correlation = std::move(correlation);
  return model;
}

nlohmann::json CopulaModel::to_json() const {
  nlohmann::json margins = nlohmann::json::array();
  for (std::size_t c = 0; c < marginals.size(); ++c) {
    margins.push_back({{"column", groups.column_name(c)}, {"mass_at_zero", marginals[c].a}});
  }
  auto matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return {{"rows", rows},
          {"width", marginals.size()},
          {"factor_orientation", "lower L with L L^T = correlation; sample rows y = L z"},
          {"marginals", std::move(margins)},
          {"correlation", matrix(correlation)},
          {"cholesky", matrix(cholesky)}};
}

std::vector<QuasiInverse> quasi_inverses(const std::vector<NoisyMarginal>& marginals) {
  std::vector<QuasiInverse> out;
  out.reserve(marginals.size());
  for (const auto& m : marginals) out.push_back({m.f0});
  return out;
}

Eigen::MatrixXd gaussian_correlation(const NoisyStatistics& stats, IntegrationMethod method, unsigned threads) {
  const std::size_t d = stats.marginals.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(static_cast<Index>(d), static_cast<Index>(d));
  parallel_for(d, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double rho = rho_from_r(stats.correlation(static_cast<Index>(i), static_cast<Index>(j)),
                                    stats.marginals[i], stats.marginals[j], method);
      // row i's task owns the upper-triangle entries of row i
      p(static_cast<Index>(i), static_cast<Index>(j)) = rho;
    }
  });
  p.triangularView<Eigen::StrictlyLower>() = p.transpose().triangularView<Eigen::StrictlyLower>();
  return p;
}

CopulaModel build_copula_model(const NoisyStatistics& stats, const CopulaOptions& options, unsigned threads) {
  const Eigen::MatrixXd p = gaussian_correlation(stats, options.integration, threads);
  const Eigen::MatrixXd ncm = nearest_correlation_matrix(p, options.ncm_iterations, options.ncm_tolerance);
  return CopulaModel::from_correlation(stats.groups, stats.rows, quasi_inverses(stats.marginals),
                                       ensure_positive_definite(ncm, options.eigen_floor));
}

SyntheticSample sample_synthetic(const CopulaModel& model, std::size_t n, std::uint64_t seed, unsigned threads,
                                 bool keep_latent) {
  if (n == 0) throw ConfigError("synthetic row count must be at least 1");
  const std::size_t d = model.width();
  SyntheticSample out{BinaryDataset(model.groups, n), {}};
  if (keep_latent) out.latent.assign(n * d, 0.0);
  const CounterRng z_stream = CounterRng::for_label(seed, "synthetic:z");
  const Eigen::MatrixXd& l = model.cholesky;

  // blocks of 64 rows own whole bit words
  const std::size_t blocks = (n + 63) / 64;
  parallel_for(blocks, threads, [&](std::size_t block) {
    Eigen::VectorXd z(static_cast<Index>(d));
    Eigen::VectorXd y(static_cast<Index>(d));
    const std::size_t end = std::min(n, (block + 1) * 64);
    for (std::size_t r = block * 64; r < end; ++r) {
      for (std::size_t c = 0; c < d; ++c) z(static_cast<Index>(c)) = standard_normal_at(z_stream, r * d + c);
      y.noalias() = l.triangularView<Eigen::Lower>() * z;
      for (std::size_t c = 0; c < d; ++c) {
        const double yc = y(static_cast<Index>(c));
        if (keep_latent) out.latent[r * d + c] = yc;
        if (model.marginals[c](normal_cdf(yc)) == 1) out.data.set(r, c, true);
      }
    }
  });
  return out;
}

TabularDataset DecodeResult::to_dataset(const AttributeSchema& schema) const {
  if (rows.empty()) throw DataError("no consistent rows to decode");
  std::vector<TabularDataset::Column> columns;
  for (std::size_t a = 0; a < schema.size(); ++a) {
    TabularDataset::CodeColumn codes;
    codes.reserve(rows.size());
    for (const auto& row : rows) codes.push_back(row.at(a));
    columns.push_back(std::move(codes));
  }
  return TabularDataset(schema, std::move(columns));
}

DecodeResult decode_rows(const BinaryDataset& bds, std::span<const double> latent, DecodeMode mode) {
  const GroupMap& groups = bds.groups();
  const std::size_t d = bds.width();
  const std::size_t m = groups.attribute_count();
  if (mode == DecodeMode::repair && latent.size() != bds.rows() * d) {
    throw ConfigError("repair decoding needs the n x d latent matrix");
  }
  DecodeResult out;
  out.rows.reserve(bds.rows());
  for (std::size_t r = 0; r < bds.rows(); ++r) {
    std::vector<std::uint32_t> values(m);
    bool consistent = true;
    for (std::size_t a = 0; a < m; ++a) {
      const auto range = groups.range(a);
      std::size_t set_count = 0;
      std::size_t set_column = range.begin;
      for (std::size_t c = range.begin; c < range.end; ++c) {
        if (bds.get(r, c)) {
          if (set_count == 0) set_column = c;
          ++set_count;
        }
      }
      if (set_count == 1) {
        values[a] = static_cast<std::uint32_t>(set_column - range.begin);
        continue;
      }
      ++out.inconsistent_groups;
      consistent = false;
      if (mode == DecodeMode::strict) continue;
      std::size_t best = range.end;
      for (std::size_t c = range.begin; c < range.end; ++c) {
        if (set_count > 0 && !bds.get(r, c)) continue;
        if (best == range.end || latent[r * d + c] > latent[r * d + best]) best = c;
      }
      values[a] = static_cast<std::uint32_t>(best - range.begin);
    }
    if (!consistent) ++out.inconsistent_rows;
    if (consistent || mode == DecodeMode::repair) out.rows.push_back(std::move(values));
  }
  return out;
}

}  // namespace dpcopula
