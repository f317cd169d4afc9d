#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "dpcopula/copula.hpp"
#include "dpcopula/errors.hpp"
#include "dpcopula/normal.hpp"
#include "dpcopula/pipeline.hpp"
#include "fixtures.hpp"

using namespace dpcopula;
using namespace dpcopula::testing;

namespace {

constexpr double kPi = std::numbers::pi;

double median_orthant(double rho) { return 0.25 + std::asin(rho) / (2.0 * kPi); }

// P(Y1 > h, Y2 > k) as a one-dimensional Simpson integral of phi(x) * P(Y2 > k | Y1 = x).
double orthant_oracle(double h, double k, double rho) {
  const double s = std::sqrt(1.0 - rho * rho);
  const double lo = std::max(h, -12.0);
  const double hi = 12.0;
  const int steps = 20000;
  const double dx = (hi - lo) / steps;
  auto f = [&](double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi) * 0.5 * std::erfc((k - rho * x) / s / std::sqrt(2.0));
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < steps; ++i) sum += f(lo + i * dx) * (i % 2 ? 4.0 : 2.0);
  return sum * dx / 3.0;
}

NoisyMarginal margin_with_mean(double mu) { return NoisyMarginal::from_counts(1000.0 * (1.0 - mu), 1000.0 * mu); }

Eigen::MatrixXd random_correlation(std::size_t d, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d + 2));
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = normal(gen);
  }
  Eigen::MatrixXd c = v * v.transpose();
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * c * s.asDiagonal();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

CopulaModel two_attribute_model(const std::vector<double>& a, const Eigen::MatrixXd& corr) {
  std::vector<QuasiInverse> q;
  for (double x : a) q.push_back({x});
  return CopulaModel::from_correlation(GroupMap(categorical_schema({a.size()})), 0, q, corr);
}

}  // namespace

TEST_CASE("normal helpers") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.77, 0.999999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p));
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("binormal density") {
  CHECK(binormal_pdf(0, 0, 0) == doctest::Approx(1.0 / (2.0 * kPi)));
  for (auto [y1, y2] : {std::pair{0.3, -1.2}, std::pair{2.0, 0.5}}) {
    CHECK(binormal_pdf(y1, y2, 0.0) == doctest::Approx(normal_pdf(y1) * normal_pdf(y2)));
  }
  CHECK_THROWS_AS(binormal_pdf(0, 0, 1.0), ConfigError);
}

TEST_CASE("binormal density integrates to one on the working grid") {
  const double step = 0.01;
  for (double rho : {0.0, 0.5, -0.5, 0.9, -0.9}) {
    double total = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double y1 = -10.0 + (i + 0.5) * step;
      for (int j = 0; j < 2000; ++j) total += binormal_pdf(y1, -10.0 + (j + 0.5) * step, rho);
    }
    CHECK(std::fabs(total * step * step - 1.0) < 1e-4);
  }
}

TEST_CASE("upper orthant probability") {
  for (double rho = -0.99; rho <= 0.99; rho += 0.03) CHECK(std::fabs(upper_orthant_probability(0, 0, rho) - median_orthant(rho)) < 1e-13);
  for (double h : {-1.5, 0.2, 1.1}) {
    for (double k : {-0.7, 0.0, 2.0}) {
      for (double rho : {-0.95, -0.6, 0.0, 0.3, 0.93, 0.99}) {
        CHECK(std::fabs(upper_orthant_probability(h, k, rho) - orthant_oracle(h, k, rho)) < 1e-9);
      }
    }
  }
  CHECK(upper_orthant_probability(0.5, 0.2, 1.0) == doctest::Approx(1.0 - normal_cdf(0.5)));
  CHECK(upper_orthant_probability(0.5, -0.5, -1.0) == doctest::Approx(0.0));
  // Y2 = -Y1: the event is -0.3 < Y1 < 0.3
  CHECK(upper_orthant_probability(-0.3, -0.3, -1.0) == doctest::Approx(normal_cdf(0.3) - normal_cdf(-0.3)));
  CHECK(upper_orthant_probability(0.3, -0.3, -1.0) == 0.0);
}

TEST_CASE("expected product") {
  for (auto method : {IntegrationMethod::quadrature, IntegrationMethod::orthant}) {
    CHECK(expected_product(0.0, {0.5}, {0.5}, method) == doctest::Approx(0.25).epsilon(1e-6));
    for (auto [ai, aj] : {std::pair{0.2, 0.7}, std::pair{0.9, 0.35}, std::pair{0.05, 0.5}}) {
      CHECK(std::fabs(expected_product(0.0, {ai}, {aj}, method) - (1 - ai) * (1 - aj)) < 1e-3);
    }
    CHECK(std::fabs(expected_product(0.7071, {0.5}, {0.5}, method) - 0.375) < 1e-3);
    for (double rho = -0.95; rho <= 0.951; rho += 0.05) {
      CHECK(std::fabs(expected_product(rho, {0.5}, {0.5}, method) - median_orthant(rho)) < 1e-3);
    }
  }
  // both routes agree off the median too
  for (double rho : {-0.8, -0.3, 0.4, 0.85}) {
    CHECK(std::fabs(expected_product_quadrature(rho, {0.3}, {0.8}) - expected_product_orthant(rho, {0.3}, {0.8})) <
          1e-4);
  }
  CHECK(expected_product_orthant(0.4, {0.0}, {0.3}) == doctest::Approx(0.7));
  CHECK(expected_product_orthant(0.4, {1.0}, {0.3}) == 0.0);
}

TEST_CASE("rho_from_r inverts the dichotomised correlation") {
  const auto half = margin_with_mean(0.5);
  for (auto method : {IntegrationMethod::orthant, IntegrationMethod::quadrature}) {
    CHECK(std::fabs(rho_from_r(0.0, half, half, method)) < 1e-3);
    for (double r : {0.2, 0.5, 0.8}) {
      const double expected = std::sin(kPi * r / 2.0);
      CHECK(std::fabs(rho_from_r(r, half, half, method) - expected) < 1e-2);
      CHECK(std::fabs(rho_from_r(-r, half, half, method) + expected) < 1e-2);
    }
  }
  // round trip through the closed form with unbalanced margins
  const auto mi = margin_with_mean(0.2);
  const auto mj = margin_with_mean(0.65);
  for (double rho : {-0.7, -0.2, 0.1, 0.6}) {
    const double e = expected_product_orthant(rho, {mi.f0}, {mj.f0});
    const double r = (e - mi.mean() * mj.mean()) / std::sqrt(mi.variance() * mj.variance());
    CHECK(std::fabs(rho_from_r(r, mi, mj) - rho) < 1e-4);
  }
  // unreachable targets clamp to what the interval ends can reach
  const double top = expected_product_orthant(1.0 - 1e-6, {mi.f0}, {mj.f0});
  const double bottom = expected_product_orthant(-1.0 + 1e-6, {mi.f0}, {mj.f0});
  CHECK(expected_product_orthant(rho_from_r(1.0, mi, mj), {mi.f0}, {mj.f0}) >= top - 1e-6);
  CHECK(expected_product_orthant(rho_from_r(-1.0, mi, mj), {mi.f0}, {mj.f0}) <= bottom + 1e-6);
  CHECK(rho_from_r(1.0, half, half) > 0.999);
  const auto constant = margin_with_mean(1.0);
  CHECK(rho_from_r(0.7, constant, half) == 0.0);
}

TEST_CASE("nearest correlation matrix") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd valid = random_correlation(8, gen);
  CHECK((nearest_correlation_matrix(valid) - valid).cwiseAbs().maxCoeff() < 1e-7);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 5);
  CHECK((nearest_correlation_matrix(id) - id).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::Matrix3d a;
  a << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  const Eigen::MatrixXd x = nearest_correlation_matrix(a);
  CHECK((x - x.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((x.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-8);
  CHECK(min_eigenvalue(x) >= -1e-8);
  // single-projection oracle: PSD projection rescaled to a unit diagonal
  const Eigen::MatrixXd a_dyn = a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_dyn);
  const Eigen::MatrixXd psd =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd s = psd.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd oracle = s.asDiagonal() * psd * s.asDiagonal();
  CHECK((x - a).norm() <= (oracle - a).norm() + 1e-12);
}

TEST_CASE("ensure_positive_definite") {
  std::mt19937_64 gen(9);
  const Eigen::MatrixXd pd = random_correlation(6, gen);
  REQUIRE(min_eigenvalue(pd) > 1e-8);
  CHECK((ensure_positive_definite(pd) - pd).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  const Eigen::MatrixXd fixed = ensure_positive_definite(ones);
  CHECK(min_eigenvalue(fixed) > 0.0);
  CHECK(fixed.diagonal().isOnes(1e-14));
  const Eigen::MatrixXd l = cholesky_lower(fixed);
  CHECK((l * l.transpose() - fixed).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(cholesky_lower(ones), NumericalError);

  // rank-deficient 10 x 10 correlation matrix
  std::normal_distribution<double> normal;
  Eigen::MatrixXd v(10, 9);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 9; ++j) v(i, j) = normal(gen);
  }
  Eigen::MatrixXd c = v * v.transpose();
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  c = s.asDiagonal() * c * s.asDiagonal();
  const double floor = 1e-8;
  const Eigen::MatrixXd repaired = ensure_positive_definite(c, floor);
  CHECK(min_eigenvalue(repaired) >= floor * (1.0 - 1e-6));
  CHECK((repaired.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK_NOTHROW(cholesky_lower(repaired));
}

TEST_CASE("sampling reproduces independent margins") {
  const std::size_t n = 20000;
  const std::vector<double> a{0.5, 0.5, 0.2, 0.9, 0.65};
  const auto model = two_attribute_model(a, Eigen::MatrixXd::Identity(5, 5));
  const auto sample = sample_synthetic(model, n, 42);
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double p = 1.0 - a[c];
    const double freq = static_cast<double>(sample.data.ones(c)) / n;
    CHECK(std::fabs(freq - p) < 4.0 * std::sqrt(p * (1.0 - p) / n));
  }
}

TEST_CASE("sampling reproduces the orthant probability of a correlated pair") {
  const std::size_t n = 50000;
  Eigen::MatrixXd corr(2, 2);
  corr << 1.0, 0.7071, 0.7071, 1.0;
  const auto model = two_attribute_model({0.5, 0.5}, corr);
  const auto sample = sample_synthetic(model, n, 7);
  std::size_t both = 0;
  for (std::size_t r = 0; r < n; ++r) both += sample.data.get(r, 0) && sample.data.get(r, 1);
  const double p = 0.375;
  CHECK(std::fabs(static_cast<double>(both) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  const double phi = direct_pearson(column_values(sample.data, 0), column_values(sample.data, 1));
  CHECK(std::fabs(phi - 0.5) < 0.03);
}

TEST_CASE("sampling is independent of the thread count") {
  std::mt19937_64 gen(1);
  const auto corr = random_correlation(6, gen);
  const auto model = two_attribute_model({0.1, 0.3, 0.5, 0.6, 0.8, 0.95}, corr);
  const auto a = sample_synthetic(model, 1000, 5, 1, true);
  const auto b = sample_synthetic(model, 1000, 5, 3, true);
  CHECK(a.data == b.data);
  CHECK(a.latent == b.latent);
  CHECK_FALSE(sample_synthetic(model, 1000, 6).data == a.data);
}

TEST_CASE("decode_rows") {
  const auto schema = categorical_schema({3, 2});
  BinaryDataset bds(GroupMap(schema), 3);
  // row 0: (0,1,0 | 1,0) consistent; row 1: (1,1,0 | 0,1); row 2: (0,0,0 | 1,0)
  bds.set(0, 1, true), bds.set(0, 3, true);
  bds.set(1, 0, true), bds.set(1, 1, true), bds.set(1, 4, true);
  bds.set(2, 3, true);
  const std::vector<double> latent{0.0, 0.0, 0.0, 0.0, 0.0,   //
                                   0.3, 1.7, -0.2, 0.0, 0.0,  //
                                   -1.0, 0.4, 0.4, 0.0, 0.0};

  const auto strict = decode_rows(bds, {}, DecodeMode::strict);
  REQUIRE(strict.rows.size() == 1);
  CHECK(strict.rows[0] == std::vector<std::uint32_t>{1, 0});
  CHECK(strict.inconsistent_rows == 2);
  CHECK(strict.inconsistent_groups == 2);

  const auto repair = decode_rows(bds, latent, DecodeMode::repair);
  REQUIRE(repair.rows.size() == 3);
  CHECK(repair.rows[0] == std::vector<std::uint32_t>{1, 0});
  CHECK(repair.rows[1] == std::vector<std::uint32_t>{1, 1});
  // nothing set: argmax over the group, ties to the lowest index
  CHECK(repair.rows[2] == std::vector<std::uint32_t>{1, 0});
  CHECK_THROWS_AS(decode_rows(bds, {}, DecodeMode::repair), ConfigError);
}

TEST_CASE("decoding true one-hot data is the inverse of dummy coding") {
  const auto ds = random_dataset({4, 2, 5}, 300, 2);
  const auto decoded = decode_rows(dummy_encode(ds), {}, DecodeMode::strict);
  CHECK(decoded.inconsistent_groups == 0);
  const auto back = decoded.to_dataset(ds.schema());
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(std::equal(back.codes(a).begin(), back.codes(a).end(), ds.codes(a).begin(), ds.codes(a).end()));
  }
}

TEST_CASE("copula model from exact statistics") {
  const auto ds = planted_dataset(5000, 4);
  const auto bds = dummy_encode(ds);
  const auto stats = exact_statistics(ds, bds);
  const auto model = build_copula_model(stats);
  CHECK(model.width() == 9);
  CHECK((model.correlation.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((model.cholesky * model.cholesky.transpose() - model.correlation).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(model.cholesky.isLowerTriangular());
  for (std::size_t c = 0; c < 9; ++c) {
    CHECK(model.marginals[c].a == doctest::Approx(1.0 - static_cast<double>(bds.ones(c)) / 5000.0));
  }
}
