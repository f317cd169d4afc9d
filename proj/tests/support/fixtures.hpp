#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpcopula/dataset.hpp"

namespace dpcopula::testing {

// Categorical schema with attributes named a0, a1, ... and values v0, v1, ...
inline AttributeSchema categorical_schema(const std::vector<std::size_t>& sizes) {
  std::vector<AttributeSpec> specs;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    AttributeSpec s;
    s.name = "a" + std::to_string(a);
    for (std::size_t v = 0; v < sizes[a]; ++v) s.vocabulary.push_back("v" + std::to_string(v));
    specs.push_back(std::move(s));
  }
  return AttributeSchema(std::move(specs));
}

inline TabularDataset from_codes(const AttributeSchema& schema, const std::vector<std::vector<std::uint32_t>>& cols) {
  std::vector<TabularDataset::Column> columns;
  for (const auto& c : cols) columns.emplace_back(c);
  return TabularDataset(schema, std::move(columns));
}

inline TabularDataset random_dataset(const std::vector<std::size_t>& sizes, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::vector<std::uint32_t>> cols(sizes.size());
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(sizes[a] - 1));
    for (std::size_t r = 0; r < n; ++r) cols[a].push_back(pick(gen));
  }
  return from_codes(categorical_schema(sizes), cols);
}

// Attributes obtained by cutting correlated Gaussians at fixed quantiles, so that
// neighbouring attributes carry planted dependence.
inline TabularDataset planted_dataset(std::size_t n, std::uint64_t seed) {
  const std::vector<std::size_t> sizes{2, 3, 4};
  const std::vector<std::vector<double>> cuts{{0.3}, {-0.5, 0.6}, {-0.8, 0.0, 0.9}};
  Eigen::Matrix3d corr;
  corr << 1.0, 0.7, -0.4, 0.7, 1.0, 0.3, -0.4, 0.3, 1.0;
  const Eigen::Matrix3d l = corr.llt().matrixL();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<std::uint32_t>> cols(3);
  for (std::size_t r = 0; r < n; ++r) {
    const Eigen::Vector3d z(normal(gen), normal(gen), normal(gen));
    const Eigen::Vector3d y = l * z;
    for (int a = 0; a < 3; ++a) {
      std::uint32_t code = 0;
      for (double c : cuts[static_cast<std::size_t>(a)]) code += y(a) > c ? 1 : 0;
      cols[static_cast<std::size_t>(a)].push_back(code);
    }
  }
  return from_codes(categorical_schema(sizes), cols);
}

// Row-by-row 2x2 table.
inline PairwiseCounts naive_pair(const BinaryDataset& bds, std::size_t i, std::size_t j) {
  PairwiseCounts c;
  for (std::size_t r = 0; r < bds.rows(); ++r) {
    const bool a = bds.get(r, i);
    const bool b = bds.get(r, j);
    if (a && b) ++c.n11;
    else if (a) ++c.n10;
    else if (b) ++c.n01;
    else ++c.n00;
  }
  return c;
}

// Textbook Pearson correlation of two sequences.
inline double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> column_values(const BinaryDataset& bds, std::size_t c) {
  std::vector<double> out(bds.rows());
  for (std::size_t r = 0; r < bds.rows(); ++r) out[r] = bds.get(r, c) ? 1.0 : 0.0;
  return out;
}

inline Eigen::MatrixXd random_symmetric(std::size_t d, std::mt19937_64& gen, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double v = std::clamp(u(gen), -1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace dpcopula::testing
