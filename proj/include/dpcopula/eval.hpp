#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dpcopula/dataset.hpp"
#include "dpcopula/privacy.hpp"

namespace dpcopula {

/// One counting query: order 1 counts rows with column == bit, orders 2 and 3 count rows
/// where all listed columns (from distinct attributes) are 1.
struct QuerySpec {
  int order = 1;
  std::array<std::uint32_t, 3> columns{};
  int bit = 1;

  bool operator==(const QuerySpec&) const = default;
};

/// Order 1: 2d queries (bit 0 then bit 1 per column). Orders 2 and 3: every cross-attribute
/// combination of columns in lexicographic order. Throws ConfigError for other orders.
std::vector<QuerySpec> enumerate_queries(const GroupMap& groups, int order);

std::uint64_t evaluate_query(const BinaryDataset& bds, const QuerySpec& q);
std::vector<double> answer_queries(const BinaryDataset& bds, std::span<const QuerySpec> queries, unsigned threads = 1);

struct AlphaBeta {
  double average = 0.0;
  double maximum = 0.0;
};

/// Sorts errors ascending and summarises the first ceil((1 - beta) N) of them.
AlphaBeta alpha_beta_summary(std::span<const double> errors, double beta);

inline constexpr std::array<double, 3> kReportBetas{0.05, 0.01, 0.0};

/// Absolute errors of one variant on one query class.
struct ErrorReport {
  std::string variant;
  std::string query_class;  // "Q1", "Q2", "Q3", or a labelled subset
  std::vector<double> sorted_errors;
  std::array<AlphaBeta, 3> summaries{};  // for kReportBetas
  bool non_private = false;

  static ErrorReport from_answers(std::string variant, std::string query_class, std::span<const double> truth,
                                  std::span<const double> answers);
  static ErrorReport from_errors(std::string variant, std::string query_class, std::vector<double> errors);

  /// Error quantiles at 1%, 2%, ..., 100%.
  std::vector<double> cdf() const;
  nlohmann::json to_json() const;
};

enum class Variant { dpc, cop, cop_id, cop_1, no_cor, lap };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

/// Per-query Laplace answers truth + Lap(1/eps'), counting queries having sensitivity 1.
/// Negative answers are kept.
std::vector<double> laplace_answers(std::span<const double> truth, double eps_prime, const NoiseSource& noise,
                                    std::string_view label);

/// Answers under independence: n * prod(mu) for orders 2/3, n * P(X = bit) for order 1.
std::vector<double> independence_answers(const std::vector<NoisyMarginal>& marginals, std::size_t rows,
                                         std::span<const QuerySpec> queries);

struct CorrelationSplit {
  std::vector<std::size_t> high;  // indices into the Q2 list with |r| >= threshold
  std::vector<std::size_t> low;
};

/// Partitions Q2 queries by the absolute Pearson correlation of their column pair.
CorrelationSplit correlation_split(std::span<const QuerySpec> q2, const Eigen::MatrixXd& pearson, double threshold = 0.5);

struct OrderSensitivity {
  double predicted = 0.0;
  double measured = 0.0;
};

/// r_0 - r_lambda for two orders of n values where the second reverses its first lambda*n
/// entries: closed form 12/(n(n+1)(n-1)) * L(L+1)(L-1)/6 with L = lambda*n, and the direct
/// Pearson difference. Throws ConfigError unless lambda*n is an integer >= 1.
OrderSensitivity artificial_order_demo(std::size_t n, double lambda);

}  // namespace dpcopula
