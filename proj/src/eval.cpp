#include "dpcopula/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "dpcopula/errors.hpp"
#include "dpcopula/parallel.hpp"

namespace dpcopula {

std::vector<QuerySpec> enumerate_queries(const GroupMap& groups, int order) {
  const std::size_t d = groups.width();
  std::vector<QuerySpec> out;
  switch (order) {
    case 1:
      out.reserve(2 * d);
      for (std::size_t c = 0; c < d; ++c) {
        for (int bit : {0, 1}) out.push_back({1, {static_cast<std::uint32_t>(c), 0, 0}, bit});
      }
      break;
    case 2:
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = groups.range(groups.attribute_of(i)).end; j < d; ++j) {
          out.push_back({2, {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0}, 1});
        }
      }
      break;
    case 3:
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = groups.range(groups.attribute_of(i)).end; j < d; ++j) {
          for (std::size_t k = groups.range(groups.attribute_of(j)).end; k < d; ++k) {
            out.push_back(
                {3, {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k)}, 1});
          }
        }
      }
      break;
    default:
      throw ConfigError("query order must be 1, 2 or 3");
  }
  return out;
}

std::uint64_t evaluate_query(const BinaryDataset& bds, const QuerySpec& q) {
  const auto a = bds.column_words(q.columns[0]);
  std::uint64_t count = 0;
  switch (q.order) {
    case 1: {
      const std::uint64_t ones = bds.ones(q.columns[0]);
      return q.bit == 1 ? ones : bds.rows() - ones;
    }
    case 2: {
      const auto b = bds.column_words(q.columns[1]);
      for (std::size_t w = 0; w < a.size(); ++w) count += static_cast<std::uint64_t>(std::popcount(a[w] & b[w]));
      return count;
    }
    case 3: {
      const auto b = bds.column_words(q.columns[1]);
      const auto c = bds.column_words(q.columns[2]);
      for (std::size_t w = 0; w < a.size(); ++w) {
        count += static_cast<std::uint64_t>(std::popcount(a[w] & b[w] & c[w]));
      }
      return count;
    }
    default:
      throw ConfigError("query order must be 1, 2 or 3");
  }
}

std::vector<double> answer_queries(const BinaryDataset& bds, std::span<const QuerySpec> queries, unsigned threads) {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), threads,
               [&](std::size_t i) { out[i] = static_cast<double>(evaluate_query(bds, queries[i])); });
  return out;
}

AlphaBeta alpha_beta_summary(std::span<const double> errors, double beta) {
  if (errors.empty()) throw ConfigError("alpha-beta summary of an empty error list");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("beta must lie in [0, 1)");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  // ceil((1 - beta) N), guarded against 0.99 * 100 = 99.00000000000001
  const double raw = (1.0 - beta) * static_cast<double>(sorted.size());
  auto keep = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, sorted.size());
  const double sum = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep), 0.0);
  return {sum / static_cast<double>(keep), sorted[keep - 1]};
}

ErrorReport ErrorReport::from_errors(std::string variant, std::string query_class, std::vector<double> errors) {
  ErrorReport r;
  r.variant = std::move(variant);
  r.query_class = std::move(query_class);
  std::sort(errors.begin(), errors.end());
  r.sorted_errors = std::move(errors);
  if (!r.sorted_errors.empty()) {
    for (std::size_t b = 0; b < kReportBetas.size(); ++b) r.summaries[b] = alpha_beta_summary(r.sorted_errors, kReportBetas[b]);
  }
  return r;
}

ErrorReport ErrorReport::from_answers(std::string variant, std::string query_class, std::span<const double> truth,
                                      std::span<const double> answers) {
  if (truth.size() != answers.size()) throw ConfigError("answer lists differ in length");
  std::vector<double> errors(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) errors[i] = std::fabs(truth[i] - answers[i]);
  return from_errors(std::move(variant), std::move(query_class), std::move(errors));
}

std::vector<double> ErrorReport::cdf() const {
  std::vector<double> out;
  if (sorted_errors.empty()) return out;
  out.reserve(100);
  const double n = static_cast<double>(sorted_errors.size());
  for (int p = 1; p <= 100; ++p) {
    auto idx = static_cast<std::size_t>(std::ceil(n * p / 100.0 - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, sorted_errors.size());
    out.push_back(sorted_errors[idx - 1]);
  }
  return out;
}

nlohmann::json ErrorReport::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t b = 0; b < kReportBetas.size(); ++b) {
    table.push_back({{"beta", kReportBetas[b]},
                     {"fraction", 1.0 - kReportBetas[b]},
                     {"average", summaries[b].average},
                     {"maximum", summaries[b].maximum}});
  }
  return {{"variant", variant},
          {"queries", query_class},
          {"count", sorted_errors.size()},
          {"non_private", non_private},
          {"alpha_beta", std::move(table)},
          {"cdf_percent_steps", cdf()}};
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::dpc:
      return "dpc";
    case Variant::cop:
      return "cop";
    case Variant::cop_id:
      return "cop-ID";
    case Variant::cop_1:
      return "cop-1";
    case Variant::no_cor:
      return "no-cor";
    case Variant::lap:
      return "Lap";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dpc") return Variant::dpc;
  if (lower == "cop") return Variant::cop;
  if (lower == "cop-id") return Variant::cop_id;
  if (lower == "cop-1") return Variant::cop_1;
  if (lower == "no-cor") return Variant::no_cor;
  if (lower == "lap") return Variant::lap;
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

std::vector<double> laplace_answers(std::span<const double> truth, double eps_prime, const NoiseSource& noise,
                                    std::string_view label) {
  auto stream = noise.stream(label);
  std::vector<double> out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) out[i] = truth[i] + stream.laplace(1.0 / eps_prime);
  return out;
}

std::vector<double> independence_answers(const std::vector<NoisyMarginal>& marginals, std::size_t rows,
                                         std::span<const QuerySpec> queries) {
  std::vector<double> out;
  out.reserve(queries.size());
  const double n = static_cast<double>(rows);
  for (const auto& q : queries) {
    if (q.order == 1) {
      const double mu = marginals.at(q.columns[0]).mean();
      out.push_back(n * (q.bit == 1 ? mu : 1.0 - mu));
      continue;
    }
    double p = 1.0;
    for (int k = 0; k < q.order; ++k) p *= marginals.at(q.columns[static_cast<std::size_t>(k)]).mean();
    out.push_back(n * p);
  }
  return out;
}

CorrelationSplit correlation_split(std::span<const QuerySpec> q2, const Eigen::MatrixXd& pearson, double threshold) {
  CorrelationSplit out;
  for (std::size_t i = 0; i < q2.size(); ++i) {
    if (q2[i].order != 2) throw ConfigError("correlation split expects two-way queries");
    const double r = pearson(q2[i].columns[0], q2[i].columns[1]);
    (std::fabs(r) >= threshold ? out.high : out.low).push_back(i);
  }
  return out;
}

OrderSensitivity artificial_order_demo(std::size_t n, double lambda) {
  if (n < 2) throw ConfigError("order-sensitivity demo needs n >= 2");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  const double ln = lambda * static_cast<double>(n);
  const double rounded = std::round(ln);
  if (std::fabs(ln - rounded) > 1e-9 || rounded < 1.0) throw ConfigError("lambda * n must be an integer >= 1");
  const auto reversed = static_cast<std::size_t>(rounded);

  const double nd = static_cast<double>(n);
  const double l = rounded;
  OrderSensitivity out;
  // 12/(n(n+1)(n-1)) * L(L+1)(L-1)/6, written as a ratio of exact integer products
  out.predicted = 2.0 * (l * (l + 1.0) * (l - 1.0)) / (nd * (nd + 1.0) * (nd - 1.0));

  // sequential order x_i = i against y with its first L entries reversed
  const double mu = (nd + 1.0) / 2.0;
  auto pearson_with = [&](auto value_at) {
    double num = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double x = static_cast<double>(i) - mu;
      const double y = value_at(i) - mu;
      num += x * y;
      sxx += x * x;
      syy += y * y;
    }
    return num / std::sqrt(sxx * syy);
  };
  const double r0 = pearson_with([](std::size_t i) { return static_cast<double>(i); });
  const double rl = pearson_with([&](std::size_t i) {
    return static_cast<double>(i <= reversed ? reversed - i + 1 : i);
  });
  out.measured = r0 - rl;
  return out;
}

}  // namespace dpcopula
