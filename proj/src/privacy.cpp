#include "dpcopula/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpcopula/errors.hpp"
#include "dpcopula/parallel.hpp"

namespace dpcopula {

namespace {

constexpr double kVarianceFloor = 1e-12;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

std::string marginal_label(const GroupMap& g, std::size_t a) {
  return "marginal:" + std::to_string(a) + ":" + g.attribute_name(a);
}

std::string pair_label(const GroupMap& g, std::size_t a, std::size_t b) {
  return "pair:" + std::to_string(a) + ":" + std::to_string(b) + ":" + g.attribute_name(a) + "|" + g.attribute_name(b);
}

double pearson_plugin(double e, double mu_i, double mu_j) {
  const double var_i = mu_i * (1.0 - mu_i);
  const double var_j = mu_j * (1.0 - mu_j);
  if (var_i < kVarianceFloor || var_j < kVarianceFloor) return 0.0;
  const double r = (e - mu_i * mu_j) / std::sqrt(var_i * var_j);
  return std::clamp(r, -1.0, 1.0);
}

// (sum xy - n xbar ybar) / (sqrt(sum x^2 - n xbar^2) sqrt(sum y^2 - n ybar^2))
double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  return (sxy - n * mx * my) / (std::sqrt(sxx - n * mx * mx) * std::sqrt(syy - n * my * my));
}

}  // namespace

double compose_epsilon(double eps_prime, std::size_t k, double delta) {
  if (!(eps_prime > 0.0) || !std::isfinite(eps_prime)) throw ConfigError("per-mechanism epsilon must be positive");
  if (k == 0) throw ConfigError("mechanism count must be at least 1");
  check_delta(delta);
  const double kd = static_cast<double>(k);
  return std::sqrt(2.0 * kd * std::log(1.0 / delta)) * eps_prime + kd * eps_prime * std::expm1(eps_prime);
}

double solve_per_mechanism_epsilon(double target_epsilon, std::size_t k, double delta) {
  if (!(target_epsilon > 0.0) || !std::isfinite(target_epsilon)) throw ConfigError("epsilon must be positive");
  if (k == 0) throw ConfigError("mechanism count must be at least 1");
  check_delta(delta);

  double lo = 0.0;
  double hi = target_epsilon;
  if (compose_epsilon(hi, k, delta) <= target_epsilon) return hi;
  // invariant: compose(lo) <= target < compose(hi), compose strictly increasing
  for (int iter = 0; iter < 500; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double eps = compose_epsilon(mid, k, delta);
    if (eps <= target_epsilon) {
      lo = mid;
      if (target_epsilon - eps <= 1e-8 * 1e-3) return lo;
    } else {
      hi = mid;
    }
  }
  if (lo > 0.0 && target_epsilon - compose_epsilon(lo, k, delta) <= 1e-8) return lo;
  throw NumericalError("budget solver did not converge");
}

PrivacyPlan PrivacyPlan::solve(double target_epsilon, std::size_t k, double delta) {
  return PrivacyPlan(target_epsilon, k, delta, solve_per_mechanism_epsilon(target_epsilon, k, delta));
}

void PrivacyPlan::charge(std::string mechanism) {
  if (ledger_.size() >= k_) {
    throw std::logic_error("privacy budget exhausted: all " + std::to_string(k_) + " mechanisms already charged");
  }
  ledger_.push_back({std::move(mechanism), eps_prime_});
}

nlohmann::json PrivacyPlan::to_json() const {
  nlohmann::json ledger = nlohmann::json::array();
  for (const auto& e : ledger_) ledger.push_back({{"mechanism", e.mechanism}, {"epsilon", e.epsilon}});
  return {{"target_epsilon", target_},
          {"delta", delta_},
          {"mechanisms", k_},
          {"per_mechanism_epsilon", eps_prime_},
          {"composed_epsilon", composed_epsilon()},
          {"charges", ledger_.size()},
          {"ledger", std::move(ledger)}};
}

// ---------------------------------------------------------------------------

NoisyMarginal NoisyMarginal::from_counts(double n0, double n1) {
  NoisyMarginal m;
  m.n0 = std::max(0.0, n0);
  m.n1 = std::max(0.0, n1);
  const double total = m.n0 + m.n1;
  if (total > 0.0) {
    m.f0 = m.n0 / total;
  } else {
    m.f0 = 0.5;
    m.degenerate = true;
  }
  return m;
}

NoisyMarginal dp_one_way(const OneWayCounts& counts, double eps_prime, NoiseSource::Stream& noise) {
  if (!(eps_prime > 0.0)) throw ConfigError("per-mechanism epsilon must be positive");
  const double scale = 2.0 / eps_prime;
  const double n0 = static_cast<double>(counts.zeros) + noise.laplace(scale);
  const double n1 = static_cast<double>(counts.ones) + noise.laplace(scale);
  return NoisyMarginal::from_counts(n0, n1);
}

NoisyPairExpectation dp_two_way(const PairwiseCounts& counts, double eps_pp, NoiseSource::Stream& noise) {
  if (!(eps_pp > 0.0)) throw ConfigError("per-mechanism epsilon must be positive");
  const double scale = 2.0 / eps_pp;
  const double n11 = std::max(0.0, static_cast<double>(counts.n11) + noise.laplace(scale));
  const double n10 = std::max(0.0, static_cast<double>(counts.n10) + noise.laplace(scale));
  const double n01 = std::max(0.0, static_cast<double>(counts.n01) + noise.laplace(scale));
  const double n00 = std::max(0.0, static_cast<double>(counts.n00) + noise.laplace(scale));
  const double total = n11 + n10 + n01 + n00;
  if (total <= 0.0) return {0.0, true};
  return {n11 / total, false};
}

double pearson_from_stats(const NoisyMarginal& mi, const NoisyMarginal& mj, const NoisyPairExpectation& e) {
  const double mu_i = mi.mean();
  const double mu_j = mj.mean();
  const double expectation = e.degenerate ? mu_i * mu_j : e.value;
  return pearson_plugin(expectation, mu_i, mu_j);
}

NoisyStatistics build_noisy_statistics(const TabularDataset& ds, const BinaryDataset& bds, PrivacyPlan& plan,
                                       const NoiseSource& noise, unsigned threads) {
  const GroupMap& groups = bds.groups();
  const std::size_t m = groups.attribute_count();
  const std::size_t d = bds.width();
  const std::size_t needed = PrivacyPlan::synthesis_mechanisms(m);
  if (plan.mechanisms() < needed + plan.ledger().size()) {
    throw std::logic_error("privacy plan covers " + std::to_string(plan.mechanisms()) + " mechanisms, pipeline needs " +
                           std::to_string(needed));
  }
  const double eps = plan.per_mechanism_epsilon();

  NoisyStatistics out;
  out.groups = groups;
  out.rows = bds.rows();
  out.marginals.resize(d);

  parallel_for(m, threads, [&](std::size_t a) {
    auto stream = noise.stream(marginal_label(groups, a));
    const auto range = groups.range(a);
    for (std::size_t c = range.begin; c < range.end; ++c) {
      out.marginals[c] = dp_one_way(one_way_counts(bds, c), eps, stream);
    }
  });

  const PairwiseTable counts = pairwise_counts_fast(ds, bds, threads);

  std::vector<std::pair<std::size_t, std::size_t>> attr_pairs;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) attr_pairs.emplace_back(a, b);
  }

  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  parallel_for(attr_pairs.size(), threads, [&](std::size_t p) {
    const auto [a, b] = attr_pairs[p];
    auto stream = noise.stream(pair_label(groups, a, b));
    const auto ra = groups.range(a);
    const auto rb = groups.range(b);
    for (std::size_t i = ra.begin; i < ra.end; ++i) {
      for (std::size_t j = rb.begin; j < rb.end; ++j) {
        const auto e = dp_two_way(counts.at(i, j), eps, stream);
        const double rij = pearson_from_stats(out.marginals[i], out.marginals[j], e);
        r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rij;
        r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rij;
      }
    }
  });

  // structural zeroes: E{Xi Xj} = 0 inside an attribute
  for (std::size_t a = 0; a < m; ++a) {
    const auto range = groups.range(a);
    for (std::size_t i = range.begin; i < range.end; ++i) {
      for (std::size_t j = i + 1; j < range.end; ++j) {
        const double rij = pearson_from_stats(out.marginals[i], out.marginals[j], {0.0, false});
        r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rij;
        r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rij;
      }
    }
  }
  out.correlation = std::move(r);

  for (std::size_t a = 0; a < m; ++a) plan.charge(marginal_label(groups, a));
  for (const auto& [a, b] : attr_pairs) plan.charge(pair_label(groups, a, b));
  return out;
}

Eigen::MatrixXd exact_pearson_matrix(const TabularDataset& ds, const BinaryDataset& bds, unsigned threads) {
  const GroupMap& groups = bds.groups();
  const std::size_t d = bds.width();
  const double n = static_cast<double>(bds.rows());
  std::vector<double> mu(d);
  for (std::size_t c = 0; c < d; ++c) mu[c] = static_cast<double>(bds.ones(c)) / n;

  const PairwiseTable counts = pairwise_counts_fast(ds, bds, threads);
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double e = groups.same_attribute(i, j) ? 0.0 : static_cast<double>(counts.at(i, j).n11) / n;
      const double rij = pearson_plugin(e, mu[i], mu[j]);
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rij;
      r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rij;
    }
  }
  return r;
}

SensitivityGap sensitivity_demo(std::size_t n) {
  if (n < 3) throw ConfigError("sensitivity demo needs n >= 3");
  std::vector<double> x(n, 0.0);
  std::vector<double> y(n, 0.0);
  x[0] = 1.0;
  y[0] = 1.0;
  SensitivityGap out;
  out.r1 = direct_pearson(x, y);
  x[1] = 1.0;  // neighbouring database
  out.r2 = direct_pearson(x, y);
  out.gap = out.r1 - out.r2;
  const double nd = static_cast<double>(n);
  // (1 - n/n^2) / (sqrt(1 - n/n^2) sqrt(1 - n/n^2)), i.e. exactly 1; sqrt(1 - 1/n) is not equal to it
  const double s = 1.0 - nd / (nd * nd);
  out.r1_closed_form = s / (std::sqrt(s) * std::sqrt(s));
  out.r2_closed_form = std::sqrt(1.0 - 2.0 / nd) / std::sqrt(1.0 - 1.0 / nd) / std::sqrt(2.0);
  return out;
}

}  // namespace dpcopula
