#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dpcopula/dataset.hpp"
#include "dpcopula/random.hpp"

namespace dpcopula {

/// 2^-30
inline constexpr double kDefaultDelta = 9.313225746154785e-10;

/// Total epsilon of k adaptively composed eps_prime-DP mechanisms (advanced composition):
/// sqrt(2k ln(1/delta)) eps' + k eps' (e^eps' - 1).
double compose_epsilon(double eps_prime, std::size_t k, double delta);

/// Largest eps' with compose_epsilon(eps', k, delta) in [target - 1e-8, target], by bisection.
double solve_per_mechanism_epsilon(double target_epsilon, std::size_t k, double delta);

struct LedgerEntry {
  std::string mechanism;
  double epsilon = 0.0;
};

/// Budget split of a target (epsilon, delta) over k equally weighted mechanisms.
class PrivacyPlan {
 public:
  static PrivacyPlan solve(double target_epsilon, std::size_t k, double delta = kDefaultDelta);
  /// k = m + C(m, 2): one mechanism per attribute marginal and per attribute pair.
  static std::size_t synthesis_mechanisms(std::size_t attributes) { return attributes + attributes * (attributes - 1) / 2; }

  double target_epsilon() const { return target_; }
  double delta() const { return delta_; }
  std::size_t mechanisms() const { return k_; }
  double per_mechanism_epsilon() const { return eps_prime_; }
  double composed_epsilon() const { return compose_epsilon(eps_prime_, k_, delta_); }
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }

  /// Records one use of eps'. Throws std::logic_error once k charges have been made.
  void charge(std::string mechanism);

  nlohmann::json to_json() const;

 private:
  PrivacyPlan(double target, std::size_t k, double delta, double eps_prime)
      : target_(target), delta_(delta), k_(k), eps_prime_(eps_prime) {}
  double target_;
  double delta_;
  std::size_t k_;
  double eps_prime_;
  std::vector<LedgerEntry> ledger_;
};

/// DP one-way marginal of a binary column.
struct NoisyMarginal {
  double n0 = 0.0;  // clamped noisy count of zeros
  double n1 = 0.0;  // clamped noisy count of ones
  double f0 = 0.5;  // F(0) = n0 / (n0 + n1); 0.5 when both counts clamp to zero
  bool degenerate = false;

  double mean() const { return 1.0 - f0; }
  double variance() const { return mean() * (1.0 - mean()); }

  static NoisyMarginal from_counts(double n0, double n1);
};

/// DP estimate of E{Xi Xj}. `degenerate` is set when all four noisy counts clamp to zero.
struct NoisyPairExpectation {
  double value = 0.0;
  bool degenerate = false;
};

/// Adds Lap(2/eps') to both counts and clamps at zero.
NoisyMarginal dp_one_way(const OneWayCounts& counts, double eps_prime, NoiseSource::Stream& noise);
/// Adds Lap(2/eps'') to each cell of the 2x2 table and clamps at zero.
NoisyPairExpectation dp_two_way(const PairwiseCounts& counts, double eps_pp, NoiseSource::Stream& noise);

/// Plug-in phi coefficient (E - mu_i mu_j) / sqrt(var_i var_j), clamped to [-1, 1].
/// Returns 0 when either variance is below 1e-12; a degenerate pair falls back to
/// independence (E := mu_i mu_j).
double pearson_from_stats(const NoisyMarginal& mi, const NoisyMarginal& mj, const NoisyPairExpectation& e);

/// Everything released by the private statistics stage. The copula stage sees only this.
struct NoisyStatistics {
  GroupMap groups;
  std::size_t rows = 0;
  std::vector<NoisyMarginal> marginals;
  Eigen::MatrixXd correlation;  // R~, symmetric, unit diagonal, entries in [-1, 1]
};

/// DP marginals for every binary column and the DP Pearson matrix R~.
///
/// One eps' charge per original attribute covers all its columns and one per
/// attribute pair covers all their cross pairs, so the ledger receives exactly
/// m + C(m, 2) entries. Pairs inside one attribute are structural zeroes
/// (E = 0) and cost nothing. `plan` must hold at least that many mechanisms.
NoisyStatistics build_noisy_statistics(const TabularDataset& ds, const BinaryDataset& bds, PrivacyPlan& plan,
                                       const NoiseSource& noise, unsigned threads = 1);

/// Exact (non-private) Pearson matrix of a binary dataset with the same clamping and
/// variance floor as the private path. Evaluation diagnostics only.
Eigen::MatrixXd exact_pearson_matrix(const TabularDataset& ds, const BinaryDataset& bds, unsigned threads = 1);

struct SensitivityGap {
  double r1 = 0.0;
  double r2 = 0.0;
  double gap = 0.0;
  double r1_closed_form = 0.0;
  double r2_closed_form = 0.0;
};

/// Correlation gap between two neighbouring n-row binary databases: D1 has a single
/// row with X = Y = 1, D2 additionally sets X on a second row. Shows the phi
/// coefficient's global sensitivity is at least ~1 - 1/sqrt(2), which is why the
/// pipeline noises counts instead of correlations.
SensitivityGap sensitivity_demo(std::size_t n);

}  // namespace dpcopula
