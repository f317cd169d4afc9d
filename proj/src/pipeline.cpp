#include "dpcopula/pipeline.hpp"

#include "dpcopula/errors.hpp"

namespace dpcopula {

SynthesisResult synthesize(const TabularDataset& binned, const BinaryDataset& bds, const NoiseSource& noise,
                           const SynthesisOptions& options) {
  PrivacyPlan plan = PrivacyPlan::solve(options.epsilon, PrivacyPlan::synthesis_mechanisms(binned.attribute_count()),
                                        options.delta);
  NoisyStatistics stats = build_noisy_statistics(binned, bds, plan, noise, options.threads);
  CopulaModel model = model_from_statistics(stats, options);
  SyntheticSample sample = sample_synthetic(model, stats.rows, options.seed, options.threads, options.keep_latent);
  return {std::move(plan), std::move(stats), std::move(model), std::move(sample)};
}

CopulaModel model_from_statistics(const NoisyStatistics& stats, const SynthesisOptions& options) {
  return build_copula_model(stats, options.copula, options.threads);
}

NoisyStatistics exact_statistics(const TabularDataset& binned, const BinaryDataset& bds, unsigned threads) {
  PrivacyPlan plan = PrivacyPlan::solve(1.0, PrivacyPlan::synthesis_mechanisms(binned.attribute_count()));
  return build_noisy_statistics(binned, bds, plan, NoiseSource::unsafe_zero(), threads);
}

BinaryDataset synthesize_variant(Variant variant, const TabularDataset& binned, const BinaryDataset& bds,
                                 const SynthesisOptions& options) {
  switch (variant) {
    case Variant::dpc:
      return synthesize(binned, bds, NoiseSource::laplace(options.seed), options).sample.data;
    case Variant::cop:
      return synthesize(binned, bds, NoiseSource::unsafe_zero(), options).sample.data;
    case Variant::cop_id:
    case Variant::cop_1: {
      const NoisyStatistics stats = exact_statistics(binned, bds, options.threads);
      const auto d = static_cast<Eigen::Index>(stats.marginals.size());
      Eigen::MatrixXd p = variant == Variant::cop_id ? Eigen::MatrixXd::Identity(d, d)
                                                     : ensure_positive_definite(Eigen::MatrixXd::Ones(d, d),
                                                                                options.copula.eigen_floor);
      const CopulaModel model =
          CopulaModel::from_correlation(stats.groups, stats.rows, quasi_inverses(stats.marginals), std::move(p));
      return sample_synthetic(model, stats.rows, options.seed, options.threads).data;
    }
    case Variant::no_cor:
    case Variant::lap:
      break;
  }
  throw ConfigError("variant '" + std::string(to_string(variant)) + "' does not produce a synthetic dataset");
}

}  // namespace dpcopula
