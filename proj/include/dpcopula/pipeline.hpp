#pragma once

#include <cstdint>

#include "dpcopula/copula.hpp"
#include "dpcopula/dataset.hpp"
#include "dpcopula/eval.hpp"
#include "dpcopula/privacy.hpp"

namespace dpcopula {

struct SynthesisOptions {
  double epsilon = 1.0;
  double delta = kDefaultDelta;
  std::uint64_t seed = 0;
  CopulaOptions copula;
  unsigned threads = 1;
  bool keep_latent = false;
};

struct SynthesisResult {
  PrivacyPlan plan;
  NoisyStatistics statistics;
  CopulaModel model;
  SyntheticSample sample;
};

/// Private statistics stage followed by the copula stage. The copula stage only
/// receives the released NoisyStatistics. `noise` selects Laplace (dpc) or the
/// zero-noise hook (cop).
SynthesisResult synthesize(const TabularDataset& binned, const BinaryDataset& bds, const NoiseSource& noise,
                           const SynthesisOptions& options);

/// Copula construction and sampling from released statistics alone.
CopulaModel model_from_statistics(const NoisyStatistics& stats, const SynthesisOptions& options);

/// Synthetic data for the comparison variants built on exact statistics:
/// cop (full model), cop-ID (identity correlation), cop-1 (all-ones correlation,
/// positive-definite repaired). dpc uses Laplace noise. Throws ConfigError for
/// variants that do not produce a dataset (no-cor, Lap).
BinaryDataset synthesize_variant(Variant variant, const TabularDataset& binned, const BinaryDataset& bds,
                                 const SynthesisOptions& options);

/// Exact statistics through the zero-noise hook (non-private).
NoisyStatistics exact_statistics(const TabularDataset& binned, const BinaryDataset& bds, unsigned threads = 1);

}  // namespace dpcopula
