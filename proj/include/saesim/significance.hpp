#pragma once

// Permutation nulls and one-sided p-values.

#include <cstdint>
#include <span>
#include <vector>

#include "saesim/metrics.hpp"
#include "saesim/pairing.hpp"
#include "saesim/semantic.hpp"
#include "saesim/types.hpp"

namespace saesim {

enum class NullMode { shuffle_pairing, random_subsets };

std::string to_string(NullMode m);

inline constexpr Index kFullSpaceNullSamples = 100;
inline constexpr Index kSubspaceNullSamples = 1000;

struct NullSpec {
  Index n_samples = kFullSpaceNullSamples;
  std::uint64_t seed = 0;
  NullMode mode = NullMode::shuffle_pairing;
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  int threads = 1;

  /// Throws InvariantViolation unless n_samples >= 1.
  void validate() const;
};

struct NullResult {
  double paired_score = 0.0;
  std::vector<double> null_scores;  ///< Indexed by sample.
  /// Random-subset samples that were redrawn because too few pairs survived.
  Index redraws = 0;

  double null_mean() const;
  double p_value() const;
};

/// Fraction of null scores >= paired (inclusive). Throws InputError when
/// `nulls` is empty.
double p_value(double paired, std::span<const double> nulls);

/// Scores the pairing on decoder rows, then re-scores with the target rows
/// shuffled by an independent uniform permutation per sample. Sample i draws
/// from the stream stream_seed(spec.seed, i).
NullResult null_shuffle(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                        const PairingMap& pairing, const NullSpec& spec,
                        const MetricConfig& cfg = {});

/// Mean-correlation counterpart of `null_shuffle`: the paired score is the mean
/// pair correlation and each null sample pairs every source with a shuffled
/// target and averages those correlations.
NullResult null_shuffle_correlation(const Standardized& acts_a, const Standardized& acts_b,
                                    const PairingMap& pairing, const NullSpec& spec);

struct SubsetNullConfig {
  MetricConfig metric;
  SubspaceFilters filters;  ///< Same filters as the subspace being tested.
  CorrelationOptions correlation;
  /// A sample needs this many surviving pairs (raised to the metric's minimum).
  std::size_t min_pairs = 3;
  /// Per-sample redraw budget before giving up with DegenerateError.
  Index max_redraws = 10000;
};

/// Test-2 null: each sample draws uniform subsets of the given sizes from the
/// pools, pairs them by argmax correlation computed only between the two
/// subsets, applies the filters, and scores the surviving pairs. Samples with
/// too few pairs are redrawn from the same stream and counted in `redraws`.
/// `paired_score` of the result is left at 0.
NullResult null_random_subsets(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                               const Standardized& acts_a, const Standardized& acts_b,
                               std::span<const Index> pool_a, std::span<const Index> pool_b,
                               std::size_t size_a, std::size_t size_b, const NullSpec& spec,
                               const SubsetNullConfig& cfg = {});

/// Row-metric score of a pairing (mean pair correlation for mean_correlation).
double paired_score(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                    const PairingMap& pairing, const MetricConfig& cfg = {});

}  // namespace saesim
