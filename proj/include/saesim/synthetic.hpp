#pragma once

// Seed-deterministic fixtures with known ground truth: feature spaces, their
// rotated/permuted/noisy copies, and token-aligned activations whose paired
// features share latent events.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saesim/rng.hpp"
#include "saesim/stoplist.hpp"
#include "saesim/types.hpp"

namespace saesim {

/// Rows i.i.d. standard normal.
FeatureSpace gen_space(Index n_features, Index dim, std::uint64_t seed, std::string model_id = "synthetic",
                       int layer = 0);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R diagonal made positive).
Matrix random_orthogonal(Index n, Rng& rng);

struct Perturbed {
  FeatureSpace space;
  /// truth[i] is the perturbed row that came from original row i.
  std::vector<Index> truth;

  /// The truth as a PairingMap with unit correlations.
  PairingMap pairing(const std::string& src_id = "A", const std::string& tgt_id = "B") const;
};

/// Applies, in order: optional orthogonal column transform, optional row
/// permutation, additive Gaussian noise of standard deviation `noise_sigma`.
Perturbed perturb_space(const FeatureSpace& space, bool rotate, bool permute, double noise_sigma,
                        std::uint64_t seed);

enum class ConceptPlant {
  none,
  shared,    ///< Cluster made of true pairs; both sides carry the keywords.
  unrelated  ///< Separate unpaired features on each side carry the keywords.
};

struct ActivationOptions {
  /// Fraction of latents whose first peak token is replaced by a stoplist token.
  double stoplist_fraction = 0.0;
  StoplistConfig stoplist;
  ConceptPlant plant = ConceptPlant::none;
  /// Keywords planted on the cluster; entries containing whitespace are skipped.
  std::vector<std::string> concept_keywords;
  Index cluster_size = 0;
  /// Reserved peak positions per latent (reduced when tokens run short).
  int peaks = 5;
  double background_rate = 0.02;
  /// Seeds peak positions and token overwrites. Fixtures sharing a layout seed
  /// and latent count share one token table.
  std::optional<std::uint64_t> layout_seed;
};

struct SyntheticActivations {
  ActivationSet a;
  ActivationSet b;
  TokenTable tokens;
  std::vector<Index> stoplisted_a;  ///< Features whose top tokens include a planted stoplist token.
  std::vector<Index> stoplisted_b;
  std::vector<Index> planted_a;  ///< Concept-cluster features.
  std::vector<Index> planted_b;
};

/// One latent event stream per true pair and per unpaired feature. A latent has
/// a few large peaks at reserved token positions plus sparse background
/// events, scaled to unit variance. Feature activation = alpha * latent +
/// beta * N(0, 1) with alpha = snr / sqrt(1 + snr^2), beta = 1 / sqrt(1 + snr^2);
/// snr = +inf gives noise-free copies. `truth[i]` is the B feature paired with
/// A feature i, or -1 when unpaired. Tokens are "t0001", "t0002", ... except
/// where planted.
SyntheticActivations gen_paired_activations(const FeatureSpace& a, const FeatureSpace& b,
                                            std::span<const Index> truth, Index n_tokens, double snr,
                                            std::uint64_t seed, const ActivationOptions& opt = {});

}  // namespace saesim
