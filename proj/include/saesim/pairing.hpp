#pragma once

// Cross-model feature pairing by maximum activation correlation, plus the
// three pairing filters (non-concept tokens, shared top token, one-to-one).

#include <span>
#include <vector>

#include "saesim/stoplist.hpp"
#include "saesim/types.hpp"

namespace saesim {

inline constexpr const char* kFilterNonconcept = "nonconcept";
inline constexpr const char* kFilterSharedToken = "shared_token";
inline constexpr const char* kFilterOneToOne = "one_to_one";

/// Column-standardized activations.
struct Standardized {
  Matrix z;  ///< n_tokens x n_features; live columns have mean 0 and sample std 1.
  Vector mean;
  Vector std;
  std::vector<bool> dead;  ///< Constant columns; their z column is all zeros.

  Index n_tokens() const noexcept { return z.rows(); }
  Index n_features() const noexcept { return z.cols(); }
  std::vector<Index> live_features() const;
};

/// Centers and scales each column (sample std, denominator n_tokens - 1).
/// Columns whose entries are all identical are flagged dead and zeroed.
Standardized standardize_columns(const ActivationSet& acts);
Standardized standardize_columns(const Matrix& acts);

struct CorrelationOptions {
  Index block_size = 1024;
  /// Worker threads for row blocks; 0 picks the hardware concurrency. The
  /// result does not depend on this value.
  int threads = 1;
};

/// Per source feature, the `k` best target candidates (descending correlation,
/// ties to the lower target index).
struct Candidates {
  Index src = 0;
  std::vector<FeaturePair> best;
};

/// Tiled top-k correlation search. Correlations are computed tile by tile
/// with every entry accumulated over tokens in ascending order, so results are
/// identical for every block size and thread count. Dead source features are
/// omitted; dead target features are never candidates. `src_subset` /
/// `tgt_subset` restrict the search; empty spans mean all features.
std::vector<Candidates> correlate_topk(const Standardized& a, const Standardized& b, int k,
                                       const CorrelationOptions& opt,
                                       std::span<const Index> src_subset = {},
                                       std::span<const Index> tgt_subset = {});

/// Pairs every live feature of `a` with its highest-correlated live feature of `b`.
PairingMap correlate_argmax(const ActivationSet& a, const ActivationSet& b,
                            const CorrelationOptions& opt = {}, const std::string& src_id = "A",
                            const std::string& tgt_id = "B");

PairingMap correlate_argmax(const Standardized& a, const Standardized& b,
                            const CorrelationOptions& opt, std::span<const Index> src_subset = {},
                            std::span<const Index> tgt_subset = {}, const std::string& src_id = "A",
                            const std::string& tgt_id = "B");

/// Drops a pair when either side's top tokens contain a stoplist token.
PairingMap filter_nonconcept(const PairingMap& pairing, const TopTokenIndex& top_a,
                             const TopTokenIndex& top_b, const StoplistConfig& stoplist = {});

/// Keeps a pair only when the two sides share at least one top token string.
PairingMap filter_shared_token(const PairingMap& pairing, const TopTokenIndex& top_a,
                               const TopTokenIndex& top_b);

/// Drops every pair whose target is claimed by two or more sources.
PairingMap filter_one_to_one(const PairingMap& pairing);

double mean_paired_correlation(const PairingMap& pairing);

/// True when any of the feature's top tokens is a stoplist token.
bool is_nonconcept_feature(const TopTokenIndex& top, Index feature, const StoplistConfig& stoplist);

}  // namespace saesim
