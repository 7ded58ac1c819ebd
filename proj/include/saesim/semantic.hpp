#pragma once

// Top-activating tokens, concept-category feature selection, and subspace
// pairing for the semantic-subspace tests.

#include <span>
#include <string>
#include <vector>

#include "saesim/pairing.hpp"
#include "saesim/types.hpp"

namespace saesim {

inline constexpr int kDefaultTopK = 5;

/// Per feature, the `k` token positions with the highest activation
/// (descending, ties to the lower position). Fewer than `k` entries when the
/// stream is shorter than `k`.
TopTokenIndex top_activating_tokens(const ActivationSet& acts, const TokenTable& tokens,
                                    int k = kDefaultTopK);

/// Trims surrounding whitespace and lowercases ASCII letters.
std::string normalize_token(std::string_view token);

/// Features (ascending) with at least one top token equal, after
/// normalization, to a keyword of `category`. Whole-token matches only.
std::vector<Index> select_concept_features(const TopTokenIndex& top, const ConceptLexicon& lexicon,
                                           const std::string& category,
                                           std::span<const Index> pool = {});

/// Which filters `match_subspaces` applies after the restricted argmax.
struct SubspaceFilters {
  bool nonconcept = false;
  bool shared_token = false;
  bool one_to_one = true;
  const TopTokenIndex* top_a = nullptr;  ///< Required by the token filters.
  const TopTokenIndex* top_b = nullptr;
  StoplistConfig stoplist;
};

/// Argmax-correlation pairing computed only between the two subsets, then the
/// configured filters. Throws TooFewPairs when fewer than `min_pairs` survive.
PairingMap match_subspaces(std::span<const Index> subset_a, std::span<const Index> subset_b,
                           const Standardized& acts_a, const Standardized& acts_b,
                           const SubspaceFilters& filters = {}, const CorrelationOptions& opt = {},
                           std::size_t min_pairs = 3);

PairingMap match_subspaces(std::span<const Index> subset_a, std::span<const Index> subset_b,
                           const ActivationSet& acts_a, const ActivationSet& acts_b,
                           const SubspaceFilters& filters = {}, const CorrelationOptions& opt = {},
                           std::size_t min_pairs = 3);

struct KeywordCount {
  std::string keyword;
  Index count_a = 0;
  Index count_b = 0;

  bool operator==(const KeywordCount&) const = default;
};

/// For each category keyword (lexicon order), how many distinct paired
/// features per side carry it among their top tokens. A feature counts at most
/// once per keyword.
std::vector<KeywordCount> keyword_audit(const PairingMap& pairing, const TopTokenIndex& top_a,
                                        const TopTokenIndex& top_b, const ConceptLexicon& lexicon,
                                        const std::string& category);

}  // namespace saesim
