#include "saesim/semantic.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_set>

#include "saesim/errors.hpp"

namespace saesim {

TopTokenIndex top_activating_tokens(const ActivationSet& acts, const TokenTable& tokens, int k) {
  if (k < 1) throw InputError("top_activating_tokens: k must be >= 1");
  tokens.require_aligned(acts);
  const Index n_tok = acts.n_tokens();
  const auto take = static_cast<std::size_t>(std::min<Index>(k, n_tok));
  const Matrix& m = acts.acts();

  std::vector<std::vector<TopToken>> per_feature(static_cast<std::size_t>(acts.n_features()));
  std::vector<Index> order(static_cast<std::size_t>(n_tok));
  for (Index f = 0; f < acts.n_features(); ++f) {
    std::iota(order.begin(), order.end(), 0);
    auto higher = [&](Index a, Index b) { return m(a, f) > m(b, f) || (m(a, f) == m(b, f) && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), higher);
    auto& list = per_feature[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < take; ++i) {
      const Index t = order[i];
      list.push_back({tokens[t], m(t, f), t});
    }
  }
  return TopTokenIndex(std::move(per_feature), k);
}

std::string normalize_token(std::string_view token) {
  const auto* ws = " \t\r\n\v\f";
  const auto b = token.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = token.find_last_not_of(ws);
  std::string out(token.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<Index> select_concept_features(const TopTokenIndex& top, const ConceptLexicon& lexicon,
                                           const std::string& category, std::span<const Index> pool) {
  const auto& cat = lexicon.at(category);
  std::unordered_set<std::string> keywords;
  for (const auto& kw : cat.keywords) keywords.insert(normalize_token(kw));

  std::vector<Index> candidates(pool.begin(), pool.end());
  if (pool.empty()) {
    candidates.resize(static_cast<std::size_t>(top.n_features()));
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  std::vector<Index> out;
  for (Index f : candidates) {
    const auto& list = top.at(f);
    const bool hit = std::any_of(list.begin(), list.end(), [&](const TopToken& e) {
      return keywords.count(normalize_token(e.token)) > 0;
    });
    if (hit) out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PairingMap match_subspaces(std::span<const Index> subset_a, std::span<const Index> subset_b,
                           const Standardized& acts_a, const Standardized& acts_b,
                           const SubspaceFilters& filters, const CorrelationOptions& opt,
                           std::size_t min_pairs) {
  if (subset_a.empty() || subset_b.empty()) {
    throw InputError("match_subspaces: both subsets must be non-empty");
  }
  auto pairing = correlate_argmax(acts_a, acts_b, opt, subset_a, subset_b);
  if (filters.nonconcept || filters.shared_token) {
    if (filters.top_a == nullptr || filters.top_b == nullptr) {
      throw InputError("match_subspaces: token filters need top-token indices for both sides");
    }
  }
  if (filters.nonconcept) pairing = filter_nonconcept(pairing, *filters.top_a, *filters.top_b, filters.stoplist);
  if (filters.shared_token) pairing = filter_shared_token(pairing, *filters.top_a, *filters.top_b);
  if (filters.one_to_one) pairing = filter_one_to_one(pairing);
  if (pairing.size() < min_pairs) throw TooFewPairs(pairing.size(), min_pairs);
  return pairing;
}

PairingMap match_subspaces(std::span<const Index> subset_a, std::span<const Index> subset_b,
                           const ActivationSet& acts_a, const ActivationSet& acts_b,
                           const SubspaceFilters& filters, const CorrelationOptions& opt,
                           std::size_t min_pairs) {
  return match_subspaces(subset_a, subset_b, standardize_columns(acts_a), standardize_columns(acts_b),
                         filters, opt, min_pairs);
}

std::vector<KeywordCount> keyword_audit(const PairingMap& pairing, const TopTokenIndex& top_a,
                                        const TopTokenIndex& top_b, const ConceptLexicon& lexicon,
                                        const std::string& category) {
  const auto& cat = lexicon.at(category);
  std::set<Index> feats_a;
  std::set<Index> feats_b;
  for (const auto& p : pairing.pairs()) {
    feats_a.insert(p.src);
    feats_b.insert(p.tgt);
  }

  auto count = [](const std::set<Index>& feats, const TopTokenIndex& top, const std::string& kw) {
    Index n = 0;
    for (Index f : feats) {
      const auto& list = top.at(f);
      if (std::any_of(list.begin(), list.end(),
                      [&](const TopToken& e) { return normalize_token(e.token) == kw; })) {
        ++n;
      }
    }
    return n;
  };

  std::vector<KeywordCount> out;
  for (const auto& raw : cat.keywords) {
    const auto kw = normalize_token(raw);
    out.push_back({kw, count(feats_a, top_a, kw), count(feats_b, top_b, kw)});
  }
  return out;
}

}  // namespace saesim
