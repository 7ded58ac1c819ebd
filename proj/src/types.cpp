#include "saesim/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_set>

#include "saesim/errors.hpp"

namespace saesim {

namespace {

std::string ascii_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

void require_finite(const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) throw NonFiniteEntry(r, c);
    }
  }
}

FeatureSpace::FeatureSpace(Matrix weights, std::string model_id, int layer)
    : weights_(std::move(weights)), model_id_(std::move(model_id)), layer_(layer) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    throw InvariantViolation("FeatureSpace", "n_features >= 1 and dim >= 1");
  }
  if (layer_ < 0) throw InvariantViolation("FeatureSpace", "layer >= 0");
  require_finite(weights_);
}

ActivationSet::ActivationSet(Matrix acts, std::string token_table_ref)
    : acts_(std::move(acts)), token_table_ref_(std::move(token_table_ref)) {
  if (acts_.rows() < 2) throw InvariantViolation("ActivationSet", "n_tokens >= 2");
  if (acts_.cols() < 1) throw InvariantViolation("ActivationSet", "n_features >= 1");
  require_finite(acts_);
}

void TokenTable::require_aligned(const ActivationSet& acts) const {
  if (size() != acts.n_tokens()) {
    throw InvariantViolation("TokenTable", "length (" + std::to_string(size()) +
                                               ") matches ActivationSet n_tokens (" +
                                               std::to_string(acts.n_tokens()) + ")");
  }
}

PairingMap::PairingMap(std::vector<FeaturePair> pairs, std::string src_space_id,
                       std::string tgt_space_id, std::vector<std::string> filters_applied)
    : pairs_(std::move(pairs)),
      src_id_(std::move(src_space_id)),
      tgt_id_(std::move(tgt_space_id)),
      filters_(std::move(filters_applied)) {
  std::unordered_set<Index> seen;
  for (const auto& p : pairs_) {
    if (p.src < 0 || p.tgt < 0) throw InvariantViolation("PairingMap", "indices are >= 0");
    if (!std::isfinite(p.correlation)) {
      throw InvariantViolation("PairingMap", "every correlation is finite");
    }
    if (p.correlation < -1.0 || p.correlation > 1.0) {
      throw InvariantViolation("PairingMap", "correlations lie in [-1, 1]");
    }
    if (!seen.insert(p.src).second) {
      throw InvariantViolation("PairingMap", "src_index values are unique");
    }
  }
  if (has_filter("one_to_one") && !is_one_to_one()) {
    throw InvariantViolation("PairingMap", "tgt_index values unique after one_to_one filter");
  }
}

std::vector<Index> PairingMap::src_indices() const {
  std::vector<Index> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.src);
  return out;
}

std::vector<Index> PairingMap::tgt_indices() const {
  std::vector<Index> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.tgt);
  return out;
}

bool PairingMap::is_one_to_one() const {
  std::unordered_set<Index> seen;
  for (const auto& p : pairs_) {
    if (!seen.insert(p.tgt).second) return false;
  }
  return true;
}

bool PairingMap::has_filter(const std::string& name) const {
  return std::find(filters_.begin(), filters_.end(), name) != filters_.end();
}

PairingMap PairingMap::with_pairs(std::vector<FeaturePair> pairs, const std::string& filter) const {
  auto filters = filters_;
  if (!filter.empty() && !has_filter(filter)) filters.push_back(filter);
  return PairingMap(std::move(pairs), src_id_, tgt_id_, std::move(filters));
}

ConceptLexicon::ConceptLexicon(std::vector<ConceptCategory> categories)
    : categories_(std::move(categories)) {
  std::set<std::string> names;
  for (const auto& cat : categories_) {
    if (!names.insert(cat.name).second) throw DuplicateCategory(cat.name);
    std::set<std::string> seen;
    for (const auto& kw : cat.keywords) {
      if (!seen.insert(ascii_lower(kw)).second) {
        throw InvariantViolation("ConceptLexicon", "keywords within category '" + cat.name +
                                                       "' are unique after lowercasing ('" + kw +
                                                       "' repeats)");
      }
    }
  }
}

const ConceptCategory* ConceptLexicon::find(const std::string& name) const {
  for (const auto& cat : categories_) {
    if (cat.name == name) return &cat;
  }
  return nullptr;
}

const ConceptCategory& ConceptLexicon::at(const std::string& name) const {
  const auto* cat = find(name);
  if (cat == nullptr) throw UnknownCategory(name);
  return *cat;
}

std::vector<std::string> ConceptLexicon::names() const {
  std::vector<std::string> out;
  for (const auto& cat : categories_) out.push_back(cat.name);
  return out;
}

TopTokenIndex::TopTokenIndex(std::vector<std::vector<TopToken>> per_feature, int k)
    : entries_(std::move(per_feature)), k_(k) {
  if (k_ < 1) throw InvariantViolation("TopTokenIndex", "k >= 1");
  for (const auto& list : entries_) {
    if (static_cast<int>(list.size()) > k_) {
      throw InvariantViolation("TopTokenIndex", "at most k entries per feature");
    }
    if (list.size() != entries_.front().size()) {
      throw InvariantViolation("TopTokenIndex", "every feature has the same entry count");
    }
    for (std::size_t i = 1; i < list.size(); ++i) {
      const auto& a = list[i - 1];
      const auto& b = list[i];
      const bool ordered =
          a.activation > b.activation || (a.activation == b.activation && a.position < b.position);
      if (!ordered) {
        throw InvariantViolation("TopTokenIndex",
                                 "entries sorted descending, ties by lower token index");
      }
    }
  }
}

const std::vector<TopToken>& TopTokenIndex::at(Index feature) const {
  if (!covers(feature)) {
    throw InputError("TopTokenIndex: no top-token entry for feature " + std::to_string(feature));
  }
  return entries_[static_cast<std::size_t>(feature)];
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::svcca:
      return "svcca";
    case Metric::rsa:
      return "rsa";
    case Metric::knn_jaccard:
      return "knn_jaccard";
    case Metric::mean_correlation:
      return "mean_correlation";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  for (auto m : {Metric::svcca, Metric::rsa, Metric::knn_jaccard, Metric::mean_correlation}) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown metric '" + name +
                   "' (expected svcca, rsa, knn_jaccard or mean_correlation)");
}

void ScoreReport::validate() const {
  if (null_samples < 1) throw InvariantViolation("ScoreReport", "null_samples >= 1");
  if (!(p_value >= 0.0 && p_value <= 1.0)) {
    throw InvariantViolation("ScoreReport", "p_value in [0, 1]");
  }
  if (n_pairs < 0) throw InvariantViolation("ScoreReport", "n_pairs >= 0");
  if (!std::isfinite(paired_score) || !std::isfinite(null_mean)) {
    throw InvariantViolation("ScoreReport", "scores are finite");
  }
}

DissimilarityMatrix::DissimilarityMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw InvariantViolation("DissimilarityMatrix", "square");
  }
  require_finite(entries_);
  const Index n = entries_.rows();
  for (Index i = 0; i < n; ++i) {
    if (entries_(i, i) != 0.0) throw InvariantViolation("DissimilarityMatrix", "diagonal exactly 0");
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(entries_(i, j) - entries_(j, i)) > 1e-12) {
        throw InvariantViolation("DissimilarityMatrix", "symmetric within 1e-12");
      }
      if (entries_(i, j) < 0.0 || entries_(j, i) < 0.0) {
        throw InvariantViolation("DissimilarityMatrix", "entries >= 0");
      }
    }
  }
}

std::vector<double> DissimilarityMatrix::upper_triangle() const {
  const Index n = size();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out.push_back(entries_(i, j));
  }
  return out;
}

}  // namespace saesim
