#pragma once

// Shared domain types. Every type validates its invariants on construction and
// is immutable afterwards, so instances can be shared read-only across threads.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace saesim {

using Index = std::int64_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Throws NonFiniteEntry for the first NaN/Inf entry in row-major order.
void require_finite(const Matrix& m);

/// Decoder weights of one SAE: one row per feature, one column per model dimension.
class FeatureSpace {
 public:
  explicit FeatureSpace(Matrix weights, std::string model_id = {}, int layer = 0);

  const Matrix& weights() const noexcept { return weights_; }
  Index n_features() const noexcept { return weights_.rows(); }
  Index dim() const noexcept { return weights_.cols(); }
  const std::string& model_id() const noexcept { return model_id_; }
  int layer() const noexcept { return layer_; }

 private:
  Matrix weights_;
  std::string model_id_;
  int layer_;
};

/// Feature activations over a token stream: one row per token, one column per feature.
class ActivationSet {
 public:
  explicit ActivationSet(Matrix acts, std::string token_table_ref = {});

  const Matrix& acts() const noexcept { return acts_; }
  Index n_tokens() const noexcept { return acts_.rows(); }
  Index n_features() const noexcept { return acts_.cols(); }
  const std::string& token_table_ref() const noexcept { return token_table_ref_; }

 private:
  Matrix acts_;
  std::string token_table_ref_;
};

class TokenTable {
 public:
  TokenTable() = default;
  explicit TokenTable(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  Index size() const noexcept { return static_cast<Index>(tokens_.size()); }
  const std::string& operator[](Index i) const { return tokens_.at(static_cast<std::size_t>(i)); }

  /// Throws InvariantViolation unless the table has exactly one token per activation row.
  void require_aligned(const ActivationSet& acts) const;

  bool operator==(const TokenTable&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct FeaturePair {
  Index src = 0;
  Index tgt = 0;
  double correlation = 0.0;

  bool operator==(const FeaturePair&) const = default;
};

/// Cross-model feature pairing: each source feature maps to one target feature.
class PairingMap {
 public:
  PairingMap() = default;
  PairingMap(std::vector<FeaturePair> pairs, std::string src_space_id, std::string tgt_space_id,
             std::vector<std::string> filters_applied = {});

  const std::vector<FeaturePair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::string& src_space_id() const noexcept { return src_id_; }
  const std::string& tgt_space_id() const noexcept { return tgt_id_; }
  const std::vector<std::string>& filters_applied() const noexcept { return filters_; }

  std::vector<Index> src_indices() const;
  std::vector<Index> tgt_indices() const;
  bool is_one_to_one() const;
  bool has_filter(const std::string& name) const;

  /// Same provenance, new pair list, with `filter` appended unless already recorded.
  PairingMap with_pairs(std::vector<FeaturePair> pairs, const std::string& filter) const;

  bool operator==(const PairingMap&) const = default;

 private:
  std::vector<FeaturePair> pairs_;
  std::string src_id_;
  std::string tgt_id_;
  std::vector<std::string> filters_;
};

struct ConceptCategory {
  std::string name;
  std::vector<std::string> keywords;

  bool operator==(const ConceptCategory&) const = default;
};

/// Named concept categories in file order. Keywords are stored as given; they
/// must already be unique within a category after lowercasing.
class ConceptLexicon {
 public:
  ConceptLexicon() = default;
  explicit ConceptLexicon(std::vector<ConceptCategory> categories);

  const std::vector<ConceptCategory>& categories() const noexcept { return categories_; }
  const ConceptCategory* find(const std::string& name) const;
  /// Throws UnknownCategory.
  const ConceptCategory& at(const std::string& name) const;
  std::vector<std::string> names() const;

  bool operator==(const ConceptLexicon&) const = default;

 private:
  std::vector<ConceptCategory> categories_;
};

struct TopToken {
  std::string token;
  double activation = 0.0;
  Index position = 0;

  bool operator==(const TopToken&) const = default;
};

/// Per-feature highest-activating token positions, descending by activation
/// with ties broken toward the lower token position.
class TopTokenIndex {
 public:
  TopTokenIndex() = default;
  TopTokenIndex(std::vector<std::vector<TopToken>> per_feature, int k);

  int k() const noexcept { return k_; }
  Index n_features() const noexcept { return static_cast<Index>(entries_.size()); }
  bool covers(Index feature) const noexcept { return feature >= 0 && feature < n_features(); }
  /// Throws InputError when `feature` is not covered.
  const std::vector<TopToken>& at(Index feature) const;
  const std::vector<std::vector<TopToken>>& entries() const noexcept { return entries_; }

  bool operator==(const TopTokenIndex&) const = default;

 private:
  std::vector<std::vector<TopToken>> entries_;
  int k_ = 5;
};

enum class Metric { svcca, rsa, knn_jaccard, mean_correlation };

std::string to_string(Metric m);
/// Throws InputError for unknown names.
Metric parse_metric(const std::string& name);

struct StageCount {
  std::string stage;
  Index n_pairs = 0;

  bool operator==(const StageCount&) const = default;
};

/// Outcome of scoring one pairing against its null distribution.
struct ScoreReport {
  Metric metric = Metric::svcca;
  double paired_score = 0.0;
  double null_mean = 0.0;
  Index null_samples = 0;
  double p_value = 0.0;
  Index n_pairs = 0;
  std::vector<std::string> filters_applied;
  std::uint64_t seed = 0;

  std::string rng = "mt19937_64";
  std::vector<StageCount> stage_counts;
  /// Free-form provenance (metric parameters, model ids, layers, category).
  std::vector<std::pair<std::string, std::string>> params;
  std::string tool_version;
  std::string config_hash;

  /// Throws InvariantViolation.
  void validate() const;

  bool operator==(const ScoreReport&) const = default;
};

/// Symmetric pairwise dissimilarities with an exactly-zero diagonal.
class DissimilarityMatrix {
 public:
  explicit DissimilarityMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  Index size() const noexcept { return entries_.rows(); }
  /// Strict upper triangle in row-major order.
  std::vector<double> upper_triangle() const;

 private:
  Matrix entries_;
};

}  // namespace saesim
