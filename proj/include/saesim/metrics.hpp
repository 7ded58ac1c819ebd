#pragma once

// Rotation-invariant similarity of two index-aligned row sets (paired decoder
// rows of two feature spaces).

#include <span>
#include <vector>

#include "saesim/types.hpp"

namespace saesim {

struct SvccaConfig {
  /// Fraction of squared singular-value mass each side keeps.
  double variance_retained = 0.99;
  /// Ridge added to the CCA covariances before inverse square roots.
  double epsilon = 1e-10;

  void validate() const;
};

enum class RdmMetric { euclidean, one_minus_pearson };

struct RsaConfig {
  RdmMetric rdm_metric = RdmMetric::euclidean;
};

std::string to_string(RdmMetric m);
RdmMetric parse_rdm_metric(const std::string& name);

/// Pearson product-moment correlation, clamped to [-1, 1]. Throws ZeroVariance
/// on constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average-ranked inputs.
double spearman(std::span<const double> x, std::span<const double> y);

/// Number of leading singular values whose squared mass reaches `fraction`
/// of the total. Numerically zero singular values are never kept.
Index retained_components(const Vector& singular_values, double fraction);

/// Canonical correlations of the SVD-reduced, column-centered row sets,
/// descending; one per kept component (min of the two reduced ranks).
Vector svcca_correlations(const Matrix& x, const Matrix& y, const SvccaConfig& cfg = {});

/// Mean canonical correlation between the SVD-reduced row sets.
double svcca(const Matrix& x, const Matrix& y, const SvccaConfig& cfg = {});

/// Pairwise row dissimilarities.
DissimilarityMatrix rdm(const Matrix& x, RdmMetric metric = RdmMetric::euclidean);

/// Spearman correlation of the strict upper triangles of the two RDMs.
double rsa(const Matrix& x, const Matrix& y, const RsaConfig& cfg = {});

/// Indices of the `k` nearest rows to each row (Euclidean, self excluded,
/// distance ties to the lower index), each list sorted ascending.
std::vector<std::vector<Index>> knn_indices(const Matrix& x, Index k);

/// Mean Jaccard overlap of the k-nearest-neighbor sets of aligned rows.
double knn_jaccard(const Matrix& x, const Matrix& y, Index k);

/// Parameters for the row-based metrics.
struct MetricConfig {
  SvccaConfig svcca;
  RsaConfig rsa;
  Index knn_k = 10;
};

/// Minimum paired-row count at which `metric` is defined for `cfg`.
Index min_rows(Metric metric, const MetricConfig& cfg);

/// Dispatches a row-based metric. `mean_correlation` is not row-based and
/// throws InputError.
double score_rows(Metric metric, const Matrix& x, const Matrix& y, const MetricConfig& cfg);

/// Rows `rows` of `m`, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const Index> rows);

}  // namespace saesim
