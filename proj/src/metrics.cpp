#include "saesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "saesim/errors.hpp"

namespace saesim {

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y, const char* who) {
  if (x.size() != y.size()) {
    throw InputError(std::string(who) + ": lengths differ (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InputError(std::string(who) + ": need at least 2 observations");
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

void require_aligned_rows(const Matrix& x, const Matrix& y, const char* who) {
  if (x.rows() != y.rows()) {
    throw InputError(std::string(who) + ": row counts differ (" + std::to_string(x.rows()) + " vs " +
                     std::to_string(y.rows()) + ")");
  }
}

// (C + eps I)^(-1/2) for symmetric positive semi-definite C.
Matrix inverse_sqrt(const Matrix& c, double eps) {
  const Matrix reg = c + eps * Matrix::Identity(c.rows(), c.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reg);
  if (es.info() != Eigen::Success) throw DegenerateError("svcca: eigendecomposition failed");
  Vector d = es.eigenvalues();
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0)) throw DegenerateError("svcca: covariance is not positive definite");
    d(i) = 1.0 / std::sqrt(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

// Leading left singular vectors of the column-centered input.
Matrix reduced_basis(const Matrix& m, const SvccaConfig& cfg) {
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Index k = retained_components(svd.singularValues(), cfg.variance_retained);
  if (k == 0) throw DegenerateError("svcca: rank 0 after centering");
  return svd.matrixU().leftCols(k);
}

}  // namespace

void SvccaConfig::validate() const {
  if (!(variance_retained > 0.0 && variance_retained <= 1.0)) {
    throw InvariantViolation("SvccaConfig", "0 < variance_retained <= 1");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvariantViolation("SvccaConfig", "epsilon is finite and >= 0");
  }
}

std::string to_string(RdmMetric m) {
  return m == RdmMetric::euclidean ? "euclidean" : "one_minus_pearson";
}

RdmMetric parse_rdm_metric(const std::string& name) {
  if (name == "euclidean") return RdmMetric::euclidean;
  if (name == "one_minus_pearson") return RdmMetric::one_minus_pearson;
  throw InputError("unknown RDM metric '" + name + "' (expected euclidean or one_minus_pearson)");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, "pearson");
  if (is_constant(x) || is_constant(y)) throw ZeroVariance("pearson: constant input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the average 1-based rank.
    const double rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t p = i; p < j; ++p) ranks[order[p]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y, "spearman");
  if (is_constant(x) || is_constant(y)) throw ZeroVariance("spearman: all-tied input");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

Index retained_components(const Vector& s, double fraction) {
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  const double zero_tol = s(0) * static_cast<double>(s.size()) * std::numeric_limits<double>::epsilon();
  double total = 0.0;
  Index nonzero = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) <= zero_tol) break;
    total += s(i) * s(i);
    ++nonzero;
  }
  const double target = fraction * total * (1.0 - 1e-12);
  double cum = 0.0;
  for (Index i = 0; i < nonzero; ++i) {
    cum += s(i) * s(i);
    if (cum >= target) return i + 1;
  }
  return nonzero;
}

Vector svcca_correlations(const Matrix& x, const Matrix& y, const SvccaConfig& cfg) {
  cfg.validate();
  require_aligned_rows(x, y, "svcca");
  if (x.rows() < 2) throw TooFewPairs(static_cast<std::size_t>(x.rows()), 2);

  const Eigen::MatrixXd ux = reduced_basis(x, cfg);
  const Eigen::MatrixXd uy = reduced_basis(y, cfg);
  const Eigen::MatrixXd cxx = ux.transpose() * ux;
  const Eigen::MatrixXd cyy = uy.transpose() * uy;
  const Eigen::MatrixXd cxy = ux.transpose() * uy;
  const Eigen::MatrixXd whitened = inverse_sqrt(cxx, cfg.epsilon) * cxy * inverse_sqrt(cyy, cfg.epsilon);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened);
  const Index k = std::min(ux.cols(), uy.cols());
  return svd.singularValues().head(k);
}

double svcca(const Matrix& x, const Matrix& y, const SvccaConfig& cfg) {
  const Vector rho = svcca_correlations(x, y, cfg);
  double sum = 0.0;
  for (Index i = 0; i < rho.size(); ++i) sum += rho(i);
  return sum / static_cast<double>(rho.size());
}

DissimilarityMatrix rdm(const Matrix& x, RdmMetric metric) {
  const Index n = x.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    for (Index j = i + 1; j < n; ++j) {
      const double* xj = x.row(j).data();
      double v;
      if (metric == RdmMetric::euclidean) {
        double ss = 0.0;
        for (Index c = 0; c < x.cols(); ++c) {
          const double diff = xi[c] - xj[c];
          ss += diff * diff;
        }
        v = std::sqrt(ss);
      } else {
        const auto cols = static_cast<std::size_t>(x.cols());
        v = std::max(0.0, 1.0 - pearson({xi, cols}, {xj, cols}));
      }
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DissimilarityMatrix(std::move(d));
}

double rsa(const Matrix& x, const Matrix& y, const RsaConfig& cfg) {
  require_aligned_rows(x, y, "rsa");
  if (x.rows() < 3) throw TooFewPairs(static_cast<std::size_t>(x.rows()), 3);
  const auto dx = rdm(x, cfg.rdm_metric).upper_triangle();
  const auto dy = rdm(y, cfg.rdm_metric).upper_triangle();
  if (is_constant(dx) || is_constant(dy)) {
    throw DegenerateError("rsa: degenerate RDM (all pairwise distances equal)");
  }
  return spearman(dx, dy);
}

std::vector<std::vector<Index>> knn_indices(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (k < 1 || k >= n) {
    throw InputError("knn: k must satisfy 1 <= k < n (k = " + std::to_string(k) + ", n = " +
                     std::to_string(n) + ")");
  }
  Matrix d2 = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double ss = 0.0;
      for (Index c = 0; c < x.cols(); ++c) {
        const double diff = x(i, c) - x(j, c);
        ss += diff * diff;
      }
      d2(i, j) = ss;
      d2(j, i) = ss;
    }
  }
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  std::vector<Index> cand;
  for (Index i = 0; i < n; ++i) {
    cand.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) cand.push_back(j);
    }
    auto closer = [&](Index a, Index b) { return d2(i, a) < d2(i, b) || (d2(i, a) == d2(i, b) && a < b); };
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), closer);
    auto& nb = out[static_cast<std::size_t>(i)];
    nb.assign(cand.begin(), cand.begin() + k);
    std::sort(nb.begin(), nb.end());
  }
  return out;
}

double knn_jaccard(const Matrix& x, const Matrix& y, Index k) {
  require_aligned_rows(x, y, "knn_jaccard");
  const auto nx = knn_indices(x, k);
  const auto ny = knn_indices(y, k);
  double sum = 0.0;
  std::vector<Index> common;
  for (std::size_t i = 0; i < nx.size(); ++i) {
    common.clear();
    std::set_intersection(nx[i].begin(), nx[i].end(), ny[i].begin(), ny[i].end(), std::back_inserter(common));
    const auto inter = static_cast<double>(common.size());
    sum += inter / (2.0 * static_cast<double>(k) - inter);
  }
  return sum / static_cast<double>(nx.size());
}

Index min_rows(Metric metric, const MetricConfig& cfg) {
  switch (metric) {
    case Metric::svcca:
      return 2;
    case Metric::rsa:
      return 3;
    case Metric::knn_jaccard:
      return cfg.knn_k + 1;
    case Metric::mean_correlation:
      return 1;
  }
  return 1;
}

double score_rows(Metric metric, const Matrix& x, const Matrix& y, const MetricConfig& cfg) {
  switch (metric) {
    case Metric::svcca:
      return svcca(x, y, cfg.svcca);
    case Metric::rsa:
      return rsa(x, y, cfg.rsa);
    case Metric::knn_jaccard:
      return knn_jaccard(x, y, cfg.knn_k);
    case Metric::mean_correlation:
      break;
  }
  throw InputError("mean_correlation is computed from activations, not from weight rows");
}

Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= m.rows()) throw InputError("row index " + std::to_string(r) + " out of range");
    out.row(static_cast<Index>(i)) = m.row(r);
  }
  return out;
}

}  // namespace saesim
