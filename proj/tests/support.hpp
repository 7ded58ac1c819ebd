#pragma once

// Independent oracles and fixture builders shared by the unit and acceptance
// tests. Oracles deliberately avoid the library's code paths: dense products
// via Eigen GEMM, scalar statistics via long double two-pass sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saesim/io.hpp"
#include "saesim/pipeline.hpp"
#include "saesim/rng.hpp"
#include "saesim/synthetic.hpp"
#include "saesim/types.hpp"

namespace saesim::test {

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(gen);
  }
  return m;
}

inline Matrix orthogonal(Index n, std::uint64_t seed) {
  Rng rng(seed);
  return random_orthogonal(n, rng);
}

inline long double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks by counting: rank = 1 + #less + (#equal - 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

inline long double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

struct DenseArgmax {
  std::vector<Index> src;
  std::vector<Index> tgt;
};

// Materializes the full correlation matrix (own standardization, Eigen GEMM)
// and takes a lowest-index argmax per live source row.
inline DenseArgmax dense_argmax(const Matrix& a, const Matrix& b) {
  auto standardize = [](const Matrix& m, std::vector<bool>& dead) {
    Eigen::MatrixXd z(m.rows(), m.cols());
    dead.assign(static_cast<std::size_t>(m.cols()), false);
    for (Index c = 0; c < m.cols(); ++c) {
      const Eigen::VectorXd col = m.col(c);
      if ((col.array() == col(0)).all()) {
        dead[static_cast<std::size_t>(c)] = true;
        z.col(c).setZero();
        continue;
      }
      const Eigen::VectorXd centered = col.array() - col.mean();
      z.col(c) = centered / std::sqrt(centered.squaredNorm() / static_cast<double>(m.rows() - 1));
    }
    return z;
  };
  std::vector<bool> dead_a, dead_b;
  const Eigen::MatrixXd za = standardize(a, dead_a);
  const Eigen::MatrixXd zb = standardize(b, dead_b);
  const Eigen::MatrixXd corr = (za.transpose() * zb) / static_cast<double>(a.rows() - 1);
  DenseArgmax out;
  for (Index i = 0; i < corr.rows(); ++i) {
    if (dead_a[static_cast<std::size_t>(i)]) continue;
    Index best = -1;
    for (Index j = 0; j < corr.cols(); ++j) {
      if (dead_b[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || corr(i, j) > corr(i, best)) best = j;
    }
    out.src.push_back(i);
    out.tgt.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------- fixtures

struct Fixture {
  FeatureSpace a;
  FeatureSpace b;
  std::vector<Index> truth;  ///< Activation partner of each A feature (-1: none).
  SyntheticActivations acts;

  SpacePair view() const { return {a, b, acts.a, acts.b, acts.tokens}; }
};

struct FixtureShape {
  Index features = 150;
  Index dim = 16;
  Index tokens = 1000;
  double snr = 1.0;
  double sigma = 0.05;
  bool independent = false;  ///< B drawn independently of A.
  Index unpaired = 0;        ///< Trailing A features with no activation partner.
  ActivationOptions options;
};

inline Fixture make_fixture(const FixtureShape& s, std::uint64_t seed) {
  auto a = gen_space(s.features, s.dim, stream_seed(seed, 0), "A");
  std::optional<FeatureSpace> b;
  std::vector<Index> truth;
  if (s.independent) {
    b.emplace(gen_space(s.features, s.dim, stream_seed(seed, 1), "B"));
    Rng rng(stream_seed(seed, 2));
    truth = rng.permutation(s.features);
  } else {
    auto p = perturb_space(a, true, true, s.sigma, stream_seed(seed, 1));
    b.emplace(FeatureSpace(p.space.weights(), "B"));
    truth = std::move(p.truth);
  }
  for (Index i = s.features - s.unpaired; i < s.features; ++i) truth[static_cast<std::size_t>(i)] = -1;
  auto acts = gen_paired_activations(a, *b, truth, s.tokens, s.snr, stream_seed(seed, 3), s.options);
  return {std::move(a), std::move(*b), std::move(truth), std::move(acts)};
}

inline std::vector<std::string> emotion_keywords() { return io::default_lexicon().at("Emotions").keywords; }

// Planted shared "Emotions" cluster; dim kept well below the subspace size.
inline FixtureShape planted_shape() {
  FixtureShape s;
  s.features = 400;
  s.dim = 8;
  s.tokens = 2400;
  s.options.plant = ConceptPlant::shared;
  s.options.concept_keywords = emotion_keywords();
  s.options.cluster_size = 80;
  s.options.stoplist_fraction = 0.1;
  return s;
}

// "Emotions" planted on unpaired features of each side: no shared signal.
inline FixtureShape unrelated_shape() {
  FixtureShape s;
  s.features = 200;
  s.dim = 8;
  s.tokens = 1200;
  s.unpaired = 80;
  s.options.plant = ConceptPlant::unrelated;
  s.options.concept_keywords = emotion_keywords();
  s.options.cluster_size = 30;
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("saesim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace saesim::test
