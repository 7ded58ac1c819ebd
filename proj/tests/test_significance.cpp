#include <gtest/gtest.h>

#include <numeric>

#include "saesim/errors.hpp"
#include "saesim/significance.hpp"
#include "support.hpp"

using namespace saesim;

namespace {

PairingMap identity_pairing(Index n) {
  std::vector<FeaturePair> pairs;
  for (Index i = 0; i < n; ++i) pairs.push_back({i, i, 1.0});
  return PairingMap(std::move(pairs), "A", "B");
}

}  // namespace

TEST(PValue, InclusiveCount) {
  const std::vector<double> low = {0.1, 0.2, 0.3};
  EXPECT_EQ(p_value(0.9, low), 0.0);
  const std::vector<double> tied = {0.5, 0.5};
  EXPECT_EQ(p_value(0.5, tied), 1.0);
  std::vector<double> grid(101);
  std::iota(grid.begin(), grid.end(), 0.0);
  EXPECT_DOUBLE_EQ(p_value(50.0, grid), 51.0 / 101.0);
  EXPECT_THROW(p_value(1.0, std::vector<double>{}), InputError);
}

TEST(NullShuffle, DeterministicAcrossThreads) {
  const Matrix x = test::gaussian(60, 6, 1);
  const Matrix y = test::gaussian(60, 6, 2);
  const auto pairing = identity_pairing(60);
  for (Metric m : {Metric::svcca, Metric::rsa, Metric::knn_jaccard}) {
    NullSpec spec{50, 42};
    const auto one = null_shuffle(m, x, y, pairing, spec);
    spec.threads = 4;
    const auto four = null_shuffle(m, x, y, pairing, spec);
    EXPECT_EQ(one.null_scores, four.null_scores) << to_string(m);
    EXPECT_EQ(one.paired_score, four.paired_score);
    spec.seed = 43;
    EXPECT_NE(null_shuffle(m, x, y, pairing, spec).null_scores, one.null_scores);
  }
}

TEST(NullShuffle, RotatedCopyIsSignificant) {
  const Matrix x = test::gaussian(300, 8, 5);
  const Matrix y = x * test::orthogonal(8, 6);
  const auto r = null_shuffle(Metric::svcca, x, y, identity_pairing(300), {100, 1});
  EXPECT_NEAR(r.paired_score, 1.0, 1e-9);
  EXPECT_LT(r.null_mean(), 0.2);
  EXPECT_EQ(r.p_value(), 0.0);
  EXPECT_EQ(r.null_scores.size(), 100u);
}

TEST(NullShuffle, SmallestRsaInput) {
  const Matrix x = test::gaussian(3, 2, 5);
  const auto r = null_shuffle(Metric::rsa, x, x, identity_pairing(3), {20, 1});
  EXPECT_DOUBLE_EQ(r.paired_score, 1.0);
  EXPECT_THROW(null_shuffle(Metric::rsa, x.topRows(2), x.topRows(2), identity_pairing(2), {20, 1}),
               TooFewPairs);
}

TEST(NullShuffle, CalibratedUnderIndependence) {
  int below = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const Matrix x = test::gaussian(40, 4, 1000 + t);
    const Matrix y = test::gaussian(40, 4, 5000 + t);
    const auto r = null_shuffle(Metric::svcca, x, y, identity_pairing(40), {100, static_cast<std::uint64_t>(t)});
    below += r.p_value() < 0.05;
  }
  const double frac = static_cast<double>(below) / trials;
  EXPECT_GE(frac, 0.01);
  EXPECT_LE(frac, 0.12);
}

TEST(NullShuffle, PairOrderDoesNotMatter) {
  const Matrix x = test::gaussian(50, 5, 7);
  const Matrix y = x * test::orthogonal(5, 8) + 0.3 * test::gaussian(50, 5, 9);
  std::vector<FeaturePair> fwd, rev;
  for (Index i = 0; i < 50; ++i) fwd.push_back({i, i, 0.5});
  rev.assign(fwd.rbegin(), fwd.rend());
  const MetricConfig cfg;
  for (Metric m : {Metric::svcca, Metric::rsa, Metric::knn_jaccard}) {
    const double a = paired_score(m, x, y, PairingMap(fwd, "A", "B"), cfg);
    const double b = paired_score(m, x, y, PairingMap(rev, "A", "B"), cfg);
    EXPECT_NEAR(a, b, 1e-10) << to_string(m);
  }
}

TEST(NullShuffle, SpecValidation) {
  const Matrix x = test::gaussian(10, 3, 1);
  EXPECT_THROW(null_shuffle(Metric::svcca, x, x, identity_pairing(10), {0, 1}), InvariantViolation);
  EXPECT_THROW(null_shuffle(Metric::mean_correlation, x, x, identity_pairing(10), {5, 1}), InputError);
}

TEST(NullCorrelation, PairedAboveShuffles) {
  Matrix a = test::gaussian(400, 20, 1);
  Matrix b = a + 0.5 * test::gaussian(400, 20, 2);
  const auto za = standardize_columns(a);
  const auto zb = standardize_columns(b);
  const auto pairing = correlate_argmax(za, zb, {});
  const auto r = null_shuffle_correlation(za, zb, pairing, {100, 3});
  EXPECT_NEAR(r.paired_score, mean_paired_correlation(pairing), 1e-12);
  EXPECT_LT(std::abs(r.null_mean()), 0.1);
  EXPECT_EQ(r.p_value(), 0.0);
}

TEST(RandomSubsets, ValidatesSizes) {
  const Matrix acts = test::gaussian(200, 30, 4);
  const auto z = standardize_columns(acts);
  const Matrix w = test::gaussian(30, 4, 5);
  std::vector<Index> pool(30);
  std::iota(pool.begin(), pool.end(), 0);
  EXPECT_THROW(null_random_subsets(Metric::svcca, w, w, z, z, pool, pool, 5, 5, {0, 1}), InvariantViolation);
  EXPECT_THROW(null_random_subsets(Metric::svcca, w, w, z, z, pool, pool, 31, 5, {10, 1}), InputError);
  EXPECT_THROW(null_random_subsets(Metric::svcca, w, w, z, z, pool, pool, 0, 5, {10, 1}), InputError);
}

TEST(RandomSubsets, FullPoolIsConstant) {
  const Matrix acts = test::gaussian(300, 25, 6);
  const auto z = standardize_columns(acts);
  const Matrix w = test::gaussian(25, 4, 7);
  std::vector<Index> pool(25);
  std::iota(pool.begin(), pool.end(), 0);
  const auto r = null_random_subsets(Metric::svcca, w, w, z, z, pool, pool, 25, 25, {10, 1});
  ASSERT_EQ(r.null_scores.size(), 10u);
  for (double s : r.null_scores) EXPECT_EQ(s, r.null_scores[0]);
  EXPECT_NEAR(r.null_scores[0], 1.0, 1e-9);
}

TEST(RandomSubsets, DeterministicAndCountsRedraws) {
  const Matrix acts = test::gaussian(300, 60, 8);
  const auto z = standardize_columns(acts);
  const Matrix wa = test::gaussian(60, 4, 9);
  const Matrix wb = test::gaussian(60, 4, 10);
  std::vector<Index> pool(60);
  std::iota(pool.begin(), pool.end(), 0);
  NullSpec spec{40, 11, NullMode::random_subsets};
  const auto one = null_random_subsets(Metric::rsa, wa, wb, z, z, pool, pool, 8, 8, spec);
  spec.threads = 3;
  const auto three = null_random_subsets(Metric::rsa, wa, wb, z, z, pool, pool, 8, 8, spec);
  EXPECT_EQ(one.null_scores, three.null_scores);
  EXPECT_EQ(one.redraws, three.redraws);
  EXPECT_EQ(one.paired_score, 0.0);

  // Disjoint independent subsets rarely keep 3 one-to-one pairs out of 3.
  SubsetNullConfig strict;
  strict.max_redraws = 0;
  strict.min_pairs = 3;
  const Matrix noise = test::gaussian(300, 60, 12);
  const auto zn = standardize_columns(noise);
  bool degenerate = false;
  try {
    null_random_subsets(Metric::rsa, wa, wb, z, zn, pool, pool, 3, 3, {200, 1}, strict);
  } catch (const DegenerateError&) {
    degenerate = true;
  }
  EXPECT_TRUE(degenerate);
}
