#include <gtest/gtest.h>

#include <cmath>

#include "saesim/errors.hpp"
#include "saesim/metrics.hpp"
#include "saesim/significance.hpp"
#include "support.hpp"

using namespace saesim;

TEST(GenSpace, DeterministicStandardNormal) {
  const auto a = gen_space(400, 50, 9);
  EXPECT_EQ(a.weights(), gen_space(400, 50, 9).weights());
  EXPECT_NE(a.weights(), gen_space(400, 50, 10).weights());
  const double n = 400.0 * 50.0;
  const double mean = a.weights().mean();
  const double var = a.weights().array().square().mean() - mean * mean;
  EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_EQ(gen_space(1, 1, 0).weights().size(), 1);
  EXPECT_THROW(gen_space(0, 3, 0), InputError);
}

TEST(Perturb, OrthogonalAndTruth) {
  Rng rng(3);
  const Matrix q = random_orthogonal(16, rng);
  EXPECT_LT((q.transpose() * q - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-12);

  const auto a = gen_space(120, 16, 4);
  const auto rot = perturb_space(a, true, false, 0.0, 5);
  for (Index i = 0; i < 120; ++i) EXPECT_EQ(rot.truth[static_cast<std::size_t>(i)], i);
  EXPECT_NEAR(svcca(a.weights(), rot.space.weights()), 1.0, 1e-9);

  const auto perm = perturb_space(a, false, true, 0.0, 6);
  for (Index i = 0; i < 120; ++i) {
    EXPECT_EQ(perm.space.weights().row(perm.truth[static_cast<std::size_t>(i)]), a.weights().row(i));
  }
  const auto p = perm.pairing();
  EXPECT_TRUE(p.is_one_to_one());
  EXPECT_EQ(p.size(), 120u);
  EXPECT_THROW(perturb_space(a, false, false, -1.0, 0), InputError);
}

TEST(Activations, NoiseFreeRecoveryIsExact) {
  test::FixtureShape s;
  s.snr = std::numeric_limits<double>::infinity();
  const auto fx = test::make_fixture(s, 2);
  const auto p = correlate_argmax(fx.acts.a, fx.acts.b);
  ASSERT_EQ(p.size(), static_cast<std::size_t>(s.features));
  for (const auto& fp : p.pairs()) {
    EXPECT_EQ(fp.tgt, fx.truth[static_cast<std::size_t>(fp.src)]);
    EXPECT_NEAR(fp.correlation, 1.0, 1e-12);
  }
}

TEST(Activations, StoplistPlantingIsExact) {
  test::FixtureShape s;
  s.options.stoplist_fraction = 0.3;
  const auto fx = test::make_fixture(s, 3);
  EXPECT_EQ(fx.acts.stoplisted_a.size(), 45u);
  PipelineConfig cfg;
  cfg.filters = {true, false, false};
  const auto stages = build_pairing(fx.view(), cfg);
  std::vector<Index> removed;
  const auto argmax_src = correlate_argmax(fx.acts.a, fx.acts.b).src_indices();
  const auto kept = stages.pairing.src_indices();
  std::set_difference(argmax_src.begin(), argmax_src.end(), kept.begin(), kept.end(), std::back_inserter(removed));
  EXPECT_EQ(removed, fx.acts.stoplisted_a);
}

TEST(Activations, ZeroSnrCarriesNoSignal) {
  test::FixtureShape s;
  s.snr = 0.0;
  s.tokens = 2000;
  const auto fx = test::make_fixture(s, 4);
  const auto za = standardize_columns(fx.acts.a);
  const auto zb = standardize_columns(fx.acts.b);
  double total = 0;
  for (Index i = 0; i < s.features; ++i) {
    const Index j = fx.truth[static_cast<std::size_t>(i)];
    total += za.z.col(i).dot(zb.z.col(j)) / static_cast<double>(s.tokens - 1);
  }
  EXPECT_LT(std::abs(total / static_cast<double>(s.features)), 0.01);

  int significant = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = test::make_fixture(s, 100 + seed);
    PipelineConfig cfg;
    cfg.filters = {false, false, true};
    const auto reports = score_spaces(f.view(), {Metric::svcca}, cfg, {100, seed});
    significant += reports[0].p_value <= 0.05;
  }
  EXPECT_LE(significant, 3);
}

TEST(Activations, RejectsBadTruth) {
  const auto a = gen_space(3, 2, 1);
  const std::vector<Index> dup = {0, 0, 1};
  EXPECT_THROW(gen_paired_activations(a, a, dup, 100, 1.0, 1), InputError);
  const std::vector<Index> short_truth = {0, 1};
  EXPECT_THROW(gen_paired_activations(a, a, short_truth, 100, 1.0, 1), InputError);
  const std::vector<Index> ok = {2, -1, 0};
  const auto acts = gen_paired_activations(a, a, ok, 100, 1.0, 1);
  EXPECT_EQ(acts.tokens.size(), 100);
  EXPECT_EQ(acts.tokens[0], "t0001");
}

TEST(Activations, SharedLayoutSharesTokens) {
  test::FixtureShape s;
  s.options.layout_seed = 77;
  s.options.stoplist_fraction = 0.1;
  const auto one = test::make_fixture(s, 5);
  const auto two = test::make_fixture(s, 6);
  EXPECT_EQ(one.acts.tokens, two.acts.tokens);
  EXPECT_NE(one.acts.a.acts(), two.acts.a.acts());
}
