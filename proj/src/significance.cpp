#include "saesim/significance.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>

#include "saesim/errors.hpp"
#include "saesim/rng.hpp"

namespace saesim {

namespace {

// Evaluates fn(i) for every sample. The first failing sample (by index) is
// rethrown with its index attached, whatever the schedule.
std::vector<double> run_samples(Index n, int threads, const std::function<double(Index)>& fn) {
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  t = static_cast<int>(std::clamp<Index>(t, 1, std::max<Index>(n, 1)));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < t; ++w) pool.emplace_back(worker);
  }

  for (Index i = 0; i < n; ++i) {
    const auto& e = errors[static_cast<std::size_t>(i)];
    if (!e) continue;
    const std::string where = "null sample " + std::to_string(i) + ": ";
    try {
      std::rethrow_exception(e);
    } catch (const TooFewPairs& err) {
      throw DegenerateError(where + err.what());
    } catch (const DegenerateError& err) {
      throw DegenerateError(where + err.what());
    } catch (const InputError& err) {
      throw InputError(where + err.what());
    }
  }
  return out;
}

std::size_t required_pairs(Metric metric, const MetricConfig& cfg, std::size_t floor) {
  return std::max(floor, static_cast<std::size_t>(min_rows(metric, cfg)));
}

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(NullMode m) {
  return m == NullMode::shuffle_pairing ? "shuffle_pairing" : "random_subsets";
}

void NullSpec::validate() const {
  if (n_samples < 1) throw InvariantViolation("NullSpec", "n_samples >= 1");
}

double NullResult::null_mean() const { return mean_of(null_scores); }

double NullResult::p_value() const { return saesim::p_value(paired_score, null_scores); }

double p_value(double paired, std::span<const double> nulls) {
  if (nulls.empty()) throw InputError("p_value: need at least one null score");
  const auto hits = std::count_if(nulls.begin(), nulls.end(), [&](double s) { return s >= paired; });
  return static_cast<double>(hits) / static_cast<double>(nulls.size());
}

double paired_score(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                    const PairingMap& pairing, const MetricConfig& cfg) {
  if (metric == Metric::mean_correlation) return mean_paired_correlation(pairing);
  const auto need = static_cast<std::size_t>(min_rows(metric, cfg));
  if (pairing.size() < need) throw TooFewPairs(pairing.size(), need);
  const auto src = pairing.src_indices();
  const auto tgt = pairing.tgt_indices();
  return score_rows(metric, gather_rows(weights_a, src), gather_rows(weights_b, tgt), cfg);
}

NullResult null_shuffle(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                        const PairingMap& pairing, const NullSpec& spec, const MetricConfig& cfg) {
  spec.validate();
  if (metric == Metric::mean_correlation) {
    throw InputError("null_shuffle: mean_correlation needs activations (use null_shuffle_correlation)");
  }
  const auto need = required_pairs(metric, cfg, 3);
  if (pairing.size() < need) throw TooFewPairs(pairing.size(), need);

  const Matrix xa = gather_rows(weights_a, pairing.src_indices());
  const Matrix yb = gather_rows(weights_b, pairing.tgt_indices());
  NullResult r;
  r.paired_score = score_rows(metric, xa, yb, cfg);

  const Index n = yb.rows();
  r.null_scores = run_samples(spec.n_samples, spec.threads, [&](Index i) {
    Rng rng(stream_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const auto perm = rng.permutation(n);
    return score_rows(metric, xa, gather_rows(yb, perm), cfg);
  });
  return r;
}

NullResult null_shuffle_correlation(const Standardized& acts_a, const Standardized& acts_b,
                                    const PairingMap& pairing, const NullSpec& spec) {
  spec.validate();
  if (acts_a.n_tokens() != acts_b.n_tokens()) throw InputError("null_shuffle_correlation: token counts differ");
  if (pairing.empty()) throw TooFewPairs(0, 1);

  NullResult r;
  r.paired_score = mean_paired_correlation(pairing);
  const auto src = pairing.src_indices();
  const auto tgt = pairing.tgt_indices();
  const Index n_tok = acts_a.n_tokens();
  const double scale = 1.0 / static_cast<double>(n_tok - 1);

  r.null_scores = run_samples(spec.n_samples, spec.threads, [&](Index i) {
    Rng rng(stream_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const auto perm = rng.permutation(static_cast<Index>(tgt.size()));
    double sum = 0.0;
    for (std::size_t p = 0; p < src.size(); ++p) {
      const Index fa = src[p];
      const Index fb = tgt[static_cast<std::size_t>(perm[p])];
      double dot = 0.0;
      for (Index t = 0; t < n_tok; ++t) dot += acts_a.z(t, fa) * acts_b.z(t, fb);
      sum += std::clamp(dot * scale, -1.0, 1.0);
    }
    return sum / static_cast<double>(src.size());
  });
  return r;
}

NullResult null_random_subsets(Metric metric, const Matrix& weights_a, const Matrix& weights_b,
                               const Standardized& acts_a, const Standardized& acts_b,
                               std::span<const Index> pool_a, std::span<const Index> pool_b,
                               std::size_t size_a, std::size_t size_b, const NullSpec& spec,
                               const SubsetNullConfig& cfg) {
  spec.validate();
  if (size_a < 1 || size_b < 1 || size_a > pool_a.size() || size_b > pool_b.size()) {
    throw InputError("null_random_subsets: subset sizes (" + std::to_string(size_a) + ", " +
                     std::to_string(size_b) + ") impossible for pools of (" +
                     std::to_string(pool_a.size()) + ", " + std::to_string(pool_b.size()) + ")");
  }
  const auto need = required_pairs(metric, cfg.metric, cfg.min_pairs);

  std::vector<Index> redraws(static_cast<std::size_t>(spec.n_samples), 0);
  NullResult r;
  r.null_scores = run_samples(spec.n_samples, spec.threads, [&](Index i) {
    Rng rng(stream_seed(spec.seed, static_cast<std::uint64_t>(i)));
    for (Index attempt = 0;; ++attempt) {
      if (attempt > cfg.max_redraws) {
        throw DegenerateError("null_random_subsets: no subset draw kept " + std::to_string(need) +
                              " pairs after " + std::to_string(cfg.max_redraws) + " redraws");
      }
      auto sa = rng.sample(pool_a, size_a);
      auto sb = rng.sample(pool_b, size_b);
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      PairingMap pairing;
      try {
        pairing = match_subspaces(sa, sb, acts_a, acts_b, cfg.filters, cfg.correlation, need);
      } catch (const TooFewPairs&) {
        ++redraws[static_cast<std::size_t>(i)];
        continue;
      }
      return paired_score(metric, weights_a, weights_b, pairing, cfg.metric);
    }
  });
  for (Index c : redraws) r.redraws += c;
  return r;
}

}  // namespace saesim
