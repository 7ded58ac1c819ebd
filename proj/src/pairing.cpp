#include "saesim/pairing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>
#include <unordered_map>

#include "saesim/errors.hpp"

namespace saesim {

namespace {

constexpr Index kTokenChunk = 256;

std::vector<Index> resolve(std::span<const Index> subset, const std::vector<bool>& dead,
                           const char* side) {
  const auto n = static_cast<Index>(dead.size());
  std::vector<Index> out;
  if (subset.empty()) {
    for (Index i = 0; i < n; ++i) {
      if (!dead[static_cast<std::size_t>(i)]) out.push_back(i);
    }
    return out;
  }
  for (Index i : subset) {
    if (i < 0 || i >= n) {
      throw InputError(std::string(side) + " subset index " + std::to_string(i) + " out of range");
    }
    if (!dead[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

// Inserts (j, v) into a descending top-k list. Candidates arrive in ascending
// j, so an equal value never displaces an earlier index.
inline void offer(std::vector<FeaturePair>& best, int k, Index src, Index tgt, double v) {
  if (static_cast<int>(best.size()) == k && !(v > best.back().correlation)) return;
  auto it = std::find_if(best.begin(), best.end(),
                         [v](const FeaturePair& p) { return p.correlation < v; });
  best.insert(it, FeaturePair{src, tgt, v});
  if (static_cast<int>(best.size()) > k) best.pop_back();
}

struct Kernel {
  const Matrix& a_rows;  // nS x n_tokens, feature-major
  const Matrix& bz;      // n_tokens x n_features_b
  const std::vector<Index>& tgt;
  Index block;
  int k;

  // Accumulates raw dot products for source rows [r0, r1) against every
  // target tile and folds them into `out` (raw dot products, not yet scaled).
  void run_rows(Index r0, Index r1, std::vector<std::vector<FeaturePair>>& out) const {
    const Index n_tok = bz.rows();
    const Index n_tgt = static_cast<Index>(tgt.size());
    const Index rows = r1 - r0;
    std::vector<double> acc(static_cast<std::size_t>(rows * std::min(block, n_tgt)));
    std::vector<double> pack(static_cast<std::size_t>(kTokenChunk * std::min(block, n_tgt)));

    for (Index j0 = 0; j0 < n_tgt; j0 += block) {
      const Index j1 = std::min(j0 + block, n_tgt);
      const Index w = j1 - j0;
      std::fill(acc.begin(), acc.begin() + rows * w, 0.0);

      for (Index t0 = 0; t0 < n_tok; t0 += kTokenChunk) {
        const Index t1 = std::min(t0 + kTokenChunk, n_tok);
        for (Index t = t0; t < t1; ++t) {
          const double* zrow = bz.row(t).data();
          double* dst = pack.data() + (t - t0) * w;
          for (Index j = 0; j < w; ++j) dst[j] = zrow[tgt[static_cast<std::size_t>(j0 + j)]];
        }

        Index i = 0;
        for (; i + 4 <= rows; i += 4) {
          const double* a0 = a_rows.row(r0 + i).data();
          const double* a1 = a_rows.row(r0 + i + 1).data();
          const double* a2 = a_rows.row(r0 + i + 2).data();
          const double* a3 = a_rows.row(r0 + i + 3).data();
          double* c0 = acc.data() + i * w;
          double* c1 = c0 + w;
          double* c2 = c1 + w;
          double* c3 = c2 + w;
          for (Index t = t0; t < t1; ++t) {
            const double* b = pack.data() + (t - t0) * w;
            const double x0 = a0[t], x1 = a1[t], x2 = a2[t], x3 = a3[t];
            for (Index j = 0; j < w; ++j) {
              const double bj = b[j];
              c0[j] += x0 * bj;
              c1[j] += x1 * bj;
              c2[j] += x2 * bj;
              c3[j] += x3 * bj;
            }
          }
        }
        for (; i < rows; ++i) {
          const double* a0 = a_rows.row(r0 + i).data();
          double* c0 = acc.data() + i * w;
          for (Index t = t0; t < t1; ++t) {
            const double* b = pack.data() + (t - t0) * w;
            const double x0 = a0[t];
            for (Index j = 0; j < w; ++j) c0[j] += x0 * b[j];
          }
        }
      }

      for (Index i = 0; i < rows; ++i) {
        auto& best = out[static_cast<std::size_t>(r0 + i)];
        const double* c = acc.data() + i * w;
        for (Index j = 0; j < w; ++j) offer(best, k, r0 + i, j0 + j, c[j]);
      }
    }
  }
};

}  // namespace

std::vector<Index> Standardized::live_features() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < dead.size(); ++i) {
    if (!dead[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

Standardized standardize_columns(const Matrix& acts) {
  const Index n = acts.rows();
  const Index f = acts.cols();
  if (n < 2) throw InputError("standardize_columns: need at least 2 tokens");
  Standardized s;
  s.z = Matrix::Zero(n, f);
  s.mean = Vector::Zero(f);
  s.std = Vector::Zero(f);
  s.dead.assign(static_cast<std::size_t>(f), false);

  for (Index c = 0; c < f; ++c) {
    bool constant = true;
    double sum = 0.0;
    for (Index t = 0; t < n; ++t) {
      sum += acts(t, c);
      constant = constant && acts(t, c) == acts(0, c);
    }
    const double mean = sum / static_cast<double>(n);
    s.mean(c) = constant ? acts(0, c) : mean;
    if (constant) {
      s.dead[static_cast<std::size_t>(c)] = true;
      continue;
    }
    double ss = 0.0;
    for (Index t = 0; t < n; ++t) {
      const double d = acts(t, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    s.std(c) = sd;
    for (Index t = 0; t < n; ++t) s.z(t, c) = (acts(t, c) - mean) / sd;
  }
  return s;
}

Standardized standardize_columns(const ActivationSet& acts) { return standardize_columns(acts.acts()); }

std::vector<Candidates> correlate_topk(const Standardized& a, const Standardized& b, int k,
                                       const CorrelationOptions& opt,
                                       std::span<const Index> src_subset,
                                       std::span<const Index> tgt_subset) {
  if (a.n_tokens() != b.n_tokens()) {
    throw InputError("correlate: token counts differ (" + std::to_string(a.n_tokens()) + " vs " +
                     std::to_string(b.n_tokens()) + ")");
  }
  if (opt.block_size < 1) throw InputError("correlate: block_size must be >= 1");
  if (k < 1) throw InputError("correlate: k must be >= 1");

  const auto src = resolve(src_subset, a.dead, "source");
  const auto tgt = resolve(tgt_subset, b.dead, "target");
  if (!src.empty() && tgt.empty()) throw DegenerateError("correlate: no live target features");

  const Index n_tok = a.n_tokens();
  const Index n_src = static_cast<Index>(src.size());
  Matrix a_rows(n_src, n_tok);
  for (Index i = 0; i < n_src; ++i) a_rows.row(i) = a.z.col(src[static_cast<std::size_t>(i)]).transpose();

  std::vector<std::vector<FeaturePair>> best(static_cast<std::size_t>(n_src));
  const Kernel kernel{a_rows, b.z, tgt, opt.block_size, k};

  const Index n_blocks = (n_src + opt.block_size - 1) / opt.block_size;
  int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<Index>(threads, 1, std::max<Index>(n_blocks, 1)));

  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index blk = next++; blk < n_blocks; blk = next++) {
      const Index r0 = blk * opt.block_size;
      kernel.run_rows(r0, std::min(r0 + opt.block_size, n_src), best);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const double scale = 1.0 / static_cast<double>(n_tok - 1);
  std::vector<Candidates> out(static_cast<std::size_t>(n_src));
  for (Index i = 0; i < n_src; ++i) {
    auto& c = out[static_cast<std::size_t>(i)];
    c.src = src[static_cast<std::size_t>(i)];
    for (auto p : best[static_cast<std::size_t>(i)]) {
      p.src = c.src;
      p.tgt = tgt[static_cast<std::size_t>(p.tgt)];
      p.correlation = std::clamp(p.correlation * scale, -1.0, 1.0);
      c.best.push_back(p);
    }
  }
  return out;
}

PairingMap correlate_argmax(const Standardized& a, const Standardized& b, const CorrelationOptions& opt,
                            std::span<const Index> src_subset, std::span<const Index> tgt_subset,
                            const std::string& src_id, const std::string& tgt_id) {
  const auto cands = correlate_topk(a, b, 1, opt, src_subset, tgt_subset);
  std::vector<FeaturePair> pairs;
  pairs.reserve(cands.size());
  for (const auto& c : cands) {
    if (!c.best.empty()) pairs.push_back(c.best.front());
  }
  return PairingMap(std::move(pairs), src_id, tgt_id);
}

PairingMap correlate_argmax(const ActivationSet& a, const ActivationSet& b, const CorrelationOptions& opt,
                            const std::string& src_id, const std::string& tgt_id) {
  if (a.n_tokens() != b.n_tokens()) {
    throw InputError("correlate_argmax: token counts differ (" + std::to_string(a.n_tokens()) +
                     " vs " + std::to_string(b.n_tokens()) + ")");
  }
  return correlate_argmax(standardize_columns(a), standardize_columns(b), opt, {}, {}, src_id, tgt_id);
}

bool is_nonconcept_feature(const TopTokenIndex& top, Index feature, const StoplistConfig& stoplist) {
  for (const auto& e : top.at(feature)) {
    if (stoplist.contains(e.token)) return true;
  }
  return false;
}

PairingMap filter_nonconcept(const PairingMap& pairing, const TopTokenIndex& top_a,
                             const TopTokenIndex& top_b, const StoplistConfig& stoplist) {
  std::vector<FeaturePair> kept;
  for (const auto& p : pairing.pairs()) {
    const bool a_hit = is_nonconcept_feature(top_a, p.src, stoplist);
    const bool b_hit = is_nonconcept_feature(top_b, p.tgt, stoplist);
    if (!a_hit && !b_hit) kept.push_back(p);
  }
  return pairing.with_pairs(std::move(kept), kFilterNonconcept);
}

PairingMap filter_shared_token(const PairingMap& pairing, const TopTokenIndex& top_a,
                               const TopTokenIndex& top_b) {
  std::vector<FeaturePair> kept;
  for (const auto& p : pairing.pairs()) {
    std::set<std::string> tokens_a;
    for (const auto& e : top_a.at(p.src)) tokens_a.insert(e.token);
    const auto& list_b = top_b.at(p.tgt);
    const bool shared = std::any_of(list_b.begin(), list_b.end(),
                                    [&](const TopToken& e) { return tokens_a.count(e.token) > 0; });
    if (shared) kept.push_back(p);
  }
  return pairing.with_pairs(std::move(kept), kFilterSharedToken);
}

PairingMap filter_one_to_one(const PairingMap& pairing) {
  std::unordered_map<Index, int> claims;
  for (const auto& p : pairing.pairs()) ++claims[p.tgt];
  std::vector<FeaturePair> kept;
  for (const auto& p : pairing.pairs()) {
    if (claims[p.tgt] == 1) kept.push_back(p);
  }
  return pairing.with_pairs(std::move(kept), kFilterOneToOne);
}

double mean_paired_correlation(const PairingMap& pairing) {
  if (pairing.empty()) throw TooFewPairs(0, 1);
  double sum = 0.0;
  for (const auto& p : pairing.pairs()) sum += p.correlation;
  return sum / static_cast<double>(pairing.size());
}

}  // namespace saesim
