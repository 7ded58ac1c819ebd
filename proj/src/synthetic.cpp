#include "saesim/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include "saesim/errors.hpp"

namespace saesim {

namespace {

std::string position_token(Index t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%04lld", static_cast<long long>(t + 1));
  return buf;
}

std::string keyword_variant(const std::string& kw, std::uint64_t style) {
  std::string cap = kw;
  if (!cap.empty()) cap[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cap[0])));
  switch (style) {
    case 0:
      return kw;
    case 1:
      return cap;
    default:
      return " " + cap;
  }
}

}  // namespace

FeatureSpace gen_space(Index n_features, Index dim, std::uint64_t seed, std::string model_id, int layer) {
  if (n_features < 1 || dim < 1) throw InputError("gen_space: n_features and dim must be >= 1");
  Rng rng(seed);
  Matrix w(n_features, dim);
  for (Index i = 0; i < n_features; ++i) {
    for (Index j = 0; j < dim; ++j) w(i, j) = rng.normal();
  }
  return FeatureSpace(std::move(w), std::move(model_id), layer);
}

Matrix random_orthogonal(Index n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

PairingMap Perturbed::pairing(const std::string& src_id, const std::string& tgt_id) const {
  std::vector<FeaturePair> pairs;
  pairs.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) pairs.push_back({static_cast<Index>(i), truth[i], 1.0});
  return PairingMap(std::move(pairs), src_id, tgt_id);
}

Perturbed perturb_space(const FeatureSpace& space, bool rotate, bool permute, double noise_sigma,
                        std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InputError("perturb_space: noise_sigma must be finite and >= 0");
  }
  Rng rng(seed);
  Matrix w = space.weights();
  if (rotate) w = w * random_orthogonal(space.dim(), rng);

  const Index n = space.n_features();
  std::vector<Index> truth(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = i;
  if (permute) rng.shuffle(std::span<Index>(truth));

  Matrix out(n, space.dim());
  for (Index i = 0; i < n; ++i) out.row(truth[static_cast<std::size_t>(i)]) = w.row(i);
  if (noise_sigma > 0.0) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < out.cols(); ++j) out(i, j) += noise_sigma * rng.normal();
    }
  }
  return {FeatureSpace(std::move(out), space.model_id() + "~", space.layer()), std::move(truth)};
}

SyntheticActivations gen_paired_activations(const FeatureSpace& a, const FeatureSpace& b,
                                            std::span<const Index> truth, Index n_tokens, double snr,
                                            std::uint64_t seed, const ActivationOptions& opt) {
  if (n_tokens < 2) throw InputError("gen_paired_activations: n_tokens must be >= 2");
  if (!(snr >= 0.0)) throw InputError("gen_paired_activations: snr must be >= 0");
  if (!(opt.stoplist_fraction >= 0.0 && opt.stoplist_fraction <= 1.0)) {
    throw InputError("gen_paired_activations: stoplist_fraction must be in [0, 1]");
  }
  const Index na = a.n_features();
  const Index nb = b.n_features();
  if (static_cast<Index>(truth.size()) != na) {
    throw InputError("gen_paired_activations: truth must have one entry per A feature");
  }

  // Latent assignment: pairs first (in A order), then private A, then private B.
  std::vector<Index> latent_a(static_cast<std::size_t>(na), -1);
  std::vector<Index> latent_b(static_cast<std::size_t>(nb), -1);
  Index n_latents = 0;
  for (Index i = 0; i < na; ++i) {
    const Index j = truth[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    if (j >= nb) throw InputError("gen_paired_activations: truth target out of range");
    if (latent_b[static_cast<std::size_t>(j)] >= 0) {
      throw InputError("gen_paired_activations: truth maps two A features to one B feature");
    }
    latent_a[static_cast<std::size_t>(i)] = n_latents;
    latent_b[static_cast<std::size_t>(j)] = n_latents;
    ++n_latents;
  }
  const Index n_paired = n_latents;
  for (auto& l : latent_a) {
    if (l < 0) l = n_latents++;
  }
  const Index first_private_b = n_latents;
  for (auto& l : latent_b) {
    if (l < 0) l = n_latents++;
  }

  // Layout: reserved peak positions and token overwrites.
  Rng layout(opt.layout_seed.value_or(mix64(seed ^ 0x6c61796f7574ULL)));
  const Index peaks = std::min<Index>(std::max(opt.peaks, 0), n_tokens / std::max<Index>(n_latents, 1));
  const auto positions = layout.permutation(n_tokens);
  auto peak_pos = [&](Index latent, Index p) { return positions[static_cast<std::size_t>(latent * peaks + p)]; };

  std::vector<std::string> tokens(static_cast<std::size_t>(n_tokens));
  for (Index t = 0; t < n_tokens; ++t) tokens[static_cast<std::size_t>(t)] = position_token(t);

  std::vector<bool> stoplisted(static_cast<std::size_t>(n_latents), false);
  std::vector<bool> planted(static_cast<std::size_t>(n_latents), false);
  if (peaks > 0 && !opt.stoplist.keywords.empty() && opt.stoplist_fraction > 0.0) {
    const auto n_stop = static_cast<std::size_t>(std::llround(opt.stoplist_fraction * static_cast<double>(n_latents)));
    const auto chosen = layout.permutation(n_latents);
    for (std::size_t c = 0; c < n_stop; ++c) {
      const Index l = chosen[c];
      stoplisted[static_cast<std::size_t>(l)] = true;
      const auto& word = opt.stoplist.keywords[layout.below(opt.stoplist.keywords.size())];
      tokens[static_cast<std::size_t>(peak_pos(l, 0))] = word;
    }
  }

  std::vector<std::string> keywords;
  for (const auto& kw : opt.concept_keywords) {
    if (!kw.empty() && std::none_of(kw.begin(), kw.end(), [](unsigned char c) { return std::isspace(c); })) {
      keywords.push_back(kw);
    }
  }
  if (peaks > 0 && opt.plant != ConceptPlant::none && opt.cluster_size > 0) {
    if (keywords.empty()) throw InputError("gen_paired_activations: concept plant needs single-token keywords");
    auto plant_on = [&](Index lo, Index hi, Index count) {
      std::vector<Index> pool;
      for (Index l = lo; l < hi; ++l) {
        if (!stoplisted[static_cast<std::size_t>(l)]) pool.push_back(l);
      }
      for (Index l : layout.sample(pool, static_cast<std::size_t>(count))) {
        planted[static_cast<std::size_t>(l)] = true;
        for (Index p = 0; p < std::min<Index>(peaks, 2); ++p) {
          const auto& kw = keywords[layout.below(keywords.size())];
          tokens[static_cast<std::size_t>(peak_pos(l, p))] = keyword_variant(kw, layout.below(3));
        }
      }
    };
    if (opt.plant == ConceptPlant::shared) {
      plant_on(0, n_paired, opt.cluster_size);
    } else {
      plant_on(n_paired, first_private_b, opt.cluster_size);
      plant_on(first_private_b, n_latents, opt.cluster_size);
    }
  }

  // Latent values, scaled to mean 0 and unit sample variance.
  Rng values(seed);
  Matrix latents(n_tokens, n_latents);
  for (Index l = 0; l < n_latents; ++l) {
    for (Index t = 0; t < n_tokens; ++t) {
      latents(t, l) = values.uniform() < opt.background_rate ? values.uniform(0.5, 1.5) : 0.0;
    }
    for (Index p = 0; p < peaks; ++p) latents(peak_pos(l, p), l) = 10.0 + values.uniform();
    if (peaks == 0) latents(values.below(static_cast<std::uint64_t>(n_tokens)), l) = 10.0 + values.uniform();
    const double mean = latents.col(l).mean();
    double ss = 0.0;
    for (Index t = 0; t < n_tokens; ++t) ss += (latents(t, l) - mean) * (latents(t, l) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n_tokens - 1));
    for (Index t = 0; t < n_tokens; ++t) latents(t, l) = (latents(t, l) - mean) / sd;
  }

  const bool noiseless = std::isinf(snr);
  const double alpha = noiseless ? 1.0 : snr / std::sqrt(1.0 + snr * snr);
  const double beta = noiseless ? 0.0 : 1.0 / std::sqrt(1.0 + snr * snr);
  auto fill = [&](const std::vector<Index>& latent_of) {
    const auto nf = static_cast<Index>(latent_of.size());
    Matrix m(n_tokens, nf);
    for (Index t = 0; t < n_tokens; ++t) {
      for (Index f = 0; f < nf; ++f) {
        const double noise = beta > 0.0 ? beta * values.normal() : 0.0;
        m(t, f) = alpha * latents(t, latent_of[static_cast<std::size_t>(f)]) + noise;
      }
    }
    return m;
  };
  Matrix acts_a = fill(latent_a);
  Matrix acts_b = fill(latent_b);

  SyntheticActivations out{ActivationSet(std::move(acts_a), "tokens"), ActivationSet(std::move(acts_b), "tokens"),
                           TokenTable(std::move(tokens)), {}, {}, {}, {}};
  for (Index f = 0; f < na; ++f) {
    const auto l = static_cast<std::size_t>(latent_a[static_cast<std::size_t>(f)]);
    if (stoplisted[l]) out.stoplisted_a.push_back(f);
    if (planted[l]) out.planted_a.push_back(f);
  }
  for (Index f = 0; f < nb; ++f) {
    const auto l = static_cast<std::size_t>(latent_b[static_cast<std::size_t>(f)]);
    if (stoplisted[l]) out.stoplisted_b.push_back(f);
    if (planted[l]) out.planted_b.push_back(f);
  }
  return out;
}

}  // namespace saesim
