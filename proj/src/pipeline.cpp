#include "saesim/pipeline.hpp"

#include "saesim/errors.hpp"
#include "saesim/io.hpp"

#ifndef SAESIM_VERSION
#define SAESIM_VERSION "0.0.0"
#endif

namespace saesim {

namespace {

Index as_count(std::size_t n) { return static_cast<Index>(n); }

}  // namespace

const char* tool_version() { return SAESIM_VERSION; }

PairingStages build_pairing(const SpacePair& in, const PipelineConfig& cfg) {
  if (in.acts_a.n_tokens() != in.acts_b.n_tokens()) {
    throw InputError("activation token counts differ (" + std::to_string(in.acts_a.n_tokens()) + " vs " +
                     std::to_string(in.acts_b.n_tokens()) + ")");
  }
  if (in.acts_a.n_features() != in.a.n_features() || in.acts_b.n_features() != in.b.n_features()) {
    throw InputError("activation columns must match decoder rows on each side");
  }
  PairingStages s;
  s.z_a = standardize_columns(in.acts_a);
  s.z_b = standardize_columns(in.acts_b);
  s.top_a = top_activating_tokens(in.acts_a, in.tokens, cfg.top_k);
  s.top_b = top_activating_tokens(in.acts_b, in.tokens, cfg.top_k);

  s.counts.push_back({"features_a", in.a.n_features()});
  s.counts.push_back({"features_b", in.b.n_features()});
  s.counts.push_back({"live_a", as_count(s.z_a.live_features().size())});
  s.counts.push_back({"live_b", as_count(s.z_b.live_features().size())});

  const std::string src_id = in.a.model_id() + ":" + std::to_string(in.a.layer());
  const std::string tgt_id = in.b.model_id() + ":" + std::to_string(in.b.layer());
  s.pairing = correlate_argmax(s.z_a, s.z_b, cfg.correlation, {}, {}, src_id, tgt_id);
  s.counts.push_back({"argmax", as_count(s.pairing.size())});
  if (cfg.filters.nonconcept) {
    s.pairing = filter_nonconcept(s.pairing, s.top_a, s.top_b, cfg.stoplist);
    s.counts.push_back({kFilterNonconcept, as_count(s.pairing.size())});
  }
  if (cfg.filters.shared_token) {
    s.pairing = filter_shared_token(s.pairing, s.top_a, s.top_b);
    s.counts.push_back({kFilterSharedToken, as_count(s.pairing.size())});
  }
  if (cfg.filters.one_to_one) {
    s.pairing = filter_one_to_one(s.pairing);
    s.counts.push_back({kFilterOneToOne, as_count(s.pairing.size())});
  }
  return s;
}

NullResult run_shuffle_null(Metric metric, const SpacePair& in, const PairingStages& stages,
                            const PairingMap& pairing, const NullSpec& spec, const MetricConfig& cfg) {
  if (metric == Metric::mean_correlation) return null_shuffle_correlation(stages.z_a, stages.z_b, pairing, spec);
  return null_shuffle(metric, in.a.weights(), in.b.weights(), pairing, spec, cfg);
}

std::vector<std::pair<std::string, std::string>> metric_params(Metric metric, const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> p;
  switch (metric) {
    case Metric::svcca:
      p.emplace_back("variance_retained", io::format_number(cfg.metric.svcca.variance_retained));
      p.emplace_back("epsilon", io::format_number(cfg.metric.svcca.epsilon));
      break;
    case Metric::rsa:
      p.emplace_back("rdm_metric", to_string(cfg.metric.rsa.rdm_metric));
      break;
    case Metric::knn_jaccard:
      p.emplace_back("knn_k", std::to_string(cfg.metric.knn_k));
      break;
    case Metric::mean_correlation:
      break;
  }
  p.emplace_back("top_k", std::to_string(cfg.top_k));
  return p;
}

ScoreReport make_report(Metric metric, const NullResult& result, const PairingMap& pairing,
                        std::vector<StageCount> counts, std::uint64_t seed,
                        std::vector<std::pair<std::string, std::string>> params) {
  ScoreReport r;
  r.metric = metric;
  r.paired_score = result.paired_score;
  r.null_mean = result.null_mean();
  r.null_samples = as_count(result.null_scores.size());
  r.p_value = result.p_value();
  r.n_pairs = as_count(pairing.size());
  r.filters_applied = pairing.filters_applied();
  r.seed = seed;
  r.stage_counts = std::move(counts);
  r.params = std::move(params);
  r.tool_version = tool_version();
  r.validate();
  return r;
}

std::vector<ScoreReport> score_spaces(const SpacePair& in, const std::vector<Metric>& metrics,
                                      const PipelineConfig& cfg, const NullSpec& spec) {
  const auto stages = build_pairing(in, cfg);
  std::vector<ScoreReport> out;
  for (Metric m : metrics) {
    const auto result = run_shuffle_null(m, in, stages, stages.pairing, spec, cfg.metric);
    auto params = metric_params(m, cfg);
    params.emplace_back("model_a", in.a.model_id());
    params.emplace_back("layer_a", std::to_string(in.a.layer()));
    params.emplace_back("model_b", in.b.model_id());
    params.emplace_back("layer_b", std::to_string(in.b.layer()));
    params.emplace_back("null_mode", to_string(NullMode::shuffle_pairing));
    out.push_back(make_report(m, result, stages.pairing, stages.counts, spec.seed, std::move(params)));
  }
  return out;
}

std::vector<Index> concept_pool(const Standardized& z, const TopTokenIndex& top, const PipelineConfig& cfg) {
  std::vector<Index> pool;
  for (Index f : z.live_features()) {
    if (cfg.filters.nonconcept && is_nonconcept_feature(top, f, cfg.stoplist)) continue;
    pool.push_back(f);
  }
  return pool;
}

SubspaceOutcome score_subspace(const SpacePair& in, const PairingStages& stages, const ConceptLexicon& lexicon,
                               const std::string& category, Metric metric, const PipelineConfig& cfg,
                               const NullSpec& test1, const NullSpec& test2) {
  SubspaceOutcome out;
  out.category = category;
  const auto pool_a = concept_pool(stages.z_a, stages.top_a, cfg);
  const auto pool_b = concept_pool(stages.z_b, stages.top_b, cfg);
  out.subspace_a = select_concept_features(stages.top_a, lexicon, category, pool_a);
  out.subspace_b = select_concept_features(stages.top_b, lexicon, category, pool_b);
  if (out.subspace_a.empty() || out.subspace_b.empty()) {
    out.warning = "empty subspace (" + std::to_string(out.subspace_a.size()) + " A, " +
                  std::to_string(out.subspace_b.size()) + " B features)";
    return out;
  }

  SubspaceFilters filters;
  filters.one_to_one = cfg.filters.one_to_one;
  const auto need = std::max<std::size_t>(3, static_cast<std::size_t>(min_rows(metric, cfg.metric)));
  try {
    out.pairing = match_subspaces(out.subspace_a, out.subspace_b, stages.z_a, stages.z_b, filters,
                                  cfg.correlation, need);
    // The pool already excluded non-concept features; record that first.
    std::vector<std::string> applied;
    if (cfg.filters.nonconcept) applied.push_back(kFilterNonconcept);
    for (const auto& f : out.pairing.filters_applied()) applied.push_back(f);
    out.pairing = PairingMap(out.pairing.pairs(), stages.pairing.src_space_id(), stages.pairing.tgt_space_id(),
                             std::move(applied));

    std::vector<StageCount> counts = {
        {"pool_a", as_count(pool_a.size())},           {"pool_b", as_count(pool_b.size())},
        {"subspace_a", as_count(out.subspace_a.size())}, {"subspace_b", as_count(out.subspace_b.size())},
        {"pairs", as_count(out.pairing.size())},
    };
    auto params = metric_params(metric, cfg);
    params.emplace_back("category", category);

    const auto r1 = run_shuffle_null(metric, in, stages, out.pairing, test1, cfg.metric);
    auto p1 = params;
    p1.emplace_back("test", "1");
    p1.emplace_back("null_mode", to_string(NullMode::shuffle_pairing));
    out.test1 = make_report(metric, r1, out.pairing, counts, test1.seed, std::move(p1));

    SubsetNullConfig scfg;
    scfg.metric = cfg.metric;
    scfg.filters = filters;
    scfg.correlation = cfg.correlation;
    scfg.min_pairs = need;
    auto r2 = null_random_subsets(metric, in.a.weights(), in.b.weights(), stages.z_a, stages.z_b, pool_a, pool_b,
                                  out.subspace_a.size(), out.subspace_b.size(), test2, scfg);
    r2.paired_score = r1.paired_score;
    auto p2 = params;
    p2.emplace_back("test", "2");
    p2.emplace_back("null_mode", to_string(NullMode::random_subsets));
    p2.emplace_back("subset_pool", "post_filter");
    p2.emplace_back("redraws", std::to_string(r2.redraws));
    out.test2 = make_report(metric, r2, out.pairing, counts, test2.seed, std::move(p2));
  } catch (const DegenerateError& e) {
    out.test1.reset();
    out.test2.reset();
    out.warning = e.what();
  }
  return out;
}

}  // namespace saesim
