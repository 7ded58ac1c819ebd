#pragma once

// End-to-end runs: pair -> filter -> score -> null, and the semantic-subspace
// tests, assembled into ScoreReports.

#include <optional>
#include <string>
#include <vector>

#include "saesim/metrics.hpp"
#include "saesim/pairing.hpp"
#include "saesim/semantic.hpp"
#include "saesim/significance.hpp"
#include "saesim/types.hpp"

namespace saesim {

/// Version string recorded in every report.
const char* tool_version();

struct FilterSet {
  bool nonconcept = true;
  bool shared_token = true;
  bool one_to_one = true;
};

struct PipelineConfig {
  FilterSet filters;
  StoplistConfig stoplist;
  int top_k = kDefaultTopK;
  CorrelationOptions correlation;
  MetricConfig metric;
};

/// Inputs of one layer pair. References must outlive the call.
struct SpacePair {
  const FeatureSpace& a;
  const FeatureSpace& b;
  const ActivationSet& acts_a;
  const ActivationSet& acts_b;
  const TokenTable& tokens;
};

struct PairingStages {
  PairingMap pairing;  ///< After every enabled filter.
  std::vector<StageCount> counts;
  TopTokenIndex top_a;
  TopTokenIndex top_b;
  Standardized z_a;
  Standardized z_b;
};

/// Argmax pairing followed by the enabled filters, in the order nonconcept,
/// shared_token, one_to_one. `counts` records the feature totals and the pair
/// count after every stage.
PairingStages build_pairing(const SpacePair& in, const PipelineConfig& cfg);

/// Paired score plus shuffle null for one metric.
NullResult run_shuffle_null(Metric metric, const SpacePair& in, const PairingStages& stages,
                            const PairingMap& pairing, const NullSpec& spec, const MetricConfig& cfg);

/// Metric parameters as report params.
std::vector<std::pair<std::string, std::string>> metric_params(Metric metric, const PipelineConfig& cfg);

ScoreReport make_report(Metric metric, const NullResult& result, const PairingMap& pairing,
                        std::vector<StageCount> counts, std::uint64_t seed,
                        std::vector<std::pair<std::string, std::string>> params);

/// One report per metric, all sharing one pairing.
std::vector<ScoreReport> score_spaces(const SpacePair& in, const std::vector<Metric>& metrics,
                                      const PipelineConfig& cfg, const NullSpec& spec);

struct SubspaceOutcome {
  std::string category;
  std::vector<Index> subspace_a;
  std::vector<Index> subspace_b;
  PairingMap pairing;
  std::optional<ScoreReport> test1;
  std::optional<ScoreReport> test2;
  /// Set instead of the reports when the category could not be scored.
  std::string warning;
};

/// Selects the category's features from the non-concept-filtered pool of each
/// side, pairs them within the subsets (one-to-one), and runs Test 1 (shuffled
/// pairing) and Test 2 (random subsets of the same sizes from the same pools).
SubspaceOutcome score_subspace(const SpacePair& in, const PairingStages& stages, const ConceptLexicon& lexicon,
                               const std::string& category, Metric metric, const PipelineConfig& cfg,
                               const NullSpec& test1, const NullSpec& test2);

/// Features of one side that are live and, when the nonconcept filter is on,
/// free of stoplist top tokens.
std::vector<Index> concept_pool(const Standardized& z, const TopTokenIndex& top, const PipelineConfig& cfg);

}  // namespace saesim
