#include "saesim/serialize.hpp"

#include "saesim/errors.hpp"

namespace saesim::serial {

namespace {

template <typename F>
auto guarded(const char* type, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(std::string("cannot decode ") + type + ": " + e.what());
  }
}

}  // namespace

json encode(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <>
Matrix decode<Matrix>(const json& j) {
  return guarded("Matrix", [&] {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
      throw InputError("Matrix: shape does not match data length");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
    return m;
  });
}

json encode(const FeatureSpace& s) {
  return {{"weights", encode(s.weights())}, {"model_id", s.model_id()}, {"layer", s.layer()}};
}

template <>
FeatureSpace decode<FeatureSpace>(const json& j) {
  return guarded("FeatureSpace", [&] {
    return FeatureSpace(decode<Matrix>(j.at("weights")), j.at("model_id").get<std::string>(),
                        j.at("layer").get<int>());
  });
}

json encode(const ActivationSet& a) {
  return {{"acts", encode(a.acts())}, {"token_table_ref", a.token_table_ref()}};
}

template <>
ActivationSet decode<ActivationSet>(const json& j) {
  return guarded("ActivationSet", [&] {
    return ActivationSet(decode<Matrix>(j.at("acts")), j.at("token_table_ref").get<std::string>());
  });
}

json encode(const TokenTable& t) { return t.tokens(); }

template <>
TokenTable decode<TokenTable>(const json& j) {
  return guarded("TokenTable", [&] { return TokenTable(j.get<std::vector<std::string>>()); });
}

json encode(const PairingMap& p) {
  json pairs = json::array();
  for (const auto& fp : p.pairs()) pairs.push_back({fp.src, fp.tgt, fp.correlation});
  return {{"pairs", std::move(pairs)},
          {"src_space_id", p.src_space_id()},
          {"tgt_space_id", p.tgt_space_id()},
          {"filters_applied", p.filters_applied()}};
}

template <>
PairingMap decode<PairingMap>(const json& j) {
  return guarded("PairingMap", [&] {
    std::vector<FeaturePair> pairs;
    for (const auto& e : j.at("pairs")) {
      pairs.push_back({e.at(0).get<Index>(), e.at(1).get<Index>(), e.at(2).get<double>()});
    }
    return PairingMap(std::move(pairs), j.at("src_space_id").get<std::string>(),
                      j.at("tgt_space_id").get<std::string>(),
                      j.at("filters_applied").get<std::vector<std::string>>());
  });
}

json encode(const ConceptLexicon& l) {
  json cats = json::array();
  for (const auto& c : l.categories()) cats.push_back({{"name", c.name}, {"keywords", c.keywords}});
  return cats;
}

template <>
ConceptLexicon decode<ConceptLexicon>(const json& j) {
  return guarded("ConceptLexicon", [&] {
    std::vector<ConceptCategory> cats;
    for (const auto& c : j) {
      cats.push_back({c.at("name").get<std::string>(), c.at("keywords").get<std::vector<std::string>>()});
    }
    return ConceptLexicon(std::move(cats));
  });
}

json encode(const TopTokenIndex& t) {
  json features = json::array();
  for (const auto& list : t.entries()) {
    json entries = json::array();
    for (const auto& e : list) entries.push_back({e.token, e.activation, e.position});
    features.push_back(std::move(entries));
  }
  return {{"k", t.k()}, {"features", std::move(features)}};
}

template <>
TopTokenIndex decode<TopTokenIndex>(const json& j) {
  return guarded("TopTokenIndex", [&] {
    std::vector<std::vector<TopToken>> per_feature;
    for (const auto& list : j.at("features")) {
      std::vector<TopToken> entries;
      for (const auto& e : list) {
        entries.push_back({e.at(0).get<std::string>(), e.at(1).get<double>(), e.at(2).get<Index>()});
      }
      per_feature.push_back(std::move(entries));
    }
    return TopTokenIndex(std::move(per_feature), j.at("k").get<int>());
  });
}

json encode(const ScoreReport& r) {
  json stages = json::array();
  for (const auto& s : r.stage_counts) stages.push_back({s.stage, s.n_pairs});
  json params = json::array();
  for (const auto& [k, v] : r.params) params.push_back({k, v});
  return {{"metric", to_string(r.metric)},
          {"paired_score", r.paired_score},
          {"null_mean", r.null_mean},
          {"null_samples", r.null_samples},
          {"p_value", r.p_value},
          {"n_pairs", r.n_pairs},
          {"filters_applied", r.filters_applied},
          {"seed", r.seed},
          {"rng", r.rng},
          {"stage_counts", std::move(stages)},
          {"params", std::move(params)},
          {"tool_version", r.tool_version},
          {"config_hash", r.config_hash}};
}

template <>
ScoreReport decode<ScoreReport>(const json& j) {
  return guarded("ScoreReport", [&] {
    ScoreReport r;
    r.metric = parse_metric(j.at("metric").get<std::string>());
    r.paired_score = j.at("paired_score").get<double>();
    r.null_mean = j.at("null_mean").get<double>();
    r.null_samples = j.at("null_samples").get<Index>();
    r.p_value = j.at("p_value").get<double>();
    r.n_pairs = j.at("n_pairs").get<Index>();
    r.filters_applied = j.at("filters_applied").get<std::vector<std::string>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.rng = j.at("rng").get<std::string>();
    for (const auto& s : j.at("stage_counts")) {
      r.stage_counts.push_back({s.at(0).get<std::string>(), s.at(1).get<Index>()});
    }
    for (const auto& p : j.at("params")) {
      r.params.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    r.tool_version = j.at("tool_version").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.validate();
    return r;
  });
}

json encode(const DissimilarityMatrix& d) { return encode(d.entries()); }

template <>
DissimilarityMatrix decode<DissimilarityMatrix>(const json& j) {
  return DissimilarityMatrix(decode<Matrix>(j));
}

}  // namespace saesim::serial
