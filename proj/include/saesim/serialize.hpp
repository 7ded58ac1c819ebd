#pragma once

// Lossless JSON encoding of the domain types. Unlike the report writers this
// keeps full double precision, so decode(encode(x)) == x.

#include <json.hpp>

#include "saesim/types.hpp"

namespace saesim::serial {

using nlohmann::json;

json encode(const Matrix& m);
json encode(const FeatureSpace& s);
json encode(const ActivationSet& a);
json encode(const TokenTable& t);
json encode(const PairingMap& p);
json encode(const ConceptLexicon& l);
json encode(const TopTokenIndex& t);
json encode(const ScoreReport& r);
json encode(const DissimilarityMatrix& d);

template <typename T>
T decode(const json& j);

template <> Matrix decode<Matrix>(const json& j);
template <> FeatureSpace decode<FeatureSpace>(const json& j);
template <> ActivationSet decode<ActivationSet>(const json& j);
template <> TokenTable decode<TokenTable>(const json& j);
template <> PairingMap decode<PairingMap>(const json& j);
template <> ConceptLexicon decode<ConceptLexicon>(const json& j);
template <> TopTokenIndex decode<TopTokenIndex>(const json& j);
template <> ScoreReport decode<ScoreReport>(const json& j);
template <> DissimilarityMatrix decode<DissimilarityMatrix>(const json& j);

}  // namespace saesim::serial
