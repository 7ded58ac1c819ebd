#include "saesim/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "saesim/errors.hpp"
#include "saesim/heatmap.hpp"
#include "saesim/io.hpp"
#include "saesim/pipeline.hpp"
#include "saesim/rng.hpp"
#include "saesim/synthetic.hpp"

namespace saesim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

// Options shared by score, sweep and subspace.
struct PipelineOpts {
  std::vector<std::string> metrics{"svcca"};
  std::vector<std::string> filters{kFilterNonconcept, kFilterSharedToken, kFilterOneToOne};
  Index null_samples = kFullSpaceNullSamples;
  std::uint64_t seed = 0;
  int threads = 1;
  double variance_retained = 0.99;
  double epsilon = 1e-10;
  std::string rdm = "euclidean";
  Index knn_k = 10;
  int top_k = kDefaultTopK;
  Index block_size = 1024;
  std::string out;
  std::string config;
};

struct InputOpts {
  std::string weights_a, weights_b, acts_a, acts_b, tokens;
  std::string model_a = "A", model_b = "B";
  int layer_a = 0, layer_b = 0;
};

void add_pipeline_options(CLI::App* sub, PipelineOpts& o) {
  sub->add_option("--config", o.config, "Plain-text key = value file; flags win on conflict");
  sub->add_option("--metric", o.metrics, "svcca, rsa, knn_jaccard, mean_correlation")->delimiter(',');
  sub->add_option("--filters", o.filters, "Subset of nonconcept,shared_token,one_to_one, or none")
      ->delimiter(',');
  sub->add_option("--seed", o.seed, "Master seed of the null distributions");
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores); results do not depend on it");
  sub->add_option("--variance-retained", o.variance_retained, "SVCCA singular-value mass kept");
  sub->add_option("--epsilon", o.epsilon, "SVCCA whitening ridge");
  sub->add_option("--rdm", o.rdm, "RSA dissimilarity: euclidean or one_minus_pearson");
  sub->add_option("--knn-k", o.knn_k, "Neighbours per row for knn_jaccard");
  sub->add_option("--top-k", o.top_k, "Top-activating tokens per feature");
  sub->add_option("--block-size", o.block_size, "Correlation tile size");
  sub->add_option("--out,-o", o.out, "Report path (.json or .csv)");
}

void add_input_options(CLI::App* sub, InputOpts& in) {
  sub->add_option("--weights-a", in.weights_a, "Decoder weights of model A (.npy/.csv)")->required();
  sub->add_option("--weights-b", in.weights_b, "Decoder weights of model B (.npy/.csv)")->required();
  sub->add_option("--acts-a", in.acts_a, "Activations of model A (tokens x features)")->required();
  sub->add_option("--acts-b", in.acts_b, "Activations of model B (tokens x features)")->required();
  sub->add_option("--tokens", in.tokens, "Token table (.tokens.jsonl)")->required();
  sub->add_option("--model-a", in.model_a, "Model id recorded for A");
  sub->add_option("--model-b", in.model_b, "Model id recorded for B");
  sub->add_option("--layer-a", in.layer_a, "Layer recorded for A");
  sub->add_option("--layer-b", in.layer_b, "Layer recorded for B");
}

std::vector<Metric> parse_metrics(const std::vector<std::string>& names) {
  if (names.empty()) throw InputError("at least one --metric is required");
  std::vector<Metric> out;
  for (const auto& n : names) {
    const Metric m = parse_metric(n);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

PipelineConfig make_config(const PipelineOpts& o) {
  PipelineConfig cfg;
  cfg.filters = {false, false, false};
  for (const auto& f : o.filters) {
    if (f == kFilterNonconcept) {
      cfg.filters.nonconcept = true;
    } else if (f == kFilterSharedToken) {
      cfg.filters.shared_token = true;
    } else if (f == kFilterOneToOne) {
      cfg.filters.one_to_one = true;
    } else if (f != "none") {
      throw InputError("unknown filter '" + f + "' (expected nonconcept, shared_token, one_to_one or none)");
    }
  }
  if (o.top_k < 1) throw InputError("--top-k must be >= 1");
  if (o.block_size < 1) throw InputError("--block-size must be >= 1");
  if (o.knn_k < 1) throw InputError("--knn-k must be >= 1");
  cfg.top_k = o.top_k;
  cfg.correlation = {o.block_size, o.threads};
  cfg.metric.svcca = {o.variance_retained, o.epsilon};
  cfg.metric.svcca.validate();
  cfg.metric.rsa.rdm_metric = parse_rdm_metric(o.rdm);
  cfg.metric.knn_k = o.knn_k;
  return cfg;
}

std::vector<std::string> filter_names(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.filters.nonconcept) out.push_back(kFilterNonconcept);
  if (cfg.filters.shared_token) out.push_back(kFilterSharedToken);
  if (cfg.filters.one_to_one) out.push_back(kFilterOneToOne);
  return out;
}

// Canonical text of everything that influences report contents. Paths,
// thread counts and block sizes are excluded: they never change results.
std::string canonical(const std::string& command, const PipelineOpts& o, const PipelineConfig& cfg,
                      const std::vector<std::pair<std::string, std::string>>& extra) {
  std::vector<std::string> metrics;
  for (Metric m : parse_metrics(o.metrics)) metrics.push_back(to_string(m));
  std::string s = "command=" + command + "\n";
  s += "metrics=" + join(metrics) + "\n";
  s += "filters=" + join(filter_names(cfg)) + "\n";
  s += "seed=" + std::to_string(o.seed) + "\n";
  s += "rng=" + std::string(kRngName) + "\n";
  s += "variance_retained=" + io::format_number(cfg.metric.svcca.variance_retained) + "\n";
  s += "epsilon=" + io::format_number(cfg.metric.svcca.epsilon) + "\n";
  s += "rdm=" + to_string(cfg.metric.rsa.rdm_metric) + "\n";
  s += "knn_k=" + std::to_string(cfg.metric.knn_k) + "\n";
  s += "top_k=" + std::to_string(cfg.top_k) + "\n";
  s += "stoplist=" + join(cfg.stoplist.keywords, "|") + "\n";
  for (const auto& [k, v] : extra) s += k + "=" + v + "\n";
  return s;
}

struct LoadedPair {
  FeatureSpace a;
  FeatureSpace b;
  ActivationSet acts_a;
  ActivationSet acts_b;
  TokenTable tokens;

  SpacePair view() const { return {a, b, acts_a, acts_b, tokens}; }
};

LoadedPair load_inputs(const InputOpts& in) {
  auto tokens = io::load_token_table(in.tokens);
  ActivationSet acts_a(io::load_matrix(in.acts_a), in.tokens);
  ActivationSet acts_b(io::load_matrix(in.acts_b), in.tokens);
  tokens.require_aligned(acts_a);
  tokens.require_aligned(acts_b);
  FeatureSpace a(io::load_matrix(in.weights_a), in.model_a, in.layer_a);
  FeatureSpace b(io::load_matrix(in.weights_b), in.model_b, in.layer_b);
  return {std::move(a), std::move(b), std::move(acts_a), std::move(acts_b), std::move(tokens)};
}

void print_report_line(std::ostream& out, const ScoreReport& r, const std::string& prefix = "") {
  out << prefix << to_string(r.metric) << "  paired=" << fmt2(r.paired_score) << "  null_mean=" << fmt2(r.null_mean)
      << "  p=" << fmt2(r.p_value) << "  n_pairs=" << r.n_pairs << "  null_samples=" << r.null_samples << "\n";
}

void print_stages(std::ostream& out, const std::vector<StageCount>& counts) {
  out << "stages:";
  for (const auto& c : counts) out << " " << c.stage << "=" << c.n_pairs;
  out << "\n";
}

ConceptLexicon resolve_lexicon(const std::string& path) {
  if (!path.empty()) return io::load_lexicon(path);
  const auto env = io::lexicon_path_from_env();
  if (!env.empty()) return io::load_lexicon(env);
  return io::default_lexicon();
}

// ---------------------------------------------------------------- score

int cmd_score(const InputOpts& in, const PipelineOpts& o, std::ostream& out) {
  const auto cfg = make_config(o);
  const auto metrics = parse_metrics(o.metrics);
  const NullSpec spec{o.null_samples, o.seed, NullMode::shuffle_pairing, o.threads};
  spec.validate();
  const auto data = load_inputs(in);
  const auto hash = config_hash(canonical("score", o, cfg, {{"null_samples", std::to_string(o.null_samples)}}));

  auto reports = score_spaces(data.view(), metrics, cfg, spec);
  for (auto& r : reports) r.config_hash = hash;
  if (!o.out.empty()) {
    const auto fmt = io::format_for(o.out);
    if (reports.size() == 1) {
      io::write_report(reports.front(), o.out, fmt);
    } else {
      io::write_reports(reports, o.out, fmt);
    }
  }
  for (const auto& r : reports) print_report_line(out, r);
  print_stages(out, reports.front().stage_counts);
  if (o.out.empty()) out << io::format_reports(reports, io::ReportFormat::json);
  return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct LayerFiles {
  int layer = 0;
  fs::path weights;
  fs::path acts;
};

struct Manifest {
  fs::path tokens;
  std::string model_a = "A", model_b = "B";
  std::vector<LayerFiles> a, b;
};

Manifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError("manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const json& v, const std::string& where) {
    if (!v.is_string()) throw InputError("manifest " + path.string() + ": missing path for " + where);
    const fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  Manifest m;
  if (!j.is_object() || !j.contains("tokens") || !j.contains("a") || !j.contains("b")) {
    throw InputError("manifest " + path.string() + ": expected keys tokens, a, b");
  }
  m.tokens = resolve(j["tokens"], "tokens");
  auto side = [&](const char* key, std::string& model, std::vector<LayerFiles>& layers) {
    const auto& s = j[key];
    if (!s.is_object() || !s.contains("layers") || !s["layers"].is_array() || s["layers"].empty()) {
      throw InputError("manifest " + path.string() + ": '" + key + "' needs a non-empty layers list");
    }
    model = s.value("model", std::string(key == std::string("a") ? "A" : "B"));
    for (const auto& e : s["layers"]) {
      if (!e.is_object() || !e.contains("layer") || !e["layer"].is_number_integer()) {
        throw InputError("manifest " + path.string() + ": every '" + key + "' layer entry needs an integer layer");
      }
      LayerFiles f;
      f.layer = e["layer"].get<int>();
      const std::string where = std::string(key) + " layer " + std::to_string(f.layer);
      f.weights = resolve(e.value("weights", json()), where + " weights");
      f.acts = resolve(e.value("acts", json()), where + " acts");
      if (std::any_of(layers.begin(), layers.end(), [&](const LayerFiles& x) { return x.layer == f.layer; })) {
        throw InputError("manifest " + path.string() + ": duplicate " + where);
      }
      layers.push_back(std::move(f));
    }
    std::sort(layers.begin(), layers.end(), [](const auto& x, const auto& y) { return x.layer < y.layer; });
  };
  side("a", m.model_a, m.a);
  side("b", m.model_b, m.b);
  return m;
}

struct LoadedLayer {
  std::optional<FeatureSpace> space;
  std::optional<ActivationSet> acts;
  std::string error;
};

LoadedLayer load_layer(const LayerFiles& f, const std::string& model, const TokenTable& tokens,
                       const fs::path& tokens_path) {
  LoadedLayer l;
  try {
    l.space.emplace(io::load_matrix(f.weights), model, f.layer);
    l.acts.emplace(io::load_matrix(f.acts), tokens_path.string());
    tokens.require_aligned(*l.acts);
  } catch (const InputError& e) {
    l.error = e.what();
  }
  return l;
}

int cmd_sweep(const std::string& manifest_path, const std::string& svg, const PipelineOpts& o, std::ostream& out) {
  const auto cfg = make_config(o);
  const auto metrics = parse_metrics(o.metrics);
  const NullSpec spec{o.null_samples, o.seed, NullMode::shuffle_pairing, 1};
  spec.validate();
  const auto m = load_manifest(manifest_path);
  const auto tokens = io::load_token_table(m.tokens);

  std::vector<LoadedLayer> la, lb;
  for (const auto& f : m.a) la.push_back(load_layer(f, m.model_a, tokens, m.tokens));
  for (const auto& f : m.b) lb.push_back(load_layer(f, m.model_b, tokens, m.tokens));
  for (std::size_t i = 0; i < la.size(); ++i) {
    for (std::size_t k = 0; k < lb.size(); ++k) {
      const auto& bad = !la[i].error.empty() ? la[i].error : lb[k].error;
      if (!bad.empty()) {
        throw InputError("layer pair (a=" + std::to_string(m.a[i].layer) + ", b=" + std::to_string(m.b[k].layer) +
                         "): " + bad);
      }
    }
  }

  const auto hash = config_hash(canonical("sweep", o, cfg, {{"null_samples", std::to_string(o.null_samples)}}));
  const auto n_pairs = la.size() * lb.size();
  std::vector<std::vector<io::SweepRow>> per_pair(n_pairs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t p = next++; p < n_pairs; p = next++) {
      const auto i = p / lb.size();
      const auto k = p % lb.size();
      const SpacePair sp{*la[i].space, *lb[k].space, *la[i].acts, *lb[k].acts, tokens};
      auto pcfg = cfg;
      pcfg.correlation.threads = 1;
      auto& rows = per_pair[p];
      try {
        for (auto& r : score_spaces(sp, metrics, pcfg, spec)) {
          r.config_hash = hash;
          rows.push_back({m.a[i].layer, m.b[k].layer, std::move(r), {}});
        }
      } catch (const DegenerateError& e) {
        rows.clear();
        for (Metric mt : metrics) {
          io::SweepRow row{m.a[i].layer, m.b[k].layer, {}, e.what()};
          row.report.metric = mt;
          rows.push_back(std::move(row));
        }
      }
    }
  };
  int threads = o.threads > 0 ? o.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n_pairs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<io::SweepRow> rows;
  for (auto& v : per_pair) {
    for (auto& r : v) rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const io::SweepRow& x, const io::SweepRow& y) {
    return std::make_tuple(x.layer_a, x.layer_b, to_string(x.report.metric)) <
           std::make_tuple(y.layer_a, y.layer_b, to_string(y.report.metric));
  });

  if (!o.out.empty()) io::write_sweep(rows, o.out, io::format_for(o.out));
  if (!svg.empty()) io::write_file(svg, render_heatmap_svg(rows));
  for (const auto& r : rows) {
    const std::string tag = "A" + std::to_string(r.layer_a) + "/B" + std::to_string(r.layer_b) + "  ";
    if (r.status.empty()) {
      print_report_line(out, r.report, tag);
    } else {
      out << tag << to_string(r.report.metric) << "  skipped: " << r.status << "\n";
    }
  }
  if (o.out.empty()) out << io::format_sweep(rows, io::ReportFormat::json);
  return kExitOk;
}

// ---------------------------------------------------------------- subspace

int cmd_subspace(const InputOpts& in, const PipelineOpts& o, const std::vector<std::string>& categories,
                 const std::string& lexicon_path, Index test2_samples, std::ostream& out, std::ostream& err) {
  const auto cfg = make_config(o);
  const auto metrics = parse_metrics(o.metrics);
  const NullSpec t1{o.null_samples, o.seed, NullMode::shuffle_pairing, o.threads};
  const NullSpec t2{test2_samples, o.seed, NullMode::random_subsets, o.threads};
  t1.validate();
  t2.validate();
  const auto lexicon = resolve_lexicon(lexicon_path);
  for (const auto& c : categories) lexicon.at(c);
  const auto data = load_inputs(in);
  const auto stages = build_pairing(data.view(), cfg);
  const auto hash = config_hash(canonical(
      "subspace", o, cfg,
      {{"test1_samples", std::to_string(o.null_samples)},
       {"test2_samples", std::to_string(test2_samples)},
       {"categories", join(categories, "|")},
       {"lexicon", io::format_lexicon(lexicon)}}));

  std::vector<io::SubspaceRow> rows;
  for (const auto& c : categories) {
    for (Metric m : metrics) {
      auto res = score_subspace(data.view(), stages, lexicon, c, m, cfg, t1, t2);
      out << c << "  subspace_a=" << res.subspace_a.size() << "  subspace_b=" << res.subspace_b.size()
          << "  pairs=" << res.pairing.size() << "\n";
      if (!res.warning.empty()) {
        err << "warning: category " << c << " (" << to_string(m) << "): " << res.warning << "\n";
        for (int test : {1, 2}) {
          io::SubspaceRow row{c, test, {}, res.warning};
          row.report.metric = m;
          rows.push_back(std::move(row));
        }
        continue;
      }
      res.test1->config_hash = hash;
      res.test2->config_hash = hash;
      print_report_line(out, *res.test1, "  test1 ");
      print_report_line(out, *res.test2, "  test2 ");
      rows.push_back({c, 1, *res.test1, {}});
      rows.push_back({c, 2, *res.test2, {}});
    }
  }
  if (!o.out.empty()) io::write_subspace(rows, o.out, io::format_for(o.out));
  if (o.out.empty()) out << io::format_subspace(rows, io::ReportFormat::json);
  return kExitOk;
}

// ---------------------------------------------------------------- synthetic

struct SyntheticOpts {
  std::string out;
  Index features = 500;
  Index dim = 64;
  Index tokens = 3000;
  double snr = 1.0;
  double sigma = 0.05;
  bool no_rotate = false;
  bool no_permute = false;
  bool independent = false;
  Index unpaired = 0;
  double stoplist_fraction = 0.0;
  std::string category;
  std::string lexicon;
  Index cluster_size = 0;
  std::string plant = "shared";
  int layers = 1;
  std::uint64_t seed = 0;
  std::string config;
};

json index_list(const std::vector<Index>& v) { return json(v); }

int cmd_synthetic(const SyntheticOpts& s, std::ostream& out) {
  if (s.features < 1 || s.dim < 1) throw InputError("--features and --dim must be >= 1");
  if (s.tokens < 2) throw InputError("--tokens must be >= 2");
  if (s.layers < 1) throw InputError("--layers must be >= 1");
  if (s.unpaired < 0 || s.unpaired > s.features) throw InputError("--unpaired must be in [0, features]");

  ActivationOptions opt;
  opt.stoplist_fraction = s.stoplist_fraction;
  opt.layout_seed = mix64(s.seed);
  if (!s.category.empty()) {
    const auto lexicon = resolve_lexicon(s.lexicon);
    opt.concept_keywords = lexicon.at(s.category).keywords;
    opt.cluster_size = s.cluster_size;
    if (s.plant == "shared") {
      opt.plant = ConceptPlant::shared;
    } else if (s.plant == "unrelated") {
      opt.plant = ConceptPlant::unrelated;
    } else {
      throw InputError("--plant must be shared or unrelated");
    }
  }

  const fs::path dir = s.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

  json manifest = {{"tokens", "tokens.tokens.jsonl"},
                   {"a", {{"model", "A"}, {"layers", json::array()}}},
                   {"b", {{"model", "B"}, {"layers", json::array()}}}};
  std::optional<TokenTable> shared_tokens;
  for (int layer = 0; layer < s.layers; ++layer) {
    const auto l = static_cast<std::uint64_t>(layer);
    const auto a = gen_space(s.features, s.dim, stream_seed(s.seed, 4 * l), "A", layer);
    std::optional<FeatureSpace> b;
    std::vector<Index> truth;
    if (s.independent) {
      b.emplace(gen_space(s.features, s.dim, stream_seed(s.seed, 4 * l + 3), "B", layer));
      Rng rng(stream_seed(s.seed, 4 * l + 1));
      truth = rng.permutation(s.features);
    } else {
      auto p = perturb_space(a, !s.no_rotate, !s.no_permute, s.sigma, stream_seed(s.seed, 4 * l + 1));
      b.emplace(FeatureSpace(p.space.weights(), "B", layer));
      truth = std::move(p.truth);
    }
    for (Index i = s.features - s.unpaired; i < s.features; ++i) truth[static_cast<std::size_t>(i)] = -1;

    const auto acts = gen_paired_activations(a, *b, truth, s.tokens, s.snr, stream_seed(s.seed, 4 * l + 2), opt);
    if (!shared_tokens) {
      shared_tokens = acts.tokens;
      io::save_token_table(dir / "tokens.tokens.jsonl", acts.tokens);
    } else if (!(acts.tokens == *shared_tokens)) {
      throw InputError("synthetic: layers produced different token tables");
    }

    const std::string tag = "_L" + std::to_string(layer);
    io::save_npy(dir / ("a" + tag + ".weights.npy"), a.weights());
    io::save_npy(dir / ("b" + tag + ".weights.npy"), b->weights());
    io::save_npy(dir / ("a" + tag + ".acts.npy"), acts.a.acts(), io::DType::f32);
    io::save_npy(dir / ("b" + tag + ".acts.npy"), acts.b.acts(), io::DType::f32);
    const json truth_doc = {{"truth", truth},
                            {"stoplisted_a", index_list(acts.stoplisted_a)},
                            {"stoplisted_b", index_list(acts.stoplisted_b)},
                            {"planted_a", index_list(acts.planted_a)},
                            {"planted_b", index_list(acts.planted_b)}};
    io::write_file(dir / ("truth" + tag + ".json"), truth_doc.dump(1) + "\n");
    manifest["a"]["layers"].push_back(
        {{"layer", layer}, {"weights", "a" + tag + ".weights.npy"}, {"acts", "a" + tag + ".acts.npy"}});
    manifest["b"]["layers"].push_back(
        {{"layer", layer}, {"weights", "b" + tag + ".weights.npy"}, {"acts", "b" + tag + ".acts.npy"}});
    out << "layer " << layer << ": " << s.features << " features x " << s.dim << " dims, " << s.tokens
        << " tokens, stoplisted " << acts.stoplisted_a.size() << "/" << acts.stoplisted_b.size() << ", planted "
        << acts.planted_a.size() << "/" << acts.planted_b.size() << "\n";
  }
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << (dir / "manifest.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- validate

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string describe_file(const fs::path& path) {
  const std::string name = path.filename().string();
  if (ends_with(name, ".jsonl")) {
    const auto t = io::load_token_table(path);
    return "token table, " + std::to_string(t.size()) + " tokens";
  }
  if (ends_with(name, ".lexicon")) {
    const auto lex = io::load_lexicon(path);
    return "lexicon, " + std::to_string(lex.categories().size()) + " categories";
  }
  if (ends_with(name, ".json")) {
    const auto m = load_manifest(path);
    const auto tokens = io::load_token_table(m.tokens);
    std::size_t n = 0;
    for (const auto* side : {&m.a, &m.b}) {
      for (const auto& f : *side) {
        const auto l = load_layer(f, "", tokens, m.tokens);
        if (!l.error.empty()) throw InputError("layer " + std::to_string(f.layer) + ": " + l.error);
        if (l.space->n_features() != l.acts->n_features()) {
          throw InputError("layer " + std::to_string(f.layer) + ": weights have " +
                           std::to_string(l.space->n_features()) + " features, activations " +
                           std::to_string(l.acts->n_features()));
        }
        ++n;
      }
    }
    return "manifest, " + std::to_string(n) + " layer entries, " + std::to_string(tokens.size()) + " tokens";
  }
  const auto mtx = io::load_matrix(path);
  require_finite(mtx);
  return "matrix " + std::to_string(mtx.rows()) + " x " + std::to_string(mtx.cols());
}

int cmd_validate(const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
  int code = kExitOk;
  for (const auto& f : files) {
    try {
      out << "ok     " << f << "  (" << describe_file(f) << ")\n";
    } catch (const Error& e) {
      err << "error  " << f << ": " << e.what() << "\n";
      code = kExitInput;
    }
  }
  return code;
}

}  // namespace

std::string config_hash(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> injected;
  std::istringstream text(io::read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(text, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config " + path + ": expected key = value", static_cast<std::uint64_t>(lineno),
                        FormatError::Location::line);
    }
    const auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") {
      throw FormatError("config " + path + ": bad key", static_cast<std::uint64_t>(lineno), FormatError::Location::line);
    }
    if (given(key)) continue;
    std::string compact;
    for (char c : value) {
      if (c != ' ') compact.push_back(c);
    }
    injected.push_back("--" + key + "=" + (value.find(',') != std::string::npos ? compact : value));
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compare sparse-autoencoder feature spaces across models", "saesim"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  PipelineOpts po;
  InputOpts in;
  auto* score = app.add_subcommand("score", "Pair features, filter, score, and test against a shuffle null");
  add_input_options(score, in);
  add_pipeline_options(score, po);
  score->add_option("--null-samples", po.null_samples, "Shuffle-null sample count");

  std::string manifest, svg;
  auto* sweep = app.add_subcommand("sweep", "Score every layer pair listed in a manifest");
  sweep->add_option("--manifest", manifest, "JSON manifest of layer-tagged files")->required();
  sweep->add_option("--svg", svg, "Also render a heatmap to this SVG path");
  add_pipeline_options(sweep, po);
  sweep->add_option("--null-samples", po.null_samples, "Shuffle-null sample count");

  std::vector<std::string> categories;
  std::string lexicon;
  Index test2_samples = kSubspaceNullSamples;
  PipelineOpts spo;
  spo.null_samples = kSubspaceNullSamples;
  spo.filters = {kFilterNonconcept, kFilterOneToOne};
  InputOpts sin;
  auto* subspace = app.add_subcommand("subspace", "Semantic-subspace Tests 1 and 2 per concept category");
  add_input_options(subspace, sin);
  add_pipeline_options(subspace, spo);
  subspace->add_option("--category", categories, "Concept categories")->required()->delimiter(',');
  subspace->add_option("--lexicon", lexicon, "Lexicon file (default: $SAESIM_LEXICON, then the shipped one)");
  subspace->add_option("--test1-samples,--null-samples", spo.null_samples, "Shuffled-pairing null size");
  subspace->add_option("--test2-samples", test2_samples, "Random-subset null size");

  SyntheticOpts so;
  auto* synthetic = app.add_subcommand("synthetic", "Write a fixture bundle with known ground truth");
  synthetic->add_option("--config", so.config, "Plain-text key = value file; flags win on conflict");
  synthetic->add_option("--out,-o", so.out, "Output directory")->required();
  synthetic->add_option("--features", so.features, "Features per space");
  synthetic->add_option("--dim", so.dim, "Decoder dimension");
  synthetic->add_option("--tokens", so.tokens, "Token positions");
  synthetic->add_option("--snr", so.snr, "Shared-signal to noise ratio (inf = noise-free)");
  synthetic->add_option("--sigma", so.sigma, "Decoder row noise of space B");
  synthetic->add_flag("--no-rotate", so.no_rotate, "Skip the orthogonal transform");
  synthetic->add_flag("--no-permute", so.no_permute, "Keep B rows in A order");
  synthetic->add_flag("--independent", so.independent, "Draw B independently of A");
  synthetic->add_option("--unpaired", so.unpaired, "Trailing A features without an activation partner");
  synthetic->add_option("--stoplist-fraction", so.stoplist_fraction, "Latents given a stoplist top token");
  synthetic->add_option("--category", so.category, "Plant a concept cluster from this category");
  synthetic->add_option("--lexicon", so.lexicon, "Lexicon file for --category");
  synthetic->add_option("--cluster-size", so.cluster_size, "Features in the planted cluster");
  synthetic->add_option("--plant", so.plant, "shared or unrelated");
  synthetic->add_option("--layers", so.layers, "Layers per model");
  synthetic->add_option("--seed", so.seed, "Master seed");

  std::vector<std::string> files;
  auto* validate = app.add_subcommand("validate", "Check matrices, token tables, lexicons and manifests");
  validate->add_option("files", files, "Files to check")->required();

  try {
    auto args = expand_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
      app.parse(rev);
    } catch (const CLI::ParseError& e) {
      std::ostringstream o, e2;
      const int code = app.exit(e, o, e2);
      out << o.str();
      err << e2.str();
      return code == 0 ? kExitOk : kExitInput;
    }
    if (score->parsed()) return cmd_score(in, po, out);
    if (sweep->parsed()) return cmd_sweep(manifest, svg, po, out);
    if (subspace->parsed()) return cmd_subspace(sin, spo, categories, lexicon, test2_samples, out, err);
    if (synthetic->parsed()) return cmd_synthetic(so, out);
    if (validate->parsed()) return cmd_validate(files, out, err);
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace saesim::cli
