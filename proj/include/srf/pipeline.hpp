#pragma once

// Staged end-to-end workflow: config, stage runners, run manifest.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "srf/agreement.hpp"
#include "srf/concept_graph.hpp"
#include "srf/corpus.hpp"
#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/labeling.hpp"
#include "srf/lexicon.hpp"
#include "srf/optics.hpp"
#include "srf/relatedness.hpp"
#include "srf/retrofit.hpp"

namespace srf {

inline constexpr std::string_view kToolName = "srfmine";
inline constexpr std::string_view kToolVersion = "0.1.0";

inline constexpr std::array<std::string_view, 11> kStages = {
    "ingest", "filter", "lexicon-expand", "retrofit", "embed", "relate",
    "select", "cluster", "label",          "compare",  "agree"};

enum class KeyKind { path, real, integer, text, flag };

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  KeyKind kind;
  std::string_view help;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"social_corpus", "", KeyKind::path, "social posts, JSON lines"},
      {"clinical_corpus", "", KeyKind::path, "clinical notes, JSON lines"},
      {"srf_lexicon", "", KeyKind::path, "risk-factor lexicon, JSON lines"},
      {"severity_lexicon", "", KeyKind::path, "five-level severity lexicon"},
      {"exclusion_lexicon", "", KeyKind::path, "exclusion terms"},
      {"cue_lexicon", "", KeyKind::path, "negation/conjunction cues (built-in list when empty)"},
      {"stopwords", "", KeyKind::path, "stopword lexicon (built-in list when empty)"},
      {"accessory_lexicon", "", KeyKind::path, "accessory keywords (built-in list when empty)"},
      {"concept_graphs", "", KeyKind::path, "comma-separated concept graph TSV files"},
      {"vectors", "", KeyKind::path, "pre-trained word vectors, text format"},
      {"annotations", "", KeyKind::path, "annotation CSV; agreement is skipped when empty"},
      {"out", "out", KeyKind::path, "output directory"},
      {"seed", "42", KeyKind::integer, "random seed"},
      {"threads", "1", KeyKind::integer, "worker threads inside a stage"},
      {"embedding_dim", "300", KeyKind::integer, "expected vector dimension (50, 100, 200 or 300)"},
      {"walk_mode", "exact", KeyKind::text, "exact or sampled"},
      {"restart_prob", "0.15", KeyKind::real, "walk restart probability"},
      {"walk_steps", "10000", KeyKind::integer, "sampled walk steps per category"},
      {"min_visit_weight", "0.1", KeyKind::real, "minimum normalized visit weight for expansion"},
      {"weight_is_a", "1.0", KeyKind::real, "edge weight for is-a"},
      {"weight_child_of", "1.0", KeyKind::real, "edge weight for child-of"},
      {"weight_associated_with", "0.5", KeyKind::real, "edge weight for associated-with"},
      {"retrofit_alpha", "1.0", KeyKind::real, "retrofit anchor weight"},
      {"retrofit_iterations", "10", KeyKind::integer, "retrofit rounds"},
      {"retrofit_beta", "inverse-degree", KeyKind::text, "inverse-degree or uniform"},
      {"retrofit_term_edges", "false", KeyKind::flag, "link terms within a category"},
      {"tfidf", "false", KeyKind::flag, "idf-weighted document vectors"},
      {"sim_threshold", "0.9", KeyKind::real, "post similarity threshold in relatedness"},
      {"clamp_sr", "false", KeyKind::flag, "cap SR at 1 in the CSV and heatmap"},
      {"anchor_community", "SuicideWatch", KeyKind::text, "community relatedness is measured against"},
      {"community_threshold", "0.40", KeyKind::real, "minimum SR for a community to be selected"},
      {"min_pts", "5", KeyKind::integer, "OPTICS neighborhood size"},
      {"max_eps", "inf", KeyKind::real, "OPTICS neighborhood radius"},
      {"metric", "cosine", KeyKind::text, "cosine or euclidean"},
      {"extraction", "threshold", KeyKind::text, "threshold or xi"},
      {"xi", "0.05", KeyKind::real, "steepness for xi extraction"},
      {"target_min_clusters_social", "10", KeyKind::integer, "cluster count sought for social posts"},
      {"target_min_clusters_clinical", "7", KeyKind::integer, "cluster count sought for clinical notes"},
      {"label_margin", "0.05", KeyKind::real, "secondary label margin"},
      {"label_floor", "0.30", KeyKind::real, "similarity floor for a named risk factor"},
      {"share_weighting", "document", KeyKind::text, "document or cluster"},
      {"cooccurrence_top_k", "20", KeyKind::integer, "rows kept per co-occurrence arity (0 keeps all)"},
      {"agreement_threshold", "0.6", KeyKind::real, "groupwise acceptance threshold"},
      {"agreement_mode", "unanimous", KeyKind::text, "unanimous or majority"},
      {"agreement_metric", "nominal", KeyKind::text, "nominal or ordinal"},
      {"annotation_level", "post", KeyKind::text, "post or user"},
  };
  return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

/// Flat key = value settings. Relative paths resolve against the directory
/// of the file that set them, or the working directory for overrides.
class PipelineConfig {
 public:
  PipelineConfig() {
    for (const auto& k : config_keys()) values_.emplace(k.name, k.default_value);
  }

  static PipelineConfig parse(std::istream& in, const std::string& name, const std::filesystem::path& base) {
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(name + ":" + std::to_string(line_no) + ": expected key = value");
      }
      try {
        cfg.set(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))), base);
      } catch (const ConfigError& e) {
        throw ConfigError(name + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return cfg;
  }

  static PipelineConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    return parse(in, path.string(), std::filesystem::absolute(path).parent_path());
  }

  void set(const std::string& key, std::string value, const std::filesystem::path& base = {}) {
    const auto* k = find_key(key);
    if (!k) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = std::move(value);
    if (k->kind == KeyKind::path) bases_[key] = base;
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    const auto& v = get(key);
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
  }

  std::uint64_t integer(const std::string& key) const {
    const auto& v = get(key);
    try {
      std::size_t used = 0;
      if (v.empty() || v.front() == '-') throw std::invalid_argument(v);
      const auto x = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
  }

  bool flag(const std::string& key) const {
    const auto v = to_lower(get(key));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
  }

  /// Resolved path, or nullopt when the key is empty.
  std::optional<std::filesystem::path> path(const std::string& key) const {
    const auto& v = get(key);
    if (v.empty()) return std::nullopt;
    std::filesystem::path p(v);
    if (p.is_relative()) {
      const auto b = bases_.find(key);
      if (b != bases_.end() && !b->second.empty()) p = b->second / p;
    }
    return p;
  }

  std::filesystem::path required_path(const std::string& key) const {
    auto p = path(key);
    if (!p) throw ConfigError("config key '" + key + "' is required");
    return *p;
  }

  std::vector<std::filesystem::path> path_list(const std::string& key) const {
    std::vector<std::filesystem::path> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto t = trim(item);
      if (t.empty()) continue;
      std::filesystem::path p{std::string(t)};
      if (p.is_relative()) {
        const auto b = bases_.find(key);
        if (b != bases_.end() && !b->second.empty()) p = b->second / p;
      }
      out.push_back(p);
    }
    return out;
  }

  /// Every key except the output directory, as written.
  nlohmann::json snapshot() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_)
      if (k != "out") j[k] = v;
    return j;
  }

  void validate() const {
    auto in_open = [&](const char* key, double lo, double hi) {
      const double x = real(key);
      if (!(x > lo && x < hi)) {
        throw ConfigError("config key '" + std::string(key) + "' must lie in (" + format_double(lo) + ", " +
                          format_double(hi) + ")");
      }
    };
    auto one_of = [&](const char* key, std::initializer_list<std::string_view> allowed) {
      const auto& v = get(key);
      for (const auto a : allowed)
        if (v == a) return;
      throw ConfigError("config key '" + std::string(key) + "' has unsupported value '" + v + "'");
    };
    for (const auto& k : config_keys()) {
      switch (k.kind) {
        case KeyKind::real: (void)real(std::string(k.name)); break;
        case KeyKind::integer: (void)integer(std::string(k.name)); break;
        case KeyKind::flag: (void)flag(std::string(k.name)); break;
        default: break;
      }
    }
    in_open("sim_threshold", -1.0, 1.0);
    const double ct = real("community_threshold");
    if (!(ct >= 0.0 && ct <= 1.0)) throw ConfigError("config key 'community_threshold' must lie in [0, 1]");
    in_open("restart_prob", 0.0, 1.0);
    const double mv = real("min_visit_weight");
    if (!(mv > 0.0 && mv <= 1.0)) throw ConfigError("config key 'min_visit_weight' must lie in (0, 1]");
    for (const char* w : {"weight_is_a", "weight_child_of", "weight_associated_with"}) {
      if (!(real(w) >= 0.0)) throw ConfigError("config key '" + std::string(w) + "' must be >= 0");
    }
    if (integer("walk_steps") < 1) throw ConfigError("config key 'walk_steps' must be >= 1");
    if (!(real("retrofit_alpha") > 0.0)) throw ConfigError("config key 'retrofit_alpha' must be > 0");
    if (integer("retrofit_iterations") < 1) throw ConfigError("config key 'retrofit_iterations' must be >= 1");
    const auto dim = integer("embedding_dim");
    if (std::find(kSupportedDimensions.begin(), kSupportedDimensions.end(), dim) == kSupportedDimensions.end()) {
      throw ConfigError("config key 'embedding_dim' must be one of 50, 100, 200, 300");
    }
    if (integer("min_pts") < 2) throw ConfigError("config key 'min_pts' must be >= 2");
    if (!(real("max_eps") > 0.0)) throw ConfigError("config key 'max_eps' must be > 0");
    in_open("xi", 0.0, 1.0);
    const double margin = real("label_margin");
    if (!(margin >= 0.0 && margin < 1.0)) throw ConfigError("config key 'label_margin' must lie in [0, 1)");
    in_open("label_floor", -1.0, 1.0);
    in_open("agreement_threshold", -1.0, 1.0 + 1e-12);
    if (integer("threads") < 1) throw ConfigError("config key 'threads' must be >= 1");
    one_of("walk_mode", {"exact", "sampled"});
    one_of("retrofit_beta", {"inverse-degree", "uniform"});
    one_of("metric", {"cosine", "euclidean"});
    one_of("extraction", {"threshold", "xi"});
    one_of("share_weighting", {"document", "cluster"});
    one_of("agreement_mode", {"unanimous", "majority"});
    one_of("agreement_metric", {"nominal", "ordinal"});
    one_of("annotation_level", {"post", "user"});
    if (get("anchor_community").empty()) throw ConfigError("config key 'anchor_community' is required");
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::filesystem::path> bases_;
};

inline std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "' for checksum");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace detail {

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  body(out);
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  write_file(p, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

struct EmbeddedDoc {
  DocumentVector vec;
  std::string author, community;
  bool is_comment = false;
};

inline std::vector<EmbeddedDoc> read_embedded(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::vector<EmbeddedDoc> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EmbeddedDoc d;
    d.vec.doc_id = j.at("id").get<std::string>();
    d.vec.vector = j.at("vector").get<Vec>();
    d.vec.token_count = j.at("token_count").get<std::size_t>();
    d.author = j.at("author").get<std::string>();
    d.community = j.at("community").get<std::string>();
    d.is_comment = j.at("comment").get<bool>();
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<Cooccurrence> cooccurrence_from_json(const nlohmann::json& j) {
  std::vector<Cooccurrence> out;
  for (const auto& r : j) {
    out.push_back({r.at("srfs").get<std::vector<std::string>>(), r.at("doc_count").get<std::size_t>(),
                   r.at("cluster_count").get<std::size_t>()});
  }
  return out;
}

}  // namespace detail

/// Runs stages against one output directory. Each stage reads only earlier
/// stages' artifacts, rewrites its own `<out>/<stage>/` directory, and
/// updates manifest.json (checksums, config) and timings.json.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, std::ostream* log = nullptr) : cfg_(std::move(cfg)), log_(log) {
    cfg_.validate();
    out_ = cfg_.required_path("out");
  }

  const std::filesystem::path& out_dir() const noexcept { return out_; }

  void run(std::string_view stage) {
    using Fn = void (Pipeline::*)();
    static const std::map<std::string_view, Fn> table = {
        {"ingest", &Pipeline::ingest},   {"filter", &Pipeline::filter},   {"lexicon-expand", &Pipeline::expand},
        {"retrofit", &Pipeline::refit},  {"embed", &Pipeline::embed},     {"relate", &Pipeline::relate},
        {"select", &Pipeline::select},   {"cluster", &Pipeline::cluster}, {"label", &Pipeline::label},
        {"compare", &Pipeline::compare}, {"agree", &Pipeline::agree}};
    const auto it = table.find(stage);
    if (it == table.end()) throw ConfigError("unknown stage '" + std::string(stage) + "'");
    stage_ = std::string(stage);
    inputs_.clear();
    outputs_.clear();
    warnings_.clear();
    const auto t0 = std::chrono::steady_clock::now();
    (this->*(it->second))();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record(secs);
    if (log_) *log_ << "[" << stage_ << "] done in " << std::fixed << std::setprecision(3) << secs << " s\n";
  }

  void run_all() {
    for (const auto s : kStages) run(s);
  }

 private:
  // ---- bookkeeping ----

  std::filesystem::path artifact(std::string_view stage, std::string_view file) const {
    return out_ / std::string(stage) / std::string(file);
  }

  /// Upstream artifact; throws naming its producer when absent.
  std::filesystem::path need(std::string_view stage, std::string_view file) {
    const auto p = artifact(stage, file);
    if (!std::filesystem::exists(p)) throw MissingArtifact(p.string(), std::string(stage));
    inputs_.emplace(std::string(stage) + "/" + std::string(file), p);
    return p;
  }

  std::filesystem::path input(const std::string& key) {
    const auto p = cfg_.required_path(key);
    if (!std::filesystem::exists(p)) throw ConfigError("input '" + p.string() + "' for '" + key + "' not found");
    inputs_.emplace(key, p);
    return p;
  }

  std::optional<std::filesystem::path> optional_input(const std::string& key) {
    if (!cfg_.path(key)) return std::nullopt;
    return input(key);
  }

  /// Fresh stage directory; call only after all pre-flight checks.
  void begin_output() {
    const auto dir = out_ / stage_;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }

  std::filesystem::path output(std::string_view file) {
    const auto p = artifact(stage_, file);
    outputs_.emplace(stage_ + "/" + std::string(file), p);
    return p;
  }

  void record(double secs) {
    nlohmann::json manifest;
    const auto mpath = out_ / "manifest.json";
    if (std::filesystem::exists(mpath)) {
      try {
        manifest = detail::read_json(mpath);
      } catch (const FormatError&) {
        manifest = nlohmann::json::object();
      }
    }
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["config"] = cfg_.snapshot();
    nlohmann::json in = nlohmann::json::object(), out = nlohmann::json::object();
    for (const auto& [k, p] : inputs_) in[k] = sha256_file(p);
    for (const auto& [k, p] : outputs_) out[k] = sha256_file(p);
    manifest["stages"][stage_] = {{"inputs", in}, {"outputs", out}};
    detail::write_json(mpath, manifest);

    nlohmann::json timings = nlohmann::json::object();
    const auto tpath = out_ / "timings.json";
    if (std::filesystem::exists(tpath)) {
      try {
        timings = detail::read_json(tpath);
      } catch (const FormatError&) {
      }
    }
    timings[stage_] = secs;
    detail::write_json(tpath, timings);
  }

  std::size_t threads() const { return static_cast<std::size_t>(cfg_.integer("threads")); }

  Corpus read_corpus(const std::filesystem::path& p, Source s) {
    auto res = srf::ingest(p.string(), s);
    if (!res.rejects.empty()) throw FormatError(p.string() + ": unexpected invalid record");
    return std::move(res.corpus);
  }

  EmbeddingStore read_vectors(const std::filesystem::path& p) {
    auto store = load_embeddings(p.string(), LoadOptions{true}, &warnings_);
    if (store.dimension() != cfg_.integer("embedding_dim")) {
      throw ConfigError("vectors '" + p.string() + "' have dimension " + std::to_string(store.dimension()) +
                        " but embedding_dim is " + cfg_.get("embedding_dim"));
    }
    return store;
  }

  static constexpr std::array<std::pair<std::string_view, Source>, 2> kPlatforms = {
      {{"social", Source::social}, {"clinical", Source::clinical}}};

  // ---- stages ----

  void ingest() {
    const auto social = input("social_corpus");
    const auto clinical = input("clinical_corpus");
    auto rs = srf::ingest(social.string(), Source::social);
    auto rc = srf::ingest(clinical.string(), Source::clinical);
    begin_output();
    nlohmann::json report;
    for (const auto& [name, res] : {std::pair{"social", &rs}, std::pair{"clinical", &rc}}) {
      detail::write_file(output(std::string(name) + ".jsonl"), [&](std::ostream& o) { write_corpus(o, res->corpus); });
      detail::write_file(output(std::string(name) + ".rejects.jsonl"),
                         [&](std::ostream& o) { write_rejects(o, res->rejects); });
      report[name] = {{"accepted", res->corpus.size()}, {"rejected", res->rejects.size()}};
    }
    detail::write_json(output("report.json"), report);
  }

  void filter() {
    const auto exclusions = load_lexicon(input("exclusion_lexicon").string());
    const auto severity = load_lexicon(input("severity_lexicon").string());
    validate_severity_lexicon(severity);
    const auto cue_path = optional_input("cue_lexicon");
    const auto cues = cue_path ? load_lexicon(cue_path->string()) : default_cue_lexicon();
    std::vector<std::pair<std::string, PipelineFilterResult>> results;
    for (const auto& [name, src] : kPlatforms) {
      const auto corpus = read_corpus(need("ingest", std::string(name) + ".jsonl"), src);
      results.emplace_back(name, run_filters(corpus, exclusions, cues, severity));
    }
    begin_output();
    nlohmann::json report;
    for (const auto& [name, r] : results) {
      detail::write_file(output(name + ".jsonl"), [&](std::ostream& o) { write_corpus(o, r.kept); });
      report[name] = {{"exclusion", to_json(r.exclusion)},
                      {"negation_conjunction", to_json(r.negation)},
                      {"severity", r.severity ? to_json(*r.severity) : nlohmann::json(nullptr)},
                      {"total", to_json(r.total)}};
    }
    detail::write_json(output("report.json"), report);
  }

  void expand() {
    std::vector<std::string> warnings;
    const auto lex = load_lexicon(input("srf_lexicon").string(), &warnings);
    const EdgeTypeWeights weights{cfg_.real("weight_is_a"), cfg_.real("weight_child_of"),
                                  cfg_.real("weight_associated_with")};
    std::vector<ConceptGraph> graphs;
    for (const auto& p : cfg_.path_list("concept_graphs")) {
      if (!std::filesystem::exists(p)) throw ConfigError("concept graph '" + p.string() + "' not found");
      inputs_.emplace("concept_graphs:" + p.filename().string(), p);
      graphs.push_back(load_concept_graph(p.string(), weights));
    }
    WalkConfig wc;
    wc.restart_prob = cfg_.real("restart_prob");
    wc.steps = static_cast<std::size_t>(cfg_.integer("walk_steps"));
    wc.min_visit_weight = cfg_.real("min_visit_weight");
    wc.mode = cfg_.get("walk_mode") == "sampled" ? WalkMode::sampled : WalkMode::exact;
    wc.seed = cfg_.integer("seed");
    auto res = expand_over_graphs(lex, graphs, wc);
    if (graphs.empty()) warnings.push_back("no concept graphs configured; lexicon passed through unchanged");
    for (auto& w : res.warnings) warnings.push_back(std::move(w));
    begin_output();
    detail::write_file(output("srf_lexicon.jsonl"), [&](std::ostream& o) { write_lexicon(o, res.lexicon); });
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : res.categories) cats.push_back(to_json(c));
    detail::write_json(output("report.json"),
                       {{"walk",
                         {{"mode", cfg_.get("walk_mode")},
                          {"restart_prob", wc.restart_prob},
                          {"steps", wc.steps},
                          {"min_visit_weight", wc.min_visit_weight},
                          {"tolerance", wc.tolerance},
                          {"seed", wc.seed},
                          {"edge_weights",
                           {{"is-a", weights.is_a},
                            {"child-of", weights.child_of},
                            {"associated-with", weights.associated_with}}}}},
                        {"graphs", graphs.size()},
                        {"terms_before", lex.term_count()},
                        {"terms_after", res.lexicon.term_count()},
                        {"categories", cats},
                        {"warnings", warnings}});
  }

  void refit() {
    const auto lex = load_lexicon(need("lexicon-expand", "srf_lexicon.jsonl").string());
    const auto store = read_vectors(input("vectors"));
    RetrofitConfig rc;
    rc.alpha = cfg_.real("retrofit_alpha");
    rc.iterations = static_cast<std::size_t>(cfg_.integer("retrofit_iterations"));
    rc.beta_mode = cfg_.get("retrofit_beta") == "uniform" ? BetaMode::uniform : BetaMode::inverse_degree;
    rc.term_edges = cfg_.flag("retrofit_term_edges");
    const auto res = retrofit(store, lex, rc);
    begin_output();
    detail::write_file(output("vectors.txt"), [&](std::ostream& o) { write_embeddings(o, res.store); });
    auto report = to_json(res, rc);
    report["warnings"] = warnings_;
    detail::write_json(output("report.json"), report);
  }

  void embed() {
    const auto store = read_vectors(need("retrofit", "vectors.txt"));
    const auto phrases = load_lexicon(need("lexicon-expand", "srf_lexicon.jsonl").string());
    const auto sw_path = optional_input("stopwords");
    const auto stop = sw_path ? load_lexicon(sw_path->string()) : default_stopwords();
    const DocumentEmbedder embedder(store, stop, &phrases);
    const bool tfidf = cfg_.flag("tfidf");
    std::vector<std::pair<std::string, Corpus>> corpora;
    for (const auto& [name, src] : kPlatforms)
      corpora.emplace_back(name, read_corpus(need("filter", std::string(name) + ".jsonl"), src));
    begin_output();
    nlohmann::json report;
    for (const auto& [name, corpus] : corpora) {
      const auto idf = tfidf ? std::optional<IdfTable>(embedder.compute_idf(corpus)) : std::nullopt;
      const auto& docs = corpus.documents();
      std::vector<EmbedOutcome> outcomes(docs.size());
      parallel_for(docs.size(), threads(),
                   [&](std::size_t i) { outcomes[i] = embedder.embed(docs[i], idf ? &*idf : nullptr); });
      std::vector<std::string> unembeddable, degenerate;
      std::size_t ok = 0;
      detail::write_file(output(name + ".jsonl"), [&](std::ostream& o) {
        for (std::size_t i = 0; i < docs.size(); ++i) {
          const auto& r = outcomes[i];
          if (r.status == EmbedStatus::unembeddable) {
            unembeddable.push_back(docs[i].id);
            continue;
          }
          if (r.status == EmbedStatus::degenerate) {
            degenerate.push_back(docs[i].id);
            continue;
          }
          ++ok;
          o << nlohmann::json{{"id", docs[i].id},
                              {"author", docs[i].author},
                              {"community", docs[i].community},
                              {"comment", docs[i].is_comment},
                              {"token_count", r.vector.token_count},
                              {"vector", r.vector.vector}}
                   .dump()
            << '\n';
        }
      });
      report[name] = {{"input", docs.size()},
                      {"embedded", ok},
                      {"unembeddable", unembeddable},
                      {"degenerate", degenerate}};
    }
    report["tfidf"] = tfidf;
    report["dimension"] = store.dimension();
    detail::write_json(output("report.json"), report);
  }

  void relate() {
    const auto docs = detail::read_embedded(need("embed", "social.jsonl"));
    UserPostIndex index;
    for (const auto& d : docs)
      if (!d.is_comment) index.add(d.author, d.community, d.vec);
    const auto m = build_sr_matrix(index, index.communities(), cfg_.real("sim_threshold"), threads());
    const bool clamp = cfg_.flag("clamp_sr");
    begin_output();
    detail::write_file(output("sr_matrix.csv"), [&](std::ostream& o) { write_sr_csv(o, m, clamp); });
    detail::write_json(output("sr_matrix.json"), to_json(m));
    detail::write_file(output("sr_matrix.svg"), [&](std::ostream& o) { write_sr_svg(o, m); });
  }

  void select() {
    const auto m = sr_matrix_from_json(detail::read_json(need("relate", "sr_matrix.json")));
    const auto& anchor = cfg_.get("anchor_community");
    if (!m.index_of(anchor)) {
      throw ConfigError("anchor community '" + anchor + "' has no posts in the embedded social corpus");
    }
    const double thr = cfg_.real("community_threshold");
    const auto sel = select_communities(m, anchor, thr);
    nlohmann::json selected = nlohmann::json::array();
    std::vector<std::string> included{anchor};
    for (const auto& [c, sr] : sel) {
      selected.push_back({{"community", c}, {"sr", sr}});
      included.push_back(c);
    }
    begin_output();
    detail::write_json(output("communities.json"),
                       {{"anchor", anchor}, {"threshold", thr}, {"selected", selected}, {"included", included}});
  }

  void cluster() {
    const auto sel = detail::read_json(need("select", "communities.json"));
    const auto included = sel.at("included").get<std::vector<std::string>>();
    OpticsParams params;
    params.min_pts = static_cast<std::size_t>(cfg_.integer("min_pts"));
    params.max_eps = cfg_.real("max_eps");
    params.metric = cfg_.get("metric") == "euclidean" ? Metric::euclidean : Metric::cosine;
    ExtractConfig ec;
    ec.method = cfg_.get("extraction") == "xi" ? Extraction::xi : Extraction::threshold;
    ec.xi = cfg_.real("xi");
    std::vector<std::pair<std::string, std::vector<DocumentVector>>> sets;
    for (const auto& [name, _] : kPlatforms) {
      std::vector<DocumentVector> vs;
      for (auto& d : detail::read_embedded(need("embed", std::string(name) + ".jsonl"))) {
        if (name == "social" && std::find(included.begin(), included.end(), d.community) == included.end()) continue;
        vs.push_back(std::move(d.vec));
      }
      if (vs.size() < params.min_pts) {
        throw ConfigError("min_pts (" + std::to_string(params.min_pts) + ") exceeds the number of " +
                          std::string(name) + " documents to cluster (" + std::to_string(vs.size()) + ")");
      }
      sets.emplace_back(name, std::move(vs));
    }
    begin_output();
    for (const auto& [name, vs] : sets) {
      const auto target = static_cast<std::size_t>(cfg_.integer("target_min_clusters_" + name));
      const auto ordering = optics_order(vs, params, threads());
      const auto res = extract_clusters(ordering, vs, target, params, ec);
      detail::write_file(output(name + ".ordering.csv"), [&](std::ostream& o) { write_ordering_csv(o, ordering); });
      detail::write_json(output(name + ".clusters.json"), to_json(res));
    }
  }

  void label() {
    const auto store = read_vectors(need("retrofit", "vectors.txt"));
    const auto lex = load_lexicon(need("lexicon-expand", "srf_lexicon.jsonl").string());
    const auto acc_path = optional_input("accessory_lexicon");
    const auto accessory = acc_path ? load_lexicon(acc_path->string()) : default_accessory_lexicon();
    const LabelConfig lc{cfg_.real("label_margin"), cfg_.real("label_floor")};
    const auto top_k = static_cast<std::size_t>(cfg_.integer("cooccurrence_top_k"));
    std::vector<std::string> warnings;
    const auto srfs = build_srf_vectors(lex, store, &warnings);
    if (srfs.empty()) throw ConfigError("no risk-factor lexicon term is in the embedding vocabulary");
    struct Out {
      std::string name;
      nlohmann::json labels;
      std::map<std::size_t, std::vector<Cooccurrence>> co;
    };
    std::vector<Out> outs;
    for (const auto& [name, src] : kPlatforms) {
      const auto result = cluster_result_from_json(detail::read_json(need("cluster", std::string(name) + ".clusters.json")));
      const auto docs = read_corpus(need("filter", std::string(name) + ".jsonl"), src);
      auto labeled = label_clusters(result, srfs, lc);
      apply_accessory_rule(labeled, result, docs, lex, accessory);
      Corpus members(std::string(name), src);
      for (const auto& c : result.clusters)
        for (const auto& id : c.members)
          if (const auto* d = docs.find(id)) members.insert(*d);
      Out o{std::string(name), nlohmann::json::array(), {}};
      for (const auto& l : labeled) o.labels.push_back(to_json(l));
      for (const std::size_t arity : {2, 3}) o.co[arity] = srf_cooccurrence(labeled, members, lex, arity, top_k);
      outs.push_back(std::move(o));
    }
    begin_output();
    for (const auto& o : outs) {
      nlohmann::json co = nlohmann::json::object();
      for (const auto& [arity, rows] : o.co) {
        co[std::to_string(arity)] = to_json(rows);
        detail::write_file(output(o.name + ".cooccurrence" + std::to_string(arity) + ".csv"),
                           [&](std::ostream& s) { write_cooccurrence_csv(s, rows); });
      }
      std::vector<std::string> srf_names;
      for (const auto& s : srfs) srf_names.push_back(s.srf);
      detail::write_json(output(o.name + ".labels.json"), {{"platform", o.name},
                                                           {"clusters", o.labels},
                                                           {"cooccurrence", co},
                                                           {"srf_vectors", srf_names},
                                                           {"label_margin", lc.margin},
                                                           {"label_floor", lc.floor},
                                                           {"warnings", warnings}});
    }
  }

  void compare() {
    std::vector<PlatformLabels> platforms;
    std::vector<std::map<std::size_t, std::vector<Cooccurrence>>> cos;
    for (const auto& [name, _] : kPlatforms) {
      const auto j = detail::read_json(need("label", std::string(name) + ".labels.json"));
      PlatformLabels p{std::string(name), {}};
      for (const auto& c : j.at("clusters")) p.clusters.push_back(labeled_cluster_from_json(c));
      platforms.push_back(std::move(p));
      std::map<std::size_t, std::vector<Cooccurrence>> co;
      for (const auto& [k, rows] : j.at("cooccurrence").items())
        co[static_cast<std::size_t>(std::stoul(k))] = detail::cooccurrence_from_json(rows);
      cos.push_back(std::move(co));
    }
    auto report = compare_platforms(platforms[0], platforms[1]);
    report.a.cooccurrence = cos[0];
    report.b.cooccurrence = cos[1];
    report.label_config = {cfg_.real("label_margin"), cfg_.real("label_floor")};
    const bool by_cluster = cfg_.get("share_weighting") == "cluster";
    if (by_cluster) {
      std::swap(report.a.shares, report.a.cluster_shares);
      std::swap(report.b.shares, report.b.cluster_shares);
    }
    auto j = to_json(report);
    j["share_weighting"] = cfg_.get("share_weighting");
    if (by_cluster) {
      for (auto& p : j["platforms"]) {
        p["document_shares"] = p["cluster_shares"];
        p.erase("cluster_shares");
      }
    }
    begin_output();
    detail::write_json(output("report.json"), j);
    detail::write_file(output("report.txt"), [&](std::ostream& o) { render_report(o, report); });
  }

  void agree() {
    const auto path = optional_input("annotations");
    ProtocolConfig pc;
    pc.threshold = cfg_.real("agreement_threshold");
    pc.mode = cfg_.get("agreement_mode") == "majority" ? ConsensusMode::majority : ConsensusMode::unanimous;
    pc.metric = cfg_.get("agreement_metric") == "ordinal" ? AlphaMetric::ordinal : AlphaMetric::nominal;
    nlohmann::json j;
    if (!path) {
      j = {{"status", "skipped"}, {"reason", "no annotations configured"}};
    } else {
      const auto level = *parse_level(cfg_.get("annotation_level"));
      const auto set = load_annotations(path->string(), level);
      j = to_json(run_agreement_protocol(set, pc), pc);
      j["status"] = "ok";
      j["annotation_level"] = cfg_.get("annotation_level");
    }
    begin_output();
    detail::write_json(output("outcome.json"), j);
  }

  PipelineConfig cfg_;
  std::ostream* log_;
  std::filesystem::path out_;
  std::string stage_;
  std::map<std::string, std::filesystem::path> inputs_, outputs_;
  std::vector<std::string> warnings_;
};

}  // namespace srf
