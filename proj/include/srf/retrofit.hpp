#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/lexicon.hpp"

namespace srf {

enum class BetaMode { inverse_degree, uniform };

struct RetrofitConfig {
  double alpha = 1.0;          // pull toward the original vector
  std::size_t iterations = 10;
  BetaMode beta_mode = BetaMode::inverse_degree;
  bool term_edges = false;     // also link terms of the same category to each other
};

inline void validate(const RetrofitConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw ConfigError("retrofit alpha must be > 0");
  if (cfg.iterations < 1) throw ConfigError("retrofit iterations must be >= 1");
}

/// Undirected lexicon graph over vocabulary entries plus one anchor per
/// category. A category whose underscore-joined name is in the vocabulary
/// uses that entry as its anchor; otherwise a synthetic anchor starts at the
/// mean of the category's in-vocabulary seed terms (weight 1), or of all its
/// in-vocabulary terms when none is a seed.
struct LexiconGraph {
  std::size_t vocab_size = 0;
  std::vector<Vec> original;                     // q-hat, vocabulary nodes then synthetic anchors
  std::vector<std::vector<std::size_t>> neighbors;
  std::map<std::string, std::size_t> anchor_of;  // category -> node
  std::vector<std::string> skipped_terms;        // terms with no vocabulary entry

  std::size_t node_count() const { return original.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& nb : neighbors) n += nb.size();
    return n / 2;
  }
};

inline LexiconGraph build_lexicon_graph(const EmbeddingStore& store, const Lexicon& lex, bool term_edges) {
  LexiconGraph g;
  g.vocab_size = store.size();
  for (std::size_t i = 0; i < store.size(); ++i) g.original.push_back(store.vector(i));
  g.neighbors.resize(store.size());
  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto link = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    if (edges.insert({std::min(a, b), std::max(a, b)}).second) {
      g.neighbors[a].push_back(b);
      g.neighbors[b].push_back(a);
    }
  };
  std::set<std::string> skipped;
  for (const auto& [cat, terms] : lex.raw()) {
    std::vector<std::size_t> members;
    std::vector<const Vec*> seeds, all;
    for (const auto& [t, w] : terms) {
      const auto idx = store.index_of(vocab_key(t));
      if (!idx) {
        skipped.insert(t);
        continue;
      }
      members.push_back(*idx);
      all.push_back(&store.vector(*idx));
      if (w == 1.0) seeds.push_back(&store.vector(*idx));
    }
    if (members.empty()) continue;
    std::size_t anchor;
    if (const auto idx = store.index_of(vocab_key(cat))) {
      anchor = *idx;
    } else {
      anchor = g.original.size();
      g.original.push_back(mean_of(seeds.empty() ? all : seeds, store.dimension()));
      g.neighbors.emplace_back();
    }
    g.anchor_of.emplace(cat, anchor);
    for (const auto m : members) link(anchor, m);
    if (term_edges) {
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) link(members[i], members[j]);
    }
  }
  g.skipped_terms.assign(skipped.begin(), skipped.end());
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

struct RetrofitResult {
  EmbeddingStore store;              // same vocabulary and order as the input
  std::map<std::string, Vec> anchors;  // final category anchor vectors
  std::vector<double> objective;     // before the first round, then after each round
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
  std::vector<std::string> skipped_terms;
};

/// Per-node anchor strength of the quadratic objective the update minimizes:
/// alpha for uniform betas, alpha * degree for inverse-degree betas.
inline double anchor_strength(const RetrofitConfig& cfg, std::size_t degree) {
  return cfg.beta_mode == BetaMode::uniform ? cfg.alpha : cfg.alpha * static_cast<double>(degree);
}

/// sum_i a_i |q_i - qhat_i|^2 + sum_{edges ij} |q_i - q_j|^2 over graph nodes.
/// With beta_ij = c_i * w_ij the update below is the exact per-node
/// minimizer of this form when a_i = alpha / c_i, so each round cannot raise it.
inline double retrofit_objective(const LexiconGraph& g, const std::vector<Vec>& q, const RetrofitConfig& cfg) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& nb = g.neighbors[i];
    if (nb.empty()) continue;
    long double anchor = 0.0L;
    for (std::size_t d = 0; d < q[i].size(); ++d) {
      const long double diff = q[i][d] - g.original[i][d];
      anchor += diff * diff;
    }
    total += anchor_strength(cfg, nb.size()) * anchor;
    for (const auto j : nb) {
      if (j < i) continue;
      for (std::size_t d = 0; d < q[i].size(); ++d) {
        const long double diff = q[i][d] - q[j][d];
        total += diff * diff;
      }
    }
  }
  return static_cast<double>(total);
}

/// Jacobi rounds of q_i <- (alpha*qhat_i + sum_j beta_ij q_j) / (alpha + sum_j beta_ij),
/// every node reading the previous round. Nodes without edges keep their vector.
inline RetrofitResult retrofit(const EmbeddingStore& store, const Lexicon& lex, const RetrofitConfig& cfg = {}) {
  validate(cfg);
  const auto g = build_lexicon_graph(store, lex, cfg.term_edges);
  const auto dim = store.dimension();
  std::vector<Vec> q = g.original, next = g.original;

  RetrofitResult res;
  res.graph_nodes = g.node_count();
  res.graph_edges = g.edge_count();
  res.skipped_terms = g.skipped_terms;
  res.objective.push_back(retrofit_objective(g, q, cfg));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const auto& nb = g.neighbors[i];
      if (nb.empty()) continue;
      const double beta = cfg.beta_mode == BetaMode::uniform ? 1.0 : 1.0 / static_cast<double>(nb.size());
      auto& out = next[i];
      for (std::size_t d = 0; d < dim; ++d) out[d] = cfg.alpha * g.original[i][d];
      for (const auto j : nb)
        for (std::size_t d = 0; d < dim; ++d) out[d] += beta * q[j][d];
      const double denom = cfg.alpha + beta * static_cast<double>(nb.size());
      for (std::size_t d = 0; d < dim; ++d) out[d] /= denom;
    }
    q.swap(next);
    res.objective.push_back(retrofit_objective(g, q, cfg));
  }

  res.store = EmbeddingStore(dim);
  for (std::size_t i = 0; i < store.size(); ++i) res.store.set(store.tokens()[i], q[i]);
  for (const auto& [cat, node] : g.anchor_of) res.anchors.emplace(cat, q[node]);
  return res;
}

inline nlohmann::json to_json(const RetrofitResult& r, const RetrofitConfig& cfg) {
  return {{"alpha", cfg.alpha},
          {"iterations", cfg.iterations},
          {"beta_mode", cfg.beta_mode == BetaMode::uniform ? "uniform" : "inverse-degree"},
          {"term_edges", cfg.term_edges},
          {"graph_nodes", r.graph_nodes},
          {"graph_edges", r.graph_edges},
          {"objective", r.objective},
          {"skipped_terms", r.skipped_terms}};
}

}  // namespace srf
