#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "srf/error.hpp"
#include "srf/lexicon.hpp"
#include "srf/text.hpp"

namespace srf {

enum class EdgeType { is_a, associated_with, child_of };

inline std::optional<EdgeType> parse_edge_type(std::string_view s) {
  const auto k = normalize_phrase(s);
  if (k == "is a" || k == "isa") return EdgeType::is_a;
  if (k == "associated with" || k == "associated") return EdgeType::associated_with;
  if (k == "child of" || k == "child") return EdgeType::child_of;
  return std::nullopt;
}

/// Traversal weight per edge type. Hierarchy edges are followed at full
/// weight, associations at half.
struct EdgeTypeWeights {
  double is_a = 1.0;
  double child_of = 1.0;
  double associated_with = 0.5;

  double operator()(EdgeType t) const {
    switch (t) {
      case EdgeType::is_a: return is_a;
      case EdgeType::child_of: return child_of;
      case EdgeType::associated_with: return associated_with;
    }
    return 0.0;
  }
};

/// Directed, typed concept graph with normalized surface labels.
class ConceptGraph {
 public:
  struct Edge {
    std::size_t dst;
    EdgeType type;
    double weight;
  };

  std::size_t add_node(const std::string& id, std::string_view label) {
    const auto norm = normalize_phrase(label);
    if (norm.empty()) throw FormatError("concept '" + id + "' has an empty label");
    if (const auto it = index_.find(id); it != index_.end()) {
      if (labels_[it->second] != norm) {
        throw FormatError("concept '" + id + "' has conflicting labels '" + labels_[it->second] + "' and '" +
                          norm + "'");
      }
      return it->second;
    }
    const auto n = ids_.size();
    ids_.push_back(id);
    labels_.push_back(norm);
    adj_.emplace_back();
    index_.emplace(id, n);
    by_label_[norm].push_back(n);
    return n;
  }

  void add_edge(std::size_t src, std::size_t dst, EdgeType type, double weight) {
    if (src == dst) throw FormatError("self-loop on concept '" + ids_.at(src) + "'");
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw FormatError("edge weight must be positive and finite");
    }
    adj_.at(src).push_back({dst, type, weight});
  }

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::string& id(std::size_t n) const { return ids_.at(n); }
  const std::string& label(std::size_t n) const { return labels_.at(n); }
  const std::vector<Edge>& out_edges(std::size_t n) const { return adj_.at(n); }

  std::optional<std::size_t> find_id(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Nodes whose normalized label equals the normalized phrase.
  std::vector<std::size_t> resolve(std::string_view phrase) const {
    const auto it = by_label_.find(normalize_phrase(phrase));
    if (it == by_label_.end()) return {};
    return it->second;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adj_) n += a.size();
    return n;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::vector<std::vector<Edge>> adj_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> by_label_;
};

/// Tab-separated rows: src_id, dst_id, edge_type, src_label, dst_label.
/// Blank lines and lines starting with '#' are skipped.
inline ConceptGraph parse_concept_graph(std::istream& in, const std::string& name,
                                        const EdgeTypeWeights& weights = {}) {
  ConceptGraph g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    const auto where = name + ":" + std::to_string(line_no) + ": ";
    if (cols.size() != 5) {
      throw FormatError(where + "expected 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    const auto type = parse_edge_type(cols[2]);
    if (!type) throw FormatError(where + "unknown edge type '" + cols[2] + "'");
    if (cols[0] == cols[1]) throw FormatError(where + "self-loop on '" + cols[0] + "'");
    try {
      const auto s = g.add_node(cols[0], cols[3]);
      const auto d = g.add_node(cols[1], cols[4]);
      g.add_edge(s, d, *type, weights(*type));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return g;
}

inline ConceptGraph load_concept_graph(const std::string& path, const EdgeTypeWeights& weights = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read concept graph '" + path + "'");
  return parse_concept_graph(in, path, weights);
}

enum class WalkMode { exact, sampled };

struct WalkConfig {
  double restart_prob = 0.15;
  std::size_t steps = 10000;  // sampled mode: transitions per category
  double min_visit_weight = 0.1;
  WalkMode mode = WalkMode::exact;
  std::uint64_t seed = 42;
  double tolerance = 1e-14;  // exact mode: L1 change between iterates
  std::size_t max_iterations = 100000;
};

struct CategoryWalkReport {
  std::string category;
  std::size_t seed_terms = 0;
  std::size_t resolved_seed_terms = 0;
  std::size_t seed_nodes = 0;
  std::size_t added_terms = 0;
  std::size_t iterations = 0;  // exact: power iterations; sampled: steps taken
  std::vector<std::string> unresolved;
};

struct ExpansionResult {
  Lexicon lexicon;
  std::vector<CategoryWalkReport> categories;
  std::vector<std::string> warnings;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random walk with restart, exact: iterate p <- r*s + (1-r)*(P^T p + dangling*s)
/// until the L1 change drops below the tolerance.
inline std::vector<double> rwr_power(const ConceptGraph& g, const std::vector<std::size_t>& seeds, double r,
                                     double tol, std::size_t max_iter, std::size_t& iterations) {
  const auto n = g.size();
  std::vector<double> restart(n, 0.0);
  for (const auto s : seeds) restart[s] += 1.0 / static_cast<double>(seeds.size());
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (const auto& e : g.out_edges(u)) out_weight[u] += e.weight;

  std::vector<double> p = restart, next(n);
  iterations = 0;
  while (iterations < max_iter) {
    ++iterations;
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      if (p[u] == 0.0) continue;
      if (out_weight[u] == 0.0) {
        dangling += p[u];
        continue;
      }
      for (const auto& e : g.out_edges(u)) next[e.dst] += (1.0 - r) * p[u] * e.weight / out_weight[u];
    }
    const double back = r + (1.0 - r) * dangling;
    double change = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      next[u] += back * restart[u];
      change += std::abs(next[u] - p[u]);
    }
    p.swap(next);
    if (change < tol) break;
  }
  return p;
}

inline std::vector<double> rwr_sampled(const ConceptGraph& g, const std::vector<std::size_t>& seeds, double r,
                                       std::size_t steps, std::mt19937_64& rng) {
  std::vector<double> visits(g.size(), 0.0);
  auto pick_seed = [&] { return seeds[static_cast<std::size_t>(uniform01(rng) * seeds.size())]; };
  std::size_t at = pick_seed();
  visits[at] += 1.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto& edges = g.out_edges(at);
    if (edges.empty() || uniform01(rng) < r) {
      at = pick_seed();
    } else {
      double total = 0.0;
      for (const auto& e : edges) total += e.weight;
      double x = uniform01(rng) * total;
      std::size_t next = edges.back().dst;
      for (const auto& e : edges) {
        if (x < e.weight) {
          next = e.dst;
          break;
        }
        x -= e.weight;
      }
      at = next;
    }
    visits[at] += 1.0;
  }
  return visits;
}

}  // namespace detail

/// Expands every category of `lex` over `graph`: the category's terms seed a
/// random walk with restart, visit mass is scaled so the most visited node has
/// weight 1, and node labels at or above `min_visit_weight` join the category
/// with that weight. Existing terms are never removed or weakened.
inline ExpansionResult expand_by_guided_walk(const Lexicon& lex, const ConceptGraph& graph, const WalkConfig& cfg) {
  if (graph.empty()) throw ConfigError("concept graph is empty");
  if (!(cfg.restart_prob > 0.0 && cfg.restart_prob < 1.0)) {
    throw ConfigError("restart probability must lie in (0,1)");
  }
  if (cfg.steps < 1) throw ConfigError("walk steps must be >= 1");
  if (!(cfg.min_visit_weight >= 0.0 && cfg.min_visit_weight <= 1.0)) {
    throw ConfigError("min_visit_weight must lie in [0,1]");
  }

  ExpansionResult res{lex, {}, {}};
  std::size_t cat_index = 0;
  for (const auto& [cat, terms] : lex.raw()) {
    CategoryWalkReport rep;
    rep.category = cat;
    rep.seed_terms = terms.size();
    std::vector<std::size_t> seeds;
    for (const auto& [t, _] : terms) {
      const auto nodes = graph.resolve(t);
      if (nodes.empty()) {
        rep.unresolved.push_back(t);
        continue;
      }
      ++rep.resolved_seed_terms;
      seeds.insert(seeds.end(), nodes.begin(), nodes.end());
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    rep.seed_nodes = seeds.size();
    if (!rep.unresolved.empty()) {
      res.warnings.push_back("category '" + cat + "': " + std::to_string(rep.unresolved.size()) +
                             " seed term(s) not found in graph");
    }
    if (!seeds.empty()) {
      std::vector<double> mass;
      if (cfg.mode == WalkMode::exact) {
        mass = detail::rwr_power(graph, seeds, cfg.restart_prob, cfg.tolerance, cfg.max_iterations, rep.iterations);
      } else {
        std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(cat_index)));
        mass = detail::rwr_sampled(graph, seeds, cfg.restart_prob, cfg.steps, rng);
        rep.iterations = cfg.steps;
      }
      const double top = *std::max_element(mass.begin(), mass.end());
      for (std::size_t u = 0; u < graph.size(); ++u) {
        if (!(mass[u] > 0.0)) continue;
        double w = mass[u] / top;
        // Exact ties with the maximum can lose the last ulp in the division.
        if (w > 1.0 - 1e-12) w = 1.0;
        if (w < cfg.min_visit_weight) continue;
        const auto& label = graph.label(u);
        if (!res.lexicon.weight(cat, label)) ++rep.added_terms;
        res.lexicon.add(cat, label, w);
      }
    }
    res.categories.push_back(std::move(rep));
    ++cat_index;
  }
  return res;
}

/// Runs the expansion once per graph and unions the results.
inline ExpansionResult expand_over_graphs(const Lexicon& lex, const std::vector<ConceptGraph>& graphs,
                                          const WalkConfig& cfg) {
  if (graphs.empty()) return {lex, {}, {}};
  ExpansionResult out;
  std::vector<Lexicon> parts;
  for (const auto& g : graphs) {
    auto r = expand_by_guided_walk(lex, g, cfg);
    parts.push_back(std::move(r.lexicon));
    for (auto& c : r.categories) out.categories.push_back(std::move(c));
    for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
  }
  out.lexicon = union_lexicons(parts, lex.name());
  return out;
}

inline nlohmann::json to_json(const CategoryWalkReport& r) {
  return {{"category", r.category},       {"seed_terms", r.seed_terms},
          {"resolved_seed_terms", r.resolved_seed_terms}, {"seed_nodes", r.seed_nodes},
          {"added_terms", r.added_terms}, {"iterations", r.iterations},
          {"unresolved", r.unresolved}};
}

}  // namespace srf
