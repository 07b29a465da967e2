#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srf/corpus.hpp"
#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/lexicon.hpp"
#include "srf/optics.hpp"

namespace srf {

/// Mean of the (retrofitted) vectors of one risk factor's lexicon terms.
struct SrfVector {
  std::string srf;  // canonical taxonomy spelling
  Vec vector;
  std::size_t term_count = 0;
};

/// One vector per taxonomy risk factor that has at least one in-vocabulary
/// term, in taxonomy order. The two mixed categories get no vector: other
/// important SRFs comes from the similarity floor and accessory from the
/// lexical rule.
inline std::vector<SrfVector> build_srf_vectors(const Lexicon& lex, const EmbeddingStore& store,
                                                std::vector<std::string>* warnings = nullptr) {
  std::map<std::size_t, SrfVector> found;
  for (const auto& cat : lex.category_names()) {
    const auto idx = srf_index(cat);
    if (!idx) {
      if (warnings) warnings->push_back("category '" + cat + "' is not a taxonomy risk factor; ignored");
      continue;
    }
    if (*idx >= 12) continue;
    std::vector<const Vec*> vs;
    for (const auto& t : lex.terms(cat)) {
      if (const auto* v = store.find_phrase(t.term)) vs.push_back(v);
    }
    if (vs.empty()) {
      if (warnings) warnings->push_back("risk factor '" + cat + "' has no in-vocabulary term");
      continue;
    }
    auto m = mean_of(vs, store.dimension());
    if (is_zero(m)) {
      if (warnings) warnings->push_back("risk factor '" + cat + "' term vectors cancel to zero");
      continue;
    }
    found[*idx] = {std::string(kSrfTaxonomy[*idx]), std::move(m), vs.size()};
  }
  std::vector<SrfVector> out;
  for (auto& [_, v] : found) out.push_back(std::move(v));
  return out;
}

struct LabelConfig {
  double margin = 0.05;  // extra labels within this much of the best similarity
  double floor = 0.30;   // below this best similarity the cluster is "other important SRFs"
};

inline void validate(const LabelConfig& cfg) {
  if (!(cfg.margin >= 0.0 && cfg.margin < 1.0)) throw ConfigError("label margin must lie in [0,1)");
  if (!(cfg.floor > -1.0 && cfg.floor < 1.0)) throw ConfigError("label floor must lie in (-1,1)");
}

enum class LabelRule { centroid, floor, accessory };

inline std::string_view to_string(LabelRule r) {
  switch (r) {
    case LabelRule::centroid: return "centroid";
    case LabelRule::floor: return "floor";
    case LabelRule::accessory: return "accessory";
  }
  return "?";
}

struct LabeledCluster {
  std::size_t cluster_id = 0;
  std::vector<std::pair<std::string, double>> labels;  // best first
  std::size_t doc_count = 0;
  LabelRule rule = LabelRule::centroid;

  const std::string& primary() const { return labels.front().first; }
};

/// Primary label is the risk factor whose vector is most cosine-similar to
/// the centroid (ties by taxonomy order); every factor within `margin` of the
/// best joins as a secondary label.
inline std::vector<LabeledCluster> label_clusters(const ClusterResult& result, const std::vector<SrfVector>& srfs,
                                                  const LabelConfig& cfg = {}) {
  validate(cfg);
  std::vector<LabeledCluster> out;
  if (result.clusters.empty()) return out;
  if (srfs.empty()) throw ConfigError("no risk-factor vectors to label clusters with");
  std::vector<const SrfVector*> ordered;
  for (const auto& s : srfs) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return srf_index(a->srf).value_or(99) < srf_index(b->srf).value_or(99);
  });
  for (const auto& c : result.clusters) {
    LabeledCluster lc;
    lc.cluster_id = c.id;
    lc.doc_count = c.members.size();
    std::vector<std::pair<std::string, double>> sims;
    double best = -2.0;
    for (const auto* s : ordered) {
      const double sim = cosine(c.centroid, s->vector);
      sims.emplace_back(s->srf, sim);
      best = std::max(best, sim);
    }
    if (best < cfg.floor) {
      lc.labels.emplace_back(std::string(kOtherSrf), best);
      lc.rule = LabelRule::floor;
    } else {
      for (const auto& s : sims)
        if (s.second >= best - cfg.margin) lc.labels.push_back(s);
      std::stable_sort(lc.labels.begin(), lc.labels.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
    }
    out.push_back(std::move(lc));
  }
  return out;
}

/// Relabels as accessory every cluster where accessory keywords make up more
/// than half of all lexicon matches in its member documents.
inline void apply_accessory_rule(std::vector<LabeledCluster>& labeled, const ClusterResult& result,
                                 const Corpus& docs, const Lexicon& srf_lex, const Lexicon& accessory) {
  Lexicon combined = union_lexicons({srf_lex.subset([&] {
                                       std::vector<std::string> keep;
                                       for (const auto& c : srf_lex.category_names())
                                         if (!is_mixed_srf(c)) keep.push_back(c);
                                       return keep;
                                     }()),
                                     accessory},
                                    "accessory-rule");
  const LexiconMatcher m(combined);
  std::map<std::size_t, const Cluster*> by_id;
  for (const auto& c : result.clusters) by_id.emplace(c.id, &c);
  for (auto& lc : labeled) {
    const auto it = by_id.find(lc.cluster_id);
    if (it == by_id.end()) continue;
    std::size_t total = 0, acc = 0;
    for (const auto& id : it->second->members) {
      const auto* d = docs.find(id);
      if (!d) continue;
      for (const auto& h : m.hits(tokenize(d->text))) {
        ++total;
        if (std::any_of(h.categories.begin(), h.categories.end(),
                        [](const std::string& c) { return srf_index(c) == srf_index(kAccessorySrf); })) {
          ++acc;
        }
      }
    }
    if (total > 0 && 2 * acc > total) {
      lc.labels = {{std::string(kAccessorySrf), static_cast<double>(acc) / static_cast<double>(total)}};
      lc.rule = LabelRule::accessory;
    }
  }
}

enum class Weighting { document, cluster };

struct SrfShare {
  std::string srf;
  double percent = 0.0;
  std::size_t count = 0;  // documents or clusters, per weighting
};

/// Share of clustered documents (or clusters) per primary label, highest
/// first, ties by taxonomy order. Empty optional when nothing was clustered.
inline std::optional<std::vector<SrfShare>> srf_frequency(const std::vector<LabeledCluster>& labeled,
                                                          Weighting w = Weighting::document) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& lc : labeled) {
    const std::size_t n = w == Weighting::document ? lc.doc_count : 1;
    counts[lc.primary()] += n;
    total += n;
  }
  if (total == 0) return std::nullopt;
  std::vector<SrfShare> out;
  for (const auto& [srf, n] : counts) {
    out.push_back({srf, 100.0 * static_cast<double>(n) / static_cast<double>(total), n});
  }
  std::sort(out.begin(), out.end(), [](const SrfShare& a, const SrfShare& b) {
    if (a.count != b.count) return a.count > b.count;
    return srf_index(a.srf).value_or(99) < srf_index(b.srf).value_or(99);
  });
  return out;
}

struct Cooccurrence {
  std::vector<std::string> srfs;  // taxonomy order
  std::size_t doc_count = 0;      // documents mentioning terms of every factor in the tuple
  std::size_t cluster_count = 0;  // multi-label clusters carrying every factor in the tuple
  std::size_t count() const { return doc_count + cluster_count; }
};

namespace detail {

template <typename Fn>
void for_each_subset(const std::vector<std::size_t>& items, std::size_t k, Fn&& fn) {
  if (k == 0 || k > items.size()) return;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  std::vector<std::size_t> tuple(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) tuple[i] = items[pick[i]];
    fn(tuple);
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == items.size() - k + i - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

}  // namespace detail

/// Co-mention counts for every tuple of `arity` risk factors, most frequent
/// first. `top_k` of 0 keeps all.
inline std::vector<Cooccurrence> srf_cooccurrence(const std::vector<LabeledCluster>& labeled, const Corpus& docs,
                                                  const Lexicon& lex, std::size_t arity, std::size_t top_k = 0) {
  if (arity < 2 || arity > 5) throw DomainError("co-occurrence arity must lie in {2,3,4,5}");
  const LexiconMatcher m(lex);
  std::map<std::vector<std::size_t>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& d : docs.documents()) {
    std::set<std::size_t> present;
    for (const auto& [cat, _] : m.match(tokenize(d.text))) {
      if (const auto i = srf_index(cat)) present.insert(*i);
    }
    const std::vector<std::size_t> items(present.begin(), present.end());
    detail::for_each_subset(items, arity, [&](const std::vector<std::size_t>& t) { ++counts[t].first; });
  }
  for (const auto& lc : labeled) {
    std::set<std::size_t> present;
    for (const auto& [srf, _] : lc.labels)
      if (const auto i = srf_index(srf)) present.insert(*i);
    const std::vector<std::size_t> items(present.begin(), present.end());
    detail::for_each_subset(items, arity, [&](const std::vector<std::size_t>& t) { ++counts[t].second; });
  }
  std::vector<std::pair<std::vector<std::size_t>, Cooccurrence>> rows;
  for (const auto& [t, c] : counts) {
    Cooccurrence co;
    for (const auto i : t) co.srfs.emplace_back(kSrfTaxonomy[i]);
    co.doc_count = c.first;
    co.cluster_count = c.second;
    rows.emplace_back(t, std::move(co));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second.count() > b.second.count(); });
  std::vector<Cooccurrence> out;
  for (auto& r : rows) {
    if (top_k && out.size() == top_k) break;
    out.push_back(std::move(r.second));
  }
  return out;
}

inline void write_cooccurrence_csv(std::ostream& out, const std::vector<Cooccurrence>& rows) {
  out << "srfs,doc_count,cluster_count,count\n";
  for (const auto& r : rows) {
    out << '"' << join(r.srfs, "|") << "\"," << r.doc_count << ',' << r.cluster_count << ',' << r.count() << '\n';
  }
}

struct PlatformLabels {
  std::string name;
  std::vector<LabeledCluster> clusters;
};

struct PlatformSummary {
  std::string name;
  std::vector<SrfShare> shares;          // document-weighted
  std::vector<SrfShare> cluster_shares;  // cluster-weighted
  std::set<std::string> labels;          // distinct primary labels
  std::size_t identified = 0;            // of the 14 taxonomy entries
  std::map<std::size_t, std::vector<Cooccurrence>> cooccurrence;  // by arity, filled by the caller
};

/// Commonalities and differences between two labeled platforms. The mixed
/// categories are reported in the shares but left out of the common and
/// exclusive sets, since their vectors do not stand for one risk factor.
struct ComparisonReport {
  PlatformSummary a, b;
  std::set<std::string> common, a_only, b_only;
  LabelConfig label_config;
};

inline PlatformSummary summarize(const PlatformLabels& p) {
  PlatformSummary s;
  s.name = p.name;
  if (auto sh = srf_frequency(p.clusters, Weighting::document)) s.shares = std::move(*sh);
  if (auto sh = srf_frequency(p.clusters, Weighting::cluster)) s.cluster_shares = std::move(*sh);
  for (const auto& lc : p.clusters) s.labels.insert(lc.primary());
  for (const auto& l : s.labels) s.identified += srf_index(l) ? 1 : 0;
  return s;
}

inline ComparisonReport compare_platforms(const PlatformLabels& a, const PlatformLabels& b) {
  ComparisonReport r;
  r.a = summarize(a);
  r.b = summarize(b);
  std::set<std::string> la, lb;
  for (const auto& l : r.a.labels)
    if (!is_mixed_srf(l)) la.insert(l);
  for (const auto& l : r.b.labels)
    if (!is_mixed_srf(l)) lb.insert(l);
  std::set_intersection(la.begin(), la.end(), lb.begin(), lb.end(), std::inserter(r.common, r.common.end()));
  std::set_difference(la.begin(), la.end(), lb.begin(), lb.end(), std::inserter(r.a_only, r.a_only.end()));
  std::set_difference(lb.begin(), lb.end(), la.begin(), la.end(), std::inserter(r.b_only, r.b_only.end()));
  return r;
}

inline nlohmann::json to_json(const LabeledCluster& lc) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& [s, sim] : lc.labels) labels.push_back({{"srf", s}, {"similarity", sim}});
  return {{"cluster_id", lc.cluster_id}, {"labels", labels}, {"doc_count", lc.doc_count},
          {"rule", std::string(to_string(lc.rule))}};
}

inline LabeledCluster labeled_cluster_from_json(const nlohmann::json& j) {
  LabeledCluster lc;
  lc.cluster_id = j.at("cluster_id").get<std::size_t>();
  lc.doc_count = j.at("doc_count").get<std::size_t>();
  for (const auto& l : j.at("labels")) lc.labels.emplace_back(l.at("srf").get<std::string>(), l.at("similarity").get<double>());
  const auto rule = j.at("rule").get<std::string>();
  lc.rule = rule == "floor" ? LabelRule::floor : rule == "accessory" ? LabelRule::accessory : LabelRule::centroid;
  if (lc.labels.empty()) throw FormatError("labeled cluster without labels");
  return lc;
}

inline nlohmann::json to_json(const std::vector<SrfShare>& shares) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : shares) out.push_back({{"srf", s.srf}, {"percent", s.percent}, {"count", s.count}});
  return out;
}

inline nlohmann::json to_json(const std::vector<Cooccurrence>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"srfs", r.srfs}, {"doc_count", r.doc_count}, {"cluster_count", r.cluster_count},
                   {"count", r.count()}});
  }
  return out;
}

inline nlohmann::json to_json(const PlatformSummary& s) {
  nlohmann::json co = nlohmann::json::object();
  for (const auto& [k, rows] : s.cooccurrence) co[std::to_string(k)] = to_json(rows);
  return {{"name", s.name},
          {"shares", to_json(s.shares)},
          {"cluster_shares", to_json(s.cluster_shares)},
          {"labels", s.labels},
          {"identified", s.identified},
          {"taxonomy_size", kSrfTaxonomy.size()},
          {"cooccurrence", co}};
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  return {{"platforms", {to_json(r.a), to_json(r.b)}},
          {"common", r.common},
          {"exclusive", {{r.a.name, r.a_only}, {r.b.name, r.b_only}}},
          {"label_margin", r.label_config.margin},
          {"label_floor", r.label_config.floor},
          {"share_weighting", "document"}};
}

/// Plain-text table: one row per taxonomy entry with both platforms' shares.
inline void render_report(std::ostream& out, const ComparisonReport& r) {
  auto share_of = [](const PlatformSummary& s, std::string_view srf) -> std::optional<double> {
    for (const auto& sh : s.shares)
      if (sh.srf == srf) return sh.percent;
    return std::nullopt;
  };
  char line[160];
  std::snprintf(line, sizeof line, "%-30s %12s %12s\n", "risk factor", r.a.name.c_str(), r.b.name.c_str());
  out << line << std::string(56, '-') << '\n';
  for (const auto srf : kSrfTaxonomy) {
    const auto x = share_of(r.a, srf), y = share_of(r.b, srf);
    char xs[16] = "-", ys[16] = "-";
    if (x) std::snprintf(xs, sizeof xs, "%.1f%%", *x);
    if (y) std::snprintf(ys, sizeof ys, "%.1f%%", *y);
    std::snprintf(line, sizeof line, "%-30s %12s %12s\n", std::string(srf).c_str(), xs, ys);
    out << line;
  }
  out << std::string(56, '-') << '\n';
  out << "identified: " << r.a.name << " " << r.a.identified << " of " << kSrfTaxonomy.size() << ", " << r.b.name
      << " " << r.b.identified << " of " << kSrfTaxonomy.size() << '\n';
  auto list = [](const std::set<std::string>& s) { return s.empty() ? std::string("(none)") : join({s.begin(), s.end()}, ", "); };
  out << "common: " << list(r.common) << '\n';
  out << r.a.name << " only: " << list(r.a_only) << '\n';
  out << r.b.name << " only: " << list(r.b_only) << '\n';
}

}  // namespace srf
