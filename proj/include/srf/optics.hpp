#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/parallel.hpp"

namespace srf {

enum class Metric { cosine, euclidean };

struct OpticsParams {
  std::size_t min_pts = 5;  // neighborhood size, the point itself included
  double max_eps = std::numeric_limits<double>::infinity();
  Metric metric = Metric::cosine;
};

inline void validate(const OpticsParams& p) {
  if (p.min_pts < 2) throw ConfigError("min_pts must be >= 2");
  if (!(p.max_eps > 0.0)) throw ConfigError("max_eps must be > 0");
}

inline double distance(Metric m, std::span<const double> a, std::span<const double> b) {
  return m == Metric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

struct ReachabilityPoint {
  std::string doc_id;
  std::size_t order_index = 0;
  std::optional<double> reachability;  // undefined for the first point of each component
  std::optional<double> core_distance;  // undefined when fewer than min_pts within max_eps
  bool operator==(const ReachabilityPoint&) const = default;
};

namespace detail {

/// Points sorted by document id; all ties downstream break on this order.
inline std::vector<const DocumentVector*> sorted_points(const std::vector<DocumentVector>& vectors,
                                                        const OpticsParams& params) {
  validate(params);
  if (vectors.size() < params.min_pts) {
    throw DomainError("OPTICS needs at least min_pts=" + std::to_string(params.min_pts) + " points, got " +
                      std::to_string(vectors.size()));
  }
  std::vector<const DocumentVector*> pts;
  for (const auto& v : vectors) {
    if (params.metric == Metric::cosine && is_zero(v.vector)) {
      throw DomainError("zero vector for '" + v.doc_id + "' has no cosine distance");
    }
    pts.push_back(&v);
  }
  std::sort(pts.begin(), pts.end(), [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i]->doc_id == pts[i - 1]->doc_id) throw DomainError("duplicate document id '" + pts[i]->doc_id + "'");
  }
  return pts;
}

}  // namespace detail

/// OPTICS ordering. Core distance is the distance to the min_pts-th nearest
/// point counting the point itself; reachability of o from p is
/// max(core(p), d(p, o)). The next point expanded is the seed with the
/// smallest reachability, ties by document id; a new component starts at the
/// smallest unprocessed id. Distances are exhaustive pairwise.
inline std::vector<ReachabilityPoint> optics_order(const std::vector<DocumentVector>& vectors,
                                                   const OpticsParams& params, std::size_t threads = 1) {
  const auto pts = detail::sorted_points(vectors, params);
  const auto n = pts.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) dist[i][j] = distance(params.metric, pts[i]->vector, pts[j]->vector);
    }
  });
  // Symmetric by construction for cosine; enforce for both metrics.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[j][i] = dist[i][j];

  std::vector<std::optional<double>> core(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> within;
    for (std::size_t j = 0; j < n; ++j)
      if (dist[i][j] <= params.max_eps) within.push_back(dist[i][j]);
    if (within.size() < params.min_pts) return;
    std::nth_element(within.begin(), within.begin() + static_cast<std::ptrdiff_t>(params.min_pts - 1), within.end());
    core[i] = within[params.min_pts - 1];
  });

  std::vector<std::optional<double>> reach(n);
  std::vector<bool> processed(n, false);
  std::vector<ReachabilityPoint> out;
  out.reserve(n);
  std::set<std::pair<double, std::size_t>> seeds;

  auto emit = [&](std::size_t p) {
    processed[p] = true;
    out.push_back({pts[p]->doc_id, out.size(), reach[p], core[p]});
  };
  auto update = [&](std::size_t p) {
    for (std::size_t o = 0; o < n; ++o) {
      if (processed[o] || dist[p][o] > params.max_eps) continue;
      const double r = std::max(*core[p], dist[p][o]);
      if (!reach[o]) {
        reach[o] = r;
        seeds.emplace(r, o);
      } else if (r < *reach[o]) {
        seeds.erase({*reach[o], o});
        reach[o] = r;
        seeds.emplace(r, o);
      }
    }
  };

  for (std::size_t start = 0; start < n; ++start) {
    if (processed[start]) continue;
    emit(start);
    if (!core[start]) continue;
    update(start);
    while (!seeds.empty()) {
      const auto q = seeds.begin()->second;
      seeds.erase(seeds.begin());
      emit(q);
      if (core[q]) update(q);
    }
  }
  return out;
}

enum class Extraction { threshold, xi };

struct ExtractConfig {
  Extraction method = Extraction::threshold;
  double xi = 0.05;
  std::size_t max_cut_candidates = 1024;
};

struct Cluster {
  std::size_t id = 0;
  std::vector<std::string> members;  // in ordering order
  Vec centroid;
};

struct ClusterResult {
  std::vector<Cluster> clusters;
  std::vector<std::string> noise;  // sorted
  std::vector<ReachabilityPoint> ordering;
  std::optional<double> cut;        // threshold method only
  bool under_target = false;
  std::size_t target_min_clusters = 0;
  Extraction method = Extraction::threshold;
};

/// Cluster label per ordering position (-1 = noise) for a reachability cut:
/// a point whose reachability exceeds the cut (or is undefined) starts a new
/// cluster when its core distance is within the cut and is noise otherwise;
/// every other point joins the most recently started cluster. Clusters smaller
/// than min_pts are then turned into noise.
inline std::vector<int> cut_labels(const std::vector<ReachabilityPoint>& ordering, double cut, std::size_t min_pts) {
  std::vector<int> labels(ordering.size(), -1);
  int current = -1;
  int next_id = 0;
  for (std::size_t k = 0; k < ordering.size(); ++k) {
    const auto& p = ordering[k];
    if (!p.reachability || *p.reachability > cut) {
      if (p.core_distance && *p.core_distance <= cut) {
        current = next_id++;
        labels[k] = current;
      }
    } else {
      if (current < 0) current = next_id++;
      labels[k] = current;
    }
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(next_id), 0);
  for (const int l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  std::vector<int> remap(static_cast<std::size_t>(next_id), -1);
  int kept = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    if (sizes[c] >= min_pts) remap[c] = kept++;
  for (auto& l : labels)
    if (l >= 0) l = remap[static_cast<std::size_t>(l)];
  return labels;
}

inline std::size_t count_clusters(const std::vector<int>& labels) {
  int top = -1;
  for (const int l : labels) top = std::max(top, l);
  return static_cast<std::size_t>(top + 1);
}

/// Cut levels worth trying: the distinct defined reachability and core
/// distances, thinned to evenly spaced quantiles when there are many.
inline std::vector<double> cut_candidates(const std::vector<ReachabilityPoint>& ordering, std::size_t max_count) {
  std::vector<double> levels;
  for (const auto& p : ordering) {
    if (p.reachability) levels.push_back(*p.reachability);
    if (p.core_distance) levels.push_back(*p.core_distance);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (max_count >= 2 && levels.size() > max_count) {
    std::vector<double> thinned;
    for (std::size_t i = 0; i < max_count; ++i) {
      thinned.push_back(levels[i * (levels.size() - 1) / (max_count - 1)]);
    }
    thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
    levels.swap(thinned);
  }
  return levels;
}

namespace detail {

// Steep-area scan of the xi method; positions index the reachability plot
// with +inf appended. Returns (start, end) pairs, smaller clusters first
// within each steep-up area.
inline std::size_t extend_region(const std::vector<bool>& steep, const std::vector<bool>& xward, std::size_t start,
                                 std::size_t min_pts) {
  std::size_t non_xward = 0, end = start;
  for (std::size_t i = start; i < steep.size(); ++i) {
    if (steep[i]) {
      non_xward = 0;
      end = i;
    } else if (!xward[i]) {
      if (++non_xward > min_pts) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDown {
  std::size_t start, end;
  double mib;
};

inline std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(std::vector<double> plot, double xi,
                                                                   std::size_t min_pts) {
  plot.push_back(std::numeric_limits<double>::infinity());
  const double keep = 1.0 - xi;
  const auto n = plot.size() - 1;
  std::vector<bool> up_steep(n), down_steep(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];
    up_steep[i] = ratio <= keep;
    down_steep[i] = ratio >= 1.0 / keep;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }
  std::vector<SteepDown> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  auto filter_sdas = [&](double mib) {
    if (std::isinf(mib)) {
      sdas.clear();
      return;
    }
    std::vector<SteepDown> kept;
    for (auto s : sdas) {
      if (mib <= plot[s.start] * keep) {
        s.mib = std::max(s.mib, mib);
        kept.push_back(s);
      }
    }
    sdas.swap(kept);
  };
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep = 0; steep < n; ++steep) {
    if (!(up_steep[steep] || down_steep[steep]) || steep < index) continue;
    mib = std::max(mib, *std::max_element(plot.begin() + static_cast<std::ptrdiff_t>(index),
                                          plot.begin() + static_cast<std::ptrdiff_t>(steep + 1)));
    filter_sdas(mib);
    if (down_steep[steep]) {
      const auto d_end = extend_region(down_steep, up, steep, min_pts);
      sdas.push_back({steep, d_end, 0.0});
      index = d_end + 1;
      mib = plot[index];
    } else {
      const auto u_start = steep;
      const auto u_end = extend_region(up_steep, down, u_start, min_pts);
      index = u_end + 1;
      mib = plot[index];
      std::vector<std::pair<std::size_t, std::size_t>> found;
      for (const auto& d : sdas) {
        std::size_t c_start = d.start, c_end = u_end;
        if (plot[c_end + 1] * keep < d.mib) continue;
        const double d_max = plot[d.start];
        if (d_max * keep >= plot[c_end + 1]) {
          while (plot[c_start + 1] > plot[c_end + 1] && c_start < d.end) ++c_start;
        } else if (plot[c_end + 1] * keep >= d_max) {
          while (c_end > u_start && plot[c_end - 1] > d_max) --c_end;
        }
        if (c_end + 1 < c_start + min_pts) continue;
        if (c_start > d.end) continue;
        if (c_end < u_start) continue;
        found.emplace_back(c_start, c_end);
      }
      std::reverse(found.begin(), found.end());
      clusters.insert(clusters.end(), found.begin(), found.end());
    }
  }
  return clusters;
}

}  // namespace detail

/// Flat labels from the xi method: each cluster claims its span only if no
/// point in it is already labeled, so the innermost clusters win.
inline std::vector<int> xi_labels(const std::vector<ReachabilityPoint>& ordering, double xi, std::size_t min_pts) {
  std::vector<double> plot;
  for (const auto& p : ordering) {
    plot.push_back(p.reachability ? *p.reachability : std::numeric_limits<double>::infinity());
  }
  std::vector<int> labels(ordering.size(), -1);
  int next = 0;
  for (const auto& [s, e] : detail::xi_clusters(plot, xi, min_pts)) {
    bool free = true;
    for (std::size_t k = s; k <= e && free; ++k) free = labels[k] == -1;
    if (!free) continue;
    for (std::size_t k = s; k <= e; ++k) labels[k] = next;
    ++next;
  }
  return labels;
}

inline ClusterResult make_result(const std::vector<ReachabilityPoint>& ordering, const std::vector<int>& labels,
                                 const std::map<std::string, const Vec*>& vectors) {
  ClusterResult res;
  res.ordering = ordering;
  const auto k = count_clusters(labels);
  res.clusters.resize(k);
  for (std::size_t c = 0; c < k; ++c) res.clusters[c].id = c;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (labels[i] < 0) {
      res.noise.push_back(ordering[i].doc_id);
    } else {
      res.clusters[static_cast<std::size_t>(labels[i])].members.push_back(ordering[i].doc_id);
    }
  }
  std::sort(res.noise.begin(), res.noise.end());
  for (auto& c : res.clusters) {
    std::vector<const Vec*> vs;
    for (const auto& id : c.members) {
      const auto it = vectors.find(id);
      if (it == vectors.end()) throw DomainError("no vector for clustered document '" + id + "'");
      vs.push_back(it->second);
    }
    c.centroid = mean_of(vs, vs.front()->size());
  }
  return res;
}

/// Turns an ordering into flat clusters. The threshold method scans the cut
/// candidates and keeps the loosest cut that yields at least
/// `target_min_clusters`; if none does, the cut with the most clusters
/// (loosest on ties) is kept and `under_target` is set.
inline ClusterResult extract_clusters(const std::vector<ReachabilityPoint>& ordering,
                                      const std::vector<DocumentVector>& vectors, std::size_t target_min_clusters,
                                      const OpticsParams& params, const ExtractConfig& cfg = {}) {
  validate(params);
  std::map<std::string, const Vec*> by_id;
  for (const auto& v : vectors) by_id.emplace(v.doc_id, &v.vector);

  std::vector<int> labels(ordering.size(), -1);
  std::optional<double> chosen;
  if (cfg.method == Extraction::xi) {
    if (!(cfg.xi > 0.0 && cfg.xi < 1.0)) throw ConfigError("xi must lie in (0,1)");
    labels = xi_labels(ordering, cfg.xi, params.min_pts);
  } else {
    const auto levels = cut_candidates(ordering, cfg.max_cut_candidates);
    std::size_t best_count = 0;
    std::optional<double> best_level;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      auto l = cut_labels(ordering, *it, params.min_pts);
      const auto c = count_clusters(l);
      if (c >= target_min_clusters) {
        chosen = *it;
        labels = std::move(l);
        break;
      }
      if (!best_level || c > best_count) {
        best_count = c;
        best_level = *it;
      }
    }
    if (!chosen && best_level) {
      chosen = best_level;
      labels = cut_labels(ordering, *best_level, params.min_pts);
    }
  }
  auto res = make_result(ordering, labels, by_id);
  res.cut = chosen;
  res.method = cfg.method;
  res.target_min_clusters = target_min_clusters;
  res.under_target = res.clusters.size() < target_min_clusters;
  return res;
}

/// True when clusters are disjoint, each has at least min_pts members, and
/// clusters plus noise cover exactly the ordered documents.
inline bool is_partition(const ClusterResult& r, std::size_t min_pts) {
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& c : r.clusters) {
    if (c.members.size() < min_pts) return false;
    for (const auto& m : c.members) {
      seen.insert(m);
      ++total;
    }
  }
  for (const auto& m : r.noise) {
    seen.insert(m);
    ++total;
  }
  if (seen.size() != total || total != r.ordering.size()) return false;
  for (const auto& p : r.ordering)
    if (!seen.count(p.doc_id)) return false;
  return true;
}

inline void write_ordering_csv(std::ostream& out, const std::vector<ReachabilityPoint>& ordering) {
  out << "order_index,doc_id,reachability,core_distance\n";
  for (const auto& p : ordering) {
    out << p.order_index << ',' << p.doc_id << ',';
    if (p.reachability) out << format_double(*p.reachability);
    out << ',';
    if (p.core_distance) out << format_double(*p.core_distance);
    out << '\n';
  }
}

inline nlohmann::json to_json(const ClusterResult& r) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : r.clusters) {
    clusters.push_back({{"cluster_id", c.id}, {"member_ids", c.members}, {"centroid", c.centroid}});
  }
  return {{"clusters", clusters},
          {"noise", r.noise},
          {"cut", r.cut ? nlohmann::json(*r.cut) : nlohmann::json(nullptr)},
          {"method", r.method == Extraction::xi ? "xi" : "threshold"},
          {"target_min_clusters", r.target_min_clusters},
          {"under_target", r.under_target}};
}

inline ClusterResult cluster_result_from_json(const nlohmann::json& j) {
  ClusterResult r;
  for (const auto& c : j.at("clusters")) {
    r.clusters.push_back(
        {c.at("cluster_id").get<std::size_t>(), c.at("member_ids").get<std::vector<std::string>>(),
         c.at("centroid").get<Vec>()});
  }
  r.noise = j.at("noise").get<std::vector<std::string>>();
  if (!j.at("cut").is_null()) r.cut = j.at("cut").get<double>();
  r.method = j.at("method").get<std::string>() == "xi" ? Extraction::xi : Extraction::threshold;
  r.target_min_clusters = j.at("target_min_clusters").get<std::size_t>();
  r.under_target = j.at("under_target").get<bool>();
  return r;
}

}  // namespace srf
