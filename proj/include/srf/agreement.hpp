#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srf/error.hpp"
#include "srf/lexicon.hpp"
#include "srf/text.hpp"

namespace srf {

enum class AnnotationLevel { user, post };

inline std::optional<AnnotationLevel> parse_level(std::string_view s) {
  const auto k = to_lower(trim(s));
  if (k == "user") return AnnotationLevel::user;
  if (k == "post") return AnnotationLevel::post;
  return std::nullopt;
}

inline std::string_view to_string(AnnotationLevel l) { return l == AnnotationLevel::user ? "user" : "post"; }

/// Items x annotators -> category, missing where an annotator skipped an item.
/// Annotators keep first-appearance order, which breaks selection ties.
class AnnotationSet {
 public:
  explicit AnnotationSet(std::vector<std::string> categories = {kSeverityLevels.begin(), kSeverityLevels.end()},
                         AnnotationLevel level = AnnotationLevel::post)
      : categories_(std::move(categories)), level_(level) {
    for (auto& c : categories_) c = to_lower(trim(c));
  }

  void add(const std::string& item, const std::string& annotator, std::string_view label) {
    const auto key = to_lower(trim(label));
    const auto c = std::find(categories_.begin(), categories_.end(), key);
    if (c == categories_.end()) throw FormatError("label '" + std::string(label) + "' is not a known category");
    const auto cat = static_cast<std::size_t>(c - categories_.begin());
    const auto i = intern(items_, item_index_, item);
    const auto a = intern(annotators_, annotator_index_, annotator);
    const auto [it, fresh] = labels_.try_emplace({i, a}, cat);
    if (!fresh && it->second != cat) {
      throw FormatError("conflicting labels for item '" + item + "' by '" + annotator + "'");
    }
  }

  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<std::string>& annotators() const noexcept { return annotators_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  AnnotationLevel level() const noexcept { return level_; }

  std::optional<std::size_t> label(std::size_t item, std::size_t annotator) const {
    const auto it = labels_.find({item, annotator});
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> annotator_index(const std::string& name) const {
    const auto it = annotator_index_.find(name);
    if (it == annotator_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t label_count() const noexcept { return labels_.size(); }

 private:
  static std::size_t intern(std::vector<std::string>& names, std::map<std::string, std::size_t>& index,
                            const std::string& name) {
    const auto [it, fresh] = index.try_emplace(name, names.size());
    if (fresh) names.push_back(name);
    return it->second;
  }

  std::vector<std::string> categories_;
  AnnotationLevel level_;
  std::vector<std::string> items_, annotators_;
  std::map<std::string, std::size_t> item_index_, annotator_index_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> labels_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// CSV with header `item_id,annotator,label,level`; rows of other levels are skipped.
inline AnnotationSet parse_annotations(std::istream& in, const std::string& name, AnnotationLevel level) {
  AnnotationSet set({kSeverityLevels.begin(), kSeverityLevels.end()}, level);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[to_lower(trim(fields[i]))] = i;
      for (const char* k : {"item_id", "annotator", "label", "level"}) {
        if (!col.count(k)) throw FormatError(name + ": header lacks column '" + k + "'");
      }
      continue;
    }
    const auto where = name + ":" + std::to_string(line_no) + ": ";
    if (fields.size() < col.size()) throw FormatError(where + "too few columns");
    const auto lvl = parse_level(fields[col["level"]]);
    if (!lvl) throw FormatError(where + "unknown level '" + fields[col["level"]] + "'");
    if (*lvl != level) continue;
    const auto item = std::string(trim(fields[col["item_id"]]));
    const auto who = std::string(trim(fields[col["annotator"]]));
    if (item.empty() || who.empty()) throw FormatError(where + "empty item_id or annotator");
    try {
      set.add(item, who, fields[col["label"]]);
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return set;
}

inline AnnotationSet load_annotations(const std::string& path, AnnotationLevel level) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read annotations '" + path + "'");
  return parse_annotations(in, path, level);
}

enum class AlphaMetric { nominal, ordinal };

/// Symmetric category x category coincidence counts: each item with m >= 2
/// values contributes 1/(m-1) for every ordered pair of values from distinct
/// annotators.
inline std::vector<std::vector<double>> coincidence_matrix(const AnnotationSet& set,
                                                           const std::vector<std::size_t>& annotators) {
  const auto k = set.categories().size();
  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < set.items().size(); ++i) {
    std::vector<std::size_t> values;
    for (const auto a : annotators)
      if (const auto l = set.label(i, a)) values.push_back(*l);
    if (values.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t x = 0; x < values.size(); ++x)
      for (std::size_t y = 0; y < values.size(); ++y)
        if (x != y) o[values[x]][values[y]] += w;
  }
  return o;
}

/// Krippendorff's alpha = 1 - (n-1) * sum o_ck d_ck / sum n_c n_k d_ck.
/// Undefined (nullopt) when no item has two values, or when all values fall
/// in one category and yet disagree (impossible for these metrics).
/// Perfect agreement within a single category is 1.
inline std::optional<double> krippendorff_alpha(const AnnotationSet& set, const std::vector<std::size_t>& annotators,
                                                AlphaMetric metric = AlphaMetric::nominal) {
  if (annotators.size() < 2) throw DomainError("alpha needs at least two annotators");
  const auto o = coincidence_matrix(set, annotators);
  const auto k = o.size();
  std::vector<double> n_c(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) n_c[c] += o[c][d];
    n += n_c[c];
  }
  if (n < 2.0) return std::nullopt;
  auto delta = [&](std::size_t c, std::size_t d) -> double {
    if (c == d) return 0.0;
    if (metric == AlphaMetric::nominal) return 1.0;
    const auto lo = std::min(c, d), hi = std::max(c, d);
    double s = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) s += n_c[g];
    s -= (n_c[lo] + n_c[hi]) / 2.0;
    return s * s;
  };
  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      const double dd = delta(c, d);
      observed += o[c][d] * dd;
      expected += n_c[c] * n_c[d] * dd;
    }
  }
  if (expected == 0.0) {
    if (observed == 0.0) return 1.0;
    return std::nullopt;
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

inline std::optional<double> krippendorff_alpha(const AnnotationSet& set, const std::vector<std::string>& names,
                                                AlphaMetric metric = AlphaMetric::nominal) {
  std::vector<std::size_t> idx;
  for (const auto& nm : names) {
    const auto i = set.annotator_index(nm);
    if (!i) throw DomainError("unknown annotator '" + nm + "'");
    idx.push_back(*i);
  }
  return krippendorff_alpha(set, idx, metric);
}

struct PairwiseResult {
  std::map<std::pair<std::string, std::string>, std::optional<double>> pairwise;
  std::map<std::string, double> mean_alpha;  // annotators with at least one defined pair
  std::vector<std::string> ranking;          // best first; ties by annotator order
  std::string selected;
  std::vector<std::string> warnings;
};

/// Alpha for every unordered annotator pair; annotators ranked by their mean
/// pairwise alpha over defined pairs.
inline PairwiseResult pairwise_selection(const AnnotationSet& set, AlphaMetric metric = AlphaMetric::nominal) {
  const auto& names = set.annotators();
  if (names.size() < 2) throw DomainError("pairwise selection needs at least two annotators");
  PairwiseResult res;
  std::vector<double> sum(names.size(), 0.0);
  std::vector<std::size_t> count(names.size(), 0);
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const auto a = krippendorff_alpha(set, std::vector<std::size_t>{i, j}, metric);
      res.pairwise[{names[i], names[j]}] = a;
      if (!a) {
        res.warnings.push_back("alpha undefined for pair (" + names[i] + ", " + names[j] + "); excluded from means");
        continue;
      }
      sum[i] += *a;
      sum[j] += *a;
      ++count[i];
      ++count[j];
    }
  }
  std::vector<std::size_t> order(names.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    if (count[i]) res.mean_alpha[names[i]] = sum[i] / static_cast<double>(count[i]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (!count[x] || !count[y]) return count[x] > count[y];
    return sum[x] / static_cast<double>(count[x]) > sum[y] / static_cast<double>(count[y]);
  });
  for (const auto i : order) res.ranking.push_back(names[i]);
  res.selected = res.ranking.front();
  return res;
}

enum class ConsensusMode { unanimous, majority };

struct GroupResult {
  std::optional<double> alpha;
  std::size_t items = 0;      // items with a consensus label used for alpha
  std::size_t ambiguous = 0;  // items where different subsets agreed on different labels
};

struct AgreementOutcome {
  std::map<std::pair<std::string, std::string>, std::optional<double>> pairwise;
  std::string selected;
  std::map<std::size_t, GroupResult> groupwise;  // group size -> result
  bool accepted = false;
  std::optional<std::string> next_best;
  std::vector<std::string> attempts;
  std::vector<std::string> warnings;
};

inline constexpr std::array<std::size_t, 2> kGroupSizes = {2, 3};

/// Compares the selected annotator with the label a group of g other
/// annotators agreed on, for g in {2, 3}. An item counts when some g-subset
/// of the others who labeled it agrees (unanimously, or by strict majority in
/// majority mode) and all agreeing subsets name the same label. Accepted when
/// at least one group size is defined and every defined alpha reaches the threshold.
inline AgreementOutcome groupwise_validation(const AnnotationSet& set, const std::string& selected,
                                             double threshold = 0.6, ConsensusMode mode = ConsensusMode::unanimous,
                                             AlphaMetric metric = AlphaMetric::nominal) {
  const auto sel = set.annotator_index(selected);
  if (!sel) throw DomainError("selected annotator '" + selected + "' not in annotation set");
  AgreementOutcome out;
  out.selected = selected;
  bool any_defined = false, all_pass = true;
  for (const auto g : kGroupSizes) {
    GroupResult gr;
    AnnotationSet pair(set.categories(), set.level());
    for (std::size_t i = 0; i < set.items().size(); ++i) {
      const auto own = set.label(i, *sel);
      if (!own) continue;
      std::vector<std::size_t> others;
      for (std::size_t a = 0; a < set.annotators().size(); ++a) {
        if (a == *sel) continue;
        if (const auto l = set.label(i, a)) others.push_back(*l);
      }
      if (others.size() < g) continue;
      std::set<std::size_t> agreed;
      // Enumerate g-subsets of the others' labels.
      std::vector<std::size_t> pick(g);
      for (std::size_t p = 0; p < g; ++p) pick[p] = p;
      while (true) {
        std::map<std::size_t, std::size_t> votes;
        for (const auto p : pick) ++votes[others[p]];
        for (const auto& [lab, v] : votes) {
          if (mode == ConsensusMode::unanimous ? v == g : 2 * v > g) agreed.insert(lab);
        }
        std::size_t q = g;
        while (q > 0 && pick[q - 1] == others.size() - g + q - 1) --q;
        if (q == 0) break;
        ++pick[q - 1];
        for (std::size_t r = q; r < g; ++r) pick[r] = pick[r - 1] + 1;
      }
      if (agreed.empty()) continue;
      if (agreed.size() > 1) {
        ++gr.ambiguous;
        continue;
      }
      pair.add(set.items()[i], "selected", set.categories()[*own]);
      pair.add(set.items()[i], "group", set.categories()[*agreed.begin()]);
      ++gr.items;
    }
    if (gr.items > 0) gr.alpha = krippendorff_alpha(pair, std::vector<std::size_t>{0, 1}, metric);
    if (!gr.alpha) {
      out.warnings.push_back("group size " + std::to_string(g) + ": no item with an agreeing group; excluded");
    } else {
      any_defined = true;
      all_pass = all_pass && *gr.alpha >= threshold;
    }
    out.groupwise[g] = gr;
  }
  out.accepted = any_defined && all_pass;
  return out;
}

struct ProtocolConfig {
  double threshold = 0.6;
  ConsensusMode mode = ConsensusMode::unanimous;
  AlphaMetric metric = AlphaMetric::nominal;
};

/// Pairwise selection, then groupwise validation of the selected annotator;
/// on rejection the next-best annotator is tried until one is accepted or
/// the ranking is exhausted.
inline AgreementOutcome run_agreement_protocol(const AnnotationSet& set, const ProtocolConfig& cfg = {}) {
  auto pw = pairwise_selection(set, cfg.metric);
  AgreementOutcome last;
  std::vector<std::string> attempts;
  for (std::size_t r = 0; r < pw.ranking.size(); ++r) {
    last = groupwise_validation(set, pw.ranking[r], cfg.threshold, cfg.mode, cfg.metric);
    attempts.push_back(pw.ranking[r]);
    if (!last.accepted && r + 1 < pw.ranking.size()) last.next_best = pw.ranking[r + 1];
    if (last.accepted) break;
  }
  last.pairwise = pw.pairwise;
  last.attempts = attempts;
  last.warnings.insert(last.warnings.begin(), pw.warnings.begin(), pw.warnings.end());
  return last;
}

inline nlohmann::json to_json(const AgreementOutcome& o, const ProtocolConfig& cfg) {
  nlohmann::json pw = nlohmann::json::array();
  for (const auto& [k, v] : o.pairwise) {
    pw.push_back({{"annotators", {k.first, k.second}}, {"alpha", v ? nlohmann::json(*v) : nlohmann::json(nullptr)}});
  }
  nlohmann::json gw = nlohmann::json::object();
  for (const auto& [g, r] : o.groupwise) {
    gw[std::to_string(g)] = {{"alpha", r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json(nullptr)},
                             {"items", r.items},
                             {"ambiguous_items", r.ambiguous}};
  }
  return {{"pairwise", pw},
          {"selected_annotator", o.selected},
          {"groupwise", gw},
          {"accepted", o.accepted},
          {"next_best", o.next_best ? nlohmann::json(*o.next_best) : nlohmann::json(nullptr)},
          {"attempts", o.attempts},
          {"threshold", cfg.threshold},
          {"consensus", cfg.mode == ConsensusMode::unanimous ? "unanimous" : "majority"},
          {"group_subsets", "all g-subsets of the other annotators"},
          {"metric", cfg.metric == AlphaMetric::nominal ? "nominal" : "ordinal"},
          {"warnings", o.warnings}};
}

}  // namespace srf
