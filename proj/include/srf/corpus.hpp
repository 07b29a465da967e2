#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "srf/error.hpp"
#include "srf/lexicon.hpp"
#include "srf/text.hpp"

namespace srf {

enum class Source { social, clinical };

inline std::string_view to_string(Source s) { return s == Source::social ? "social" : "clinical"; }

inline std::optional<Source> parse_source(std::string_view s) {
  const auto k = to_lower(trim(s));
  if (k == "social") return Source::social;
  if (k == "clinical") return Source::clinical;
  return std::nullopt;
}

/// One post or clinical note.
struct Document {
  std::string id;
  std::string author;
  std::string community;  // subreddit or clinic
  Source source = Source::social;
  std::int64_t timestamp = 0;
  std::string text;
  bool is_comment = false;  // optional `kind: "comment"`; comments are left out of relatedness

  bool operator==(const Document&) const = default;
};

/// Documents of one source, kept sorted by id.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, Source source) : name_(std::move(name)), source_(source) {}

  const std::string& name() const noexcept { return name_; }
  Source source() const noexcept { return source_; }
  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }

  /// Inserts in id order. Returns false (and leaves the corpus unchanged) if
  /// the id is taken or the document's source differs from the corpus source.
  bool insert(Document d) {
    if (d.source != source_) return false;
    const auto it = std::lower_bound(docs_.begin(), docs_.end(), d.id,
                                     [](const Document& a, const std::string& id) { return a.id < id; });
    if (it != docs_.end() && it->id == d.id) return false;
    docs_.insert(it, std::move(d));
    return true;
  }

  const Document* find(std::string_view id) const {
    const auto it = std::lower_bound(docs_.begin(), docs_.end(), id,
                                     [](const Document& a, std::string_view k) { return a.id < k; });
    return (it != docs_.end() && it->id == id) ? &*it : nullptr;
  }

  bool operator==(const Corpus&) const = default;

 private:
  std::string name_;
  Source source_ = Source::social;
  std::vector<Document> docs_;
};

struct Reject {
  std::size_t line = 0;
  nlohmann::json record;  // the original object, or {"raw": line} when unparsable
  std::string reason;
};

struct IngestResult {
  Corpus corpus;
  std::vector<Reject> rejects;
};

inline nlohmann::json to_json(const Document& d) {
  nlohmann::json j{{"id", d.id},         {"author", d.author},       {"community", d.community},
                   {"source", std::string(to_string(d.source))}, {"timestamp", d.timestamp}, {"text", d.text}};
  if (d.is_comment) j["kind"] = "comment";
  return j;
}

namespace detail {

inline std::optional<std::string> validate_record(const nlohmann::json& row, Source expected, Document& out) {
  if (!row.is_object()) return "record is not a JSON object";
  for (const char* key : {"id", "author", "community", "source", "text"}) {
    if (!row.contains(key)) return std::string("missing key '") + key + "'";
    if (!row[key].is_string()) return std::string("key '") + key + "' must be a string";
  }
  if (!row.contains("timestamp")) return "missing key 'timestamp'";
  if (!row["timestamp"].is_number_integer()) return "key 'timestamp' must be an integer";
  out.id = row["id"].get<std::string>();
  if (trim(out.id).empty()) return "empty id";
  out.author = row["author"].get<std::string>();
  out.community = row["community"].get<std::string>();
  const auto src = parse_source(row["source"].get<std::string>());
  if (!src) return "unknown source '" + row["source"].get<std::string>() + "'";
  if (*src != expected) {
    return "source '" + std::string(to_string(*src)) + "' does not match corpus source '" +
           std::string(to_string(expected)) + "'";
  }
  out.source = *src;
  out.timestamp = row["timestamp"].get<std::int64_t>();
  out.text = row["text"].get<std::string>();
  if (trim(out.text).empty()) return "empty text";
  if (row.contains("kind")) {
    if (!row["kind"].is_string()) return "key 'kind' must be a string";
    const auto kind = to_lower(row["kind"].get<std::string>());
    if (kind != "post" && kind != "comment") return "unknown kind '" + kind + "'";
    out.is_comment = kind == "comment";
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses line-delimited JSON records. Invalid records are collected in the
/// rejects report with a reason; blank lines are skipped.
inline IngestResult ingest(std::istream& in, Source source, std::string name) {
  IngestResult res{Corpus(std::move(name), source), {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      res.rejects.push_back({line_no, nlohmann::json{{"raw", line}}, "malformed JSON"});
      continue;
    }
    Document d;
    if (auto err = detail::validate_record(row, source, d)) {
      res.rejects.push_back({line_no, row.is_object() ? row : nlohmann::json{{"raw", line}}, *err});
      continue;
    }
    if (!res.corpus.insert(std::move(d))) {
      res.rejects.push_back({line_no, row, "duplicate id"});
    }
  }
  return res;
}

inline IngestResult ingest(const std::string& path, Source source) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus '" + path + "'");
  return ingest(in, source, std::string(to_string(source)));
}

inline void write_corpus(std::ostream& out, const Corpus& c) {
  for (const auto& d : c.documents()) out << to_json(d).dump() << '\n';
}

inline void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) {
    auto j = r.record;
    j["reason"] = r.reason;
    j["line"] = r.line;
    out << j.dump() << '\n';
  }
}

/// Tally of one filtering pass. `dropped_unrelated` counts documents with no
/// severity term at all (severity filter only).
struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t dropped_exclusion = 0;
  std::size_t dropped_negation = 0;
  std::size_t dropped_supportive = 0;
  std::size_t dropped_unrelated = 0;
  std::size_t dropped_empty = 0;

  std::size_t dropped() const {
    return dropped_exclusion + dropped_negation + dropped_supportive + dropped_unrelated + dropped_empty;
  }
  bool balanced() const { return kept + dropped() == input; }

  bool operator==(const FilterReport&) const = default;
};

/// Report of running `second` on the output of `first`.
inline FilterReport chain(const FilterReport& first, const FilterReport& second) {
  FilterReport r;
  r.input = first.input;
  r.kept = second.kept;
  r.dropped_exclusion = first.dropped_exclusion + second.dropped_exclusion;
  r.dropped_negation = first.dropped_negation + second.dropped_negation;
  r.dropped_supportive = first.dropped_supportive + second.dropped_supportive;
  r.dropped_unrelated = first.dropped_unrelated + second.dropped_unrelated;
  r.dropped_empty = first.dropped_empty + second.dropped_empty;
  return r;
}

inline nlohmann::json to_json(const FilterReport& r) {
  return {{"input", r.input},
          {"kept", r.kept},
          {"dropped_exclusion", r.dropped_exclusion},
          {"dropped_negation", r.dropped_negation},
          {"dropped_supportive", r.dropped_supportive},
          {"dropped_unrelated", r.dropped_unrelated},
          {"dropped_empty", r.dropped_empty}};
}

struct FilterResult {
  Corpus kept;
  FilterReport report;
  std::vector<std::string> dropped_ids;
};

namespace detail {

enum class Verdict { keep, drop_exclusion, drop_negation, drop_supportive, drop_unrelated, drop_empty };

template <typename Predicate>
FilterResult run_filter(const Corpus& corpus, Predicate&& verdict_of) {
  FilterResult res{Corpus(corpus.name(), corpus.source()), {}, {}};
  res.report.input = corpus.size();
  for (const auto& d : corpus.documents()) {
    const auto toks = tokenize(d.text);
    const Verdict v = toks.empty() ? Verdict::drop_empty : verdict_of(toks);
    switch (v) {
      case Verdict::keep:
        res.kept.insert(d);
        ++res.report.kept;
        continue;
      case Verdict::drop_exclusion: ++res.report.dropped_exclusion; break;
      case Verdict::drop_negation: ++res.report.dropped_negation; break;
      case Verdict::drop_supportive: ++res.report.dropped_supportive; break;
      case Verdict::drop_unrelated: ++res.report.dropped_unrelated; break;
      case Verdict::drop_empty: ++res.report.dropped_empty; break;
    }
    res.dropped_ids.push_back(d.id);
  }
  return res;
}

}  // namespace detail

/// Drops documents containing any exclusion term (token boundary, case
/// insensitive). When `scope` is non-empty only those categories of the
/// exclusion lexicon are used.
inline FilterResult apply_exclusion_filter(const Corpus& corpus, const Lexicon& exclusions,
                                           const std::vector<std::string>& scope = {}) {
  const LexiconMatcher m(scope.empty() ? exclusions : exclusions.subset(scope));
  return detail::run_filter(corpus, [&](const std::vector<std::string>& toks) {
    return m.any(toks) ? detail::Verdict::drop_exclusion : detail::Verdict::keep;
  });
}

/// Drops whole documents containing a negation or conjunction cue.
inline FilterResult apply_negation_conjunction_filter(const Corpus& corpus, const Lexicon& cues) {
  const LexiconMatcher m(cues);
  return detail::run_filter(corpus, [&](const std::vector<std::string>& toks) {
    return m.any(toks) ? detail::Verdict::drop_negation : detail::Verdict::keep;
  });
}

/// Throws ConfigError unless all five severity levels are categories of `lex`.
inline void validate_severity_lexicon(const Lexicon& lex) {
  std::vector<std::string> missing;
  for (const auto level : kSeverityLevels) {
    bool found = false;
    for (const auto& c : lex.category_names()) found = found || to_lower(c) == level;
    if (!found) missing.emplace_back(level);
  }
  if (!missing.empty()) {
    throw ConfigError("severity lexicon '" + lex.name() + "' lacks categories: " + join(missing, ", "));
  }
}

/// Keeps documents with at least one non-supportive severity match.
inline FilterResult apply_severity_filter(const Corpus& corpus, const Lexicon& severity) {
  validate_severity_lexicon(severity);
  const LexiconMatcher m(severity);
  return detail::run_filter(corpus, [&](const std::vector<std::string>& toks) {
    const auto hits = m.match(toks);
    if (hits.empty()) return detail::Verdict::drop_unrelated;
    for (const auto& [cat, _] : hits) {
      if (to_lower(cat) != "supportive") return detail::Verdict::keep;
    }
    return detail::Verdict::drop_supportive;
  });
}

struct PipelineFilterResult {
  Corpus kept;
  FilterReport exclusion;
  FilterReport negation;
  std::optional<FilterReport> severity;  // not applied to clinical notes
  FilterReport total;
};

/// Fixed order: exclusion, negation/conjunction, severity. Clinical corpora
/// skip the severity stage.
inline PipelineFilterResult run_filters(const Corpus& corpus, const Lexicon& exclusions, const Lexicon& cues,
                                        const Lexicon& severity) {
  PipelineFilterResult res;
  auto ex = apply_exclusion_filter(corpus, exclusions);
  auto neg = apply_negation_conjunction_filter(ex.kept, cues);
  res.exclusion = ex.report;
  res.negation = neg.report;
  res.total = chain(ex.report, neg.report);
  if (corpus.source() == Source::social) {
    auto sev = apply_severity_filter(neg.kept, severity);
    res.severity = sev.report;
    res.total = chain(res.total, sev.report);
    res.kept = std::move(sev.kept);
  } else {
    res.kept = std::move(neg.kept);
  }
  return res;
}

}  // namespace srf
