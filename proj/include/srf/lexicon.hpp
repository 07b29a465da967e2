#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "srf/error.hpp"
#include "srf/text.hpp"

namespace srf {

/// The twelve risk factors of the Jashinsky list followed by the two mixed
/// categories. Order here is the tie-breaking order used by labeling.
inline constexpr std::array<std::string_view, 14> kSrfTaxonomy = {
    "depressive feelings",    "depression symptoms",
    "drug abuse",             "prior suicide attempts",
    "suicide around individual", "suicide ideation",
    "self-harm",              "bullying behavior",
    "gun ownership",          "psychological disorder",
    "family violence and discord", "impulsivity",
    "other important SRFs",   "accessory",
};

inline constexpr std::string_view kOtherSrf = "other important SRFs";
inline constexpr std::string_view kAccessorySrf = "accessory";

/// Position in kSrfTaxonomy of a category name, compared in normalized form
/// ("Self Harm" and "self-harm" are the same entry).
inline std::optional<std::size_t> srf_index(std::string_view name) {
  const auto key = normalize_phrase(name);
  for (std::size_t i = 0; i < kSrfTaxonomy.size(); ++i) {
    if (normalize_phrase(kSrfTaxonomy[i]) == key) return i;
  }
  return std::nullopt;
}

inline bool is_mixed_srf(std::string_view name) {
  const auto i = srf_index(name);
  return i && *i >= 12;
}

/// Severity levels, least to most severe. The rank order is used by the
/// ordinal agreement metric.
inline constexpr std::array<std::string_view, 5> kSeverityLevels = {
    "supportive", "indicator", "ideation", "behavior", "attempt"};

struct WeightedTerm {
  std::string term;
  double weight = 1.0;
  bool operator==(const WeightedTerm&) const = default;
};

/// Named categories of weighted terms. Terms are stored in normalized form
/// (lowercase tokens joined by single spaces). A term may sit in several
/// categories; within one category it is stored once with its largest weight.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::string name) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  /// Ensures the category exists. Returns false if it already did.
  bool declare(std::string_view category) {
    return categories_.try_emplace(normalize_category(category)).second;
  }

  /// Adds (or strengthens) a term. Empty terms are ignored.
  void add(std::string_view category, std::string_view term, double weight = 1.0) {
    if (!(weight > 0.0 && weight <= 1.0)) {
      throw FormatError("term weight must be in (0,1], got " + std::to_string(weight));
    }
    auto norm = normalize_phrase(term);
    if (norm.empty()) return;
    auto& terms = categories_[normalize_category(category)];
    auto [it, inserted] = terms.try_emplace(std::move(norm), weight);
    if (!inserted) it->second = std::max(it->second, weight);
  }

  bool has_category(std::string_view category) const {
    return categories_.count(normalize_category(category)) > 0;
  }

  /// Terms of one category sorted by term; empty if the category is unknown.
  std::vector<WeightedTerm> terms(std::string_view category) const {
    std::vector<WeightedTerm> out;
    const auto it = categories_.find(normalize_category(category));
    if (it == categories_.end()) return out;
    for (const auto& [t, w] : it->second) out.push_back({t, w});
    return out;
  }

  std::optional<double> weight(std::string_view category, std::string_view term) const {
    const auto it = categories_.find(normalize_category(category));
    if (it == categories_.end()) return std::nullopt;
    const auto jt = it->second.find(normalize_phrase(term));
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  }

  std::vector<std::string> category_names() const {
    std::vector<std::string> out;
    for (const auto& [c, _] : categories_) out.push_back(c);
    return out;
  }

  std::size_t category_count() const noexcept { return categories_.size(); }

  std::size_t term_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : categories_) n += t.size();
    return n;
  }

  bool empty() const noexcept { return categories_.empty(); }

  /// Every distinct term across all categories.
  std::set<std::string> all_terms() const {
    std::set<std::string> out;
    for (const auto& [_, terms] : categories_)
      for (const auto& [t, __] : terms) out.insert(t);
    return out;
  }

  /// Restricts to the given categories (unknown names are ignored).
  Lexicon subset(const std::vector<std::string>& categories) const {
    Lexicon out(name_);
    for (const auto& c : categories) {
      const auto it = categories_.find(normalize_category(c));
      if (it != categories_.end()) out.categories_.insert(*it);
    }
    return out;
  }

  const std::map<std::string, std::map<std::string, double>>& raw() const noexcept {
    return categories_;
  }

  bool operator==(const Lexicon&) const = default;

  /// Category names keep their casing except for surrounding whitespace,
  /// which is trimmed; internal runs of whitespace collapse to one space.
  static std::string normalize_category(std::string_view c) {
    std::string out;
    bool space = false;
    for (const char ch : trim(c)) {
      if (ch == ' ' || ch == '\t') {
        space = true;
        continue;
      }
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(ch);
    }
    return out;
  }

 private:
  std::string name_;
  std::map<std::string, std::map<std::string, double>> categories_;
};

/// Union of several lexicons; shared terms keep the larger weight.
inline Lexicon union_lexicons(const std::vector<Lexicon>& parts, std::string name) {
  Lexicon out(std::move(name));
  for (const auto& lex : parts) {
    for (const auto& [cat, terms] : lex.raw()) {
      out.declare(cat);
      for (const auto& [t, w] : terms) out.add(cat, t, w);
    }
  }
  return out;
}

/// Reads the line-delimited lexicon format: one JSON object per line with
/// `category`, `term` and optional `weight`. A line carrying only `category`
/// declares a (possibly empty) category; declaring the same category twice is
/// an error. Categories left without terms produce a warning.
inline Lexicon parse_lexicon(std::istream& in, std::string name,
                             std::vector<std::string>* warnings = nullptr) {
  Lexicon lex(std::move(name));
  std::set<std::string> declared;
  std::map<std::string, std::string> spelling;  // canonical key -> first raw spelling
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!row.is_object() || !row.contains("category") || !row["category"].is_string()) {
      throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": missing string key 'category'");
    }
    const auto raw_cat = row["category"].get<std::string>();
    const auto cat = Lexicon::normalize_category(raw_cat);
    if (cat.empty()) {
      throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": empty category name");
    }
    // Two spellings that differ only in case name the same category twice.
    const auto folded = to_lower(cat);
    if (auto [it, fresh] = spelling.try_emplace(folded, cat); !fresh && it->second != cat) {
      throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": duplicate category '" + cat +
                        "' (also spelled '" + it->second + "')");
    }
    if (!row.contains("term")) {
      if (!declared.insert(cat).second) {
        throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": duplicate category '" + cat + "'");
      }
      lex.declare(cat);
      continue;
    }
    if (!row["term"].is_string()) {
      throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": 'term' must be a string");
    }
    double w = 1.0;
    if (row.contains("weight")) {
      if (!row["weight"].is_number()) {
        throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": 'weight' must be a number");
      }
      w = row["weight"].get<double>();
      if (!(w > 0.0 && w <= 1.0)) {
        throw FormatError(lex.name() + ":" + std::to_string(line_no) + ": weight outside (0,1]");
      }
    }
    const auto term = row["term"].get<std::string>();
    if (normalize_phrase(term).empty()) {
      if (warnings) warnings->push_back(lex.name() + ":" + std::to_string(line_no) + ": empty term skipped");
      lex.declare(cat);
      continue;
    }
    lex.add(cat, term, w);
  }
  if (warnings) {
    for (const auto& [cat, terms] : lex.raw()) {
      if (terms.empty()) warnings->push_back(lex.name() + ": category '" + cat + "' has no terms");
    }
  }
  return lex;
}

inline Lexicon load_lexicon(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon '" + path + "'");
  return parse_lexicon(in, path, warnings);
}

/// Writes the same line-delimited format; empty categories become declaration lines.
inline void write_lexicon(std::ostream& out, const Lexicon& lex) {
  for (const auto& [cat, terms] : lex.raw()) {
    if (terms.empty()) {
      out << nlohmann::json{{"category", cat}}.dump() << '\n';
      continue;
    }
    for (const auto& [t, w] : terms) {
      nlohmann::json row{{"category", cat}, {"term", t}};
      if (w != 1.0) row["weight"] = w;
      out << row.dump() << '\n';
    }
  }
}

/// Term matcher compiled from a lexicon, reusable across documents.
class LexiconMatcher {
 public:
  struct Hit {
    std::size_t begin;
    std::size_t end;
    std::string term;
    std::vector<std::string> categories;
  };

  LexiconMatcher() = default;
  explicit LexiconMatcher(const Lexicon& lex) {
    for (const auto& [cat, terms] : lex.raw()) {
      for (const auto& [t, _] : terms) {
        const int id = matcher_.add(t);
        if (id < 0) continue;
        if (static_cast<std::size_t>(id) >= owners_.size()) owners_.resize(static_cast<std::size_t>(id) + 1);
        owners_[static_cast<std::size_t>(id)].push_back(cat);
      }
    }
  }

  std::vector<Hit> hits(const std::vector<std::string>& tokens) const {
    std::vector<Hit> out;
    for (const auto& m : matcher_.find_all(tokens)) {
      out.push_back({m.begin, m.end, matcher_.phrase(m.phrase), owners_[static_cast<std::size_t>(m.phrase)]});
    }
    return out;
  }

  /// Category -> matched terms in text order (a term repeated in the text is listed each time).
  std::map<std::string, std::vector<std::string>> match(const std::vector<std::string>& tokens) const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& h : hits(tokens)) {
      for (const auto& c : h.categories) out[c].push_back(h.term);
    }
    return out;
  }

  std::map<std::string, std::vector<std::string>> match(std::string_view text) const {
    return match(tokenize(text));
  }

  bool any(const std::vector<std::string>& tokens) const { return matcher_.matches_any(tokens); }

  bool empty() const { return matcher_.empty(); }

 private:
  PhraseMatcher matcher_;
  std::vector<std::vector<std::string>> owners_;
};

inline std::map<std::string, std::vector<std::string>> match_terms(std::string_view text, const Lexicon& lex) {
  return LexiconMatcher(lex).match(text);
}

/// Negation and conjunction cues removed by the corpus filter unless a cue
/// file overrides them.
inline Lexicon default_cue_lexicon() {
  Lexicon lex("default-cues");
  for (const char* t : {"not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere",
                        "cannot", "cant", "dont", "doesnt", "didnt", "isnt", "wasnt", "wont", "wouldnt",
                        "shouldnt", "no longer", "without"}) {
    lex.add("negation", t);
  }
  for (const char* t : {"but", "although", "though", "however", "yet", "whereas", "nevertheless",
                        "nonetheless", "even though", "except"}) {
    lex.add("conjunction", t);
  }
  return lex;
}

inline Lexicon default_stopwords() {
  Lexicon lex("default-stopwords");
  for (const char* t :
       {"a",    "an",   "the",  "and",   "or",    "of",    "to",    "in",    "on",    "at",    "for",
        "with", "by",   "from", "as",    "is",    "am",    "are",   "was",   "were",  "be",    "been",
        "being", "i",   "me",   "my",    "myself", "we",   "our",   "you",   "your",  "he",    "him",
        "his",  "she",  "her",  "it",    "its",   "they",  "them",  "their", "this",  "that",  "these",
        "those", "do",  "does", "did",   "have",  "has",   "had",   "so",    "if",    "then",  "than",
        "there", "here", "what", "which", "who",  "whom",  "when",  "where", "why",   "how",   "all",
        "any",  "some", "just", "very",  "too",   "also",  "can",   "will",  "would", "should", "could",
        "about", "into", "over", "up",   "down",  "out",   "off",   "again", "more",  "most",  "such",
        "only", "own",  "same", "each",  "other", "im",    "ive",   "its",   "get",   "got"}) {
    lex.add("stopwords", t);
  }
  return lex;
}

/// Accessory keywords used for the lexical accessory rule in labeling.
inline Lexicon default_accessory_lexicon() {
  Lexicon lex("default-accessory");
  for (const char* t : {"plastic bag", "bridge", "caustic substance", "car exhaust", "mechanical threat"}) {
    lex.add(kAccessorySrf, t);
  }
  return lex;
}

}  // namespace srf
