#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srf/corpus.hpp"
#include "srf/error.hpp"
#include "srf/lexicon.hpp"
#include "srf/text.hpp"

namespace srf {

using Vec = std::vector<double>;

inline constexpr std::array<std::size_t, 4> kSupportedDimensions = {50, 100, 200, 300};

/// Token -> dense vector map of one fixed dimension. Tokens are lowercase;
/// insertion order is kept so written stores are reproducible.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dimension) : dim_(dimension) {}

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  /// Inserts or replaces. Returns true when an existing entry was replaced.
  bool set(std::string_view token, Vec v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
      throw FormatError("vector for '" + std::string(token) + "' has dimension " + std::to_string(v.size()) +
                        ", store has " + std::to_string(dim_));
    }
    for (const double x : v) {
      if (!std::isfinite(x)) throw FormatError("non-finite component in vector for '" + std::string(token) + "'");
    }
    auto key = to_lower(token);
    if (const auto it = index_.find(key); it != index_.end()) {
      vectors_[it->second] = std::move(v);
      return true;
    }
    index_.emplace(key, tokens_.size());
    tokens_.push_back(std::move(key));
    vectors_.push_back(std::move(v));
    return false;
  }

  const Vec* find(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? nullptr : &vectors_[it->second];
  }

  bool contains(std::string_view token) const { return find(token) != nullptr; }

  const Vec& at(std::string_view token) const {
    if (const auto* v = find(token)) return *v;
    throw std::out_of_range("token '" + std::string(token) + "' not in store");
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const Vec& vector(std::size_t i) const { return vectors_.at(i); }
  Vec& mutable_vector(std::size_t i) { return vectors_.at(i); }

  std::optional<std::size_t> index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Vocabulary entry for a lexicon phrase: the underscore-joined form.
  const Vec* find_phrase(std::string_view phrase) const { return find(vocab_key(phrase)); }

  bool operator==(const EmbeddingStore& o) const {
    return dim_ == o.dim_ && tokens_ == o.tokens_ && vectors_ == o.vectors_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<Vec> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  /// Restrict dimensions to {50, 100, 200, 300}. Off for small test fixtures.
  bool strict_dimension = true;
};

/// Text vector format: an optional `<count> <dim>` header line, then
/// `token v1 ... vd` rows separated by spaces.
inline EmbeddingStore parse_embeddings(std::istream& in, const std::string& name, const LoadOptions& opt = {},
                                       std::vector<std::string>* warnings = nullptr) {
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> header_count;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(std::move(f));
    const auto where = name + ":" + std::to_string(line_no) + ": ";
    if (first) {
      first = false;
      if (fields.size() == 2 && fields[0].find_first_not_of("0123456789") == std::string::npos &&
          fields[1].find_first_not_of("0123456789") == std::string::npos) {
        header_count = std::stoull(fields[0]);
        store = EmbeddingStore(std::stoull(fields[1]));
        continue;
      }
    }
    if (fields.size() < 2) throw FormatError(where + "row has no vector components");
    Vec v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      char* end = nullptr;
      const double x = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0') {
        throw FormatError(where + "cannot parse component '" + fields[i] + "'");
      }
      if (!std::isfinite(x)) throw FormatError(where + "non-finite component '" + fields[i] + "'");
      v.push_back(x);
    }
    if (store.dimension() != 0 && v.size() != store.dimension()) {
      throw FormatError(where + "expected " + std::to_string(store.dimension()) + " components, got " +
                        std::to_string(v.size()));
    }
    if (store.set(fields[0], std::move(v)) && warnings) {
      warnings->push_back(where + "duplicate token '" + to_lower(fields[0]) + "', last occurrence kept");
    }
  }
  if (opt.strict_dimension && store.dimension() != 0 &&
      std::find(kSupportedDimensions.begin(), kSupportedDimensions.end(), store.dimension()) == kSupportedDimensions.end()) {
    throw FormatError(name + ": dimension " + std::to_string(store.dimension()) +
                      " is not one of 50, 100, 200, 300");
  }
  if (header_count && *header_count != store.size() && warnings) {
    warnings->push_back(name + ": header declares " + std::to_string(*header_count) + " rows, read " +
                        std::to_string(store.size()));
  }
  return store;
}

inline EmbeddingStore load_embeddings(const std::string& path, const LoadOptions& opt = {},
                                      std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vectors '" + path + "'");
  return parse_embeddings(in, path, opt, warnings);
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << store.size() << ' ' << store.dimension() << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.tokens()[i];
    for (const double x : store.vector(i)) out << ' ' << format_double(x);
    out << '\n';
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool is_zero(std::span<const double> a) {
  for (const double x : a)
    if (x != 0.0) return false;
  return true;
}

/// Cosine similarity, clamped to [-1, 1]. Symmetric bit for bit.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                      std::to_string(b.size()));
  }
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine of a zero vector");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

/// Cosine distance 1 - cos; exactly 0 for identical vectors.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 0.0;
  return std::max(0.0, 1.0 - cosine(a, b));
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("euclidean distance of vectors with different dimensions");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline Vec mean_of(const std::vector<const Vec*>& vs, std::size_t dim) {
  Vec m(dim, 0.0);
  for (const auto* v : vs)
    for (std::size_t i = 0; i < dim; ++i) m[i] += (*v)[i];
  for (auto& x : m) x /= static_cast<double>(vs.size());
  return m;
}

struct DocumentVector {
  std::string doc_id;
  Vec vector;
  std::size_t token_count = 0;
  bool operator==(const DocumentVector&) const = default;
};

enum class EmbedStatus {
  ok,
  unembeddable,  // nothing left after stopword and vocabulary filtering
  degenerate,    // contributing vectors cancel to exactly zero
};

inline std::string_view to_string(EmbedStatus s) {
  switch (s) {
    case EmbedStatus::ok: return "ok";
    case EmbedStatus::unembeddable: return "unembeddable";
    case EmbedStatus::degenerate: return "degenerate";
  }
  return "?";
}

struct EmbedOutcome {
  EmbedStatus status = EmbedStatus::unembeddable;
  DocumentVector vector;  // meaningful unless status is unembeddable
};

/// Inverse document frequencies, for the optional weighted mean.
using IdfTable = std::unordered_map<std::string, double>;

/// Turns document text into mean-pooled vectors. Multi-word lexicon phrases
/// whose underscore-joined form is in the vocabulary are merged first; then
/// stopwords and out-of-vocabulary tokens are dropped.
class DocumentEmbedder {
 public:
  DocumentEmbedder(const EmbeddingStore& store, const Lexicon& stopwords, const Lexicon* phrases = nullptr)
      : store_(store) {
    for (const auto& t : stopwords.all_terms()) stop_.emplace(t, true);
    if (phrases) {
      for (const auto& t : phrases->all_terms()) {
        if (t.find(' ') != std::string::npos && store_.find_phrase(t)) phrases_.add(t);
      }
    }
  }

  /// Vocabulary entries that contribute to a document, in text order.
  std::vector<std::string> contributing_tokens(std::string_view text) const {
    const auto toks = tokenize(text);
    std::vector<std::string> out;
    std::size_t i = 0;
    const auto matches = phrases_.find_all(toks);
    auto next = matches.begin();
    while (i < toks.size()) {
      if (next != matches.end() && next->begin == i) {
        out.push_back(vocab_key(phrases_.phrase(next->phrase)));
        i = next->end;
        ++next;
        continue;
      }
      if (!stop_.count(toks[i]) && store_.contains(toks[i])) out.push_back(toks[i]);
      ++i;
    }
    return out;
  }

  EmbedOutcome embed(const Document& doc, const IdfTable* idf = nullptr) const {
    EmbedOutcome res;
    res.vector.doc_id = doc.id;
    const auto toks = contributing_tokens(doc.text);
    if (toks.empty()) return res;
    Vec v(store_.dimension(), 0.0);
    double total = 0.0;
    for (const auto& t : toks) {
      const auto& tv = store_.at(t);
      double w = 1.0;
      if (idf) {
        const auto it = idf->find(t);
        w = it == idf->end() ? 0.0 : it->second;
      }
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * tv[i];
      total += w;
    }
    res.vector.token_count = toks.size();
    if (total == 0.0) return res;
    for (auto& x : v) x /= total;
    res.vector.vector = std::move(v);
    res.status = is_zero(res.vector.vector) ? EmbedStatus::degenerate : EmbedStatus::ok;
    return res;
  }

  /// log(N / df) over the contributing tokens of a corpus.
  IdfTable compute_idf(const Corpus& corpus) const {
    std::map<std::string, std::size_t> df;
    for (const auto& d : corpus.documents()) {
      auto toks = contributing_tokens(d.text);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (const auto& t : toks) ++df[t];
    }
    IdfTable idf;
    const auto n = static_cast<double>(corpus.size());
    for (const auto& [t, c] : df) idf.emplace(t, std::log(n / static_cast<double>(c)));
    return idf;
  }

 private:
  const EmbeddingStore& store_;
  std::unordered_map<std::string, bool> stop_;
  PhraseMatcher phrases_;
};

inline EmbedOutcome embed_document(const Document& doc, const EmbeddingStore& store, const Lexicon& stopwords,
                                   const Lexicon* phrases = nullptr) {
  return DocumentEmbedder(store, stopwords, phrases).embed(doc);
}

}  // namespace srf
