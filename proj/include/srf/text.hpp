#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace srf {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

/// Lowercased word tokens. ASCII letters and digits and any non-ASCII byte
/// form words; apostrophes are dropped inside words ("don't" -> "dont");
/// everything else separates.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
      cur.push_back(static_cast<char>(c));
    } else if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (c == '\'' && !cur.empty()) {
      continue;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Canonical form of a term, label or category name: tokens joined by one space.
inline std::string normalize_phrase(std::string_view s) { return join(tokenize(s), " "); }

/// Vocabulary key for a (possibly multi-word) phrase: "personality disorder" -> "personality_disorder".
inline std::string vocab_key(std::string_view phrase) { return join(tokenize(phrase), "_"); }

/// Greedy longest-match phrase finder over token sequences.
class PhraseMatcher {
 public:
  struct Match {
    std::size_t begin;  // first token
    std::size_t end;    // one past last token
    int phrase;         // id returned by add()
  };

  /// Registers a phrase (already tokenized form is derived here). Returns its
  /// id, or the existing id when the same token sequence was added before.
  int add(std::string_view phrase) {
    const auto toks = tokenize(phrase);
    if (toks.empty()) return -1;
    std::size_t node = 0;
    for (const auto& t : toks) {
      auto it = nodes_[node].children.find(t);
      if (it == nodes_[node].children.end()) {
        nodes_.emplace_back();
        it = nodes_[node].children.emplace(t, nodes_.size() - 1).first;
      }
      node = it->second;
    }
    if (nodes_[node].phrase < 0) {
      nodes_[node].phrase = static_cast<int>(phrases_.size());
      phrases_.push_back(join(toks, " "));
    }
    return nodes_[node].phrase;
  }

  const std::string& phrase(int id) const { return phrases_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return phrases_.size(); }
  bool empty() const { return phrases_.empty(); }

  /// Left to right; at each position the longest registered phrase wins and
  /// its tokens are consumed. Returned spans never overlap.
  std::vector<Match> find_all(const std::vector<std::string>& tokens) const {
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t node = 0;
      int best = -1;
      std::size_t best_end = i;
      for (std::size_t j = i; j < tokens.size(); ++j) {
        const auto it = nodes_[node].children.find(tokens[j]);
        if (it == nodes_[node].children.end()) break;
        node = it->second;
        if (nodes_[node].phrase >= 0) {
          best = nodes_[node].phrase;
          best_end = j + 1;
        }
      }
      if (best >= 0) {
        out.push_back({i, best_end, best});
        i = best_end;
      } else {
        ++i;
      }
    }
    return out;
  }

  std::vector<Match> find_all(std::string_view text) const { return find_all(tokenize(text)); }

  bool matches_any(const std::vector<std::string>& tokens) const { return !find_all(tokens).empty(); }

 private:
  struct Node {
    std::unordered_map<std::string, std::size_t> children;
    int phrase = -1;
  };
  std::vector<Node> nodes_{1};
  std::vector<std::string> phrases_;
};

}  // namespace srf
