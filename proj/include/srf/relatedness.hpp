#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srf/corpus.hpp"
#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/parallel.hpp"

namespace srf {

/// Post vectors per (user, community), each list sorted by document id.
class UserPostIndex {
 public:
  using PostList = std::vector<DocumentVector>;

  void add(const std::string& user, const std::string& community, DocumentVector v) {
    if (dim_ == 0) dim_ = v.vector.size();
    if (v.vector.size() != dim_) throw DomainError("post vector dimension mismatch for '" + v.doc_id + "'");
    auto& list = by_user_[user][community];
    const auto at = std::lower_bound(list.begin(), list.end(), v.doc_id,
                                     [](const DocumentVector& a, const std::string& id) { return a.doc_id < id; });
    list.insert(at, std::move(v));
  }

  /// Indexes every non-comment document that has a vector.
  static UserPostIndex build(const std::vector<Document>& docs, const std::map<std::string, DocumentVector>& vectors) {
    UserPostIndex idx;
    for (const auto& d : docs) {
      if (d.is_comment) continue;
      const auto it = vectors.find(d.id);
      if (it == vectors.end()) continue;
      idx.add(d.author, d.community, it->second);
    }
    return idx;
  }

  const PostList* posts(const std::string& user, const std::string& community) const {
    const auto u = by_user_.find(user);
    if (u == by_user_.end()) return nullptr;
    const auto c = u->second.find(community);
    return c == u->second.end() ? nullptr : &c->second;
  }

  const std::map<std::string, std::map<std::string, PostList>>& users() const noexcept { return by_user_; }

  std::vector<std::string> communities() const {
    std::vector<std::string> out;
    for (const auto& [_, comms] : by_user_)
      for (const auto& [c, __] : comms) out.push_back(c);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t users_in(const std::string& community) const {
    std::size_t n = 0;
    for (const auto& [_, comms] : by_user_) n += comms.count(community);
    return n;
  }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::map<std::string, PostList>> by_user_;
};

struct SrValue {
  std::optional<double> sr;  // absent when the communities share no user
  std::size_t n_common = 0;
};

/// For every user u active in both communities,
///   inner(u) = #{(p, q) : p in u's posts in s1, q in u's posts in s2, cos(p, q) > threshold}
///              / (|u's posts in s1| + |u's posts in s2|),
/// and SR = sum_u inner(u) / N_u. Users are visited in sorted order and the
/// sum is accumulated in long double, so SR(s1, s2) == SR(s2, s1) exactly.
inline SrValue semantic_relatedness(const std::string& s1, const std::string& s2, const UserPostIndex& index,
                                    double sim_threshold = 0.9) {
  if (!(sim_threshold > -1.0 && sim_threshold < 1.0)) {
    throw DomainError("similarity threshold must lie in (-1, 1)");
  }
  SrValue out;
  long double total = 0.0L;
  for (const auto& [user, comms] : index.users()) {
    const auto a = comms.find(s1);
    const auto b = comms.find(s2);
    if (a == comms.end() || b == comms.end()) continue;
    ++out.n_common;
    std::size_t similar = 0;
    for (const auto& p : a->second)
      for (const auto& q : b->second) similar += cosine(p.vector, q.vector) > sim_threshold ? 1 : 0;
    total += static_cast<long double>(similar) / static_cast<long double>(a->second.size() + b->second.size());
  }
  if (out.n_common > 0) out.sr = static_cast<double>(total / static_cast<long double>(out.n_common));
  return out;
}

/// Symmetric community x community matrix. The diagonal is 1 by convention
/// and its N_u is the number of users in that community.
struct SrMatrix {
  std::vector<std::string> communities;
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::size_t>> n_common;
  double sim_threshold = 0.9;

  std::optional<std::size_t> index_of(const std::string& c) const {
    const auto it = std::find(communities.begin(), communities.end(), c);
    if (it == communities.end()) return std::nullopt;
    return static_cast<std::size_t>(it - communities.begin());
  }

  std::optional<double> at(const std::string& a, const std::string& b) const {
    const auto i = index_of(a), j = index_of(b);
    if (!i || !j) return std::nullopt;
    return values[*i][*j];
  }
};

inline SrMatrix build_sr_matrix(const UserPostIndex& index, const std::vector<std::string>& communities,
                                double sim_threshold = 0.9, std::size_t threads = 1) {
  SrMatrix m;
  m.communities = communities;
  m.sim_threshold = sim_threshold;
  const auto n = communities.size();
  m.values.assign(n, std::vector<std::optional<double>>(n));
  m.n_common.assign(n, std::vector<std::size_t>(n, 0));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    m.values[i][i] = 1.0;
    m.n_common[i][i] = index.users_in(communities[i]);
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<SrValue> results(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    results[k] = semantic_relatedness(communities[pairs[k].first], communities[pairs[k].second], index, sim_threshold);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    m.values[i][j] = m.values[j][i] = results[k].sr;
    m.n_common[i][j] = m.n_common[j][i] = results[k].n_common;
  }
  return m;
}

/// Communities whose SR with `anchor` is at least `threshold`, best first
/// (ties by name). The anchor itself and absent entries are never returned.
inline std::vector<std::pair<std::string, double>> select_communities(const SrMatrix& m, const std::string& anchor,
                                                                      double threshold = 0.40) {
  const auto a = m.index_of(anchor);
  if (!a) throw DomainError("anchor community '" + anchor + "' is not in the SR matrix");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < m.communities.size(); ++j) {
    if (j == *a || !m.values[*a][j]) continue;
    if (*m.values[*a][j] >= threshold) out.emplace_back(m.communities[j], *m.values[*a][j]);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  return out;
}

inline void write_sr_csv(std::ostream& out, const SrMatrix& m, bool clamp = false) {
  out << "community";
  for (const auto& c : m.communities) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < m.communities.size(); ++i) {
    out << m.communities[i];
    for (std::size_t j = 0; j < m.communities.size(); ++j) {
      out << ',';
      if (const auto v = m.values[i][j]) out << format_double(clamp ? std::min(*v, 1.0) : *v);
    }
    out << '\n';
  }
}

inline nlohmann::json to_json(const SrMatrix& m) {
  nlohmann::json raw = nlohmann::json::array(), clamped = nlohmann::json::array();
  for (const auto& row : m.values) {
    nlohmann::json r = nlohmann::json::array(), c = nlohmann::json::array();
    for (const auto& v : row) {
      r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
      c.push_back(v ? nlohmann::json(std::min(*v, 1.0)) : nlohmann::json(nullptr));
    }
    raw.push_back(std::move(r));
    clamped.push_back(std::move(c));
  }
  return {{"communities", m.communities},
          {"raw", raw},
          {"clamped", clamped},
          {"n_common_users", m.n_common},
          {"sim_threshold", m.sim_threshold},
          {"posts_denominator", "per-user"},
          {"diagonal", "1.0 by convention"}};
}

inline SrMatrix sr_matrix_from_json(const nlohmann::json& j) {
  SrMatrix m;
  m.communities = j.at("communities").get<std::vector<std::string>>();
  m.sim_threshold = j.at("sim_threshold").get<double>();
  m.n_common = j.at("n_common_users").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& row : j.at("raw")) {
    std::vector<std::optional<double>> r;
    for (const auto& v : row) r.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    m.values.push_back(std::move(r));
  }
  return m;
}

/// Heatmap with one cell per pair, darker for higher (clamped) SR; absent cells are grey.
inline void write_sr_svg(std::ostream& out, const SrMatrix& m) {
  constexpr int cell = 40, margin = 160;
  const int n = static_cast<int>(m.communities.size());
  const int size = margin + n * cell + 10;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i < n; ++i) {
    const auto& name = m.communities[static_cast<std::size_t>(i)];
    out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + i * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << name << "</text>\n";
    out << "<text transform=\"translate(" << margin + i * cell + cell / 2 + 4 << "," << margin - 6
        << ") rotate(-60)\">" << name << "</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto v = m.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      char fill[16];
      if (v) {
        const int shade = 255 - static_cast<int>(std::min(*v, 1.0) * 200.0);
        std::snprintf(fill, sizeof fill, "#ff%02x%02x", shade, shade);
      } else {
        std::snprintf(fill, sizeof fill, "#dddddd");
      }
      out << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << fill << "\" stroke=\"#ffffff\"/>\n";
      if (v) {
        char label[16];
        std::snprintf(label, sizeof label, "%.2f", std::min(*v, 1.0));
        out << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\"" << margin + i * cell + cell / 2 + 4
            << "\" text-anchor=\"middle\">" << label << "</text>\n";
      }
    }
  }
  out << "</svg>\n";
}

}  // namespace srf
