#pragma once

// Slow, direct reference implementations. None of these call into the
// library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double cos_sim(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct UserPosts {
  std::vector<Vec> in_a, in_b;
};

/// Enumerates every cross pair for every user who posted on both sides.
inline std::optional<double> relatedness(const std::vector<UserPosts>& users, double threshold) {
  double total = 0;
  int common = 0;
  for (const auto& u : users) {
    if (u.in_a.empty() || u.in_b.empty()) continue;
    ++common;
    int hits = 0;
    for (const auto& p : u.in_a)
      for (const auto& q : u.in_b)
        if (cos_sim(p, q) > threshold) ++hits;
    total += double(hits) / double(u.in_a.size() + u.in_b.size());
  }
  if (common == 0) return std::nullopt;
  return total / common;
}

struct OpticsPoint {
  std::string id;
  std::optional<double> reach, core;
};

/// Textbook OPTICS with a linear scan for the next point: smallest
/// reachability first, ties and new components by smallest id.
inline std::vector<OpticsPoint> optics(std::vector<std::pair<std::string, Vec>> pts, std::size_t min_pts,
                                       double max_eps = std::numeric_limits<double>::infinity()) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const auto n = pts.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      d[i][j] = i == j ? 0.0 : 1.0 - cos_sim(pts[i].second, pts[j].second);
      if (d[i][j] < 0) d[i][j] = 0;
    }
  auto core = [&](std::size_t i) -> std::optional<double> {
    std::vector<double> within;
    for (std::size_t j = 0; j < n; ++j)
      if (d[i][j] <= max_eps) within.push_back(d[i][j]);
    if (within.size() < min_pts) return std::nullopt;
    std::sort(within.begin(), within.end());
    return within[min_pts - 1];
  };
  std::vector<bool> done(n, false);
  std::vector<std::optional<double>> reach(n);
  std::vector<OpticsPoint> out;
  while (out.size() < n) {
    std::optional<std::size_t> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || !reach[i]) continue;
      if (!next || *reach[i] < *reach[*next]) next = i;
    }
    if (!next) {
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i]) {
          next = i;
          break;
        }
    }
    const auto p = *next;
    done[p] = true;
    const auto c = core(p);
    out.push_back({pts[p].first, reach[p], c});
    if (!c) continue;
    for (std::size_t o = 0; o < n; ++o) {
      if (done[o] || d[p][o] > max_eps) continue;
      const double r = std::max(*c, d[p][o]);
      if (!reach[o] || r < *reach[o]) reach[o] = r;
    }
  }
  return out;
}

/// Alpha from pairable values: D_o averages within-unit disagreement, D_e
/// averages disagreement over all pairs of pairable values.
/// units[u] lists the category indices assigned to unit u.
inline std::optional<double> alpha(const std::vector<std::vector<int>>& units,
                                   double (*delta)(int, int) = [](int a, int b) { return a == b ? 0.0 : 1.0; }) {
  std::vector<int> values;
  double d_o = 0;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j) s += delta(u[i], u[j]);
    d_o += s / double(u.size() - 1);
    values.insert(values.end(), u.begin(), u.end());
  }
  const double n = double(values.size());
  if (n < 2) return std::nullopt;
  double d_e = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values.size(); ++j)
      if (i != j) d_e += delta(values[i], values[j]);
  d_o /= n;
  d_e /= n * (n - 1);
  if (d_e == 0) return d_o == 0 ? std::optional<double>(1.0) : std::nullopt;
  return 1.0 - d_o / d_e;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const auto n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

struct WEdge {
  std::size_t src, dst;
  double w;
};

/// Stationary restart-walk distribution as a linear system: mass leaving a
/// node without out-edges returns to the seeds.
inline std::vector<double> rwr(std::size_t n, const std::vector<WEdge>& edges, const std::vector<std::size_t>& seeds,
                               double r) {
  std::vector<double> s(n, 0.0), out(n, 0.0);
  for (auto x : seeds) s[x] += 1.0 / double(seeds.size());
  for (const auto& e : edges) out[e.src] += e.w;
  // p = r s + (1-r) (P^T p + s * sum_{dangling u} p_u)
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  for (const auto& e : edges) a[e.dst][e.src] -= (1 - r) * e.w / out[e.src];
  for (std::size_t u = 0; u < n; ++u)
    if (out[u] == 0)
      for (std::size_t i = 0; i < n; ++i) a[i][u] -= (1 - r) * s[i];
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = r * s[i];
  return solve(a, b);
}

/// Minimizer of sum_i a_i (q_i - qhat_i)^2 + sum_{edges} (q_i - q_j)^2 for
/// scalar values, from the normal equations.
inline std::vector<double> retrofit_fixed_point(const std::vector<double>& qhat,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                                const std::vector<double>& a) {
  const auto n = qhat.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] += a[i];
    b[i] = a[i] * qhat[i];
  }
  for (const auto& [i, j] : edges) {
    m[i][i] += 1;
    m[j][j] += 1;
    m[i][j] -= 1;
    m[j][i] -= 1;
  }
  return solve(m, b);
}

/// Every subset of size `arity` of the factors present, counted by scanning
/// all bitmasks.
inline std::map<std::vector<int>, std::size_t> subset_counts(const std::vector<std::set<int>>& present, int universe,
                                                             int arity) {
  std::map<std::vector<int>, std::size_t> out;
  for (std::uint32_t mask = 0; mask < (1u << universe); ++mask) {
    if (__builtin_popcount(mask) != arity) continue;
    std::vector<int> tuple;
    for (int b = 0; b < universe; ++b)
      if (mask & (1u << b)) tuple.push_back(b);
    std::size_t c = 0;
    for (const auto& p : present)
      if (std::all_of(tuple.begin(), tuple.end(), [&](int t) { return p.count(t) > 0; })) ++c;
    if (c) out[tuple] = c;
  }
  return out;
}

/// Token-sequence containment, for lexicon hits without a trie.
inline bool contains_phrase(const std::vector<std::string>& toks, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > toks.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= toks.size(); ++i)
    if (std::equal(phrase.begin(), phrase.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  return false;
}

}  // namespace oracle
