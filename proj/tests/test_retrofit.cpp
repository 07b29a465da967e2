#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "srf/retrofit.hpp"

using namespace srf;

namespace {

struct Fixture {
  EmbeddingStore store;
  Lexicon lex{"srf"};
};

// 100 words, 5 categories of 8 terms, named anchors for the first three.
Fixture random_fixture(std::uint64_t seed, std::size_t dim = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Fixture f;
  f.store = EmbeddingStore(dim);
  for (int i = 0; i < 100; ++i) {
    Vec v(dim);
    for (auto& x : v) x = g(rng);
    f.store.set("w" + std::to_string(i), v);
  }
  for (int c = 0; c < 3; ++c) {
    Vec v(dim);
    for (auto& x : v) x = g(rng);
    f.store.set("cat" + std::to_string(c), v);
  }
  for (int c = 0; c < 5; ++c)
    for (int k = 0; k < 8; ++k) f.lex.add("cat" + std::to_string(c), "w" + std::to_string(c * 8 + k), k < 3 ? 1.0 : 0.5);
  return f;
}

}  // namespace

TEST(Retrofit, OneNeighborClosedForm) {
  EmbeddingStore s(2);
  s.set("hopelessness", {1.0, 0.0});
  s.set("hopeless", {0.6, 0.8});
  Lexicon lex("srf");
  lex.add("hopelessness", "hopeless");
  const auto r = retrofit(s, lex, {.alpha = 1.0, .iterations = 1});
  // both nodes have one neighbor: q = (alpha * qhat + q_other) / (alpha + 1)
  EXPECT_NEAR(r.store.at("hopeless")[0], 0.8, 1e-12);
  EXPECT_NEAR(r.store.at("hopeless")[1], 0.4, 1e-12);
  EXPECT_NEAR(r.store.at("hopelessness")[0], 0.8, 1e-12);
  EXPECT_NEAR(r.store.at("hopelessness")[1], 0.4, 1e-12);
}

TEST(Retrofit, ConvergesToNormalEquationSolution) {
  for (const auto mode : {BetaMode::inverse_degree, BetaMode::uniform}) {
    for (const bool term_edges : {false, true}) {
      auto f = random_fixture(5, 3);
      const RetrofitConfig cfg{.alpha = 0.7, .iterations = 400, .beta_mode = mode, .term_edges = term_edges};
      const auto g = build_lexicon_graph(f.store, f.lex, term_edges);
      std::vector<std::pair<std::size_t, std::size_t>> edges;
      std::vector<double> a(g.node_count(), 0.0);
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        for (const auto j : g.neighbors[i])
          if (i < j) edges.emplace_back(i, j);
        a[i] = g.neighbors[i].empty() ? 1.0 : anchor_strength(cfg, g.neighbors[i].size());
      }
      const auto r = retrofit(f.store, f.lex, cfg);
      for (std::size_t d = 0; d < 3; ++d) {
        std::vector<double> qhat(g.node_count());
        for (std::size_t i = 0; i < g.node_count(); ++i) qhat[i] = g.original[i][d];
        const auto x = oracle::retrofit_fixed_point(qhat, edges, a);
        for (std::size_t i = 0; i < g.vocab_size; ++i) EXPECT_NEAR(r.store.vector(i)[d], x[i], 1e-9);
        for (const auto& [cat, node] : g.anchor_of) EXPECT_NEAR(r.anchors.at(cat)[d], x[node], 1e-9);
      }
    }
  }
}

TEST(Retrofit, ObjectiveNeverRises) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto f = random_fixture(seed);
    for (const auto mode : {BetaMode::inverse_degree, BetaMode::uniform}) {
      const auto r = retrofit(f.store, f.lex, {.alpha = 0.3, .iterations = 10, .beta_mode = mode, .term_edges = true});
      ASSERT_EQ(r.objective.size(), 11u);
      for (std::size_t i = 1; i < r.objective.size(); ++i)
        EXPECT_LE(r.objective[i], r.objective[i - 1] * (1 + 1e-9));
    }
  }
}

TEST(Retrofit, UntouchedTokensKeepTheirVectors) {
  auto f = random_fixture(2);
  const auto r = retrofit(f.store, f.lex);
  EXPECT_EQ(r.store.size(), f.store.size());
  EXPECT_EQ(r.store.tokens(), f.store.tokens());
  EXPECT_EQ(r.store.dimension(), f.store.dimension());
  for (int i = 40; i < 100; ++i) {
    const auto w = "w" + std::to_string(i);
    EXPECT_EQ(r.store.at(w), f.store.at(w));
  }
  EXPECT_NE(r.store.at("w0"), f.store.at("w0"));
}

TEST(Retrofit, ScalingInputsScalesOutputs) {
  auto f = random_fixture(3);
  EmbeddingStore scaled(f.store.dimension());
  for (std::size_t i = 0; i < f.store.size(); ++i) {
    auto v = f.store.vector(i);
    for (auto& x : v) x *= 3.0;
    scaled.set(f.store.tokens()[i], v);
  }
  const auto a = retrofit(f.store, f.lex), b = retrofit(scaled, f.lex);
  for (std::size_t i = 0; i < a.store.size(); ++i)
    for (std::size_t d = 0; d < a.store.dimension(); ++d)
      EXPECT_NEAR(b.store.vector(i)[d], 3.0 * a.store.vector(i)[d], 1e-12);
}

TEST(Retrofit, SyntheticAnchorFromSeedMean) {
  EmbeddingStore s(2);
  s.set("a", {2, 0});
  s.set("b", {0, 2});
  s.set("c", {9, 9});
  Lexicon lex("srf");
  lex.add("grp", "a");
  lex.add("grp", "b");
  lex.add("grp", "c", 0.5);
  lex.add("grp", "missing term");
  const auto g = build_lexicon_graph(s, lex, false);
  ASSERT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.original[3], (Vec{1, 1}));
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_EQ(g.skipped_terms, (std::vector<std::string>{"missing term"}));
}

TEST(Retrofit, PullsTermTowardItsOwnCategory) {
  EmbeddingStore s(2);
  s.set("hopelessness", {1.0, 0.0});
  s.set("bullying", {0.0, 1.0});
  s.set("hopeless", {0.6, 0.8});
  s.set("harassment", {0.1, 1.0});
  Lexicon lex("srf");
  lex.add("hopelessness", "hopeless");
  lex.add("bullying", "harassment");
  const auto before_own = cosine(s.at("hopeless"), s.at("hopelessness"));
  const auto before_other = cosine(s.at("hopeless"), s.at("harassment"));
  ASSERT_LT(before_own, before_other);
  const auto r = retrofit(s, lex);
  EXPECT_GT(cosine(r.store.at("hopeless"), r.anchors.at("hopelessness")),
            cosine(r.store.at("hopeless"), r.store.at("harassment")));
}

TEST(Retrofit, RejectsBadConfig) {
  EmbeddingStore s(2);
  Lexicon lex("srf");
  EXPECT_THROW(retrofit(s, lex, {.alpha = 0.0}), ConfigError);
  EXPECT_THROW(retrofit(s, lex, {.iterations = 0}), ConfigError);
}
