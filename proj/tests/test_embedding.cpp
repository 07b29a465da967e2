#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "srf/embedding.hpp"

using namespace srf;

namespace {

std::string row(const std::string& tok, std::size_t dim, double base) {
  std::ostringstream s;
  s << tok;
  for (std::size_t i = 0; i < dim; ++i) s << ' ' << base + 0.01 * double(i);
  return s.str();
}

Document doc(const std::string& text) { return {"d1", "u", "c", Source::social, 0, text}; }

Lexicon stop(std::initializer_list<const char*> words) {
  Lexicon lex("stop");
  for (const char* w : words) lex.add("stop", w);
  return lex;
}

}  // namespace

TEST(Embeddings, LoadsRowsOfFiftyComponents) {
  std::istringstream in(row("sad", 50, 0.1) + "\n" + row("pain", 50, 0.2) + "\n" + row("Rope", 50, 0.3) + "\n");
  const auto s = parse_embeddings(in, "v.txt");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.dimension(), 50u);
  EXPECT_TRUE(s.contains("rope"));
}

TEST(Embeddings, ShortRowNamesTheLine) {
  std::istringstream in(row("a", 50, 0.1) + "\n" + row("b", 49, 0.1) + "\n");
  try {
    parse_embeddings(in, "v.txt");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("v.txt:2"), std::string::npos);
  }
}

TEST(Embeddings, DuplicateTokenKeepsLastAndWarns) {
  std::istringstream in(row("a", 50, 0.1) + "\n" + row("a", 50, 0.5) + "\n");
  std::vector<std::string> warnings;
  const auto s = parse_embeddings(in, "v.txt", {}, &warnings);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.at("a")[0], 0.5);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Embeddings, NonFiniteComponentRejected) {
  std::istringstream in("a 1 nan 2\n");
  EXPECT_THROW(parse_embeddings(in, "v.txt", {.strict_dimension = false}), FormatError);
}

TEST(Embeddings, StrictDimension) {
  std::istringstream in("a 1 2 3\n");
  EXPECT_THROW(parse_embeddings(in, "v.txt"), FormatError);
  std::istringstream in2("a 1 2 3\n");
  EXPECT_NO_THROW(parse_embeddings(in2, "v.txt", {.strict_dimension = false}));
}

TEST(Cosine, Examples) {
  const Vec v{0.3, -1.2, 4.0};
  EXPECT_NEAR(cosine(v, v), 1.0, 1e-15);
  EXPECT_EQ(cosine(Vec{1, 0}, Vec{0, 1}), 0.0);
  EXPECT_NEAR(cosine(Vec{1, 1}, Vec{1, 0}), 0.7071, 1e-4);
  EXPECT_NEAR(cosine(Vec{1, 1}, Vec{1, 0}), 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_THROW(cosine(Vec{0, 0}, Vec{1, 0}), DomainError);
  EXPECT_EQ(cosine_distance(v, v), 0.0);
}

TEST(Cosine, SymmetricBitForBit) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    Vec a(7), b(7);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    EXPECT_EQ(cosine(a, b), cosine(b, a));
    EXPECT_LE(std::abs(cosine(a, b)), 1.0);
  }
}

TEST(Embed, SingleTokenIsItsVector) {
  EmbeddingStore s(3);
  s.set("hopeless", {1, 2, 3});
  const auto out = embed_document(doc("I feel hopeless."), s, stop({"i", "feel"}));
  EXPECT_EQ(out.status, EmbedStatus::ok);
  EXPECT_EQ(out.vector.vector, (Vec{1, 2, 3}));
  EXPECT_EQ(out.vector.token_count, 1u);
}

TEST(Embed, CancellingVectorsAreDegenerate) {
  EmbeddingStore s(2);
  s.set("up", {1, -2});
  s.set("down", {-1, 2});
  EXPECT_EQ(embed_document(doc("up down"), s, stop({})).status, EmbedStatus::degenerate);
}

TEST(Embed, OnlyStopwordsIsUnembeddable) {
  EmbeddingStore s(2);
  s.set("the", {1, 1});
  EXPECT_EQ(embed_document(doc("the the"), s, stop({"the"})).status, EmbedStatus::unembeddable);
  EXPECT_EQ(embed_document(doc("zzz qqq"), s, stop({})).status, EmbedStatus::unembeddable);
}

TEST(Embed, MeanIsTokenOrderInvariant) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  EmbeddingStore s(4);
  std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps"};
  for (const auto& w : words) s.set(w, {g(rng), g(rng), g(rng), g(rng)});
  const auto join = [](const std::vector<std::string>& ws) {
    std::string t;
    for (const auto& w : ws) t += w + " ";
    return t;
  };
  const auto ref = embed_document(doc(join(words)), s, stop({})).vector.vector;
  for (int t = 0; t < 20; ++t) {
    std::shuffle(words.begin(), words.end(), rng);
    const auto v = embed_document(doc(join(words)), s, stop({})).vector.vector;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(v[i], ref[i], 1e-12);
  }
}

TEST(Embed, LexiconPhraseUsesJoinedEntry) {
  EmbeddingStore s(2);
  s.set("self_harm", {5, 5});
  s.set("self", {1, 0});
  s.set("harm", {0, 1});
  Lexicon lex("srf");
  lex.add("self-harm", "self harm");
  const DocumentEmbedder e(s, stop({}), &lex);
  EXPECT_EQ(e.contributing_tokens("thinking of self harm"), (std::vector<std::string>{"self_harm"}));
  EXPECT_EQ(e.embed(doc("self harm")).vector.vector, (Vec{5, 5}));
}

TEST(Embed, IdfWeightsRareTokens) {
  EmbeddingStore s(2);
  s.set("common", {1, 0});
  s.set("rare", {0, 1});
  Corpus c("c", Source::social);
  c.insert({"a", "u", "c", Source::social, 0, "common rare"});
  c.insert({"b", "u", "c", Source::social, 0, "common"});
  const DocumentEmbedder e(s, stop({}));
  const auto idf = e.compute_idf(c);
  EXPECT_EQ(idf.at("common"), 0.0);
  const auto v = e.embed(doc("common rare"), &idf).vector.vector;
  EXPECT_EQ(v, (Vec{0, 1}));
}
