#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "srf/corpus.hpp"

using namespace srf;

namespace {

std::string record(const std::string& id, const std::string& text, const std::string& source = "social") {
  return nlohmann::json{{"id", id},         {"author", "u"},  {"community", "SuicideWatch"},
                        {"source", source}, {"timestamp", 1}, {"text", text}}
      .dump();
}

Corpus make(const std::vector<std::string>& texts, Source src = Source::social) {
  Corpus c("t", src);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    c.insert({"d" + std::to_string(100 + i), "u", "SuicideWatch", src, 0, texts[i]});
  }
  return c;
}

Lexicon standard_exclusions() {
  Lexicon lex("exclusions");
  for (const char* t : {"shave", "accidentally", "hair", "slack"}) lex.add("exclusion", t);
  return lex;
}

Lexicon severity() {
  Lexicon lex("severity");
  lex.add("supportive", "stay strong");
  lex.add("supportive", "hugs");
  lex.add("indicator", "struggling");
  lex.add("ideation", "end it");
  lex.add("behavior", "rope");
  lex.add("attempt", "tried to kill");
  return lex;
}

}  // namespace

TEST(Ingest, ThreeValidRecords) {
  std::istringstream in(record("b", "x") + "\n" + record("a", "y") + "\n" + record("c", "z") + "\n");
  const auto r = ingest(in, Source::social, "s");
  EXPECT_EQ(r.corpus.size(), 3u);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_EQ(r.corpus.documents().front().id, "a");
}

TEST(Ingest, RecordWithoutTextIsRejectedWithReason) {
  auto bad = nlohmann::json::parse(record("c", "z"));
  bad.erase("text");
  std::istringstream in(record("a", "x") + "\n" + record("b", "y") + "\n" + bad.dump() + "\n");
  const auto r = ingest(in, Source::social, "s");
  EXPECT_EQ(r.corpus.size(), 2u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].line, 3u);
  EXPECT_NE(r.rejects[0].reason.find("text"), std::string::npos);
  std::ostringstream out;
  write_rejects(out, r.rejects);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j.contains("reason"));
  EXPECT_EQ(j["id"], "c");
}

TEST(Ingest, EmptyFile) {
  std::istringstream in("");
  const auto r = ingest(in, Source::clinical, "c");
  EXPECT_TRUE(r.corpus.empty());
  EXPECT_TRUE(r.rejects.empty());
}

TEST(Ingest, MalformedDuplicateAndWrongSourceAreRejected) {
  std::istringstream in("{oops\n" + record("a", "x") + "\n" + record("a", "y") + "\n" + record("b", "z", "clinical") +
                        "\n" + record("c", "   ") + "\n");
  const auto r = ingest(in, Source::social, "s");
  EXPECT_EQ(r.corpus.size(), 1u);
  EXPECT_EQ(r.rejects.size(), 4u);
  EXPECT_TRUE(r.rejects[0].record.contains("raw"));
}

TEST(Ingest, UnreadablePathIsIoError) {
  EXPECT_THROW(ingest(std::string("/nonexistent/file.jsonl"), Source::social), IoError);
}

TEST(Ingest, WriteThenReadRoundTrips) {
  auto c = make({"one", "two"});
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  EXPECT_EQ(ingest(in, Source::social, "t").corpus, c);
}

TEST(ExclusionFilter, ShavingExampleDropped) {
  const auto r = apply_exclusion_filter(make({"People accidentally cutting while shaving"}), standard_exclusions());
  EXPECT_EQ(r.report.dropped_exclusion, 1u);
  EXPECT_EQ(r.report.kept, 0u);
}

TEST(ExclusionFilter, UnrelatedTextKept) {
  const auto r = apply_exclusion_filter(make({"I want to end it"}), standard_exclusions());
  EXPECT_EQ(r.report.kept, 1u);
}

TEST(ExclusionFilter, EmptyLexiconIsIdentity) {
  const auto c = make({"a", "b hair", "c"});
  const auto r = apply_exclusion_filter(c, Lexicon("empty"));
  EXPECT_EQ(r.kept, c);
}

TEST(ExclusionFilter, ScopeRestrictsCategories) {
  Lexicon lex;
  lex.add("self-harm", "hair");
  lex.add("gun ownership", "range");
  const auto c = make({"my hair", "at the range"});
  EXPECT_EQ(apply_exclusion_filter(c, lex, {"self-harm"}).report.kept, 1u);
  EXPECT_EQ(apply_exclusion_filter(c, lex).report.kept, 0u);
}

TEST(ExclusionFilter, NeverMatchesInsideLongerWords) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> hosts = {"chair", "hairy", "shaved", "slacker", "unshaven", "flair", "airhair"};
  for (int i = 0; i < 100; ++i) {
    std::string text = "i sat";
    for (int k = 0; k < 4; ++k) text += " " + hosts[rng() % hosts.size()];
    EXPECT_EQ(apply_exclusion_filter(make({text}), standard_exclusions()).report.kept, 1u) << text;
  }
}

TEST(NegationFilter, TwoCuesDropped) {
  const auto r = apply_negation_conjunction_filter(make({"I am not suicidal but worried", "I feel hopeless every day"}),
                                                   default_cue_lexicon());
  EXPECT_EQ(r.report.dropped_negation, 1u);
  EXPECT_EQ(r.report.kept, 1u);
  EXPECT_EQ(r.kept.documents()[0].text, "I feel hopeless every day");
}

TEST(NegationFilter, CountMatchesDirectScan) {
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back(i % 5 < 2 ? "tired but awake" : "tired and awake");
  std::size_t with_but = 0;
  for (const auto& t : texts)
    for (const auto& tok : tokenize(t)) with_but += tok == "but";
  const auto r = apply_negation_conjunction_filter(make(texts), default_cue_lexicon());
  EXPECT_EQ(with_but, 4u);
  EXPECT_EQ(r.report.dropped_negation, 4u);
  EXPECT_EQ(r.report.kept, 6u);
}

TEST(SeverityFilter, SupportiveOnlyDroppedMixedKeptUnmatchedDropped) {
  const auto r = apply_severity_filter(make({"stay strong, hugs", "hugs but I want to end it", "nice weather"}), severity());
  EXPECT_EQ(r.report.dropped_supportive, 1u);
  EXPECT_EQ(r.report.dropped_unrelated, 1u);
  EXPECT_EQ(r.report.kept, 1u);
  EXPECT_EQ(r.kept.documents()[0].text, "hugs but I want to end it");
}

TEST(SeverityFilter, MissingLevelIsConfigError) {
  Lexicon lex("partial");
  lex.add("supportive", "hugs");
  lex.add("ideation", "end it");
  EXPECT_THROW(apply_severity_filter(make({"x"}), lex), ConfigError);
}

TEST(Filters, ClinicalSkipsSeverityStage) {
  const auto r = run_filters(make({"patient notes fatigue", "no fatigue"}, Source::clinical), standard_exclusions(),
                             default_cue_lexicon(), severity());
  EXPECT_FALSE(r.severity);
  EXPECT_EQ(r.kept.size(), 1u);
  EXPECT_TRUE(r.total.balanced());
}

TEST(Filters, AccountingBalancesAndPipelineIsIdempotent) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> words = {"hair",  "but",  "hugs",  "struggling", "end", "it",  "rope",
                                          "stay",  "strong", "not", "tired",      "i",   "the", "!!"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> texts;
    for (int d = 0; d < 40; ++d) {
      std::string t;
      const auto len = rng() % 7;
      for (std::size_t k = 0; k < len; ++k) t += words[rng() % words.size()] + " ";
      texts.push_back(t.empty() ? "." : t);
    }
    const auto c = make(texts);
    const auto r = run_filters(c, standard_exclusions(), default_cue_lexicon(), severity());
    for (const auto* rep : {&r.exclusion, &r.negation, &*r.severity, &r.total}) EXPECT_TRUE(rep->balanced());
    EXPECT_EQ(r.total.input, c.size());
    EXPECT_EQ(r.total.kept, r.kept.size());
    const auto again = run_filters(r.kept, standard_exclusions(), default_cue_lexicon(), severity());
    EXPECT_EQ(again.kept, r.kept);
    EXPECT_EQ(again.total.dropped(), 0u);
    // kept and dropped partition the input
    const auto ex = apply_exclusion_filter(c, standard_exclusions());
    std::set<std::string> ids;
    for (const auto& d : ex.kept.documents()) ids.insert(d.id);
    for (const auto& id : ex.dropped_ids) EXPECT_TRUE(ids.insert(id).second);
    EXPECT_EQ(ids.size(), c.size());
  }
}
