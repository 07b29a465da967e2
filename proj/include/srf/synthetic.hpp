#pragma once

// Generated corpora, lexicons and vectors with known structure, for tests
// and for the bundled demo fixture.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "srf/agreement.hpp"
#include "srf/corpus.hpp"
#include "srf/embedding.hpp"
#include "srf/lexicon.hpp"

namespace srf::synthetic {

/// Ten template words per risk factor, disjoint across factors, in taxonomy order.
inline const std::array<std::array<std::string_view, 10>, 12>& template_words() {
  static const std::array<std::array<std::string_view, 10>, 12> words = {{
      {"hopeless", "thoughts", "emotions", "ranting", "ocd", "sad", "empty", "worthless", "lonely", "numb"},
      {"insomnia", "fatigue", "appetite", "sleepless", "exhausted", "tired", "lethargy", "restless", "foggy",
       "drained"},
      {"heroin", "opioids", "cocaine", "relapse", "addiction", "meth", "alcohol", "drunk", "withdrawal", "needles"},
      {"attempted", "survived", "hospitalized", "icu", "rescued", "psychward", "stomach", "woke", "again",
       "lastyear"},
      {"funeral", "grief", "mourning", "memorial", "bereaved", "grave", "condolences", "brother", "buried",
       "passed"},
      {"die", "dead", "kill", "ending", "goodbye", "deathwish", "disappear", "gone", "finish", "escape"},
      {"cuts", "hurt", "pills", "overdose", "tear", "knife", "scars", "razor", "burn", "bleeding"},
      {"bullied", "harassment", "teased", "mocked", "humiliated", "cyberbully", "insults", "taunted", "excluded",
       "shamed"},
      {"gun", "pistol", "rifle", "firearm", "bullet", "trigger", "shotgun", "ammo", "handgun", "revolver"},
      {"bipolar", "schizophrenia", "bpd", "ptsd", "psychosis", "mania", "anxiety", "paranoia", "dissociation",
       "hallucinations"},
      {"abuse", "beaten", "divorce", "father", "mother", "yelling", "fights", "stepdad", "neglect", "custody"},
      {"impulsive", "reckless", "rash", "sudden", "spontaneous", "urges", "gambling", "spree", "snapped",
       "blurted"},
  }};
  return words;
}

inline const std::vector<std::string_view>& filler_words() {
  static const std::vector<std::string_view> words = {
      "today", "life", "feel", "really", "know", "people", "time", "going", "think", "thing",
      "day",   "night", "week", "work", "school", "home", "talk", "anyone", "maybe", "still",
      "year",  "months", "tonight", "everything", "morning", "said", "told", "tell", "left", "right"};
  return words;
}

/// Severity terms per level; every non-supportive level has single-word entries.
inline const std::array<std::vector<std::string_view>, 5>& severity_terms() {
  static const std::array<std::vector<std::string_view>, 5> terms = {{
      {"stay strong", "hugs", "here for you", "supportive"},
      {"struggling", "overwhelmed"},
      {"suicidal", "end it"},
      {"planning", "rope"},
      {"attempt", "tried to kill"},
  }};
  return terms;
}

/// Deterministic across standard libraries: no std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double gaussian() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * 3.14159265358979323846 * v);
    return r * std::cos(2.0 * 3.14159265358979323846 * v);
  }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

struct VectorSpec {
  std::size_t dim = 50;
  double word_noise = 0.35;  // norm of the per-word offset from its factor direction
  std::uint64_t seed = 11;
};

inline Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

/// Factor directions are random unit vectors; each template word sits at its
/// factor direction plus a random offset of norm `word_noise`. Filler and
/// severity words get independent random directions. The underscore-joined
/// factor names are included at their factor direction.
inline EmbeddingStore make_vectors(const VectorSpec& spec = {}) {
  Rng rng(spec.seed);
  EmbeddingStore store(spec.dim);
  const auto& words = template_words();
  for (std::size_t s = 0; s < words.size(); ++s) {
    const auto base = random_unit(rng, spec.dim);
    store.set(vocab_key(kSrfTaxonomy[s]), base);
    for (const auto w : words[s]) {
      auto off = random_unit(rng, spec.dim);
      Vec v(spec.dim);
      for (std::size_t i = 0; i < spec.dim; ++i) v[i] = base[i] + spec.word_noise * off[i];
      store.set(w, std::move(v));
    }
  }
  for (const auto w : filler_words()) store.set(w, random_unit(rng, spec.dim));
  for (const auto& level : severity_terms())
    for (const auto t : level)
      for (const auto& tok : tokenize(t))
        if (!store.contains(tok)) store.set(tok, random_unit(rng, spec.dim));
  return store;
}

/// The first `seeds` template words of every factor (taxonomy names), plus
/// small term lists for the two mixed categories.
inline Lexicon make_srf_lexicon(std::size_t seeds = 5) {
  Lexicon lex("synthetic-srf");
  const auto& words = template_words();
  for (std::size_t s = 0; s < words.size(); ++s)
    for (std::size_t j = 0; j < seeds && j < words[s].size(); ++j) lex.add(kSrfTaxonomy[s], words[s][j]);
  for (const auto t : {"unemployment", "debt", "relationship issues", "brain damage"}) lex.add(kOtherSrf, t);
  for (const auto& t : default_accessory_lexicon().terms(kAccessorySrf)) lex.add(kAccessorySrf, t.term);
  return lex;
}

inline Lexicon make_severity_lexicon() {
  Lexicon lex("synthetic-severity");
  for (std::size_t l = 0; l < kSeverityLevels.size(); ++l)
    for (const auto t : severity_terms()[l]) lex.add(kSeverityLevels[l], t);
  return lex;
}

inline Lexicon make_exclusion_lexicon() {
  Lexicon lex("synthetic-exclusions");
  for (const auto t : {"shave", "accidentally", "hair", "slack"}) lex.add("exclusion", t);
  return lex;
}

struct DocSpec {
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  std::size_t filler = 2;
  bool severity_term = true;  // append one non-supportive severity term
};

/// Text drawn from factor `s`'s template words with a little filler.
inline std::string make_text(Rng& rng, std::size_t s, const DocSpec& spec = {}) {
  const auto& words = template_words()[s];
  const auto n = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
  std::vector<std::string> parts{"i"};
  for (std::size_t k = 0; k < n; ++k) {
    parts.emplace_back(words[rng.below(words.size())]);
    if (k % 3 == 1) parts.emplace_back("and");
  }
  for (std::size_t k = 0; k < spec.filler; ++k) parts.emplace_back(filler_words()[rng.below(filler_words().size())]);
  if (spec.severity_term) {
    const auto level = 1 + rng.below(4);
    const auto& terms = severity_terms()[level];
    parts.emplace_back(terms[rng.below(terms.size())]);
  }
  return join(parts, " ");
}

/// `counts[s]` documents for factor s (taxonomy index), ids "<prefix>-<s>-<k>".
/// Returns the corpus and each document's generating factor.
inline std::pair<Corpus, std::map<std::string, std::size_t>> make_template_corpus(
    const std::map<std::size_t, std::size_t>& counts, Source source, std::uint64_t seed, const DocSpec& spec = {},
    std::string prefix = "doc") {
  Rng rng(seed);
  Corpus corpus(std::string(to_string(source)), source);
  std::map<std::string, std::size_t> truth;
  for (const auto& [s, n] : counts) {
    for (std::size_t k = 0; k < n; ++k) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%02zu-%04zu", prefix.c_str(), s, k);
      Document d{id, "author-" + std::to_string(rng.below(1000)), source == Source::social ? "SuicideWatch" : "clinic",
                 source, 1262304000 + static_cast<std::int64_t>(rng.below(200000000)), make_text(rng, s, spec)};
      truth.emplace(d.id, s);
      corpus.insert(std::move(d));
    }
  }
  return {std::move(corpus), std::move(truth)};
}

/// Document counts per factor for the reported clinical shares of the top six
/// factors (depressive feelings, psychological disorder, drug abuse,
/// depression symptoms, suicide around individual, suicide ideation).
inline std::map<std::size_t, std::size_t> ehr_counts(std::size_t per_mille = 1000) {
  const std::array<std::pair<std::size_t, double>, 6> shares = {
      {{0, 24.0}, {9, 21.1}, {2, 18.2}, {1, 14.9}, {4, 12.6}, {5, 9.1}}};
  std::map<std::size_t, std::size_t> out;
  for (const auto& [s, pct] : shares) {
    out[s] = static_cast<std::size_t>(std::lround(pct / 100.0 * static_cast<double>(per_mille)));
  }
  return out;
}

/// Annotation set where `best` agrees with every other annotator on most
/// items and the others disagree among themselves more often.
inline AnnotationSet make_annotations(std::size_t items, std::uint64_t seed, const std::vector<std::string>& names,
                                      const std::vector<double>& error_rate) {
  Rng rng(seed);
  AnnotationSet set;
  for (std::size_t i = 0; i < items; ++i) {
    const auto truth = rng.below(kSeverityLevels.size());
    char item[32];
    std::snprintf(item, sizeof item, "item-%03zu", i);
    for (std::size_t a = 0; a < names.size(); ++a) {
      auto lab = truth;
      if (rng.chance(error_rate[a])) lab = (truth + 1 + rng.below(kSeverityLevels.size() - 1)) % kSeverityLevels.size();
      set.add(item, names[a], kSeverityLevels[lab]);
    }
  }
  return set;
}

struct FixtureFiles {
  std::filesystem::path dir, config, social, clinical, srf_lexicon, severity, exclusions, graph, vectors,
      annotations;
};

namespace detail {

inline void write_lexicon_file(const std::filesystem::path& p, const Lexicon& lex) {
  std::ofstream out(p);
  write_lexicon(out, lex);
}

}  // namespace detail

/// Writes a complete small input set for the pipeline: a social corpus over
/// six communities with overlapping users, a clinical corpus with the
/// clinical share profile, lexicons, a concept graph, vectors, annotations
/// and a config file referring to all of them by relative path.
inline FixtureFiles write_fixture(const std::filesystem::path& dir, std::uint64_t seed = 2020) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  FixtureFiles f;
  f.dir = dir;
  f.config = dir / "pipeline.conf";
  f.social = dir / "social.jsonl";
  f.clinical = dir / "clinical.jsonl";
  f.srf_lexicon = dir / "srf_lexicon.jsonl";
  f.severity = dir / "severity_lexicon.jsonl";
  f.exclusions = dir / "exclusions.jsonl";
  f.graph = dir / "concepts.tsv";
  f.vectors = dir / "vectors.txt";
  f.annotations = dir / "annotations.csv";

  Rng rng(seed);
  const auto& words = template_words();
  {
    // Users mostly stay on their own factor; related communities see the same
    // topics, distant ones see unrelated filler text.
    std::ofstream out(f.social);
    std::size_t next = 0;
    auto emit = [&](const std::string& user, const std::string& community, const std::string& text, bool comment) {
      char id[32];
      std::snprintf(id, sizeof id, "p%05zu", next++);
      Document d{id, user, community, Source::social, 1262304000 + static_cast<std::int64_t>(next) * 3600, text};
      d.is_comment = comment;
      out << to_json(d).dump() << '\n';
    };
    auto filler = [&](std::size_t n) {
      std::vector<std::string> parts{"i"};
      for (std::size_t k = 0; k < n; ++k) parts.emplace_back(filler_words()[rng.below(filler_words().size())]);
      parts.emplace_back("struggling");
      return join(parts, " ");
    };
    const std::vector<std::pair<std::string, double>> related = {
        {"StopSelfHarm", 0.95}, {"BPD", 0.45}, {"depression", 0.7}, {"Opiates", 0.1}, {"Autism", 0.0}};
    for (std::size_t u = 0; u < 240; ++u) {
      const auto s = u % words.size();
      char user[32];
      std::snprintf(user, sizeof user, "u%04zu", u);
      const auto posts = 2 + rng.below(2);
      for (std::size_t k = 0; k < posts; ++k) emit(user, "SuicideWatch", make_text(rng, s), false);
      for (const auto& [community, on_topic] : related) {
        if (!rng.chance(community == "Autism" ? 0.3 : 0.6)) continue;
        emit(user, community, rng.chance(on_topic) ? make_text(rng, s) : filler(8), false);
      }
      if (u % 40 == 0) emit(user, "SuicideWatch", "stay strong " + make_text(rng, s), true);
    }
    // Filter exercisers.
    emit("u9001", "SuicideWatch", "People accidentally cutting while shaving", false);
    emit("u9002", "SuicideWatch", "I am not suicidal but worried about my hair", false);
    emit("u9003", "SuicideWatch", "I am not suicidal but worried", false);
    emit("u9004", "SuicideWatch", "stay strong friend, hugs and here for you", false);
    emit("u9005", "SuicideWatch", "what a lovely week at work today", false);
    emit("u9006", "SuicideWatch", "!!! ???", false);
    out << "{\"id\": \"broken\", \"author\": \"u9007\"\n";
    out << nlohmann::json{{"id", "p-missing-text"}, {"author", "u9008"}, {"community", "SuicideWatch"},
                          {"source", "social"}, {"timestamp", 0}}
               .dump()
        << '\n';
  }
  {
    std::ofstream out(f.clinical);
    std::size_t next = 0;
    for (const auto& [s, n] : ehr_counts(300)) {
      for (std::size_t k = 0; k < n; ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "n%05zu", next++);
        Document d{id, "patient-" + std::to_string(rng.below(90)), rng.chance(0.5) ? "clinic-a" : "clinic-b",
                   Source::clinical, 1262304000 + static_cast<std::int64_t>(next) * 86400,
                   make_text(rng, s, DocSpec{6, 10, 2, false})};
        out << to_json(d).dump() << '\n';
      }
    }
  }
  detail::write_lexicon_file(f.srf_lexicon, make_srf_lexicon(5));
  detail::write_lexicon_file(f.severity, make_severity_lexicon());
  detail::write_lexicon_file(f.exclusions, make_exclusion_lexicon());
  {
    // Each factor's first seed links to two further template words.
    std::ofstream out(f.graph);
    out << "# src_id\tdst_id\tedge_type\tsrc_label\tdst_label\n";
    for (std::size_t s = 0; s < words.size(); ++s) {
      const auto seed_id = "C" + std::to_string(s) + "-0";
      out << seed_id << "\tC" << s << "-5\tchild-of\t" << words[s][0] << '\t' << words[s][5] << '\n';
      out << "C" << s << "-5\tC" << s << "-6\tassociated-with\t" << words[s][5] << '\t' << words[s][6] << '\n';
    }
  }
  {
    std::ofstream out(f.vectors);
    write_embeddings(out, make_vectors(VectorSpec{50, 0.35, seed + 1}));
  }
  {
    std::ofstream out(f.annotations);
    out << "item_id,annotator,label,level\n";
    const auto set = make_annotations(60, seed + 2, {"rater-a", "rater-b", "rater-c"}, {0.05, 0.2, 0.3});
    for (std::size_t i = 0; i < set.items().size(); ++i)
      for (std::size_t a = 0; a < set.annotators().size(); ++a)
        if (const auto l = set.label(i, a)) {
          out << set.items()[i] << ',' << set.annotators()[a] << ',' << set.categories()[*l] << ",post\n";
        }
  }
  {
    std::ofstream out(f.config);
    out << "# synthetic demo fixture\n"
        << "social_corpus = social.jsonl\n"
        << "clinical_corpus = clinical.jsonl\n"
        << "srf_lexicon = srf_lexicon.jsonl\n"
        << "severity_lexicon = severity_lexicon.jsonl\n"
        << "exclusion_lexicon = exclusions.jsonl\n"
        << "concept_graphs = concepts.tsv\n"
        << "vectors = vectors.txt\n"
        << "annotations = annotations.csv\n"
        << "anchor_community = SuicideWatch\n"
        << "embedding_dim = 50\n"
        << "target_min_clusters_social = 13\n"
        << "target_min_clusters_clinical = 6\n"
        << "seed = " << seed << '\n';
  }
  return f;
}

}  // namespace srf::synthetic
