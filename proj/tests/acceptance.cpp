// Acceptance checks, one line per criterion. Exit status is non-zero if any fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "srf/srf.hpp"
#include "srf/synthetic.hpp"

using namespace srf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

std::string fmt(double x, int prec) {
  std::ostringstream s;
  s << std::setprecision(prec) << x;
  return s.str();
}

void criterion(int n, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s) {
    o.pass = false;
    o.detail += "; over time budget";
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << name << " (" << o.detail << "; "
            << fmt(secs, 3) << " s)" << std::endl;
}

Vec noisy(std::mt19937_64& rng, std::size_t axis, double spread, std::size_t dim) {
  std::normal_distribution<double> g(0.0, spread);
  Vec v(dim);
  for (auto& x : v) x = g(rng);
  v[axis % dim] += 1.0;
  return v;
}

std::string pid(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%03d", i);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome relatedness_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> users_d(1, 5), posts_d(0, 4), axis(0, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    UserPostIndex idx;
    std::vector<oracle::UserPosts> users;
    int id = 0;
    const int n = users_d(rng);
    for (int u = 0; u < n; ++u) {
      oracle::UserPosts up;
      const int na = posts_d(rng), nb = posts_d(rng);
      for (int k = 0; k < na; ++k) {
        up.in_a.push_back(noisy(rng, static_cast<std::size_t>(axis(rng)), 0.15, 3));
        idx.add("u" + std::to_string(u), "A", {pid(id++), up.in_a.back(), 1});
      }
      for (int k = 0; k < nb; ++k) {
        up.in_b.push_back(noisy(rng, static_cast<std::size_t>(axis(rng)), 0.15, 3));
        idx.add("u" + std::to_string(u), "B", {pid(id++), up.in_b.back(), 1});
      }
      users.push_back(up);
    }
    const auto want = oracle::relatedness(users, 0.9);
    const auto ab = semantic_relatedness("A", "B", idx, 0.9).sr;
    const auto ba = semantic_relatedness("B", "A", idx, 0.9).sr;
    if (ab.has_value() != want.has_value()) return {false, "trial " + std::to_string(trial) + ": definedness differs"};
    if (ab != ba) return {false, "trial " + std::to_string(trial) + ": not bit-symmetric"};
    if (want) worst = std::max(worst, std::abs(*ab - *want));
  }
  return {worst <= 1e-12, "20 trials, max |diff| " + fmt(worst, 3)};
}

Outcome community_selection() {
  UserPostIndex idx;
  const Vec e1{1, 0}, e2{0, 1};
  int id = 0;
  auto post = [&](const std::string& u, const std::string& c, const Vec& v) { idx.add(u, c, {pid(id++), v, 1}); };
  for (int k = 0; k < 2; ++k) post("u1", "SuicideWatch", e1);
  for (int k = 0; k < 2; ++k) post("u1", "StopSelfHarm", e1);  // 4 hits / 4 posts
  for (int k = 0; k < 2; ++k) post("u2", "SuicideWatch", e1);
  post("u2", "depression", e1);
  for (int k = 0; k < 2; ++k) post("u2", "depression", e2);  // 2 hits / 5 posts
  post("u3", "SuicideWatch", e1);
  for (int k = 0; k < 24; ++k) post("u3", "Opiates", k < 4 ? e1 : e2);  // 4 hits / 25 posts
  const auto m = build_sr_matrix(idx, idx.communities(), 0.9);
  const auto sel = select_communities(m, "SuicideWatch", 0.40);
  const bool values = m.at("SuicideWatch", "StopSelfHarm") == 1.0 && m.at("SuicideWatch", "depression") == 0.40 &&
                      std::abs(*m.at("SuicideWatch", "Opiates") - 0.16) < 1e-15;
  const bool ok = values && sel.size() == 2 && sel[0].first == "StopSelfHarm" && sel[1].first == "depression";
  return {ok, "SR 1.0/0.40/0.16, selected " + std::to_string(sel.size())};
}

Outcome retrofit_checks() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  EmbeddingStore store(8);
  for (int i = 0; i < 100; ++i) {
    Vec v(8);
    for (auto& x : v) x = g(rng);
    store.set("w" + std::to_string(i), v);
  }
  Lexicon lex("srf");
  for (int c = 0; c < 6; ++c)
    for (int k = 0; k < 7; ++k) lex.add("cat" + std::to_string(c), "w" + std::to_string(c * 7 + k), k < 3 ? 1.0 : 0.6);
  double worst_rise = 0.0;
  for (const auto mode : {BetaMode::inverse_degree, BetaMode::uniform}) {
    for (const bool edges : {false, true}) {
      const auto r = retrofit(store, lex, {.alpha = 1.0, .iterations = 10, .beta_mode = mode, .term_edges = edges});
      for (std::size_t i = 1; i < r.objective.size(); ++i)
        worst_rise = std::max(worst_rise, (r.objective[i] - r.objective[i - 1]) / r.objective[i - 1]);
    }
  }
  EmbeddingStore two(2);
  two.set("hopelessness", {1.0, 0.0});
  two.set("bullying", {0.0, 1.0});
  two.set("hopeless", {0.6, 0.8});
  two.set("harassment", {0.1, 1.0});
  Lexicon small("srf");
  small.add("hopelessness", "hopeless");
  small.add("bullying", "harassment");
  const auto one = retrofit(two, small, {.alpha = 1.0, .iterations = 1});
  const double closed = std::max(std::abs(one.store.at("hopeless")[0] - 0.8), std::abs(one.store.at("hopeless")[1] - 0.4));
  const bool inverted_before = cosine(two.at("hopeless"), two.at("hopelessness")) <
                               cosine(two.at("hopeless"), two.at("harassment"));
  const auto full = retrofit(two, small);
  const bool inverted_after = cosine(full.store.at("hopeless"), full.anchors.at("hopelessness")) >
                              cosine(full.store.at("hopeless"), full.store.at("harassment"));
  const bool ok = worst_rise <= 1e-9 && closed <= 1e-12 && inverted_before && inverted_after;
  return {ok, "max relative rise " + fmt(worst_rise, 3) + ", closed-form error " + fmt(closed, 3) +
                  ", rank inversion " + (inverted_before && inverted_after ? "yes" : "no")};
}

Outcome optics_checks() {
  double worst = 0.0;
  bool order_ok = true;
  std::size_t misassigned = 0, clusters_ok = 0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(500 + trial);
    std::vector<DocumentVector> pts;
    std::vector<std::pair<std::string, oracle::Vec>> raw;
    for (int i = 0; i < 60; ++i) {
      const auto blob = static_cast<std::size_t>(i / 20);
      pts.push_back({pid(i), noisy(rng, blob, 0.05, 5), 1});
      raw.emplace_back(pts.back().doc_id, pts.back().vector);
    }
    std::shuffle(pts.begin(), pts.end(), rng);
    const OpticsParams p{.min_pts = 5};
    const auto ord = optics_order(pts, p);
    const auto want = oracle::optics(raw, 5);
    for (std::size_t i = 0; i < ord.size(); ++i) {
      if (ord[i].doc_id != want[i].id || ord[i].reachability.has_value() != want[i].reach.has_value() ||
          ord[i].core_distance.has_value() != want[i].core.has_value()) {
        order_ok = false;
        continue;
      }
      if (want[i].reach) worst = std::max(worst, std::abs(*ord[i].reachability - *want[i].reach));
      if (want[i].core) worst = std::max(worst, std::abs(*ord[i].core_distance - *want[i].core));
    }
    const auto res = extract_clusters(ord, pts, 3, p);
    if (res.clusters.size() == 3) ++clusters_ok;
    for (const auto& c : res.clusters) {
      std::map<int, std::size_t> h;
      for (const auto& m : c.members) ++h[std::stoi(m.substr(1)) / 20];
      std::size_t best = 0;
      for (const auto& [_, n] : h) best = std::max(best, n);
      misassigned += c.members.size() - best;
    }
    misassigned += res.noise.size();
  }
  const bool ok = order_ok && worst <= 1e-12 && clusters_ok == 5 && misassigned == 0;
  return {ok, "5 trials x 60 points, max |diff| " + fmt(worst, 3) + ", 3 clusters in " +
                  std::to_string(clusters_ok) + "/5, misassigned " + std::to_string(misassigned)};
}

struct LabelRun {
  std::vector<LabeledCluster> labeled;
  std::size_t correct = 0, embedded = 0;
};

LabelRun label_synthetic(const std::map<std::size_t, std::size_t>& counts, Source src, std::uint64_t seed,
                         std::size_t target) {
  const auto [corpus, truth] = synthetic::make_template_corpus(counts, src, seed,
                                                               synthetic::DocSpec{6, 10, 2, src == Source::social});
  const auto store = synthetic::make_vectors();
  const auto lex = synthetic::make_srf_lexicon();
  const auto fitted = retrofit(store, lex).store;
  const DocumentEmbedder emb(fitted, default_stopwords(), &lex);
  std::vector<DocumentVector> vs;
  for (const auto& d : corpus.documents()) {
    const auto o = emb.embed(d);
    if (o.status == EmbedStatus::ok) vs.push_back(o.vector);
  }
  const OpticsParams p{.min_pts = 5};
  const auto res = extract_clusters(optics_order(vs, p, 4), vs, target, p);
  LabelRun run;
  run.labeled = label_clusters(res, build_srf_vectors(lex, fitted));
  run.embedded = vs.size();
  for (std::size_t i = 0; i < res.clusters.size(); ++i)
    for (const auto& m : res.clusters[i].members)
      if (kSrfTaxonomy[truth.at(m)] == run.labeled[i].primary()) ++run.correct;
  return run;
}

Outcome labeling_checks() {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t s = 0; s < 12; ++s) counts[s] = 50;
  const auto run = label_synthetic(counts, Source::social, 5, 12);
  std::set<std::string> labels;
  for (const auto& lc : run.labeled) labels.insert(lc.primary());
  const double acc = static_cast<double>(run.correct) / static_cast<double>(run.embedded);
  return {labels.size() >= 10 && acc >= 0.80 && run.embedded == 600,
          "600 documents, " + std::to_string(labels.size()) + " distinct labels, accuracy " + fmt(100 * acc, 4) +
              "%"};
}

Outcome clinical_shares() {
  const auto run = label_synthetic(synthetic::ehr_counts(1000), Source::clinical, 9, 6);
  const auto shares = srf_frequency(run.labeled, Weighting::document);
  if (!shares) return {false, "nothing clustered"};
  const std::vector<std::pair<std::string, double>> expected{
      {"depressive feelings", 24.0}, {"psychological disorder", 21.1}, {"drug abuse", 18.2},
      {"depression symptoms", 14.9}, {"suicide around individual", 12.6}, {"suicide ideation", 9.1}};
  if (shares->size() != expected.size()) return {false, std::to_string(shares->size()) + " labels, expected 6"};
  double worst = 0.0;
  bool ranking = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    ranking = ranking && (*shares)[i].srf == expected[i].first;
    worst = std::max(worst, std::abs((*shares)[i].percent - expected[i].second));
  }
  return {ranking && worst <= 2.0,
          "ranking " + std::string(ranking ? "exact" : "differs") + ", max deviation " + fmt(worst, 3) + "pp"};
}

Outcome agreement_checks() {
  AnnotationSet perfect;
  for (int i = 0; i < 10; ++i)
    for (const char* a : {"x", "y", "z"}) perfect.add("i" + std::to_string(i), a, kSeverityLevels[i % 5]);
  const bool one = krippendorff_alpha(perfect, std::vector<std::size_t>{0, 1, 2}) == 1.0;

  AnnotationSet hand({"a", "b"});
  const std::vector<std::pair<const char*, const char*>> rows{{"a", "a"}, {"a", "b"}, {"b", "b"}, {"b", "b"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    hand.add("i" + std::to_string(i), "x", rows[i].first);
    hand.add("i" + std::to_string(i), "y", rows[i].second);
  }
  const double want = *oracle::alpha({{0, 0}, {0, 1}, {1, 1}, {1, 1}});
  const double got = *krippendorff_alpha(hand, std::vector<std::size_t>{0, 1});
  const bool hand_ok = std::abs(got - want) <= 1e-12 && std::abs(got - (1.0 - 14.0 / 30.0)) <= 1e-12;

  const auto planted = synthetic::make_annotations(200, 3, {"good", "mid", "poor", "poorer"}, {0.02, 0.15, 0.25, 0.3});
  const auto o = run_agreement_protocol(planted);
  const bool planted_ok = o.selected == "good" && o.accepted;

  AnnotationSet inv({"no", "yes"});
  for (int i = 0; i < 20; ++i) {
    const char* t = i % 2 ? "yes" : "no";
    const char* f = i % 2 ? "no" : "yes";
    inv.add("i" + std::to_string(i), "flip", f);
    for (const char* a : {"r1", "r2", "r3"}) inv.add("i" + std::to_string(i), a, t);
  }
  const bool rejected = !groupwise_validation(inv, "flip").accepted;
  const bool ok = one && hand_ok && planted_ok && rejected;
  return {ok, std::string("perfect=1 ") + (one ? "yes" : "no") + ", hand alpha " + fmt(got, 6) +
                  ", planted annotator accepted " + (planted_ok ? "yes" : "no") + ", inverted annotator rejected " +
                  (rejected ? "yes" : "no")};
}

Outcome determinism() {
  std::string tmpl = (fs::temp_directory_path() / "srf-accept-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) return {false, "mkdtemp failed"};
  const fs::path root(tmpl);
  const std::string tool = SRF_TOOL_PATH;
  auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
  if (sh(tool + " make-fixture " + (root / "fx").string()) != 0) return {false, "fixture generation failed"};
  const auto conf = (root / "fx" / "pipeline.conf").string();
  for (const char* d : {"run1", "run2"})
    if (sh(tool + " --config " + conf + " --out " + (root / d).string() + " run-all") != 0)
      return {false, std::string("run-all failed for ") + d};
  std::size_t compared = 0;
  bool same = slurp(root / "run1" / "manifest.json") == slurp(root / "run2" / "manifest.json");
  ++compared;
  for (const auto& e : fs::directory_iterator(root / "run1" / "compare")) {
    same = same && slurp(e.path()) == slurp(root / "run2" / "compare" / e.path().filename());
    ++compared;
  }
  fs::remove_all(root);
  return {same && compared >= 3, std::to_string(compared) + " files byte-identical across two runs"};
}

Outcome filter_checks() {
  Corpus c("social", Source::social);
  const std::vector<std::string> texts{
      "People accidentally cutting while shaving",
      "I am struggling and I cut myself again",
      "I want to end it tonight, I have a rope",
      "stay strong, hugs to everyone here",
      "I am not suicidal but I feel hopeless",
      "I tried to kill myself last year",
      "my hair is falling out and I am struggling",
      "the weather is nice",
  };
  for (std::size_t i = 0; i < texts.size(); ++i) c.insert({"d" + std::to_string(i), "u", "SuicideWatch", Source::social, 0, texts[i]});
  const auto r = run_filters(c, synthetic::make_exclusion_lexicon(), default_cue_lexicon(),
                             synthetic::make_severity_lexicon());
  const bool shaving = !r.kept.find("d0");
  const bool balanced = r.total.balanced() && r.total.input == texts.size() && r.exclusion.balanced() &&
                        r.negation.balanced() && r.severity && r.severity->balanced() &&
                        r.total.kept == r.kept.size();
  return {shaving && balanced, "input " + std::to_string(r.total.input) + ", kept " + std::to_string(r.total.kept) +
                                   ", dropped " + std::to_string(r.total.dropped()) + ", shaving example " +
                                   (shaving ? "dropped" : "kept")};
}

}  // namespace

int main() {
  criterion(1, "semantic relatedness matches pair enumeration", 1.0, relatedness_oracle);
  criterion(2, "community selection at SR >= 0.40", 0.0, community_selection);
  criterion(3, "retrofitting objective, closed form and rank inversion", 0.0, retrofit_checks);
  criterion(4, "OPTICS ordering and three-blob recovery", 5.0, optics_checks);
  criterion(5, "cluster labeling on 600 templated documents", 30.0, labeling_checks);
  criterion(6, "clinical risk-factor shares and ranking", 10.0, clinical_shares);
  criterion(7, "Krippendorff alpha and annotator protocol", 1.0, agreement_checks);
  criterion(8, "end-to-end determinism", 0.0, determinism);
  criterion(9, "filter accounting and exclusion example", 0.0, filter_checks);
  return failures == 0 ? 0 : 1;
}
