#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "planted.hpp"
#include "wot/candidate.hpp"
#include "wot/common.hpp"
#include "wot/text.hpp"

using namespace wot;

namespace {

Document doc(const std::string& id, const std::string& text) {
  Document d;
  d.id = id;
  d.raw_text = text;
  d.tokens = tokenize(text);
  return d;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Straight from the token lists, no shared helpers.
double brute_score(const std::string& w, const Corpus& c, const std::vector<std::size_t>& cluster) {
  double s = 0, t = 0, df = 0;
  for (auto i : cluster) {
    const auto& toks = c.document(i).tokens;
    const auto n = std::count(toks.begin(), toks.end(), w);
    t += static_cast<double>(n);
    s += n > 0 ? 1 : 0;
  }
  for (const auto& d : c.documents()) df += std::find(d.tokens.begin(), d.tokens.end(), w) != d.tokens.end();
  if (s == 0) return 0.0;
  const double size = static_cast<double>(cluster.size());
  return (s / size) * std::tanh(t / size) * std::log(static_cast<double>(c.num_docs()) / df);
}

EmbeddingTable random_table(std::size_t words, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  EmbeddingTable t(dim, EmbeddingSource::imported);
  for (std::size_t i = 0; i < words; ++i) {
    Vector v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) x = g(rng);
    t.add("w" + std::to_string(i) + "x", v);
  }
  return t;
}

}  // namespace

TEST_CASE("representativeness on the four-document fixture") {
  const Corpus c({doc("d1", "apple apple banana"), doc("d2", "apple cherry"), doc("d3", "kiwi melon"),
                  doc("d4", "melon grape")});
  const std::vector<std::size_t> cluster = {0, 1};
  const auto stats = cluster_doc_stats(c, cluster);
  CHECK(stats.size == 2);
  CHECK(stats.words.at("apple").docs == 2);
  CHECK(stats.words.at("apple").occurrences == 3);
  const double expected = 1.0 * std::tanh(1.5) * std::log(2.0);
  CHECK(representativeness("apple", stats, c) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(representativeness("apple", stats, c) == doctest::Approx(0.6273).epsilon(1e-4));
  CHECK(representativeness("kiwi", stats, c) == 0.0);
  CHECK(representativeness("nowhere", stats, c) == 0.0);
}

TEST_CASE("a word in every document scores zero") {
  const Corpus c({doc("a", "common one"), doc("b", "common two"), doc("c", "common three")});
  const std::vector<std::size_t> cluster = {0, 1};
  CHECK(representativeness("common", cluster_doc_stats(c, cluster), c) == 0.0);
}

TEST_CASE("representativeness matches a brute-force recomputation") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Corpus c(testing::random_documents(20, 30, 12, 3, seed));
    std::mt19937_64 rng(seed + 100);
    std::vector<std::size_t> cluster;
    for (std::size_t i = 0; i < c.num_docs(); ++i) {
      if (rng() % 3 == 0) cluster.push_back(i);
    }
    if (cluster.empty()) cluster.push_back(0);
    const auto stats = cluster_doc_stats(c, cluster);
    for (const auto& [w, e] : c.vocab()) {
      const double got = representativeness(w, stats, c);
      const double want = brute_score(w, c, cluster);
      CHECK(got >= 0.0);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("top representative words") {
  const Corpus c({doc("a", "rocket orbit the launch"), doc("b", "rocket orbit the the"), doc("c", "garden soil"),
                  doc("d", "garden tulip soil")});
  const std::vector<std::size_t> cluster = {0, 1};
  const auto stats = cluster_doc_stats(c, cluster);
  const auto top = top_representative_words("c0", stats, c, 10);
  // "the" is a stopword; rocket and orbit tie on score and count.
  REQUIRE(top.size() == 3);
  CHECK(top[0].word == "orbit");
  CHECK(top[1].word == "rocket");
  CHECK(top[2].word == "launch");
  CHECK(top[0].cluster_id == "c0");
  CHECK(top[0].score == doctest::Approx(top[1].score));
  CHECK(top_representative_words("c0", stats, c, 1).size() == 1);
}

TEST_CASE("planted topic word leads its cluster") {
  testing::PlantedOptions opt;
  opt.topics = 4;
  opt.docs_per_topic = 30;
  const auto c = testing::planted_corpus(opt);
  for (const auto& topic : {"sports", "business"}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < c.num_docs(); ++i) {
      if (c.document(i).gold_label == topic) members.push_back(i);
    }
    const auto top = top_representative_words(topic, cluster_doc_stats(c, members), c, 5);
    REQUIRE_FALSE(top.empty());
    CHECK(top[0].word == topic);
  }
}

TEST_CASE("expand_seeds returns K minus seeds words") {
  auto t = random_table(150, 6, 1);
  t.add("sports", vec({1, 0, 0, 0, 0, 0}));
  t.add("business", vec({0, 1, 0, 0, 0, 0}));
  t.add("the", vec({1, 1, 0, 0, 0, 0}));
  const auto out = expand_seeds({"sports", "business"}, t, 100);
  CHECK(out.size() == 98);
  std::set<std::string> unique(out.begin(), out.end());
  CHECK(unique.size() == 98);
  CHECK_FALSE(unique.count("sports"));
  CHECK_FALSE(unique.count("business"));
  CHECK_FALSE(unique.count("the"));
  CHECK(expand_seeds({"sports", "business"}, t, 2).empty());
  CHECK_THROWS_AS(expand_seeds({"sports"}, t, 1000), ValidationError);
}

TEST_CASE("expand_seeds ranks by mean cosine") {
  EmbeddingTable t(2, EmbeddingSource::imported);
  t.add("east", vec({1, 0}));
  t.add("north", vec({0, 1}));
  t.add("midway", vec({1, 1}));
  t.add("mostly", vec({1, 0.2}));
  t.add("south", vec({0, -1}));
  t.add("west", vec({-1, 0}));
  t.add("halfway", vec({2, 2}));  // same direction as "midway"
  t.add("away", vec({-1, -1}));
  t.add("northish", vec({0.1, 1}));
  t.add("tilted", vec({1, -0.5}));
  const auto out = expand_seeds({"east", "north"}, t, 10);
  REQUIRE(out.size() == 8);
  // Equal cosine: lexicographic order.
  CHECK(out[0] == "halfway");
  CHECK(out[1] == "midway");

  // Brute-force order over the remaining words.
  std::vector<std::pair<double, std::string>> brute;
  for (const auto& w : t.words()) {
    if (w == "east" || w == "north") continue;
    brute.push_back({-(cosine(t.at(w), t.at("east")) + cosine(t.at(w), t.at("north"))) / 2.0, w});
  }
  std::sort(brute.begin(), brute.end());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == brute[i].second);
}

TEST_CASE("expand_seeds is invariant under a rotation of the table") {
  const auto t = random_table(60, 5, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix a(5, 5);
  for (auto& x : a.reshaped()) x = g(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  EmbeddingTable rotated(5, EmbeddingSource::imported);
  for (std::size_t i = 0; i < t.size(); ++i) rotated.add(t.words()[i], q * t.vector(i));
  const std::vector<std::string> seeds = {"w0x", "w7x", "w9x"};
  CHECK(expand_seeds(seeds, t, 20) == expand_seeds(seeds, rotated, 20));
}

TEST_CASE("merge_candidates") {
  auto stat = [](std::initializer_list<const char*> ws) {
    std::vector<RepWordScore> out;
    double s = 10;
    for (const char* w : ws) out.push_back({w, "c", s--, 1});
    return out;
  };
  SUBCASE("disjoint inputs") {
    std::vector<std::string> expansion;
    for (int i = 0; i < 98; ++i) expansion.push_back("exp" + std::to_string(i));
    std::vector<std::vector<RepWordScore>> lists = {stat({"aa1", "aa2", "aa3", "aa4"}), stat({"bb1", "bb2", "bb3"}),
                                                     stat({"cc1", "cc2", "cc3"})};
    const auto set = merge_candidates(expansion, lists, 3);
    CHECK(set.size() == 98 + 3 * 3);
    CHECK_FALSE(set.contains("aa4"));
    CHECK(set.origin.at("exp0") == kFromExpansion);
    CHECK(set.origin.at("bb2") == kFromStatistics);
  }
  SUBCASE("fully overlapping inputs") {
    const auto set = merge_candidates({"xx", "yy", "zz"}, {stat({"xx", "yy", "zz"})}, 3);
    CHECK(set.size() == 3);
    for (const auto& w : set.words) CHECK(set.origin.at(w) == (kFromExpansion | kFromStatistics));
  }
  SUBCASE("mixed input equals the set union") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> expansion;
      std::vector<std::vector<RepWordScore>> lists(3);
      std::set<std::string> expected;
      for (int i = 0; i < 8; ++i) {
        expansion.push_back("v" + std::to_string(rng() % 15) + "x");
        expected.insert(expansion.back());
      }
      for (auto& l : lists) {
        for (int i = 0; i < 5; ++i) {
          l.push_back({"v" + std::to_string(rng() % 15) + "x", "c", 1.0, 1});
          if (i < 2) expected.insert(l.back().word);
        }
      }
      const auto set = merge_candidates(expansion, lists, 2);
      CHECK(std::set<std::string>(set.words.begin(), set.words.end()) == expected);
      CHECK(set.words.size() == expected.size());
    }
  }
  SUBCASE("stopwords and table misses are left out; nothing left is an error") {
    EmbeddingTable t(1, EmbeddingSource::imported);
    t.add("kept", vec({1}));
    const auto set = merge_candidates({"the", "kept", "unknown"}, {}, 3, &t);
    CHECK(set.words == std::vector<std::string>{"kept"});
    CHECK_THROWS_AS(merge_candidates({"the", "and"}, {}, 3), ValidationError);
  }
}
