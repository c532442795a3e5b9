#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "planted.hpp"
#include "wot/common.hpp"
#include "wot/embedding.hpp"
#include "wot/text.hpp"

using namespace wot;

namespace {

struct Quiet {
  Quiet() { set_warnings_enabled(false); }
  ~Quiet() { set_warnings_enabled(true); }
};

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Document doc(const std::string& id, const std::string& text) {
  Document d;
  d.id = id;
  d.raw_text = text;
  d.tokens = tokenize(text);
  return d;
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

TEST_CASE("embedding table validates its rows") {
  EmbeddingTable t(2, EmbeddingSource::imported);
  t.add("alpha", vec({1, 0}));
  CHECK_THROWS_AS(t.add("beta", vec({1, 0, 0})), ValidationError);
  CHECK_THROWS_AS(t.add("beta", vec({0, 0})), ValidationError);
  CHECK_THROWS_AS(t.add("beta", vec({NAN, 1})), ValidationError);
  CHECK_THROWS_AS(t.add("alpha", vec({0, 1})), ValidationError);
  CHECK(t.size() == 1);
  CHECK(t.contains("alpha"));
  CHECK(t.find("beta") == nullptr);
  CHECK_THROWS_AS(t.at("beta"), ValidationError);
}

TEST_CASE("average_contextual means occurrence vectors") {
  const auto t = average_contextual({{"pair", vec({1, 0})}, {"pair", vec({0, 1})}, {"once", vec({0.3, -2})}});
  CHECK(t.at("pair")(0) == doctest::Approx(0.5));
  CHECK(t.at("pair")(1) == doctest::Approx(0.5));
  CHECK(t.at("once") == vec({0.3, -2}));

  // Three occurrences of one word in a five-word stream.
  std::vector<std::pair<std::string, Vector>> stream = {
      {"tri", vec({1, 2})}, {"other", vec({5, 5})}, {"tri", vec({3, -1})}, {"odd", vec({0, 1})}, {"tri", vec({2, 8})}};
  const auto s = average_contextual(stream);
  CHECK(s.at("tri")(0) == doctest::Approx((1.0 + 3.0 + 2.0) / 3.0));
  CHECK(s.at("tri")(1) == doctest::Approx((2.0 - 1.0 + 8.0) / 3.0));
  CHECK(s.size() == 3);

  CHECK_THROWS_AS(average_contextual({{"a", vec({1, 0})}, {"a", vec({1, 0, 0})}}), ValidationError);
}

TEST_CASE("average_contextual does not depend on stream order") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::vector<std::pair<std::string, Vector>> stream;
  for (int i = 0; i < 60; ++i) stream.push_back({"w" + std::to_string(i % 7) + "x", vec({g(rng), g(rng), g(rng)})});
  const auto a = average_contextual(stream);
  std::shuffle(stream.begin(), stream.end(), rng);
  const auto b = average_contextual(stream);
  for (const auto& w : a.words()) CHECK(a.at(w) == b.at(w));
}

TEST_CASE("fallback embeddings separate vocabulary-disjoint topics") {
  Quiet q;
  const std::vector<std::string> sport = {"goal", "match", "team", "coach", "league", "score", "striker", "keeper"};
  const std::vector<std::string> money = {"bank", "loan", "stock", "market", "bond", "equity", "trader", "credit"};
  std::mt19937_64 rng(3);
  std::vector<Document> docs;
  for (int d = 0; d < 20; ++d) {
    const auto& words = d % 2 ? money : sport;
    std::string text;
    for (int k = 0; k < 25; ++k) text += words[rng() % words.size()] + " ";
    docs.push_back(doc("d" + std::to_string(d), text));
  }
  const Corpus c(docs);
  const auto t = fallback_embeddings(c, 4, 3, 1);
  CHECK(t.source() == EmbeddingSource::fallback);
  CHECK(t.dim() == 4);
  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  for (const auto* group : {&sport, &money}) {
    for (std::size_t i = 0; i < group->size(); ++i) {
      for (std::size_t j = i + 1; j < group->size(); ++j) {
        intra += cosine(t.at((*group)[i]), t.at((*group)[j]));
        ++n_intra;
      }
    }
  }
  for (const auto& a : sport) {
    for (const auto& b : money) {
      inter += cosine(t.at(a), t.at(b));
      ++n_inter;
    }
  }
  CHECK(intra / n_intra > inter / n_inter);

  for (const auto& w : t.words()) {
    CHECK(t.at(w).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.at(w).allFinite());
  }

  const auto again = fallback_embeddings(c, 4, 3, 1);
  REQUIRE(again.words() == t.words());
  for (const auto& w : t.words()) CHECK(again.at(w) == t.at(w));
}

TEST_CASE("fallback embeddings of a repeated document collapse to one direction") {
  std::vector<Document> docs;
  for (int i = 0; i < 6; ++i) docs.push_back(doc("r" + std::to_string(i), "alpha beta gamma delta"));
  const auto t = fallback_embeddings(Corpus(docs), 1, 5, 0);
  REQUIRE(t.size() == 4);
  for (const auto& w : t.words()) CHECK(std::abs(t.at(w)(0)) == doctest::Approx(std::abs(t.at("alpha")(0))));
}

TEST_CASE("fallback embeddings need enough vocabulary") {
  const Corpus c({doc("a", "one two three"), doc("b", "two three four")});
  CHECK_THROWS_AS(fallback_embeddings(c, 8, 5, 0), ValidationError);
}

TEST_CASE("embedding file round trip is bit exact") {
  const auto t = random_table(25, 7, 5);
  std::stringstream buf;
  write_embedding_table(t, buf);
  const auto back = read_embedding_table(buf);
  CHECK(back.dim() == 7);
  REQUIRE(back.words() == t.words());
  for (const auto& w : t.words()) {
    const Eigen::VectorXf a = t.at(w).cast<float>();
    const Eigen::VectorXf b = back.at(w).cast<float>();
    CHECK(a == b);
  }
  // A second trip through float storage changes nothing.
  std::stringstream buf2;
  write_embedding_table(back, buf2);
  CHECK(buf2.str() == [&] {
    std::stringstream s;
    write_embedding_table(read_embedding_table(buf2), s);
    return s.str();
  }());
}

TEST_CASE("embedding file errors") {
  std::istringstream bad_header("WOTEMB2 3 1\n");
  CHECK_THROWS_AS(read_embedding_table(bad_header), ParseError);
  std::istringstream truncated(std::string("WOTEMB1 2 1\nab ") + std::string(4, '\0'));
  CHECK_THROWS_AS(read_embedding_table(truncated), ParseError);
}

TEST_CASE("class representation") {
  Quiet q;
  EmbeddingTable t(2, EmbeddingSource::imported);
  t.add("one", vec({3, 4}));
  t.add("east", vec({1, 0}));
  t.add("north", vec({0, 1}));
  const auto single = class_representation("c", {"one"}, t);
  CHECK(single.vector(0) == doctest::Approx(0.6));
  CHECK(single.vector(1) == doctest::Approx(0.8));
  const auto both = class_representation("c", {"east", "north"}, t);
  CHECK(both.vector(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(both.vector(1) == doctest::Approx(std::sqrt(0.5)));
  const auto skip = class_representation("c", {"one", "missing"}, t);
  CHECK(skip.vector == single.vector);
  CHECK_THROWS_AS(class_representation("c", {"missing"}, t), ValidationError);
}

TEST_CASE("document representation with symmetric tokens is the plain mean") {
  EmbeddingTable t(2, EmbeddingSource::imported);
  t.add("aa", vec({1, 0}));
  t.add("bb", vec({0, 1}));
  const std::vector<ClassRep> reps = {{"c1", vec({1, 0})}, {"c2", vec({0, 1})}};
  const auto r = document_representation(doc("d", "aa bb"), t, reps);
  CHECK(r.vector(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.vector(1) == doctest::Approx(std::sqrt(0.5)));
  const auto plain = document_representation(doc("d", "aa bb"), t, {});
  CHECK(plain.vector(0) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("document representation approaches the matching token as tau shrinks") {
  EmbeddingTable t(3, EmbeddingSource::imported);
  t.add("hit", vec({1, 0, 0}));
  t.add("near", vec({0.6, 0.8, 0}));
  t.add("far", vec({0, 0, 1}));
  const std::vector<ClassRep> reps = {{"c", vec({1, 0, 0})}};
  const auto r = document_representation(doc("d", "hit near far"), t, reps, 1e-3);
  CHECK(r.vector(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("document representation weights equal an independent softmax") {
  EmbeddingTable t(3, EmbeddingSource::imported);
  const Vector a = vec({0.2, 0.9, -0.4}), b = vec({1.5, -0.3, 0.7}), c = vec({-0.6, 0.1, 1.1});
  t.add("aa", a);
  t.add("bb", b);
  t.add("cc", c);
  const std::vector<ClassRep> reps = {{"k1", vec({1, 0, 0})}, {"k2", vec({0, 0.6, 0.8})}};
  const auto r = document_representation(doc("d", "aa bb cc"), t, reps, 1.0);

  auto cos = [](const Vector& x, const Vector& y) { return x.dot(y) / (x.norm() * y.norm()); };
  double z[3];
  const Vector* v[3] = {&a, &b, &c};
  for (int i = 0; i < 3; ++i) z[i] = std::max(cos(*v[i], reps[0].vector), cos(*v[i], reps[1].vector));
  const double denom = std::exp(z[0]) + std::exp(z[1]) + std::exp(z[2]);
  Vector expected = Vector::Zero(3);
  for (int i = 0; i < 3; ++i) expected += std::exp(z[i]) / denom * *v[i];
  expected.normalize();
  for (int k = 0; k < 3; ++k) CHECK(r.vector(k) == doctest::Approx(expected(k)).epsilon(1e-12));
  CHECK(r.vector.norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("document representation needs an in-vocabulary token") {
  EmbeddingTable t(2, EmbeddingSource::imported);
  t.add("aa", vec({1, 0}));
  CHECK_THROWS_AS(document_representation(doc("d", "zz yy"), t, {}), DegenerateError);
}

TEST_CASE("batch representations agree with single-document ones and skip uncovered documents") {
  Quiet q;
  testing::PlantedOptions opt;
  opt.topics = 3;
  opt.docs_per_topic = 10;
  auto docs = testing::planted_documents(opt);
  docs.push_back(doc("lonely", "qqqzzz"));
  const Corpus corpus(docs);
  const auto full = fallback_embeddings(corpus, 8, 5, 2);
  EmbeddingTable t(full.dim(), EmbeddingSource::fallback);
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.words()[i] != "qqqzzz") t.add(full.words()[i], full.vector(i));
  }
  const auto& names = testing::planted_topic_names();
  const std::vector<ClassRep> reps = {class_representation("a", {names[0]}, t),
                                      class_representation("b", {names[1]}, t)};
  const auto batch = document_representations(corpus, t, reps);
  CHECK(batch.excluded == std::vector<std::string>{"lonely"});
  REQUIRE(batch.reps.size() == corpus.num_docs() - 1);
  for (std::size_t i = 0; i < batch.reps.size(); ++i) {
    const auto single = document_representation(corpus.document(batch.doc_index[i]), t, reps);
    CHECK(single.doc_id == batch.reps[i].doc_id);
    CHECK((single.vector - batch.reps[i].vector).norm() < 1e-12);
    CHECK(batch.reps[i].vector.norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
}
