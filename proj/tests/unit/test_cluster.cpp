#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wot/cluster.hpp"
#include "wot/common.hpp"

using namespace wot;

namespace {

struct Blobs {
  std::vector<DocRep> docs;
  std::vector<std::string> truth;
  std::vector<ClassRep> centers;
};

// Isotropic Gaussian blobs with unit-free spacing `separation` * sigma.
Blobs make_blobs(std::size_t k, std::size_t per, std::size_t dim, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const double sigma = 0.1;
  Blobs b;
  for (std::size_t c = 0; c < k; ++c) {
    Vector center = Vector::Zero(static_cast<Eigen::Index>(dim));
    center(static_cast<Eigen::Index>(c % dim)) = separation * sigma * (1.0 + static_cast<double>(c / dim));
    b.centers.push_back({"k" + std::to_string(c), center});
  }
  for (std::size_t i = 0; i < k * per; ++i) {
    const auto c = i % k;
    Vector v = b.centers[c].vector;
    for (auto& x : v) x += sigma * g(rng);
    b.docs.push_back({"d" + std::to_string(i), v});
    b.truth.push_back(b.centers[c].class_id);
  }
  return b;
}

std::vector<DocRep> random_reps(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<DocRep> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) x = g(rng);
    out.push_back({"r" + std::to_string(i), v.normalized()});
  }
  return out;
}

}  // namespace

TEST_CASE("well-separated blobs follow the nearest-center rule") {
  const auto b = make_blobs(2, 60, 3, 10.0, 1);
  const auto r = cluster_documents(b.docs, b.centers);
  REQUIRE(r.labels.size() == b.docs.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < b.docs.size(); ++i) {
    std::size_t nearest = 0;
    double best = 1e300;
    for (std::size_t c = 0; c < b.centers.size(); ++c) {
      const double d = (b.docs[i].vector - b.centers[c].vector).squaredNorm();
      if (d < best) {
        best = d;
        nearest = c;
      }
    }
    CHECK(r.labels[i].cluster_id == b.centers[nearest].class_id);
    correct += r.labels[i].cluster_id == b.truth[i];
    CHECK(r.labels[i].doc_id == b.docs[i].doc_id);
  }
  CHECK(correct == b.docs.size());
  CHECK(r.diagnostics.converged);
  CHECK(r.diagnostics.empty_components.empty());
}

TEST_CASE("a single component takes every document") {
  const auto docs = random_reps(20, 4, 2);
  const std::vector<ClassRep> reps = {{"only", Vector::Unit(4, 0)}};
  const auto r = cluster_documents(docs, reps);
  for (const auto& l : r.labels) {
    CHECK(l.cluster_id == "only");
    CHECK(l.confidence == doctest::Approx(1.0));
  }
  CHECK(r.model.weights(0) == doctest::Approx(1.0));
}

TEST_CASE("pinned documents keep their class") {
  auto b = make_blobs(2, 30, 3, 10.0, 3);
  // d0 sits in blob k0 but is pinned to k1.
  const std::map<std::string, std::string> pins = {{"d0", "k1"}};
  const auto r = cluster_documents(b.docs, b.centers, pins);
  CHECK(b.truth[0] == "k0");
  CHECK(r.labels[0].cluster_id == "k1");
  CHECK(r.posteriors(0, 1) == 1.0);
  CHECK(r.labels[1].cluster_id == b.truth[1]);
  CHECK_THROWS_AS(cluster_documents(b.docs, b.centers, {{"d0", "missing"}}), ValidationError);
}

TEST_CASE("EM objective never decreases and posteriors sum to one") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto docs = random_reps(80, 5, seed);
    std::vector<ClassRep> reps;
    for (std::size_t c = 0; c < 4; ++c) reps.push_back({"c" + std::to_string(c), docs[c * 7].vector});
    std::map<std::string, std::string> pins;
    if (seed % 2) pins = {{"r1", "c0"}, {"r2", "c3"}, {"r50", "c2"}};
    const auto r = cluster_documents(docs, reps, pins);
    const auto& ll = r.diagnostics.log_likelihood;
    REQUIRE(ll.size() >= 2);
    for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-9 * std::abs(ll[i - 1]));
    for (Eigen::Index i = 0; i < r.posteriors.rows(); ++i) {
      CHECK(r.posteriors.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(r.posteriors.row(i).minCoeff() >= 0.0);
    }
    CHECK(r.model.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.model.weights.minCoeff() > 0.0);
    CHECK(r.model.variances.minCoeff() >= 1e-6);
    for (const auto& l : r.labels) {
      CHECK(l.confidence >= 0.0);
      CHECK(l.confidence <= 1.0);
    }
    // Determinism.
    const auto again = cluster_documents(docs, reps, pins);
    CHECK(again.posteriors == r.posteriors);
  }
}

TEST_CASE("components that end up empty are reported") {
  const auto b = make_blobs(2, 20, 3, 10.0, 4);
  auto centers = b.centers;
  Vector far = Vector::Zero(3);
  far(2) = 50.0;
  centers.push_back({"ghost", far});
  const auto r = cluster_documents(b.docs, centers);
  CHECK(r.diagnostics.empty_components == std::vector<std::string>{"ghost"});
  CHECK(r.model.weights(2) > 0.0);
}

TEST_CASE("final classifier fits separable pseudo-labels") {
  const auto b = make_blobs(3, 40, 3, 8.0, 5);
  PseudoLabeling pseudo;
  for (std::size_t i = 0; i < b.docs.size(); ++i) pseudo.push_back({b.docs[i].doc_id, b.truth[i], 1.0});
  const auto clf = train_final_classifier(b.docs, pseudo);
  CHECK(clf.class_ids == std::vector<std::string>{"k0", "k1", "k2"});
  const auto pred = predict(clf, b.docs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i].second == b.truth[i];
  CHECK(static_cast<double>(correct) / static_cast<double>(pred.size()) >= 0.99);

  // Scores recomputed from the stored parameters.
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& x = b.docs[i].vector;
    std::size_t best = 0;
    double best_s = -1e300;
    for (std::size_t c = 0; c < clf.class_ids.size(); ++c) {
      double s = clf.bias(static_cast<Eigen::Index>(c));
      for (Eigen::Index d = 0; d < x.size(); ++d) {
        s += clf.weights(static_cast<Eigen::Index>(c), d) * (x(d) - clf.input_mean(d)) / clf.input_scale(d);
      }
      CHECK(s == doctest::Approx(clf.scores(x)(static_cast<Eigen::Index>(c))).epsilon(1e-12));
      if (s > best_s) {
        best_s = s;
        best = c;
      }
    }
    CHECK(pred[i].second == clf.class_ids[best]);
  }
}

TEST_CASE("indistinguishable pseudo-classes give chance accuracy") {
  const auto train = random_reps(400, 4, 6);
  const auto held = random_reps(400, 4, 7);
  PseudoLabeling pseudo;
  for (std::size_t i = 0; i < train.size(); ++i) pseudo.push_back({train[i].doc_id, i % 2 ? "aa" : "bb", 1.0});
  const auto clf = train_final_classifier(train, pseudo);
  std::size_t correct = 0;
  const auto pred = predict(clf, held);
  for (std::size_t i = 0; i < held.size(); ++i) correct += pred[i].second == (i % 2 ? "aa" : "bb");
  CHECK(static_cast<double>(correct) / 400.0 == doctest::Approx(0.5).epsilon(0.2));
  CHECK(std::abs(static_cast<double>(correct) / 400.0 - 0.5) <= 0.1);
}

TEST_CASE("prediction edge cases") {
  FinalClassifier clf;
  clf.class_ids = {"alpha", "beta", "gamma"};
  clf.weights = Matrix::Zero(3, 3);
  clf.bias = Vector::Zero(3);
  clf.input_mean = Vector::Zero(3);
  clf.input_scale = Vector::Ones(3);
  const std::vector<DocRep> docs = {{"x", Vector::Unit(3, 0)}, {"y", Vector::Unit(3, 1)}, {"z", Vector::Unit(3, 2)}};
  for (const auto& [doc, cls] : predict(clf, docs)) CHECK(cls == "alpha");

  clf.weights = Matrix::Identity(3, 3);
  const auto hot = predict(clf, docs);
  CHECK(hot[0].second == "alpha");
  CHECK(hot[1].second == "beta");
  CHECK(hot[2].second == "gamma");

  CHECK_THROWS_AS(clf.predict_one(Vector::Zero(2)), ValidationError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  clf.weights = Matrix::NullaryExpr(3, 3, [&] { return g(rng); });
  clf.bias = Vector::NullaryExpr(3, [&] { return g(rng); });
  for (const auto& d : random_reps(30, 3, 10)) {
    const Vector s = clf.weights * d.vector + clf.bias;
    Eigen::Index arg;
    s.maxCoeff(&arg);
    CHECK(clf.predict_one(d.vector) == clf.class_ids[static_cast<std::size_t>(arg)]);
  }
}

TEST_CASE("final classifier needs two pseudo-classes") {
  const auto docs = random_reps(5, 3, 1);
  PseudoLabeling pseudo;
  for (const auto& d : docs) pseudo.push_back({d.doc_id, "same", 1.0});
  CHECK_THROWS_AS(train_final_classifier(docs, pseudo), DegenerateError);
}

TEST_CASE("assignment tsv round trip") {
  const std::vector<std::pair<std::string, std::string>> rows = {{"d1", "c000"}, {"d2", "c003"}};
  std::stringstream buf;
  write_assignments_tsv(rows, buf);
  CHECK(buf.str() == "d1\tc000\nd2\tc003\n");
  CHECK(read_assignments_tsv(buf) == rows);
  std::istringstream bad("d1\tc000\nd2 c003\n");
  try {
    read_assignments_tsv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
