#include "wot/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_map>

#include "wot/common.hpp"
#include "wot/random.hpp"

namespace wot {
namespace {

Matrix stack_rows(std::span<const DocRep> docs, std::size_t dim) {
  Matrix x(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (static_cast<std::size_t>(docs[i].vector.size()) != dim) {
      throw ValidationError("document '" + docs[i].doc_id + "' has the wrong dimension");
    }
    if (!docs[i].vector.allFinite()) throw ValidationError("document '" + docs[i].doc_id + "' is not finite");
    x.row(static_cast<Eigen::Index>(i)) = docs[i].vector.transpose();
  }
  return x;
}

// log N(x | k) for all documents and components.
Matrix log_densities(const Matrix& x, const GmmModel& m) {
  const Matrix inv = m.variances.cwiseInverse();
  const Matrix x2 = x.cwiseProduct(x);
  Matrix quad = x2 * inv.transpose();
  quad -= 2.0 * x * m.means.cwiseProduct(inv).transpose();
  const Vector mu_term = m.means.cwiseProduct(m.means).cwiseProduct(inv).rowwise().sum();
  const Vector log_det = m.variances.array().log().matrix().rowwise().sum();
  const double c = static_cast<double>(x.cols()) * std::log(2.0 * std::numbers::pi);
  quad.rowwise() += mu_term.transpose();
  quad = quad.cwiseMax(0.0);
  Matrix out = -0.5 * quad;
  out.rowwise() -= 0.5 * (log_det.array() + c).matrix().transpose();
  return out;
}

}  // namespace

ClusteringResult cluster_documents(std::span<const DocRep> docs, std::span<const ClassRep> class_reps,
                                   const std::map<std::string, std::string>& pins, const GmmOptions& options) {
  if (class_reps.empty()) throw ValidationError("clustering needs at least one class representation");
  if (docs.empty()) throw ValidationError("clustering needs at least one document");
  const auto dim = static_cast<std::size_t>(class_reps.front().vector.size());
  const auto k = static_cast<Eigen::Index>(class_reps.size());
  const auto n = static_cast<Eigen::Index>(docs.size());
  const Matrix x = stack_rows(docs, dim);

  ClusteringResult result;
  auto& m = result.model;
  std::unordered_map<std::string, Eigen::Index> component_of;
  m.means.resize(k, static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& rep = class_reps[static_cast<std::size_t>(c)];
    if (static_cast<std::size_t>(rep.vector.size()) != dim) throw ValidationError("class reps differ in dimension");
    if (!component_of.emplace(rep.class_id, c).second) throw ValidationError("duplicate class id " + rep.class_id);
    m.class_ids.push_back(rep.class_id);
    m.means.row(c) = rep.vector.transpose();
  }
  const Vector global_mean = x.colwise().mean().transpose();
  Vector global_var = (x.rowwise() - global_mean.transpose()).cwiseProduct(x.rowwise() - global_mean.transpose()).colwise().mean().transpose();
  global_var = global_var.cwiseMax(options.variance_floor);
  m.variances = global_var.transpose().replicate(k, 1);
  m.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));

  std::vector<Eigen::Index> pinned(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = pins.find(docs[static_cast<std::size_t>(i)].doc_id);
    if (it == pins.end()) continue;
    auto c = component_of.find(it->second);
    if (c == component_of.end()) throw ValidationError("pin to unknown class " + it->second);
    pinned[static_cast<std::size_t>(i)] = c->second;
  }

  Matrix resp(n, k);
  double previous = -std::numeric_limits<double>::infinity();
  auto& diag = result.diagnostics;
  for (std::size_t iter = 0;; ++iter) {
    // E-step
    Matrix joint = log_densities(x, m);
    const Vector log_w = m.weights.array().log().matrix();
    joint.rowwise() += log_w.transpose();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto pin = pinned[static_cast<std::size_t>(i)];
      if (pin >= 0) {
        resp.row(i).setZero();
        resp(i, pin) = 1.0;
        ll += joint(i, pin);
        continue;
      }
      const double top = joint.row(i).maxCoeff();
      const Vector e = (joint.row(i).array() - top).exp().matrix().transpose();
      const double s = e.sum();
      resp.row(i) = (e / s).transpose();
      ll += top + std::log(s);
    }
    diag.log_likelihood.push_back(ll);
    diag.iterations = iter;
    if (iter > 0 && (ll - previous) / static_cast<double>(n) < options.tolerance) {
      diag.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;
    previous = ll;

    // M-step
    const Vector nk = resp.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < k; ++c) {
      if (nk(c) <= 0.0) {
        m.weights(c) = options.weight_floor;
        continue;
      }
      const Vector mean = (x.transpose() * resp.col(c)) / nk(c);
      const Matrix centered = x.rowwise() - mean.transpose();
      Vector var = (centered.cwiseProduct(centered).transpose() * resp.col(c)) / nk(c);
      m.means.row(c) = mean.transpose();
      m.variances.row(c) = var.cwiseMax(options.variance_floor).transpose();
      m.weights(c) = std::max(nk(c) / static_cast<double>(n), options.weight_floor);
    }
    m.weights /= m.weights.sum();
  }

  result.posteriors = resp;
  result.labels.reserve(static_cast<std::size_t>(n));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < k; ++c) {
      if (resp(i, c) > resp(i, best)) best = c;
    }
    ++sizes[static_cast<std::size_t>(best)];
    result.labels.push_back({docs[static_cast<std::size_t>(i)].doc_id, m.class_ids[static_cast<std::size_t>(best)],
                             std::clamp(resp(i, best), 0.0, 1.0)});
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] == 0) diag.empty_components.push_back(m.class_ids[static_cast<std::size_t>(c)]);
  }
  return result;
}

Vector FinalClassifier::scores(const Vector& rep) const {
  if (rep.size() != weights.cols()) throw ValidationError("representation dimension does not match classifier");
  const Vector z = (rep - input_mean).cwiseQuotient(input_scale);
  return weights * z + bias;
}

std::string FinalClassifier::predict_one(const Vector& rep) const {
  const Vector s = scores(rep);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c) {
    if (s(c) > s(best)) best = c;
  }
  return class_ids.at(static_cast<std::size_t>(best));
}

FinalClassifier train_final_classifier(std::span<const DocRep> docs, const PseudoLabeling& pseudo,
                                       const ClassifierOptions& options) {
  if (docs.size() != pseudo.size()) throw ValidationError("pseudo-labels must align with documents");
  if (docs.empty()) throw ValidationError("no training documents");
  std::set<std::string> classes;
  for (const auto& p : pseudo) classes.insert(p.cluster_id);
  if (classes.size() < 2) throw DegenerateError("final classifier needs at least two pseudo-classes");

  FinalClassifier clf;
  clf.class_ids.assign(classes.begin(), classes.end());
  std::unordered_map<std::string, Eigen::Index> class_index;
  for (std::size_t c = 0; c < clf.class_ids.size(); ++c) class_index[clf.class_ids[c]] = static_cast<Eigen::Index>(c);

  const auto dim = static_cast<std::size_t>(docs.front().vector.size());
  const Matrix x = stack_rows(docs, dim);
  const auto n = x.rows();
  const auto k = static_cast<Eigen::Index>(clf.class_ids.size());
  clf.input_mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - clf.input_mean.transpose();
  clf.input_scale = (centered.cwiseProduct(centered).colwise().mean().transpose()).cwiseSqrt();
  for (Eigen::Index d = 0; d < clf.input_scale.size(); ++d) {
    if (!(clf.input_scale(d) > 1e-12)) clf.input_scale(d) = 1.0;
  }
  const Matrix z = centered.array().rowwise() / clf.input_scale.transpose().array();

  Matrix y = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pseudo[static_cast<std::size_t>(i)].doc_id != docs[static_cast<std::size_t>(i)].doc_id) {
      throw ValidationError("pseudo-label order does not match documents");
    }
    y(i, class_index.at(pseudo[static_cast<std::size_t>(i)].cluster_id)) = 1.0;
  }

  std::mt19937_64 rng(options.seed);
  clf.weights.resize(k, x.cols());
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) clf.weights(r, c) = 0.01 * standard_normal(rng);
  clf.bias = Vector::Zero(k);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Matrix logits = z * clf.weights.transpose();
    logits.rowwise() += clf.bias.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - top).exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    const Matrix d = (logits - y) / static_cast<double>(n);
    const Matrix gw = d.transpose() * z + options.l2 * clf.weights;
    const Vector gb = d.colwise().sum().transpose();
    clf.weights -= options.learning_rate * gw;
    clf.bias -= options.learning_rate * gb;
  }
  return clf;
}

std::vector<std::pair<std::string, std::string>> predict(const FinalClassifier& classifier,
                                                         std::span<const DocRep> docs) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.emplace_back(d.doc_id, classifier.predict_one(d.vector));
  return out;
}

void write_assignments_tsv(const std::vector<std::pair<std::string, std::string>>& rows, std::ostream& out) {
  for (const auto& [doc, cls] : rows) out << doc << '\t' << cls << '\n';
}

std::vector<std::pair<std::string, std::string>> read_assignments_tsv(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("expected two tab-separated columns", line_no);
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

std::vector<std::pair<std::string, std::string>> load_assignments_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_assignments_tsv(in);
}

}  // namespace wot
