#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wot/embedding.hpp"

namespace wot {

struct GmmOptions {
  std::size_t max_iterations = 200;
  // Stop when the per-document log-likelihood gains less than this.
  double tolerance = 1e-6;
  double variance_floor = 1e-6;
  double weight_floor = 1e-10;
};

// Diagonal-covariance mixture; row k of means/variances belongs to
// class_ids[k].
struct GmmModel {
  std::vector<std::string> class_ids;
  Matrix means;
  Matrix variances;
  Vector weights;
};

struct PseudoLabel {
  std::string doc_id;
  std::string cluster_id;
  double confidence = 0.0;
};

using PseudoLabeling = std::vector<PseudoLabel>;

struct GmmDiagnostics {
  // Objective after every E-step; pinned documents contribute their
  // complete-data term.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> empty_components;
};

struct ClusteringResult {
  GmmModel model;
  PseudoLabeling labels;  // aligned with the input documents
  GmmDiagnostics diagnostics;
  Matrix posteriors;      // documents x components
};

// EM over document representations with one component per class rep,
// means started at the class reps. `pins` maps doc id -> class id; pinned
// documents keep their responsibility fixed on that component.
ClusteringResult cluster_documents(std::span<const DocRep> docs, std::span<const ClassRep> class_reps,
                                   const std::map<std::string, std::string>& pins = {},
                                   const GmmOptions& options = {});

struct ClassifierOptions {
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression on standardized document vectors.
// Classes are kept in lexicographic order so argmax ties resolve to the
// smallest id.
class FinalClassifier {
 public:
  Vector scores(const Vector& rep) const;
  std::string predict_one(const Vector& rep) const;

  std::vector<std::string> class_ids;
  Matrix weights;  // classes x dim
  Vector bias;
  Vector input_mean;
  Vector input_scale;
};

FinalClassifier train_final_classifier(std::span<const DocRep> docs, const PseudoLabeling& pseudo,
                                       const ClassifierOptions& options = {});

std::vector<std::pair<std::string, std::string>> predict(const FinalClassifier& classifier,
                                                         std::span<const DocRep> docs);

// Two-column TSV, doc_id \t class_id.
void write_assignments_tsv(const std::vector<std::pair<std::string, std::string>>& rows, std::ostream& out);
std::vector<std::pair<std::string, std::string>> read_assignments_tsv(std::istream& in);
std::vector<std::pair<std::string, std::string>> load_assignments_tsv(const std::filesystem::path& path);

}  // namespace wot
