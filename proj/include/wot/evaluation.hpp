#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wot {

using Assignments = std::vector<std::pair<std::string, std::string>>;  // doc id -> cluster/class id

// counts[i][j]: documents of predicted cluster i with gold class j. Rows and
// columns are sorted by id.
struct OverlapMatrix {
  std::vector<std::string> clusters;
  std::vector<std::string> classes;
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t total() const;
};

OverlapMatrix overlap_matrix(const Assignments& predictions, const std::map<std::string, std::string>& gold);

// Maximum-weight matching that covers the smaller side, via the Hungarian
// algorithm. Among optimal matchings the one whose row-to-column vector is
// lexicographically smallest is returned (unmatched rows sort last).
struct Matching {
  std::vector<int> row_to_col;  // -1 for unmatched rows
  std::int64_t weight = 0;
};

Matching max_weight_matching(const std::vector<std::vector<std::int64_t>>& weights);

struct ClusterAssignment {
  std::map<std::string, std::string> mapping;  // cluster -> class
  std::vector<std::pair<std::string, std::string>> matched_pairs;
  std::int64_t matched_weight = 0;
};

// Matched clusters take their partner class, the rest take their
// majority class (smallest class id on ties).
ClusterAssignment assign_clusters(const OverlapMatrix& m);

struct ClassScore {
  std::string label;
  std::size_t support = 0;    // gold documents
  std::size_t predicted = 0;  // documents mapped to the class
  std::size_t true_positive = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Summary {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t documents = 0;
  std::size_t classes = 0;
};

struct EvalReport {
  F1Summary overall;
  F1Summary seen;
  F1Summary unseen;
  std::size_t predicted_class_count = 0;
  std::size_t gold_class_count = 0;
  std::vector<ClassScore> per_class;
  ClusterAssignment assignment;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

EvalReport f1_report(const ClusterAssignment& assignment, const Assignments& predictions,
                     const std::map<std::string, std::string>& gold, const std::set<std::string>& seen_classes);

// overlap_matrix + assign_clusters + f1_report.
EvalReport evaluate(const Assignments& predictions, const std::map<std::string, std::string>& gold,
                    const std::set<std::string>& seen_classes);

}  // namespace wot
