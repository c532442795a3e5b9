#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wot/candidate.hpp"
#include "wot/cluster.hpp"
#include "wot/corpus.hpp"
#include "wot/embedding.hpp"
#include "wot/ranker.hpp"

namespace wot {

struct RefineConfig {
  std::size_t k = 100;       // initial (over-estimated) class count
  std::size_t w = 50;        // representative words per cluster for ranking features
  double beta = 0.7;         // indicativeness cutoff ratio
  double tau = kDefaultDocTemperature;
  std::size_t t_cap = 5;     // upper bound on class-words compared per cluster
  std::size_t top_m = 3;     // statistical words per cluster merged into the candidate pool
  // Unpinned clusters smaller than max(min_cluster_size, min_cluster_fraction
  // * clustered documents) are dissolved after each later re-clustering; a
  // singleton's coherence is trivially 1 and would win every overlap.
  std::size_t min_cluster_size = 2;
  double min_cluster_fraction = 0.005;
  std::uint64_t seed = 42;
  MlpOptions mlp;
  GmmOptions gmm;

  void validate(std::size_t seen_classes) const;
};

struct Cluster {
  std::string id;
  std::vector<std::size_t> members;  // corpus document indices
  std::vector<std::string> class_words;           // words defining the current class rep
  std::vector<std::string> selected_class_words;  // this pass's selection
  double coherence = 0.0;
  std::optional<std::string> pinned_seen_class;   // gold label of a seen class
};

struct ClusterSnapshot {
  std::string id;
  std::size_t size = 0;
  std::vector<std::string> selected_class_words;
  double coherence = 0.0;
  bool pinned = false;
  bool removed = false;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t top_t = 0;
  std::size_t clusters_before = 0;
  std::size_t clusters_after = 0;
  std::vector<ClusterSnapshot> clusters;
};

struct ClusterState {
  std::vector<Cluster> clusters;
  std::vector<std::string> initial_class_names;
  std::size_t iteration = 1;
  std::vector<std::size_t> history;  // live cluster count at the start of each pass
  std::vector<IterationRecord> records;
  std::vector<std::string> removed_last_pass;
  std::vector<std::size_t> unassigned;  // documents of clusters removed in the last pass
};

// Mean cosine between each representation and the (unnormalized) mean.
double coherence(std::span<const Vector> reps);

// Up to `top_t` leading words with positive score and score / max >= beta.
std::vector<std::string> select_class_words(const std::vector<Indicativeness>& ranking, std::size_t top_t,
                                            double beta);

// One sweep over cluster pairs (i < j) in order, using the coherence values
// present on entry. When selections intersect the lower-coherence cluster
// goes (ties: the larger id); a pinned cluster always beats an unpinned one
// and two pinned clusters are both kept.
ClusterState remove_overlapping(ClusterState state);

struct RefineResult {
  ClusterState state;
  DocRepBatch doc_reps;       // final representations
  ClusteringResult clustering;  // final clustering, aligned with doc_reps
  RankModel last_model;
  std::vector<std::string> expansion;  // seed-expansion output
};

// Initial over-estimated clustering followed by rank / select / dedupe /
// re-cluster passes until a pass removes nothing. Throws DegenerateError if
// fewer live clusters than seen classes remain.
RefineResult run_refinement(const Corpus& corpus, const Supervision& supervision, const EmbeddingTable& table,
                            const RefineConfig& config);

nlohmann::json history_json(const ClusterState& state);

}  // namespace wot
