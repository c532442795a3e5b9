#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wot/candidate.hpp"
#include "wot/corpus.hpp"
#include "wot/embedding.hpp"

namespace wot {

// Statistics of a word against a cluster's representative-word list.
// Variances are population variances.
struct WordClusterFeatures {
  double mean_euclid = 0.0;
  double var_euclid = 0.0;
  double mean_cosine = 0.0;
  double var_cosine = 0.0;

  std::array<double, 4> as_array() const { return {mean_euclid, var_euclid, mean_cosine, var_cosine}; }
};

WordClusterFeatures features(const Vector& word, std::span<const Vector* const> rep_vectors);
// Out-of-vocabulary representative words are skipped; the word itself
// must be in the table.
WordClusterFeatures features(const std::string& word, const std::vector<std::string>& rep_words,
                             const EmbeddingTable& table);

struct TrainingPair {
  WordClusterFeatures x;
  int label = 0;
  std::string word;
  std::string class_label;
};

// Representative words of the virtual cluster formed by a seen class's
// labeled documents.
std::vector<std::string> virtual_cluster_words(const std::string& label, const Supervision& supervision,
                                               const Corpus& corpus, std::size_t w);

// Per seen class: its name against its virtual cluster (label 1) and the
// candidate farthest from the name against the same cluster (label 0).
std::vector<TrainingPair> build_training_pairs(const Supervision& supervision, const CandidateSet& candidates,
                                               const Corpus& corpus, const EmbeddingTable& table,
                                               std::size_t w);

struct MlpOptions {
  std::size_t hidden = 16;
  std::size_t epochs = 500;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

// 4 -> hidden -> 1 perceptron, sigmoid everywhere, on standardized inputs.
class RankModel {
 public:
  double predict(const WordClusterFeatures& f) const;

  nlohmann::json to_json() const;
  static RankModel from_json(const nlohmann::json& j);

  std::array<double, 4> feature_mean{};
  std::array<double, 4> feature_scale{1.0, 1.0, 1.0, 1.0};
  Matrix hidden_weights;  // hidden x 4
  Vector hidden_bias;
  Vector output_weights;
  double output_bias = 0.0;
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on mean binary cross-entropy.
RankModel train_rank_model(const std::vector<TrainingPair>& pairs, const MlpOptions& options);

// ln(median(ranks) / (1 + own_rank)); ranks are 1-based.
double generic_penalty(std::span<const std::size_t> ranks_across_clusters, std::size_t own_rank);

struct Indicativeness {
  std::string word;
  std::string cluster_id;
  double p = 0.0;
  double mu = 0.0;
  double score = 0.0;
  std::size_t rank_in_cluster = 0;
};

// Closeness scores p(w, i): one row per candidate, one column per cluster.
struct ScoreTable {
  std::vector<std::string> words;
  std::vector<std::string> cluster_ids;
  Matrix p;
};

ScoreTable score_candidates(const CandidateSet& candidates,
                            const std::vector<std::vector<std::string>>& cluster_rep_words,
                            const std::vector<std::string>& cluster_ids, const RankModel& model,
                            const EmbeddingTable& table);

// ranks[w][c]: 1-based rank of word w in cluster c by descending p,
// lexicographic on ties.
std::vector<std::vector<std::size_t>> ranks_by_score(const ScoreTable& scores);

// Words ranked within the top `top_t` of more than half of the clusters.
std::vector<std::string> generic_words(const ScoreTable& scores, std::size_t top_t);

// Per cluster, the non-generic candidates sorted by I = p * mu descending
// (ties: rank, then word).
std::vector<std::vector<Indicativeness>> indicativeness_table(const ScoreTable& scores, std::size_t top_t);

std::vector<Indicativeness> indicativeness_ranking(const CandidateSet& candidates, std::size_t cluster,
                                                   const std::vector<std::vector<std::string>>& cluster_rep_words,
                                                   const std::vector<std::string>& cluster_ids,
                                                   const RankModel& model, const EmbeddingTable& table,
                                                   std::size_t top_t);

}  // namespace wot
