#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wot/corpus.hpp"
#include "wot/embedding.hpp"

namespace wot {

struct WordCounts {
  std::size_t docs = 0;         // documents of the cluster containing the word
  std::size_t occurrences = 0;  // token occurrences inside the cluster
};

struct ClusterDocStats {
  std::size_t size = 0;
  std::map<std::string, WordCounts> words;
};

ClusterDocStats cluster_doc_stats(const Corpus& corpus, std::span<const std::size_t> doc_indices);

// (s_i(w) / size_i) * tanh(t_i(w) / size_i) * ln(|D| / df(w)); zero for
// words absent from the cluster.
double representativeness(const std::string& word, const ClusterDocStats& stats, const Corpus& corpus);

struct RepWordScore {
  std::string word;
  std::string cluster_id;
  double score = 0.0;
  std::size_t occurrences = 0;
};

// Best n non-stopwords of a cluster; ties go to the higher in-cluster
// count, then to the lexicographically smaller word.
std::vector<RepWordScore> top_representative_words(const std::string& cluster_id,
                                                   const ClusterDocStats& stats, const Corpus& corpus,
                                                   std::size_t n);

// k_total - |seeds| table words with the highest mean cosine to the seeds.
std::vector<std::string> expand_seeds(const std::vector<std::string>& seeds, const EmbeddingTable& table,
                                      std::size_t k_total);

enum Origin : unsigned { kFromExpansion = 1u, kFromStatistics = 2u };

struct CandidateSet {
  std::vector<std::string> words;
  std::map<std::string, unsigned> origin;

  bool contains(const std::string& w) const { return origin.count(w) > 0; }
  std::size_t size() const { return words.size(); }
};

// Expansion words followed by the first top_m words of every statistical
// list, deduplicated in first-seen order. Stopwords, and words missing from
// `table` when one is given, are left out.
CandidateSet merge_candidates(const std::vector<std::string>& expansion,
                              const std::vector<std::vector<RepWordScore>>& statistical, std::size_t top_m,
                              const EmbeddingTable* table = nullptr);

}  // namespace wot
