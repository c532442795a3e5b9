#include "wot/candidate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "wot/common.hpp"
#include "wot/text.hpp"

namespace wot {

ClusterDocStats cluster_doc_stats(const Corpus& corpus, std::span<const std::size_t> doc_indices) {
  ClusterDocStats stats;
  stats.size = doc_indices.size();
  for (auto idx : doc_indices) {
    std::unordered_set<std::string_view> seen;
    for (const auto& tok : corpus.document(idx).tokens) {
      auto& wc = stats.words[tok];
      ++wc.occurrences;
      if (seen.insert(tok).second) ++wc.docs;
    }
  }
  return stats;
}

double representativeness(const std::string& word, const ClusterDocStats& stats, const Corpus& corpus) {
  auto it = stats.words.find(word);
  if (it == stats.words.end() || stats.size == 0) return 0.0;
  const std::size_t df = corpus.doc_freq(word);
  if (df == 0) return 0.0;
  const double size = static_cast<double>(stats.size);
  return (static_cast<double>(it->second.docs) / size) *
         std::tanh(static_cast<double>(it->second.occurrences) / size) *
         std::log(static_cast<double>(corpus.num_docs()) / static_cast<double>(df));
}

std::vector<RepWordScore> top_representative_words(const std::string& cluster_id,
                                                   const ClusterDocStats& stats, const Corpus& corpus,
                                                   std::size_t n) {
  std::vector<RepWordScore> scored;
  scored.reserve(stats.words.size());
  for (const auto& [word, wc] : stats.words) {
    if (is_stopword(word)) continue;
    scored.push_back({word, cluster_id, representativeness(word, stats, corpus), wc.occurrences});
  }
  const auto better = [](const RepWordScore& a, const RepWordScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
    return a.word < b.word;
  };
  if (scored.size() > n) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

std::vector<std::string> expand_seeds(const std::vector<std::string>& seeds, const EmbeddingTable& table,
                                      std::size_t k_total) {
  if (k_total < seeds.size()) throw ValidationError("K must be at least the number of seed names");
  if (table.size() < k_total) {
    throw ValidationError("vocabulary of " + std::to_string(table.size()) + " words is smaller than K=" +
                          std::to_string(k_total));
  }
  const std::size_t wanted = k_total - seeds.size();
  if (wanted == 0) return {};

  std::vector<const Vector*> seed_vecs;
  std::set<std::string> seed_set(seeds.begin(), seeds.end());
  for (const auto& s : seeds) {
    if (const auto* v = table.find(s)) {
      seed_vecs.push_back(v);
    } else {
      warn("seed '" + s + "' is out of vocabulary; skipped");
    }
  }
  if (seed_vecs.empty()) throw ValidationError("no seed name is in the embedding table");

  std::vector<std::pair<double, const std::string*>> scored;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& w = table.words()[i];
    if (seed_set.count(w) || is_stopword(w)) continue;
    double sum = 0.0;
    for (const auto* s : seed_vecs) sum += cosine(table.vector(i), *s);
    scored.emplace_back(sum / static_cast<double>(seed_vecs.size()), &w);
  }
  const auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  };
  const auto take = std::min(wanted, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*scored[i].second);
  if (take < wanted) warn("seed expansion returned only " + std::to_string(take) + " words");
  return out;
}

CandidateSet merge_candidates(const std::vector<std::string>& expansion,
                              const std::vector<std::vector<RepWordScore>>& statistical, std::size_t top_m,
                              const EmbeddingTable* table) {
  CandidateSet set;
  auto add = [&](const std::string& w, unsigned origin) {
    if (is_stopword(w)) return;
    if (table && !table->contains(w)) return;
    auto [it, inserted] = set.origin.emplace(w, origin);
    if (inserted) {
      set.words.push_back(w);
    } else {
      it->second |= origin;
    }
  };
  for (const auto& w : expansion) add(w, kFromExpansion);
  for (const auto& list : statistical) {
    for (std::size_t k = 0; k < std::min(top_m, list.size()); ++k) add(list[k].word, kFromStatistics);
  }
  if (set.words.empty()) throw ValidationError("empty candidate set");
  return set;
}

}  // namespace wot
