#include "wot/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wot/common.hpp"
#include "wot/random.hpp"

namespace wot {

WordClusterFeatures features(const Vector& word, std::span<const Vector* const> rep_vectors) {
  if (rep_vectors.empty()) throw ValidationError("features need at least one representative word");
  const double n = static_cast<double>(rep_vectors.size());
  double sum_e = 0.0, sum_c = 0.0;
  std::vector<double> eu, co;
  eu.reserve(rep_vectors.size());
  co.reserve(rep_vectors.size());
  for (const auto* r : rep_vectors) {
    eu.push_back((word - *r).norm());
    co.push_back(cosine(word, *r));
    sum_e += eu.back();
    sum_c += co.back();
  }
  WordClusterFeatures f;
  f.mean_euclid = sum_e / n;
  f.mean_cosine = sum_c / n;
  for (std::size_t i = 0; i < eu.size(); ++i) {
    f.var_euclid += (eu[i] - f.mean_euclid) * (eu[i] - f.mean_euclid);
    f.var_cosine += (co[i] - f.mean_cosine) * (co[i] - f.mean_cosine);
  }
  f.var_euclid /= n;
  f.var_cosine /= n;
  return f;
}

WordClusterFeatures features(const std::string& word, const std::vector<std::string>& rep_words,
                             const EmbeddingTable& table) {
  const auto* w = table.find(word);
  if (!w) throw ValidationError("word '" + word + "' is out of vocabulary");
  std::vector<const Vector*> reps;
  reps.reserve(rep_words.size());
  for (const auto& r : rep_words) {
    if (const auto* v = table.find(r)) reps.push_back(v);
  }
  if (reps.empty()) throw ValidationError("no representative word is in the embedding table");
  return features(*w, reps);
}

std::vector<std::string> virtual_cluster_words(const std::string& label, const Supervision& supervision,
                                               const Corpus& corpus, std::size_t w) {
  std::vector<std::size_t> members;
  for (const auto& id : supervision.labeled_examples.at(label)) {
    auto idx = corpus.index_of(id);
    if (!idx) throw ValidationError("labeled document '" + id + "' not in corpus");
    members.push_back(*idx);
  }
  const auto stats = cluster_doc_stats(corpus, members);
  std::vector<std::string> words;
  for (auto& r : top_representative_words("virtual:" + label, stats, corpus, w)) words.push_back(r.word);
  return words;
}

std::vector<TrainingPair> build_training_pairs(const Supervision& supervision, const CandidateSet& candidates,
                                               const Corpus& corpus, const EmbeddingTable& table,
                                               std::size_t w) {
  std::vector<std::string> missing;
  for (const auto& [label, name] : supervision.seen_class_names) {
    if (!table.contains(name)) missing.push_back(label);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("seen class names out of vocabulary: " + list);
  }

  std::vector<TrainingPair> pairs;
  for (const auto& [label, name] : supervision.seen_class_names) {
    const auto rep_words = virtual_cluster_words(label, supervision, corpus, w);
    const auto& name_vec = table.at(name);
    const std::string* farthest = nullptr;
    double best = -1.0;
    for (const auto& c : candidates.words) {
      const auto* v = table.find(c);
      if (!v) continue;
      const double d = (*v - name_vec).norm();
      if (d > best || (d == best && c < *farthest)) {
        best = d;
        farthest = &c;
      }
    }
    if (!farthest) throw ValidationError("no candidate word is in the embedding table");
    pairs.push_back({features(name, rep_words, table), 1, name, label});
    pairs.push_back({features(*farthest, rep_words, table), 0, *farthest, label});
  }
  return pairs;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Vector4d standardized(const RankModel& m, const WordClusterFeatures& f) {
  const auto a = f.as_array();
  Eigen::Vector4d z;
  for (int k = 0; k < 4; ++k) z(k) = (a[static_cast<std::size_t>(k)] - m.feature_mean[static_cast<std::size_t>(k)]) /
                                     m.feature_scale[static_cast<std::size_t>(k)];
  return z;
}

}  // namespace

double RankModel::predict(const WordClusterFeatures& f) const {
  const Vector h = (hidden_weights * standardized(*this, f) + hidden_bias).unaryExpr(&sigmoid);
  return std::clamp(sigmoid(output_weights.dot(h) + output_bias), 1e-12, 1.0 - 1e-12);
}

RankModel train_rank_model(const std::vector<TrainingPair>& pairs, const MlpOptions& options) {
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 1; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 0; });
  if (!has_pos || !has_neg) throw DegenerateError("rank model needs positive and negative pairs");
  if (options.hidden == 0) throw ValidationError("hidden width must be positive");

  RankModel m;
  m.seed = options.seed;
  const double n = static_cast<double>(pairs.size());
  for (std::size_t k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (const auto& p : pairs) mean += p.x.as_array()[k];
    mean /= n;
    double var = 0.0;
    for (const auto& p : pairs) var += (p.x.as_array()[k] - mean) * (p.x.as_array()[k] - mean);
    const double sd = std::sqrt(var / n);
    m.feature_mean[k] = mean;
    m.feature_scale[k] = sd > 1e-12 ? sd : 1.0;
  }

  const auto h = static_cast<Eigen::Index>(options.hidden);
  std::mt19937_64 rng(options.seed);
  const double s1 = std::sqrt(2.0 / (4.0 + static_cast<double>(h)));
  const double s2 = std::sqrt(2.0 / (static_cast<double>(h) + 1.0));
  m.hidden_weights.resize(h, 4);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < 4; ++c) m.hidden_weights(r, c) = s1 * standard_normal(rng);
  m.hidden_bias = Vector::Zero(h);
  m.output_weights.resize(h);
  for (Eigen::Index r = 0; r < h; ++r) m.output_weights(r) = s2 * standard_normal(rng);

  Matrix z(4, static_cast<Eigen::Index>(pairs.size()));
  Vector y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    z.col(static_cast<Eigen::Index>(i)) = standardized(m, pairs[i].x);
    y(static_cast<Eigen::Index>(i)) = pairs[i].label;
  }

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const Matrix hid = ((m.hidden_weights * z).colwise() + m.hidden_bias).unaryExpr(&sigmoid);
    const Vector out = ((m.output_weights.transpose() * hid).array() + m.output_bias).unaryExpr(&sigmoid).transpose();
    const Vector d = (out - y) / n;
    const Vector g_out = hid * d;
    const double g_out_bias = d.sum();
    const Matrix d_hid = ((m.output_weights * d.transpose()).array() * hid.array() * (1.0 - hid.array())).matrix();
    const Matrix g_hidden = d_hid * z.transpose();
    const Vector g_hidden_bias = d_hid.rowwise().sum();
    m.output_weights -= options.learning_rate * g_out;
    m.output_bias -= options.learning_rate * g_out_bias;
    m.hidden_weights -= options.learning_rate * g_hidden;
    m.hidden_bias -= options.learning_rate * g_hidden_bias;
  }
  return m;
}

nlohmann::json RankModel::to_json() const {
  nlohmann::json j;
  j["feature_mean"] = feature_mean;
  j["feature_scale"] = feature_scale;
  std::vector<std::vector<double>> hw(static_cast<std::size_t>(hidden_weights.rows()));
  for (Eigen::Index r = 0; r < hidden_weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < hidden_weights.cols(); ++c) hw[static_cast<std::size_t>(r)].push_back(hidden_weights(r, c));
  }
  j["hidden_weights"] = hw;
  j["hidden_bias"] = std::vector<double>(hidden_bias.data(), hidden_bias.data() + hidden_bias.size());
  j["output_weights"] = std::vector<double>(output_weights.data(), output_weights.data() + output_weights.size());
  j["output_bias"] = output_bias;
  j["seed"] = seed;
  return j;
}

RankModel RankModel::from_json(const nlohmann::json& j) {
  RankModel m;
  try {
    m.feature_mean = j.at("feature_mean").get<std::array<double, 4>>();
    m.feature_scale = j.at("feature_scale").get<std::array<double, 4>>();
    const auto hw = j.at("hidden_weights").get<std::vector<std::vector<double>>>();
    const auto hb = j.at("hidden_bias").get<std::vector<double>>();
    const auto ow = j.at("output_weights").get<std::vector<double>>();
    if (hw.size() != hb.size() || hw.size() != ow.size()) throw ValidationError("inconsistent hidden width");
    const auto h = static_cast<Eigen::Index>(hw.size());
    m.hidden_weights.resize(h, 4);
    m.hidden_bias.resize(h);
    m.output_weights.resize(h);
    for (Eigen::Index r = 0; r < h; ++r) {
      const auto& row = hw[static_cast<std::size_t>(r)];
      if (row.size() != 4) throw ValidationError("hidden weight rows need 4 entries");
      for (Eigen::Index c = 0; c < 4; ++c) m.hidden_weights(r, c) = row[static_cast<std::size_t>(c)];
      m.hidden_bias(r) = hb[static_cast<std::size_t>(r)];
      m.output_weights(r) = ow[static_cast<std::size_t>(r)];
    }
    m.output_bias = j.at("output_bias").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid rank model: ") + e.what());
  }
  return m;
}

double generic_penalty(std::span<const std::size_t> ranks_across_clusters, std::size_t own_rank) {
  if (ranks_across_clusters.empty()) throw ValidationError("generic penalty needs at least one rank");
  std::vector<std::size_t> r(ranks_across_clusters.begin(), ranks_across_clusters.end());
  std::sort(r.begin(), r.end());
  const auto mid = r.size() / 2;
  const double median = r.size() % 2 == 1 ? static_cast<double>(r[mid])
                                          : 0.5 * static_cast<double>(r[mid - 1] + r[mid]);
  return std::log(median / (1.0 + static_cast<double>(own_rank)));
}

ScoreTable score_candidates(const CandidateSet& candidates,
                            const std::vector<std::vector<std::string>>& cluster_rep_words,
                            const std::vector<std::string>& cluster_ids, const RankModel& model,
                            const EmbeddingTable& table) {
  if (candidates.words.empty()) throw ValidationError("empty candidate set");
  if (cluster_rep_words.size() != cluster_ids.size()) throw ValidationError("cluster id/word list mismatch");
  ScoreTable s;
  s.cluster_ids = cluster_ids;
  std::vector<const Vector*> word_vecs;
  for (const auto& w : candidates.words) {
    if (const auto* v = table.find(w)) {
      s.words.push_back(w);
      word_vecs.push_back(v);
    } else {
      warn("candidate '" + w + "' is out of vocabulary; skipped");
    }
  }
  if (s.words.empty()) throw ValidationError("no candidate word is in the embedding table");
  s.p.resize(static_cast<Eigen::Index>(s.words.size()), static_cast<Eigen::Index>(cluster_ids.size()));
  for (std::size_t c = 0; c < cluster_ids.size(); ++c) {
    std::vector<const Vector*> reps;
    for (const auto& r : cluster_rep_words[c]) {
      if (const auto* v = table.find(r)) reps.push_back(v);
    }
    if (reps.empty()) throw ValidationError("cluster " + cluster_ids[c] + " has no in-vocabulary representative word");
    for (std::size_t w = 0; w < s.words.size(); ++w) {
      s.p(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(c)) = model.predict(features(*word_vecs[w], reps));
    }
  }
  return s;
}

std::vector<std::vector<std::size_t>> ranks_by_score(const ScoreTable& scores) {
  const auto nw = scores.words.size();
  std::vector<std::vector<std::size_t>> ranks(nw, std::vector<std::size_t>(scores.cluster_ids.size()));
  std::vector<std::size_t> order(nw);
  for (std::size_t c = 0; c < scores.cluster_ids.size(); ++c) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto col = static_cast<Eigen::Index>(c);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double pa = scores.p(static_cast<Eigen::Index>(a), col), pb = scores.p(static_cast<Eigen::Index>(b), col);
      if (pa != pb) return pa > pb;
      return scores.words[a] < scores.words[b];
    });
    for (std::size_t r = 0; r < nw; ++r) ranks[order[r]][c] = r + 1;
  }
  return ranks;
}

namespace {

std::vector<bool> generic_mask(const std::vector<std::vector<std::size_t>>& ranks, std::size_t n_clusters,
                               std::size_t top_t) {
  std::vector<bool> generic(ranks.size(), false);
  for (std::size_t w = 0; w < ranks.size(); ++w) {
    const auto high = static_cast<std::size_t>(
        std::count_if(ranks[w].begin(), ranks[w].end(), [&](std::size_t r) { return r <= top_t; }));
    generic[w] = 2 * high > n_clusters;
  }
  return generic;
}

}  // namespace

std::vector<std::string> generic_words(const ScoreTable& scores, std::size_t top_t) {
  const auto ranks = ranks_by_score(scores);
  const auto mask = generic_mask(ranks, scores.cluster_ids.size(), top_t);
  std::vector<std::string> out;
  for (std::size_t w = 0; w < mask.size(); ++w) {
    if (mask[w]) out.push_back(scores.words[w]);
  }
  return out;
}

std::vector<std::vector<Indicativeness>> indicativeness_table(const ScoreTable& scores, std::size_t top_t) {
  const auto ranks = ranks_by_score(scores);
  const auto n_clusters = scores.cluster_ids.size();
  const auto generic = generic_mask(ranks, n_clusters, top_t);
  std::vector<std::vector<Indicativeness>> table(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    auto& list = table[c];
    for (std::size_t w = 0; w < scores.words.size(); ++w) {
      if (generic[w]) continue;
      Indicativeness ind;
      ind.word = scores.words[w];
      ind.cluster_id = scores.cluster_ids[c];
      ind.p = scores.p(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(c));
      ind.rank_in_cluster = ranks[w][c];
      ind.mu = generic_penalty(ranks[w], ranks[w][c]);
      ind.score = ind.p * ind.mu;
      list.push_back(std::move(ind));
    }
    std::sort(list.begin(), list.end(), [](const Indicativeness& a, const Indicativeness& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.rank_in_cluster != b.rank_in_cluster) return a.rank_in_cluster < b.rank_in_cluster;
      return a.word < b.word;
    });
  }
  return table;
}

std::vector<Indicativeness> indicativeness_ranking(const CandidateSet& candidates, std::size_t cluster,
                                                   const std::vector<std::vector<std::string>>& cluster_rep_words,
                                                   const std::vector<std::string>& cluster_ids,
                                                   const RankModel& model, const EmbeddingTable& table,
                                                   std::size_t top_t) {
  if (cluster >= cluster_ids.size()) throw ValidationError("cluster index out of range");
  const auto scores = score_candidates(candidates, cluster_rep_words, cluster_ids, model, table);
  return indicativeness_table(scores, top_t)[cluster];
}

}  // namespace wot
