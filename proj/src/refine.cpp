#include "wot/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "wot/common.hpp"

namespace wot {

void RefineConfig::validate(std::size_t seen_classes) const {
  if (k <= seen_classes) {
    // K == |seen| is allowed: nothing to expand.
    if (k < seen_classes || k == 0) throw ValidationError("K must be at least the number of seen classes");
  }
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
  if (w == 0) throw ValidationError("W must be positive");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (t_cap == 0) throw ValidationError("T cap must be positive");
}

double coherence(std::span<const Vector> reps) {
  if (reps.empty()) throw ValidationError("coherence needs at least one representation");
  Vector mean = Vector::Zero(reps.front().size());
  for (const auto& r : reps) mean += r;
  mean /= static_cast<double>(reps.size());
  if (mean.norm() == 0.0) throw DegenerateError("cluster mean representation is the zero vector");
  double sum = 0.0;
  for (const auto& r : reps) sum += cosine(r, mean);
  return sum / static_cast<double>(reps.size());
}

std::vector<std::string> select_class_words(const std::vector<Indicativeness>& ranking, std::size_t top_t,
                                            double beta) {
  std::vector<std::string> out;
  if (ranking.empty()) return out;
  const double top = ranking.front().score;
  if (!(top > 0.0)) return out;
  for (const auto& r : ranking) {
    if (out.size() >= top_t) break;
    if (r.score > 0.0 && r.score / top >= beta) out.push_back(r.word);
  }
  return out;
}

namespace {

bool intersects(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  }
  return false;
}

}  // namespace

ClusterState remove_overlapping(ClusterState state) {
  auto& cs = state.clusters;
  std::sort(cs.begin(), cs.end(), [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
  std::vector<bool> removed(cs.size(), false);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      if (removed[i]) break;
      if (removed[j]) continue;
      if (!intersects(cs[i].selected_class_words, cs[j].selected_class_words)) continue;
      const bool pi = cs[i].pinned_seen_class.has_value(), pj = cs[j].pinned_seen_class.has_value();
      if (pi && pj) continue;
      std::size_t loser;
      if (pi != pj) {
        loser = pi ? j : i;
      } else if (cs[i].coherence != cs[j].coherence) {
        loser = cs[i].coherence < cs[j].coherence ? i : j;
      } else {
        loser = cs[i].id > cs[j].id ? i : j;
      }
      removed[loser] = true;
    }
  }
  state.removed_last_pass.clear();
  state.unassigned.clear();
  std::vector<Cluster> kept;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (removed[i]) {
      state.removed_last_pass.push_back(cs[i].id);
      state.unassigned.insert(state.unassigned.end(), cs[i].members.begin(), cs[i].members.end());
    } else {
      kept.push_back(std::move(cs[i]));
    }
  }
  std::sort(state.unassigned.begin(), state.unassigned.end());
  cs = std::move(kept);
  return state;
}

namespace {

std::string cluster_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03zu", i);
  return buf;
}

struct Workspace {
  const Corpus& corpus;
  const Supervision& supervision;
  const EmbeddingTable& table;
  const RefineConfig& config;
  std::map<std::string, std::string> doc_pins;  // doc id -> seen label
};

// Builds class reps from each cluster's class words, re-represents the
// documents, runs EM and rewrites the member lists. Empty unpinned
// clusters are dropped; with dissolve_small, so are unpinned clusters under
// the size floor (their documents are re-clustered among the rest). The
// initial over-estimated clustering is left alone: its small components are
// the ones that drift towards unseen topics.
void recluster(Workspace& ws, ClusterState& state, RefineResult& result, bool dissolve_small) {
  for (;;) {
    std::vector<ClassRep> reps;
    reps.reserve(state.clusters.size());
    std::map<std::string, std::string> label_to_cluster;
    for (const auto& c : state.clusters) {
      reps.push_back(class_representation(c.id, c.class_words, ws.table));
      if (c.pinned_seen_class) label_to_cluster[*c.pinned_seen_class] = c.id;
    }
    result.doc_reps = document_representations(ws.corpus, ws.table, reps, ws.config.tau);
    if (result.doc_reps.reps.empty()) throw DegenerateError("no document can be represented");

    std::map<std::string, std::string> pins;
    std::set<std::string> represented;
    for (const auto& r : result.doc_reps.reps) represented.insert(r.doc_id);
    for (const auto& [doc, label] : ws.doc_pins) {
      auto it = label_to_cluster.find(label);
      if (it != label_to_cluster.end() && represented.count(doc)) pins[doc] = it->second;
    }

    result.clustering = cluster_documents(result.doc_reps.reps, reps, pins, ws.config.gmm);

    std::map<std::string, std::size_t> index_of;
    for (std::size_t c = 0; c < state.clusters.size(); ++c) {
      state.clusters[c].members.clear();
      index_of[state.clusters[c].id] = c;
    }
    for (std::size_t i = 0; i < result.clustering.labels.size(); ++i) {
      state.clusters[index_of.at(result.clustering.labels[i].cluster_id)].members.push_back(
          result.doc_reps.doc_index[i]);
    }
    const auto min_size = !dissolve_small ? std::size_t{1} : std::max<std::size_t>(
        ws.config.min_cluster_size,
        static_cast<std::size_t>(std::ceil(ws.config.min_cluster_fraction *
                                           static_cast<double>(result.doc_reps.reps.size()))));
    std::vector<Cluster> kept;
    bool dissolved_nonempty = false;
    for (auto& c : state.clusters) {
      if (c.pinned_seen_class || c.members.size() >= min_size) {
        kept.push_back(std::move(c));
      } else if (!c.members.empty()) {
        dissolved_nonempty = true;
      }
    }
    if (kept.empty()) {
      // Keep the largest cluster rather than none.
      auto largest = std::max_element(state.clusters.begin(), state.clusters.end(),
                                      [](const Cluster& a, const Cluster& b) { return a.members.size() < b.members.size(); });
      kept.push_back(std::move(*largest));
      dissolved_nonempty = true;
    }
    state.clusters = std::move(kept);
    state.unassigned.clear();
    // Documents of dissolved clusters need a new home.
    if (!dissolved_nonempty) return;
  }
}

std::vector<Vector> member_reps(const Cluster& c, const DocRepBatch& batch,
                                const std::map<std::size_t, std::size_t>& rep_of_doc) {
  std::vector<Vector> out;
  out.reserve(c.members.size());
  for (auto d : c.members) out.push_back(batch.reps[rep_of_doc.at(d)].vector);
  return out;
}

}  // namespace

RefineResult run_refinement(const Corpus& corpus, const Supervision& supervision, const EmbeddingTable& table,
                            const RefineConfig& config) {
  supervision.validate(corpus);
  const auto n_seen = supervision.seen_class_names.size();
  config.validate(n_seen);

  Workspace ws{corpus, supervision, table, config, {}};
  for (const auto& [label, ids] : supervision.labeled_examples) {
    for (const auto& id : ids) ws.doc_pins[id] = label;
  }

  std::vector<std::string> seed_names;
  std::set<std::string> distinct;
  for (const auto& [label, name] : supervision.seen_class_names) {
    if (!table.contains(name)) throw ValidationError("seen class name '" + name + "' is out of vocabulary");
    if (!distinct.insert(name).second) throw ValidationError("two seen classes share the name '" + name + "'");
    seed_names.push_back(name);
  }

  RefineResult result;
  result.expansion = n_seen > 0 ? expand_seeds(seed_names, table, config.k) : std::vector<std::string>{};

  ClusterState& state = result.state;
  {
    std::size_t i = 0;
    for (const auto& [label, name] : supervision.seen_class_names) {
      Cluster c;
      c.id = cluster_id(i++);
      c.class_words = {name};
      c.pinned_seen_class = label;
      state.clusters.push_back(std::move(c));
    }
    for (const auto& w : result.expansion) {
      Cluster c;
      c.id = cluster_id(i++);
      c.class_words = {w};
      state.clusters.push_back(std::move(c));
    }
  }
  if (state.clusters.empty()) throw ValidationError("no initial class names");
  for (const auto& c : state.clusters) state.initial_class_names.push_back(c.class_words.front());
  recluster(ws, state, result, false);

  std::size_t top_t = 1;
  for (;;) {
    if (state.clusters.size() < std::max<std::size_t>(n_seen, 1)) {
      throw DegenerateError("only " + std::to_string(state.clusters.size()) + " live clusters for " +
                            std::to_string(n_seen) + " seen classes");
    }
    IterationRecord rec;
    rec.iteration = state.iteration;
    rec.top_t = top_t;
    rec.clusters_before = state.clusters.size();
    state.history.push_back(state.clusters.size());

    std::map<std::size_t, std::size_t> rep_of_doc;
    for (std::size_t i = 0; i < result.doc_reps.doc_index.size(); ++i) rep_of_doc[result.doc_reps.doc_index[i]] = i;

    // Candidate pool and ranking features.
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> rep_words;
    std::vector<std::vector<RepWordScore>> statistical;
    for (const auto& c : state.clusters) {
      const auto stats = cluster_doc_stats(corpus, c.members);
      auto ranked = top_representative_words(c.id, stats, corpus, stats.words.size());
      std::erase_if(ranked, [&](const RepWordScore& r) { return !table.contains(r.word); });
      std::vector<std::string> words;
      for (std::size_t k = 0; k < std::min(config.w, ranked.size()); ++k) words.push_back(ranked[k].word);
      if (words.empty()) words = c.class_words;
      ranked.resize(std::min(config.top_m, ranked.size()));
      ids.push_back(c.id);
      rep_words.push_back(std::move(words));
      statistical.push_back(std::move(ranked));
    }
    std::vector<std::string> expansion = seed_names;
    expansion.insert(expansion.end(), result.expansion.begin(), result.expansion.end());
    for (const auto& c : state.clusters) expansion.insert(expansion.end(), c.class_words.begin(), c.class_words.end());
    const auto candidates = merge_candidates(expansion, statistical, config.top_m, &table);

    MlpOptions mlp = config.mlp;
    mlp.seed = config.seed;
    result.last_model = train_rank_model(build_training_pairs(supervision, candidates, corpus, table, config.w), mlp);
    const auto scores = score_candidates(candidates, rep_words, ids, result.last_model, table);
    const auto ranking = indicativeness_table(scores, top_t);

    for (std::size_t c = 0; c < state.clusters.size(); ++c) {
      auto& cl = state.clusters[c];
      cl.selected_class_words = select_class_words(ranking[c], top_t, config.beta);
      cl.coherence = coherence(member_reps(cl, result.doc_reps, rep_of_doc));
    }

    // Clusters without any valid class-word go first; the rest are
    // deduplicated on overlapping selections.
    ClusterState contest;
    std::vector<std::string> dropped_empty;
    for (auto& c : state.clusters) {
      if (c.selected_class_words.empty() && !c.pinned_seen_class) {
        dropped_empty.push_back(c.id);
      } else {
        contest.clusters.push_back(c);
      }
    }
    if (contest.clusters.empty()) {
      // Never remove every cluster.
      contest.clusters.push_back(state.clusters.front());
      dropped_empty.erase(dropped_empty.begin());
    }
    contest = remove_overlapping(std::move(contest));
    std::set<std::string> removed(dropped_empty.begin(), dropped_empty.end());
    removed.insert(contest.removed_last_pass.begin(), contest.removed_last_pass.end());

    for (const auto& c : state.clusters) {
      rec.clusters.push_back({c.id, c.members.size(), c.selected_class_words, c.coherence,
                              c.pinned_seen_class.has_value(), removed.count(c.id) > 0});
    }
    state.removed_last_pass.assign(removed.begin(), removed.end());
    state.unassigned.clear();
    std::vector<Cluster> kept;
    for (auto& c : state.clusters) {
      if (removed.count(c.id)) {
        state.unassigned.insert(state.unassigned.end(), c.members.begin(), c.members.end());
      } else {
        kept.push_back(std::move(c));
      }
    }
    state.clusters = std::move(kept);
    rec.clusters_after = state.clusters.size();
    state.records.push_back(std::move(rec));

    if (removed.empty()) break;

    for (auto& c : state.clusters) {
      if (!c.selected_class_words.empty()) c.class_words = c.selected_class_words;
    }
    recluster(ws, state, result, true);
    top_t = std::min(top_t + 1, config.t_cap);
    ++state.iteration;
  }
  return result;
}

nlohmann::json history_json(const ClusterState& state) {
  nlohmann::json j;
  j["initial_class_names"] = state.initial_class_names;
  j["cluster_counts"] = state.history;
  j["final_cluster_count"] = state.clusters.size();
  j["iterations"] = nlohmann::json::array();
  for (const auto& rec : state.records) {
    nlohmann::json r;
    r["iteration"] = rec.iteration;
    r["top_t"] = rec.top_t;
    r["clusters_before"] = rec.clusters_before;
    r["clusters_after"] = rec.clusters_after;
    r["clusters"] = nlohmann::json::array();
    for (const auto& c : rec.clusters) {
      r["clusters"].push_back({{"id", c.id},
                               {"size", c.size},
                               {"class_words", c.selected_class_words},
                               {"coherence", c.coherence},
                               {"pinned", c.pinned},
                               {"removed", c.removed}});
    }
    j["iterations"].push_back(std::move(r));
  }
  return j;
}

}  // namespace wot
