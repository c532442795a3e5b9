#include "wot/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "wot/common.hpp"

namespace wot {

PipelineResult run_pipeline(const Corpus& corpus, const Supervision& supervision, const EmbeddingTable& table,
                            const RefineConfig& config, const ClassifierOptions& classifier_options) {
  PipelineResult out;
  out.refinement = run_refinement(corpus, supervision, table, config);
  const auto& ref = out.refinement;
  for (const auto& c : ref.state.clusters) {
    out.class_words[c.id] = c.selected_class_words.empty() ? c.class_words : c.selected_class_words;
  }
  for (const auto& l : ref.clustering.labels) out.pseudo_labels.emplace_back(l.doc_id, l.cluster_id);

  std::map<std::string, std::string> by_doc;
  std::set<std::string> distinct;
  for (const auto& l : ref.clustering.labels) distinct.insert(l.cluster_id);
  if (distinct.size() >= 2) {
    ClassifierOptions opts = classifier_options;
    opts.seed = config.seed;
    out.classifier = train_final_classifier(ref.doc_reps.reps, ref.clustering.labels, opts);
    for (const auto& [doc, cls] : predict(*out.classifier, ref.doc_reps.reps)) by_doc[doc] = cls;
  } else {
    for (const auto& [doc, cls] : out.pseudo_labels) by_doc[doc] = cls;
  }

  std::string largest;
  std::size_t largest_size = 0;
  for (const auto& c : ref.state.clusters) {
    if (c.members.size() > largest_size) {
      largest_size = c.members.size();
      largest = c.id;
    }
  }
  for (const auto& doc : corpus.documents()) {
    auto it = by_doc.find(doc.id);
    out.predictions.emplace_back(doc.id, it != by_doc.end() ? it->second : largest);
  }
  return out;
}

void write_run_outputs(const PipelineResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("predictions.tsv");
    write_assignments_tsv(result.predictions, f);
  }
  {
    auto f = open("pseudo_labels.tsv");
    write_assignments_tsv(result.pseudo_labels, f);
  }
  {
    auto f = open("class_words.json");
    f << nlohmann::json(result.class_words).dump(2) << '\n';
  }
  {
    auto f = open("history.json");
    f << history_json(result.refinement.state).dump(2) << '\n';
  }
  {
    auto f = open("rank_model.json");
    f << result.refinement.last_model.to_json().dump(2) << '\n';
  }
}

std::map<std::string, std::string> gold_labels(const Corpus& corpus, const std::set<std::string>& exclude) {
  std::map<std::string, std::string> gold;
  for (const auto& d : corpus.documents()) {
    if (d.gold_label && !exclude.count(d.id)) gold[d.id] = *d.gold_label;
  }
  return gold;
}

}  // namespace wot
