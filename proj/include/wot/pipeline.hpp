#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wot/cluster.hpp"
#include "wot/evaluation.hpp"
#include "wot/refine.hpp"

namespace wot {

struct PipelineResult {
  RefineResult refinement;
  std::optional<FinalClassifier> classifier;
  Assignments pseudo_labels;
  Assignments predictions;  // every corpus document, in corpus order
  std::map<std::string, std::vector<std::string>> class_words;  // cluster id -> words
};

// Refinement, then a classifier trained on the final pseudo-labels.
// Documents that could not be represented go to the largest cluster.
PipelineResult run_pipeline(const Corpus& corpus, const Supervision& supervision, const EmbeddingTable& table,
                            const RefineConfig& config, const ClassifierOptions& classifier_options = {});

// predictions.tsv, pseudo_labels.tsv, class_words.json, history.json and
// rank_model.json under `dir`.
void write_run_outputs(const PipelineResult& result, const std::filesystem::path& dir);

// Gold labels of every labeled corpus document, minus `exclude`.
std::map<std::string, std::string> gold_labels(const Corpus& corpus, const std::set<std::string>& exclude = {});

}  // namespace wot
