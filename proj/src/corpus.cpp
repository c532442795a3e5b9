#include "wot/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "wot/common.hpp"
#include "wot/random.hpp"
#include "wot/text.hpp"

namespace wot {

using nlohmann::json;

Corpus::Corpus(std::vector<Document> documents) {
  documents_.reserve(documents.size());
  for (auto& doc : documents) {
    if (doc.tokens.empty()) {
      warn("document '" + doc.id + "' has no tokens; dropped");
      continue;
    }
    if (!id_index_.emplace(doc.id, documents_.size()).second) {
      throw ValidationError("duplicate document id '" + doc.id + "'");
    }
    std::set<std::string_view> seen;
    for (const auto& tok : doc.tokens) {
      auto& e = vocab_[tok];
      ++e.total_count;
      if (seen.insert(tok).second) ++e.doc_freq;
    }
    documents_.push_back(std::move(doc));
  }
}

const VocabEntry* Corpus::entry(const std::string& word) const {
  auto it = vocab_.find(word);
  return it == vocab_.end() ? nullptr : &it->second;
}

std::size_t Corpus::doc_freq(const std::string& word) const {
  const auto* e = entry(word);
  return e ? e->doc_freq : 0;
}

std::optional<std::size_t> Corpus::index_of(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

bool Corpus::fully_labeled() const {
  return std::all_of(documents_.begin(), documents_.end(),
                     [](const Document& d) { return d.gold_label.has_value(); });
}

std::map<std::string, std::size_t> Corpus::class_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : documents_) {
    if (d.gold_label) ++counts[*d.gold_label];
  }
  return counts;
}

Corpus parse_corpus_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON record: ") + e.what(), line_no);
    }
    if (!record.is_object() || !record.contains("id") || !record.contains("text") ||
        !record["id"].is_string() || !record["text"].is_string()) {
      throw ParseError("record needs string fields 'id' and 'text'", line_no);
    }
    Document doc;
    doc.id = record["id"].get<std::string>();
    doc.raw_text = record["text"].get<std::string>();
    if (record.contains("label") && !record["label"].is_null()) {
      if (!record["label"].is_string()) throw ParseError("'label' must be a string", line_no);
      doc.gold_label = record["label"].get<std::string>();
    }
    doc.tokens = tokenize(doc.raw_text);
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw ValidationError("empty corpus");
  Corpus corpus(std::move(docs));
  if (corpus.num_docs() == 0) throw ValidationError("empty corpus: no document has tokens");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return parse_corpus_jsonl(in);
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus.documents()) {
    json record = {{"id", d.id}, {"text", d.raw_text}};
    if (d.gold_label) record["label"] = *d.gold_label;
    out << record.dump() << '\n';
  }
}

std::vector<std::string> Supervision::seen_labels() const {
  std::vector<std::string> labels;
  for (const auto& [label, name] : seen_class_names) labels.push_back(label);
  return labels;
}

void Supervision::validate(const Corpus& corpus) const {
  for (const auto& [label, name] : seen_class_names) {
    auto toks = tokenize(name);
    if (toks.size() != 1 || toks[0] != name) {
      throw ValidationError("class name '" + name + "' is not a single normalized word");
    }
    auto it = labeled_examples.find(label);
    if (it == labeled_examples.end()) {
      throw ValidationError("seen class '" + label + "' has no labeled examples");
    }
    if (it->second.size() != shots_per_class) {
      throw ValidationError("seen class '" + label + "' has " + std::to_string(it->second.size()) +
                            " examples, expected " + std::to_string(shots_per_class));
    }
  }
  for (const auto& [label, ids] : labeled_examples) {
    if (!seen_class_names.count(label)) {
      throw ValidationError("labeled examples for unknown seen class '" + label + "'");
    }
    for (const auto& id : ids) {
      if (!corpus.index_of(id)) throw ValidationError("labeled document '" + id + "' not in corpus");
    }
  }
}

Supervision parse_supervision_json(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed supervision JSON: ") + e.what(), 1);
  }
  Supervision s;
  try {
    s.seen_class_names = j.at("seen_class_names").get<std::map<std::string, std::string>>();
    s.labeled_examples =
        j.at("labeled_examples").get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("shots_per_class")) {
      s.shots_per_class = j["shots_per_class"].get<std::size_t>();
    } else if (!s.labeled_examples.empty()) {
      s.shots_per_class = s.labeled_examples.begin()->second.size();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid supervision file: ") + e.what());
  }
  return s;
}

Supervision load_supervision(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open supervision file " + path.string());
  return parse_supervision_json(in);
}

void write_supervision_json(const Supervision& s, std::ostream& out) {
  json j = {{"seen_class_names", s.seen_class_names},
            {"labeled_examples", s.labeled_examples},
            {"shots_per_class", s.shots_per_class}};
  out << j.dump(2) << '\n';
}

std::string class_name_for_label(const std::string& label) {
  auto toks = tokenize(label);
  if (toks.size() != 1) {
    throw ValidationError("class label '" + label + "' does not normalize to a single word");
  }
  return toks[0];
}

namespace {

std::vector<std::pair<std::string, std::size_t>> classes_by_frequency(const Corpus& corpus) {
  auto counts = corpus.class_counts();
  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return order;
}

std::map<std::string, std::vector<std::size_t>> docs_by_label(const Corpus& corpus) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < corpus.num_docs(); ++i) {
    by_label[*corpus.document(i).gold_label].push_back(i);
  }
  return by_label;
}

// First k entries of a seeded Fisher-Yates permutation, returned in
// original order.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                    std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

Supervision make_open_world_split(const Corpus& corpus, double seen_fraction, std::size_t shots,
                                  std::uint64_t seed) {
  if (!corpus.fully_labeled()) throw ValidationError("open-world split needs a fully labeled corpus");
  if (!(seen_fraction > 0.0 && seen_fraction <= 1.0)) {
    throw ValidationError("seen fraction must lie in (0, 1]");
  }
  if (shots == 0) throw ValidationError("shots must be positive");
  const auto order = classes_by_frequency(corpus);
  const auto n_seen = std::min<std::size_t>(
      order.size(),
      static_cast<std::size_t>(std::ceil(seen_fraction * static_cast<double>(order.size()) - 1e-9)));
  const auto by_label = docs_by_label(corpus);

  Supervision s;
  s.shots_per_class = shots;
  std::mt19937_64 rng(seed);
  std::vector<std::string> seen;
  for (std::size_t k = 0; k < n_seen; ++k) seen.push_back(order[k].first);
  std::sort(seen.begin(), seen.end());
  for (const auto& label : seen) {
    const auto& pool = by_label.at(label);
    if (pool.size() < shots) {
      throw ValidationError("seen class '" + label + "' has " + std::to_string(pool.size()) +
                            " documents, fewer than " + std::to_string(shots) + " shots");
    }
    s.seen_class_names[label] = class_name_for_label(label);
    auto& ids = s.labeled_examples[label];
    for (auto idx : sample_without_replacement(pool, shots, rng)) {
      ids.push_back(corpus.document(idx).id);
    }
  }
  return s;
}

std::vector<std::string> imbalance_class_order(const Corpus& corpus, std::uint64_t class_order_seed) {
  std::vector<std::string> labels;
  for (const auto& [label, n] : corpus.class_counts()) labels.push_back(label);
  std::mt19937_64 rng(class_order_seed);
  shuffle_in_place(labels, rng);
  return labels;
}

std::size_t retained_count(std::size_t original, std::size_t position, double delta) {
  const double kept = (1.0 - static_cast<double>(position) * delta) * static_cast<double>(original);
  if (kept <= 0.0) return 0;
  return static_cast<std::size_t>(std::floor(kept + 1e-9 * std::max(1.0, kept)));
}

Corpus make_imbalanced(const Corpus& corpus, double delta, std::uint64_t class_order_seed) {
  if (!corpus.fully_labeled()) throw ValidationError("imbalance construction needs a fully labeled corpus");
  if (delta < 0.0) throw ValidationError("delta must be non-negative");
  if (delta == 0.0) return corpus;
  const auto order = imbalance_class_order(corpus, class_order_seed);
  const auto by_label = docs_by_label(corpus);
  if (static_cast<double>(order.size() - 1) * delta >= 1.0) {
    throw ValidationError("delta too large: the last class would retain no documents");
  }
  std::mt19937_64 rng(class_order_seed);
  std::vector<bool> keep(corpus.num_docs(), false);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pool = by_label.at(order[k]);
    const auto n = retained_count(pool.size(), k, delta);
    if (n == 0) throw ValidationError("delta too large: class '" + order[k] + "' retains no documents");
    for (auto idx : sample_without_replacement(pool, n, rng)) keep[idx] = true;
  }
  std::vector<Document> kept;
  for (std::size_t i = 0; i < corpus.num_docs(); ++i) {
    if (keep[i]) kept.push_back(corpus.document(i));
  }
  return Corpus(std::move(kept));
}

}  // namespace wot
