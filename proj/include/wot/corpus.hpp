#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace wot {

struct Document {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;
  std::optional<std::string> gold_label;
};

struct VocabEntry {
  std::size_t total_count = 0;
  std::size_t doc_freq = 0;
};

// Immutable tokenized document collection with vocabulary statistics.
// Construction validates id uniqueness; documents without tokens are
// dropped with a warning.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t index) const { return documents_.at(index); }
  std::size_t num_docs() const { return documents_.size(); }
  const std::map<std::string, VocabEntry>& vocab() const { return vocab_; }

  const VocabEntry* entry(const std::string& word) const;
  std::size_t doc_freq(const std::string& word) const;
  std::optional<std::size_t> index_of(const std::string& id) const;

  bool fully_labeled() const;
  // Document count per gold label.
  std::map<std::string, std::size_t> class_counts() const;

 private:
  std::vector<Document> documents_;
  std::map<std::string, VocabEntry> vocab_;
  std::unordered_map<std::string, std::size_t> id_index_;
};

// Parses JSON-lines records {"id", "text", "label"?}.
Corpus parse_corpus_jsonl(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

struct Supervision {
  // gold label -> class-name word
  std::map<std::string, std::string> seen_class_names;
  // gold label -> labeled document ids
  std::map<std::string, std::vector<std::string>> labeled_examples;
  std::size_t shots_per_class = 0;

  std::vector<std::string> seen_labels() const;
  // Throws ValidationError when an id is unknown, a class has the wrong
  // number of shots, or a name is not a single token.
  void validate(const Corpus& corpus) const;
};

Supervision parse_supervision_json(std::istream& in);
Supervision load_supervision(const std::filesystem::path& path);
void write_supervision_json(const Supervision& supervision, std::ostream& out);

// Maps a gold label onto its class-name word; the label must tokenize to
// exactly one token.
std::string class_name_for_label(const std::string& label);

// Seen classes are the ceil(seen_fraction * C) most frequent classes
// (frequency ties broken by label), each receiving `shots` seeded samples.
Supervision make_open_world_split(const Corpus& corpus, double seen_fraction, std::size_t shots,
                                  std::uint64_t seed);

// Seeded random order of the labels used by make_imbalanced.
std::vector<std::string> imbalance_class_order(const Corpus& corpus, std::uint64_t class_order_seed);
// floor((1 - position * delta) * original), robust to decimal deltas.
std::size_t retained_count(std::size_t original, std::size_t position, double delta);

// Class at position k of the seeded order keeps retained_count(n, k, delta)
// documents, sampled without replacement.
Corpus make_imbalanced(const Corpus& corpus, double delta, std::uint64_t class_order_seed);

}  // namespace wot
