#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wot/common.hpp"
#include "wot/corpus.hpp"

namespace wot {

enum class EmbeddingSource { imported, fallback };

// Static word vectors. Every stored vector has exactly dim() finite
// entries and non-zero norm; the table is immutable once built.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, EmbeddingSource source) : dim_(dim), source_(source) {}

  void add(const std::string& word, Vector vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  EmbeddingSource source() const { return source_; }
  bool contains(const std::string& word) const { return index_.count(word) > 0; }
  const Vector* find(const std::string& word) const;
  const Vector& at(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  const Vector& vector(std::size_t index) const { return vectors_[index]; }

 private:
  std::size_t dim_;
  EmbeddingSource source_;
  std::vector<std::string> words_;
  std::vector<Vector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Mean of all occurrence vectors per word. Occurrences are summed in a
// canonical order so the result does not depend on stream order.
EmbeddingTable average_contextual(const std::vector<std::pair<std::string, Vector>>& occurrences);

struct FallbackOptions {
  std::size_t dim = 64;
  std::size_t window = 5;
  std::uint64_t seed = 0;
  // Only the most frequent words get vectors.
  std::size_t max_vocab = 20000;
  std::size_t oversample = 16;
  std::size_t power_iterations = 6;
};

// Symmetric-window PPMI co-occurrence matrix reduced by seeded randomized
// truncated SVD; rows are scaled by sqrt(singular value) and L2-normalized.
EmbeddingTable fallback_embeddings(const Corpus& corpus, const FallbackOptions& options);
EmbeddingTable fallback_embeddings(const Corpus& corpus, std::size_t dim, std::size_t window,
                                   std::uint64_t seed);

// Binary table format: "WOTEMB1 <dim> <vocab_size>\n", then per word the
// UTF-8 word, one space, dim little-endian float32 values and "\n".
void write_embedding_table(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable read_embedding_table(std::istream& in);
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path);

struct ClassRep {
  std::string class_id;
  Vector vector;
};

struct DocRep {
  std::string doc_id;
  Vector vector;
};

double cosine(const Vector& a, const Vector& b);

// Unit-normalized mean of the in-vocabulary class-words.
ClassRep class_representation(const std::string& class_id, const std::vector<std::string>& class_words,
                              const EmbeddingTable& table);

inline constexpr double kDefaultDocTemperature = 0.2;

// Class-attentive pooling: token weights are a softmax over tokens of
// max_c cos(token, class_c) / tau. With no class reps the weights are
// uniform. Throws DegenerateError when no token is in the table.
DocRep document_representation(const Document& doc, const EmbeddingTable& table,
                                std::span<const ClassRep> class_reps,
                                double tau = kDefaultDocTemperature);

struct DocRepBatch {
  std::vector<DocRep> reps;
  std::vector<std::size_t> doc_index;  // corpus index of reps[i]
  std::vector<std::string> excluded;   // documents without in-vocabulary tokens
};

// document_representation over a whole corpus, caching per-word logits.
DocRepBatch document_representations(const Corpus& corpus, const EmbeddingTable& table,
                                     std::span<const ClassRep> class_reps,
                                     double tau = kDefaultDocTemperature);

}  // namespace wot
