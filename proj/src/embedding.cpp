#include "wot/embedding.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "wot/random.hpp"

namespace wot {

void EmbeddingTable::add(const std::string& word, Vector vector) {
  if (static_cast<std::size_t>(vector.size()) != dim_) {
    throw ValidationError("vector for '" + word + "' has dimension " + std::to_string(vector.size()) +
                          ", expected " + std::to_string(dim_));
  }
  if (!vector.allFinite()) throw ValidationError("vector for '" + word + "' has non-finite entries");
  if (vector.norm() == 0.0) throw ValidationError("vector for '" + word + "' has zero norm");
  if (!index_.emplace(word, words_.size()).second) {
    throw ValidationError("duplicate word '" + word + "' in embedding table");
  }
  words_.push_back(word);
  vectors_.push_back(std::move(vector));
}

const Vector* EmbeddingTable::find(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

const Vector& EmbeddingTable::at(const std::string& word) const {
  const auto* v = find(word);
  if (!v) throw ValidationError("word '" + word + "' not in embedding table");
  return *v;
}

EmbeddingTable average_contextual(const std::vector<std::pair<std::string, Vector>>& occurrences) {
  if (occurrences.empty()) throw ValidationError("empty occurrence stream");
  const auto dim = static_cast<std::size_t>(occurrences.front().second.size());
  std::map<std::string, std::vector<const Vector*>> by_word;
  for (const auto& [word, v] : occurrences) {
    if (static_cast<std::size_t>(v.size()) != dim) {
      throw ValidationError("occurrence of '" + word + "' has dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim));
    }
    by_word[word].push_back(&v);
  }
  EmbeddingTable table(dim, EmbeddingSource::imported);
  for (auto& [word, vs] : by_word) {
    std::sort(vs.begin(), vs.end(), [](const Vector* a, const Vector* b) {
      return std::lexicographical_compare(a->data(), a->data() + a->size(), b->data(),
                                          b->data() + b->size());
    });
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto* v : vs) sum += *v;
    table.add(word, sum / static_cast<double>(vs.size()));
  }
  return table;
}

namespace {

// Thin Q factor of a tall matrix.
Matrix orthonormalize(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

}  // namespace

EmbeddingTable fallback_embeddings(const Corpus& corpus, const FallbackOptions& options) {
  if (options.dim == 0) throw ValidationError("embedding dimension must be positive");
  if (options.window == 0) throw ValidationError("window must be positive");

  std::vector<std::pair<std::string, std::size_t>> by_count;
  for (const auto& [word, e] : corpus.vocab()) by_count.emplace_back(word, e.total_count);
  std::stable_sort(by_count.begin(), by_count.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (by_count.size() > options.max_vocab) by_count.resize(options.max_vocab);
  const auto n = by_count.size();
  if (n < options.dim) {
    throw ValidationError("vocabulary of " + std::to_string(n) + " words is smaller than dim " +
                          std::to_string(options.dim) + "; use a lower dimension");
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(by_count[i].first, static_cast<int>(i));

  // Key: row * n + col.
  std::unordered_map<std::uint64_t, double> counts;
  const auto key_of = [n](int r, int c) {
    return static_cast<std::uint64_t>(r) * n + static_cast<std::uint64_t>(c);
  };
  for (const auto& doc : corpus.documents()) {
    std::vector<int> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) {
      auto it = index.find(t);
      ids.push_back(it == index.end() ? -1 : it->second);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0) continue;
      const auto hi = std::min(ids.size(), i + options.window + 1);
      for (std::size_t j = i + 1; j < hi; ++j) {
        if (ids[j] < 0) continue;
        counts[key_of(ids[i], ids[j])] += 1.0;
        counts[key_of(ids[j], ids[i])] += 1.0;
      }
    }
  }
  std::vector<std::pair<std::uint64_t, double>> cells(counts.begin(), counts.end());
  std::sort(cells.begin(), cells.end());
  std::vector<double> marginal(n, 0.0);
  double total = 0.0;
  for (const auto& [key, c] : cells) {
    marginal[key / n] += c;
    total += c;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& [key, c] : cells) {
    const auto r = key / n, col = key % n;
    const double pmi = std::log(c * total / (marginal[r] * marginal[col]));
    if (pmi > 0.0) triplets.emplace_back(static_cast<int>(r), static_cast<int>(col), pmi);
  }
  const auto en = static_cast<Eigen::Index>(n);
  Eigen::SparseMatrix<double> ppmi(en, en);
  ppmi.setFromTriplets(triplets.begin(), triplets.end());

  // PPMI is symmetric, so its truncated SVD comes from the eigenpairs of
  // largest magnitude. Randomized subspace iteration finds them.
  const auto width = static_cast<Eigen::Index>(std::min(n, options.dim + options.oversample));
  std::mt19937_64 rng(options.seed);
  Matrix omega(en, width);
  for (Eigen::Index c = 0; c < width; ++c) {
    for (Eigen::Index r = 0; r < en; ++r) omega(r, c) = standard_normal(rng);
  }
  Matrix q = orthonormalize(ppmi * omega);
  for (std::size_t it = 0; it < options.power_iterations; ++it) q = orthonormalize(ppmi * q);
  const Matrix small = q.transpose() * (ppmi * q);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (small + small.transpose()));
  const Vector& lambda = eig.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(width));
  for (Eigen::Index i = 0; i < width; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(lambda(a)) > std::abs(lambda(b));
  });
  const auto dim = static_cast<Eigen::Index>(options.dim);
  Matrix rows(en, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    Vector u = q * eig.eigenvectors().col(src);
    Eigen::Index pivot;
    u.cwiseAbs().maxCoeff(&pivot);
    if (u(pivot) < 0) u = -u;
    rows.col(k) = u * std::sqrt(std::abs(lambda(src)));
  }

  EmbeddingTable table(options.dim, EmbeddingSource::fallback);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = rows.row(static_cast<Eigen::Index>(i)).transpose();
    const double norm = v.norm();
    if (!(norm > 1e-12)) {
      ++dropped;
      continue;
    }
    table.add(by_count[i].first, v / norm);
  }
  if (dropped > 0) {
    warn(std::to_string(dropped) + " words without positive co-occurrence left out of the fallback table");
  }
  return table;
}

EmbeddingTable fallback_embeddings(const Corpus& corpus, std::size_t dim, std::size_t window,
                                   std::uint64_t seed) {
  FallbackOptions options;
  options.dim = dim;
  options.window = window;
  options.seed = seed;
  return fallback_embeddings(corpus, options);
}

namespace {

constexpr const char* kMagic = "WOTEMB1";

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
  }
  return x;
}

}  // namespace

void write_embedding_table(const EmbeddingTable& table, std::ostream& out) {
  out << kMagic << ' ' << table.dim() << ' ' << table.size() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i] << ' ';
    const auto& v = table.vector(i);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v(k))));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing embedding table");
}

EmbeddingTable read_embedding_table(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing embedding header", 1);
  std::istringstream hs(header);
  std::string magic;
  long long dim = -1, count = -1;
  hs >> magic >> dim >> count;
  if (magic != kMagic || dim <= 0 || count < 0) {
    throw ParseError("bad embedding header '" + header + "'", 1);
  }
  EmbeddingTable table(static_cast<std::size_t>(dim), EmbeddingSource::imported);
  for (long long r = 0; r < count; ++r) {
    const auto record = static_cast<std::size_t>(r + 2);
    std::string word;
    char c;
    while (in.get(c) && c != ' ') {
      if (c == '\n' && word.empty()) continue;
      word.push_back(c);
    }
    if (!in || word.empty()) throw ParseError("truncated embedding record", record);
    Vector v(dim);
    for (long long k = 0; k < dim; ++k) {
      std::uint32_t bits;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw ParseError("truncated vector for '" + word + "'", record);
      }
      v(k) = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
    }
    if (in.peek() == '\n') in.get();
    try {
      table.add(word, std::move(v));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), record);
    }
  }
  return table;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());
  return read_embedding_table(in);
}

void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embedding file " + path.string());
  write_embedding_table(table, out);
}

double cosine(const Vector& a, const Vector& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(a.dot(b) / denom, -1.0, 1.0);
}

ClassRep class_representation(const std::string& class_id, const std::vector<std::string>& class_words,
                              const EmbeddingTable& table) {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
  std::size_t used = 0;
  for (const auto& w : class_words) {
    const auto* v = table.find(w);
    if (!v) {
      warn("class-word '" + w + "' of class " + class_id + " is out of vocabulary; skipped");
      continue;
    }
    sum += *v;
    ++used;
  }
  if (used == 0) throw ValidationError("no class-word of class " + class_id + " is in the embedding table");
  sum /= static_cast<double>(used);
  const double norm = sum.norm();
  if (norm == 0.0) throw DegenerateError("class-words of class " + class_id + " cancel out");
  return {class_id, sum / norm};
}

DocRep document_representation(const Document& doc, const EmbeddingTable& table,
                                std::span<const ClassRep> class_reps, double tau) {
  if (!(tau > 0.0)) throw ValidationError("temperature must be positive");
  std::vector<const Vector*> vecs;
  std::vector<double> logits;
  for (const auto& tok : doc.tokens) {
    const auto* v = table.find(tok);
    if (!v) continue;
    double best = 0.0;
    if (!class_reps.empty()) {
      best = -1.0;
      for (const auto& c : class_reps) best = std::max(best, cosine(*v, c.vector));
    }
    vecs.push_back(v);
    logits.push_back(best / tau);
  }
  if (vecs.empty()) throw DegenerateError("document '" + doc.id + "' has no in-vocabulary tokens");
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < vecs.size(); ++i) sum += std::exp(logits[i] - top) * *vecs[i];
  const double norm = sum.norm();
  if (!(norm > 0.0)) throw DegenerateError("document '" + doc.id + "' representation has zero norm");
  return {doc.id, sum / norm};
}

DocRepBatch document_representations(const Corpus& corpus, const EmbeddingTable& table,
                                     std::span<const ClassRep> class_reps, double tau) {
  if (!(tau > 0.0)) throw ValidationError("temperature must be positive");
  std::unordered_map<std::string, double> logit_cache;
  auto logit_of = [&](const std::string& word, const Vector& v) {
    auto it = logit_cache.find(word);
    if (it != logit_cache.end()) return it->second;
    double best = 0.0;
    if (!class_reps.empty()) {
      best = -1.0;
      for (const auto& c : class_reps) best = std::max(best, cosine(v, c.vector));
    }
    return logit_cache.emplace(word, best / tau).first->second;
  };

  DocRepBatch batch;
  std::vector<const Vector*> vecs;
  std::vector<double> logits;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    const auto& doc = corpus.document(d);
    vecs.clear();
    logits.clear();
    for (const auto& tok : doc.tokens) {
      const auto* v = table.find(tok);
      if (!v) continue;
      vecs.push_back(v);
      logits.push_back(logit_of(tok, *v));
    }
    if (vecs.empty()) {
      batch.excluded.push_back(doc.id);
      continue;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
    for (std::size_t i = 0; i < vecs.size(); ++i) sum += std::exp(logits[i] - top) * *vecs[i];
    const double norm = sum.norm();
    if (!(norm > 0.0)) {
      batch.excluded.push_back(doc.id);
      continue;
    }
    batch.reps.push_back({doc.id, sum / norm});
    batch.doc_index.push_back(d);
  }
  if (!batch.excluded.empty()) {
    warn(std::to_string(batch.excluded.size()) + " documents have no in-vocabulary tokens and are not clustered");
  }
  return batch;
}

}  // namespace wot
