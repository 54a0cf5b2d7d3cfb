#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmax/matrix.hpp"
#include "mmax/rng.hpp"

namespace mmax {

// ASCII lowercase; bytes outside ASCII pass through unchanged.
std::string normalize_word(std::string_view word);

// One pre-trained word-vector table. Immutable once loaded.
class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, std::size_t dim, std::string source_path = {});

  // Adds a normalized word. Returns false (and keeps the old vector) for a duplicate.
  bool add(std::string_view word, std::span<const double> vec);

  const std::string& name() const { return name_; }
  const std::string& source_path() const { return source_path_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view normalized_word) const;
  // nullopt-like empty span when absent.
  std::span<const double> find(std::string_view normalized_word) const;
  const std::vector<std::string>& words() const { return words_; }

  // FNV-1a over name, dim, words and raw vector bytes.
  std::uint64_t content_hash() const;

 private:
  std::string name_;
  std::size_t dim_;
  std::string source_path_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads the word-vector text format: optional "count dim" header line, then
// "word v1 ... v_dim" per line. Errors name the offending line number.
EmbeddingTable load_table(const std::string& path, std::optional<std::size_t> expected_dim = std::nullopt,
                          std::string name = {});

struct CoverageReport {
  std::vector<std::string> table_names;
  std::vector<double> per_table;  // fraction of vocab present in each table
  double union_fraction = 0.0;    // fraction present in at least one table
  std::size_t vocab_size = 0;
};

// K tables viewed as one lookup returning the concatenation e^1 ⊕ ... ⊕ e^K.
// A word missing from table k gets a uniform [-oov_scale, oov_scale] slice
// drawn from a stream keyed by (seed, k, word), so the fill is the same
// regardless of lookup order or process.
class FusedLexicon {
 public:
  FusedLexicon(std::vector<EmbeddingTable> tables, double oov_scale, std::uint64_t seed);

  FusedLexicon(const FusedLexicon&) = delete;
  FusedLexicon& operator=(const FusedLexicon&) = delete;
  FusedLexicon(FusedLexicon&&) = delete;

  std::size_t total_dim() const { return total_dim_; }
  std::size_t table_count() const { return tables_.size(); }
  const std::vector<EmbeddingTable>& tables() const { return tables_; }
  std::vector<std::size_t> dims() const;
  double oov_scale() const { return oov_scale_; }

  // Concatenated vector for w (normalized first). The reference stays valid
  // for the lexicon's lifetime.
  const Vector& lookup(std::string_view word) const;

  CoverageReport coverage(const std::set<std::string>& vocab) const;

  std::uint64_t content_hash() const;

 private:
  Vector compute(const std::string& word) const;

  std::vector<EmbeddingTable> tables_;
  std::size_t total_dim_ = 0;
  double oov_scale_;
  Rng oov_stream_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, Vector> cache_;
};

}  // namespace mmax
