#include "mmax/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mmax/errors.hpp"

namespace mmax {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_count(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string stem_of(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace

std::string normalize_word(std::string_view word) {
  std::string out(word);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::string name, std::size_t dim, std::string source_path)
    : name_(std::move(name)), dim_(dim), source_path_(std::move(source_path)) {
  if (dim_ == 0) throw DataError("embedding table '" + name_ + "' has dimension 0");
}

bool EmbeddingTable::add(std::string_view word, std::span<const double> vec) {
  require_same_length(vec.size(), dim_, "EmbeddingTable::add");
  std::string key = normalize_word(word);
  if (index_.contains(key)) return false;
  index_.emplace(key, words_.size());
  words_.push_back(std::move(key));
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

bool EmbeddingTable::contains(std::string_view normalized_word) const {
  return index_.find(std::string(normalized_word)) != index_.end();
}

std::span<const double> EmbeddingTable::find(std::string_view normalized_word) const {
  auto it = index_.find(std::string(normalized_word));
  if (it == index_.end()) return {};
  return {data_.data() + it->second * dim_, dim_};
}

std::uint64_t EmbeddingTable::content_hash() const {
  std::uint64_t h = fnv1a(name_);
  h = fnv1a(std::to_string(dim_), h);
  for (const auto& w : words_) h = fnv1a(std::string_view(w.data(), w.size() + 1), h);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(data_.data()), data_.size() * sizeof(double)), h);
  return h;
}

EmbeddingTable load_table(const std::string& path, std::optional<std::size_t> expected_dim, std::string name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  if (name.empty()) name = stem_of(path);

  std::optional<EmbeddingTable> table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t duplicates = 0;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, dim = 0;
      if (parse_count(fields[0], count) && parse_count(fields[1], dim)) {
        if (expected_dim && dim != *expected_dim) {
          throw DataError(path + ":1: header declares dim " + std::to_string(dim) + ", expected " +
                          std::to_string(*expected_dim));
        }
        table.emplace(name, dim, path);
        continue;
      }
    }
    const std::size_t dim = fields.size() - 1;
    if (dim == 0) throw DataError(path + ":" + std::to_string(line_no) + ": word without vector");
    if (!table) {
      if (expected_dim && dim != *expected_dim) {
        throw DataError(path + ":" + std::to_string(line_no) + ": vector has " + std::to_string(dim) +
                        " values, expected " + std::to_string(*expected_dim));
      }
      table.emplace(name, dim, path);
    }
    if (dim != table->dim()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": vector has " + std::to_string(dim) +
                      " values, expected " + std::to_string(table->dim()));
    }
    vec.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i])) {
        throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field '" +
                        std::string(fields[i + 1]) + "'");
      }
    }
    if (!table->add(fields[0], vec)) ++duplicates;
  }
  if (in.bad()) throw DataError("read error in '" + path + "'");
  if (!table) throw DataError("embedding file '" + path + "' has no vectors");
  if (duplicates > 0) {
    std::cerr << "warning: " << path << ": " << duplicates << " duplicate word(s), kept first occurrence\n";
  }
  return std::move(*table);
}

FusedLexicon::FusedLexicon(std::vector<EmbeddingTable> tables, double oov_scale, std::uint64_t seed)
    : tables_(std::move(tables)), oov_scale_(oov_scale), oov_stream_(Rng::stream(seed, "oov")) {
  if (tables_.empty()) throw ConfigError("fused lexicon needs at least one embedding table");
  if (!(oov_scale_ >= 0.0) || !std::isfinite(oov_scale_)) {
    throw ConfigError("oov_scale must be a finite nonnegative number");
  }
  for (const auto& t : tables_) total_dim_ += t.dim();
}

std::vector<std::size_t> FusedLexicon::dims() const {
  std::vector<std::size_t> out;
  for (const auto& t : tables_) out.push_back(t.dim());
  return out;
}

Vector FusedLexicon::compute(const std::string& word) const {
  Vector out;
  out.reserve(total_dim_);
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    auto found = tables_[k].find(word);
    if (!found.empty()) {
      out.insert(out.end(), found.begin(), found.end());
      continue;
    }
    Rng fill = oov_stream_.fork(std::to_string(k) + '\0' + word);
    for (std::size_t i = 0; i < tables_[k].dim(); ++i) out.push_back(fill.uniform(-oov_scale_, oov_scale_));
  }
  return out;
}

const Vector& FusedLexicon::lookup(std::string_view word) const {
  std::string key = normalize_word(word);
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    Vector v = compute(key);
    it = cache_.emplace(std::move(key), std::move(v)).first;
  }
  return it->second;
}

CoverageReport FusedLexicon::coverage(const std::set<std::string>& vocab) const {
  if (vocab.empty()) throw DataError("coverage needs a nonempty vocabulary");
  CoverageReport report;
  report.vocab_size = vocab.size();
  std::vector<std::size_t> hits(tables_.size(), 0);
  std::size_t union_hits = 0;
  for (const auto& raw : vocab) {
    const std::string w = normalize_word(raw);
    bool any = false;
    for (std::size_t k = 0; k < tables_.size(); ++k) {
      if (tables_[k].contains(w)) {
        ++hits[k];
        any = true;
      }
    }
    if (any) ++union_hits;
  }
  const double n = static_cast<double>(vocab.size());
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    report.table_names.push_back(tables_[k].name());
    report.per_table.push_back(static_cast<double>(hits[k]) / n);
  }
  report.union_fraction = static_cast<double>(union_hits) / n;
  return report;
}

std::uint64_t FusedLexicon::content_hash() const {
  std::uint64_t h = fnv1a("lexicon");
  for (const auto& t : tables_) {
    const std::uint64_t th = t.content_hash();
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&th), sizeof th), h);
  }
  return h;
}

}  // namespace mmax
