#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmax/model_dims.hpp"

namespace mmax {

struct SentencePairExample {
  std::vector<std::string> tokens1;
  std::vector<std::string> tokens2;
  std::optional<double> gold_score;       // sts
  std::optional<std::size_t> gold_label;  // entailment / paraphrase
};

struct PairDataset {
  Task task = Task::Sts;
  std::vector<SentencePairExample> examples;
  std::vector<std::string> label_names;  // empty for sts
  std::set<std::string> vocab;
};

// Canonical label order: entailment/contradiction/neutral -> 0/1/2; paraphrase "0"/"1".
const std::vector<std::string>& label_names(Task task);
std::size_t class_count(Task task, std::size_t score_k);

// Lowercases, splits on whitespace, and peels leading/trailing ASCII
// punctuation off each chunk as one-character tokens ("mary." -> mary .).
std::vector<std::string> tokenize(std::string_view text);

// TSV: sentence1 TAB sentence2 TAB gold. Malformed lines throw DataError naming
// the line, unless lenient, in which case they are reported to `warnings` and skipped.
PairDataset load_pairs(const std::string& path, Task task, bool lenient = false, std::ostream* warnings = nullptr);
PairDataset parse_pairs(std::string_view text, Task task, bool lenient = false, std::ostream* warnings = nullptr,
                        std::string_view source = "<memory>");
// Writes the dataset back as TSV with space-joined tokens.
std::string serialize_pairs(const PairDataset& data);

// Throws UndefinedMetricError if either side is constant, DataError on bad lengths.
double pearson(std::span<const double> x, std::span<const double> y);

struct ClassificationMetrics {
  double accuracy = 0.0;
  // Binary tasks only, positive class = 1.
  std::optional<double> precision, recall, f1;
};

ClassificationMetrics classification_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                                             bool binary);

}  // namespace mmax
