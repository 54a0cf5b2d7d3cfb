#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mmax/embeddings.hpp"
#include "mmax/model_dims.hpp"
#include "mmax/objectives.hpp"
#include "mmax/training.hpp"

namespace mmax {

struct ConfigKey {
  const char* name;
  const char* default_value;  // nullptr: no default (must be supplied)
  const char* help;
};

// Flat key = value run configuration. Unknown keys are rejected.
class RunConfig {
 public:
  static const std::vector<ConfigKey>& keys();
  static bool is_known(const std::string& key);

  RunConfig();  // all defaults
  static RunConfig from_map(const std::map<std::string, std::string>& values);

  // `key = value` lines, '#' comments. Relative embedding paths resolve
  // against the file's directory.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  // Embedding paths given here resolve against the working directory.
  void set_override(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& get(const std::string& key) const;
  std::size_t get_count(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_flag(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  std::vector<std::string> embedding_paths() const;
  Task task() const;
  ScoreSpec score_spec() const;
  TrainConfig train_config() const;
  ModelDims model_dims(const std::vector<std::size_t>& embedding_dims) const;
  ModelDims model_dims(const std::vector<std::size_t>& embedding_dims, EncoderKind encoder) const;

  // Parses every typed key; throws ConfigError naming the first bad one.
  void validate() const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string echo(const std::string& prefix = "# ") const;
  std::uint64_t fingerprint() const;

 private:
  std::map<std::string, std::string> values_;
};

// Loads every table listed under `embeddings` into a lexicon.
std::unique_ptr<FusedLexicon> load_lexicon(const RunConfig& cfg);

}  // namespace mmax
