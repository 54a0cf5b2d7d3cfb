#include "mmax/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmax/errors.hpp"

namespace mmax {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string resolve_paths(const std::string& list, const std::filesystem::path& base) {
  std::string out;
  for (const auto& p : split_commas(list)) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = base / path;
    if (!out.empty()) out += ',';
    out += std::filesystem::absolute(path).lexically_normal().string();
  }
  return out;
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = {
      {"embeddings", nullptr, "comma-separated embedding text files, in fusion order"},
      {"oov_scale", "0.1", "OOV vector entries are uniform in [-oov_scale, oov_scale]"},
      {"seed", "1234", "master seed for init, dropout, shuffle and OOV streams"},
      {"encoder", "maxlstm_cnn", "word_avg | proj_avg | lstm_only | maxcnn_only | maxlstm_cnn"},
      {"bench_encoders", "word_avg,proj_avg,lstm_only,maxcnn_only,maxlstm_cnn", "encoders compared by bench"},
      {"filters", "1600", "number of multi-aspect filters H"},
      {"lstm_dim", "1600", "LSTM memory dimension l"},
      {"max_len", "32", "fixed comparison length L (pad/truncate)"},
      {"d_neu", "128", "width of the neural-difference layer"},
      {"word_sim_dim", "50", "width of the word-word similarity vector"},
      {"sent_sim_dim", "5", "width of the sentence-sentence similarity vector"},
      {"ws_row_dim", "5", "width of each word-sentence matrix row"},
      {"ws_sim_dim", "100", "width of the word-sentence similarity vector"},
      {"hidden_dim", "250", "width of the penultimate layer"},
      {"dropout", "0.5", "dropout probability on the penultimate layer"},
      {"task", "sts", "sts | entailment | paraphrase"},
      {"score_k", "6", "top of the [1, K] score scale (sts)"},
      {"raw_min", "0", "lowest raw gold score (sts)"},
      {"raw_max", "5", "highest raw gold score (sts)"},
      {"weight_decay", "0", "L2 coefficient added to gradients"},
      {"batch_size", "30", "mini-batch size"},
      {"epochs", "50", "maximum training epochs"},
      {"patience", "10", "stop after this many epochs without validation improvement"},
      {"rho", "0.95", "AdaDelta decay"},
      {"epsilon", "1e-6", "AdaDelta epsilon"},
      {"clip_norm", "0", "global gradient-norm clip, 0 = off"},
      {"shuffle", "true", "shuffle training examples each epoch"},
  };
  return k;
}

bool RunConfig::is_known(const std::string& key) {
  for (const auto& k : keys()) {
    if (key == k.name) return true;
  }
  return false;
}

RunConfig::RunConfig() {
  for (const auto& k : keys()) {
    if (k.default_value) values_[k.name] = k.default_value;
  }
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& values) {
  RunConfig cfg;
  for (const auto& [k, v] : values) cfg.set(k, v);
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set_override(const std::string& key, const std::string& value) {
  if (key == "embeddings") {
    set(key, resolve_paths(value, std::filesystem::current_path()));
  } else {
    set(key, value);
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  const auto base = std::filesystem::absolute(std::filesystem::path(path)).parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_known(key)) throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    values_[key] = key == "embeddings" ? resolve_paths(value, base) : value;
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::size_t RunConfig::get_count(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' needs a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "' needs a finite number, got '" + v + "'");
  }
  return out;
}

bool RunConfig::get_flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' needs true/false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const { return split_commas(get(key)); }

std::vector<std::string> RunConfig::embedding_paths() const {
  auto paths = get_list("embeddings");
  if (paths.empty()) throw ConfigError("config key 'embeddings' lists no files");
  return paths;
}

Task RunConfig::task() const { return parse_task(get("task")); }

ScoreSpec RunConfig::score_spec() const {
  return ScoreSpec(get_count("score_k"), get_double("raw_min"), get_double("raw_max"));
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = get_count("batch_size");
  t.epochs = get_count("epochs");
  t.patience = get_count("patience");
  t.rho = get_double("rho");
  t.epsilon = get_double("epsilon");
  t.weight_decay = get_double("weight_decay");
  t.clip_norm = get_double("clip_norm");
  t.seed = get_u64("seed");
  t.shuffle = get_flag("shuffle");
  if (t.batch_size == 0) throw ConfigError("config key 'batch_size' must be at least 1");
  if (!(t.rho > 0.0 && t.rho < 1.0)) throw ConfigError("config key 'rho' must lie in (0, 1)");
  if (!(t.epsilon > 0.0)) throw ConfigError("config key 'epsilon' must be positive");
  if (t.weight_decay < 0.0 || t.clip_norm < 0.0) throw ConfigError("weight_decay and clip_norm must be nonnegative");
  return t;
}

ModelDims RunConfig::model_dims(const std::vector<std::size_t>& embedding_dims) const {
  return model_dims(embedding_dims, parse_encoder_kind(get("encoder")));
}

ModelDims RunConfig::model_dims(const std::vector<std::size_t>& embedding_dims, EncoderKind encoder) const {
  ModelDims d;
  d.encoder = encoder;
  d.embedding_dims = embedding_dims;
  d.filters = get_count("filters");
  d.lstm_dim = get_count("lstm_dim");
  d.max_len = get_count("max_len");
  d.d_neu = get_count("d_neu");
  d.word_sim_dim = get_count("word_sim_dim");
  d.sent_sim_dim = get_count("sent_sim_dim");
  d.ws_row_dim = get_count("ws_row_dim");
  d.ws_sim_dim = get_count("ws_sim_dim");
  d.hidden_dim = get_count("hidden_dim");
  d.classes = task() == Task::Sts ? get_count("score_k") : label_names(task()).size();
  d.validate();
  return d;
}

void RunConfig::validate() const {
  get_double("oov_scale");
  get_u64("seed");
  parse_encoder_kind(get("encoder"));
  for (const auto& e : get_list("bench_encoders")) parse_encoder_kind(e);
  model_dims({1});
  const double p = get_double("dropout");
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("config key 'dropout' must lie in [0, 1)");
  if (get_double("oov_scale") < 0.0) throw ConfigError("config key 'oov_scale' must be nonnegative");
  score_spec();
  train_config();
}

std::string RunConfig::echo(const std::string& prefix) const {
  std::string out;
  for (const auto& [k, v] : values_) out += prefix + k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::fingerprint() const { return fnv1a(echo("")); }

std::unique_ptr<FusedLexicon> load_lexicon(const RunConfig& cfg) {
  std::vector<EmbeddingTable> tables;
  for (const auto& path : cfg.embedding_paths()) {
    // A path that names nothing is a config mistake; a file that exists but is broken is a data error.
    if (!std::filesystem::is_regular_file(path)) {
      throw ConfigError("config key 'embeddings' names '" + path + "', which is not a readable file");
    }
    tables.push_back(load_table(path));
  }
  return std::make_unique<FusedLexicon>(std::move(tables), cfg.get_double("oov_scale"), cfg.get_u64("seed"));
}

}  // namespace mmax
