#include "mmax/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mmax/errors.hpp"

namespace mmax {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(std::span<double> dst) {
    need(dst.size() * sizeof(double));
    std::memcpy(dst.data(), bytes_.data() + pos_, dst.size() * sizeof(double));
    pos_ += dst.size() * sizeof(double);
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json dims_to_json(const ModelDims& d) {
  return json{{"encoder", std::string(to_string(d.encoder))},
              {"embedding_dims", d.embedding_dims},
              {"filters", d.filters},
              {"lstm_dim", d.lstm_dim},
              {"max_len", d.max_len},
              {"d_neu", d.d_neu},
              {"classes", d.classes},
              {"word_sim_dim", d.word_sim_dim},
              {"sent_sim_dim", d.sent_sim_dim},
              {"ws_row_dim", d.ws_row_dim},
              {"ws_sim_dim", d.ws_sim_dim},
              {"hidden_dim", d.hidden_dim}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.encoder = parse_encoder_kind(j.at("encoder").get<std::string>());
  d.embedding_dims = j.at("embedding_dims").get<std::vector<std::size_t>>();
  d.filters = j.at("filters").get<std::size_t>();
  d.lstm_dim = j.at("lstm_dim").get<std::size_t>();
  d.max_len = j.at("max_len").get<std::size_t>();
  d.d_neu = j.at("d_neu").get<std::size_t>();
  d.classes = j.at("classes").get<std::size_t>();
  d.word_sim_dim = j.at("word_sim_dim").get<std::size_t>();
  d.sent_sim_dim = j.at("sent_sim_dim").get<std::size_t>();
  d.ws_row_dim = j.at("ws_row_dim").get<std::size_t>();
  d.ws_sim_dim = j.at("ws_sim_dim").get<std::size_t>();
  d.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  return d;
}

std::string join_dims(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

void require_compatible(const ModelDims& stored, const ModelDims& expected) {
  auto check = [](const char* key, auto a, auto b) {
    if (a != b) {
      std::ostringstream msg;
      msg << "checkpoint " << key << " = " << a << " but config " << key << " = " << b;
      throw ConfigError(msg.str());
    }
  };
  check("encoder", to_string(stored.encoder), to_string(expected.encoder));
  check("embedding dims", join_dims(stored.embedding_dims), join_dims(expected.embedding_dims));
  check("filters", stored.filters, expected.filters);
  check("lstm_dim", stored.lstm_dim, expected.lstm_dim);
  check("max_len", stored.max_len, expected.max_len);
  check("d_neu", stored.d_neu, expected.d_neu);
  check("classes", stored.classes, expected.classes);
  check("word_sim_dim", stored.word_sim_dim, expected.word_sim_dim);
  check("sent_sim_dim", stored.sent_sim_dim, expected.sent_sim_dim);
  check("ws_row_dim", stored.ws_row_dim, expected.ws_row_dim);
  check("ws_sim_dim", stored.ws_sim_dim, expected.ws_sim_dim);
  check("hidden_dim", stored.hidden_dim, expected.hidden_dim);
}

std::string encode_checkpoint(const Model& model, const AdaDeltaState* optimizer, const CheckpointMeta& meta) {
  json j;
  j["format"] = "mmax-checkpoint";
  j["dims"] = dims_to_json(meta.dims);
  j["task"] = std::string(to_string(meta.task));
  j["score_k"] = meta.score.K;
  j["raw_min"] = meta.score.raw_min;
  j["raw_max"] = meta.score.raw_max;
  j["dropout"] = meta.dropout;
  j["epoch"] = meta.epoch;
  j["config"] = meta.config;
  j["config_fingerprint"] = meta.config_fingerprint;
  const std::string meta_text = j.dump();

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta_text.size());
  out += meta_text;

  const auto params = model.params().all();
  put<std::uint64_t>(out, params.size());
  for (const Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put<std::uint64_t>(out, p->value.rows());
    put<std::uint64_t>(out, p->value.cols());
    for (double v : p->value.data()) put(out, v);
  }
  put<std::uint8_t>(out, optimizer ? 1 : 0);
  if (optimizer) {
    put(out, optimizer->rho());
    put(out, optimizer->epsilon());
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (double v : optimizer->mean_sq_grad()[k].data()) put(out, v);
      for (double v : optimizer->mean_sq_update()[k].data()) put(out, v);
    }
  }
  put<std::uint64_t>(out, fnv1a(out));
  return out;
}

void save_checkpoint(const std::string& path, const Model& model, const AdaDeltaState* optimizer,
                     const CheckpointMeta& meta) {
  const std::string bytes = encode_checkpoint(model, optimizer, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes, const ModelDims* expected) {
  Reader r(bytes);
  if (r.take(sizeof kCheckpointMagic) != std::string_view(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) + ", this build reads version " +
                    std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < sizeof(std::uint64_t)) throw DataError("checkpoint truncated");
  std::uint64_t stored_sum = 0;
  std::memcpy(&stored_sum, bytes.data() + bytes.size() - sizeof stored_sum, sizeof stored_sum);
  const std::string_view body(bytes.data(), bytes.size() - sizeof stored_sum);

  LoadedCheckpoint out;
  const auto meta_len = r.get<std::uint64_t>();
  try {
    const json j = json::parse(r.take(meta_len));
    out.meta.dims = dims_from_json(j.at("dims"));
    out.meta.task = parse_task(j.at("task").get<std::string>());
    out.meta.score = ScoreSpec(j.at("score_k").get<std::size_t>(), j.at("raw_min").get<double>(),
                               j.at("raw_max").get<double>());
    out.meta.dropout = j.at("dropout").get<double>();
    out.meta.epoch = j.at("epoch").get<std::size_t>();
    out.meta.config = j.at("config").get<std::map<std::string, std::string>>();
    out.meta.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint metadata is malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint metadata is malformed: ") + e.what());
  }
  if (fnv1a(body) != stored_sum) {
    throw DataError("checkpoint checksum mismatch (file truncated or corrupt)");
  }
  if (expected) require_compatible(out.meta.dims, *expected);

  auto model = std::make_unique<Model>(out.meta.dims, out.meta.dropout);
  auto params = model->params().all();
  const auto count = r.get<std::uint64_t>();
  if (count != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) + " parameters, model expects " +
                    std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string_view name = r.take(name_len);
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw DataError("checkpoint parameter '" + std::string(name) + "' " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " does not match expected '" + p->name + "' " + p->value.shape());
    }
    r.read_doubles(p->value.data());
  }
  const auto has_opt = r.get<std::uint8_t>();
  if (has_opt) {
    const double rho = r.get<double>();
    const double eps = r.get<double>();
    std::vector<Matrix> eg2, edx2;
    for (const Parameter* p : params) {
      eg2.emplace_back(p->value.rows(), p->value.cols());
      edx2.emplace_back(p->value.rows(), p->value.cols());
      r.read_doubles(eg2.back().data());
      r.read_doubles(edx2.back().data());
    }
    out.optimizer.emplace(std::move(eg2), std::move(edx2), rho, eps);
  }
  if (r.pos() != body.size()) throw DataError("checkpoint has trailing bytes");
  out.model = std::move(model);
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path, const ModelDims* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str(), expected);
}

}  // namespace mmax
