#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "mmax/model.hpp"
#include "mmax/training.hpp"

namespace mmax {

inline constexpr char kCheckpointMagic[8] = {'M', 'M', 'A', 'X', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ModelDims dims;
  Task task = Task::Sts;
  ScoreSpec score;
  double dropout = 0.5;
  std::size_t epoch = 0;
  std::map<std::string, std::string> config;  // effective run config
  std::uint64_t config_fingerprint = 0;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<Model> model;
  std::optional<AdaDeltaState> optimizer;
};

// Layout (all integers and floats little-endian):
//   magic "MMAXCKPT" | u32 version | u64 n | n bytes of JSON metadata
//   | u64 parameter count | per parameter: u32 name length, name, u64 rows, u64 cols, rows*cols f64
//   | u8 has_optimizer [| f64 rho | f64 epsilon | per parameter E[g^2] then E[dx^2]]
//   | u64 FNV-1a of everything before it
std::string encode_checkpoint(const Model& model, const AdaDeltaState* optimizer, const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, const Model& model, const AdaDeltaState* optimizer,
                     const CheckpointMeta& meta);

// Throws DataError for unreadable, truncated or corrupt files and version
// mismatches; ConfigError when `expected` dims disagree with the file.
LoadedCheckpoint decode_checkpoint(const std::string& bytes, const ModelDims* expected = nullptr);
LoadedCheckpoint load_checkpoint(const std::string& path, const ModelDims* expected = nullptr);

// Throws ConfigError naming the first differing key and both values.
void require_compatible(const ModelDims& stored, const ModelDims& expected);

}  // namespace mmax
