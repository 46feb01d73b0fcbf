#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vaxsurge/encoder.h"

namespace vaxsurge {

// Layout:
//   8 bytes   magic "VXSCKPT\0"
//   u32 LE    format version (1)
//   u32 LE    header length in bytes
//   header    UTF-8 "key=value" lines: the encoder config, vocab_sha256,
//             seed, then one "tensor=<name> <rows> <cols>" line per tensor
//   payload   every tensor in ModelParams::visit order, row-major,
//             IEEE-754 binary32 little-endian
struct CheckpointMeta {
  std::string vocab_sha256;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  ModelParams params;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const ModelParams& params, const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointMeta& meta);

// Throws DataError on bad magic, unknown version, malformed header, shape
// disagreement between header and config, or payload size mismatch.
Checkpoint parse_checkpoint(std::string_view bytes);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rounds every entry through binary32, the precision checkpoints store.
void round_to_float(ModelParams& params);

}  // namespace vaxsurge
