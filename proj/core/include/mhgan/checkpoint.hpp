#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mhgan/tensor.hpp"

namespace mhgan {

// On-disk checkpoint layout (all integers little-endian):
//   magic "MHGK" | version u32 | tensor count u32
//   per tensor: name length u16, UTF-8 name, rank u8, extents u32 each,
//               payload float32
//   step counter u64 | 32-byte RNG state blob
inline constexpr char kCheckpointMagic[4] = {'M', 'H', 'G', 'K'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct CheckpointData {
  std::vector<NamedTensor> tensors;
  uint64_t step = 0;
  std::array<uint8_t, 32> rng_state{};

  const Tensor* find(const std::string& name) const;
  const Tensor& require(const std::string& name) const;  // CheckpointError if absent
};

void write_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::string& path);

}  // namespace mhgan
