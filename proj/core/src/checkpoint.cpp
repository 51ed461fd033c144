#include "mhgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mhgan/errors.hpp"

namespace mhgan {

namespace {

void put_u16(std::ostream& os, uint16_t v) {
  const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
  uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

void need(std::istream& is, char* dst, size_t n, const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
}

uint16_t get_u16(std::istream& is, const char* what) {
  uint8_t b[2];
  need(is, reinterpret_cast<char*>(b), 2, what);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is, const char* what) {
  uint8_t b[4];
  need(is, reinterpret_cast<char*>(b), 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is, const char* what) {
  uint8_t b[8];
  need(is, reinterpret_cast<char*>(b), 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::istream& is, const char* what) {
  const uint32_t bits = get_u32(is, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

const Tensor* CheckpointData::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

const Tensor& CheckpointData::require(const std::string& name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  return *t;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");
  os.write(kCheckpointMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<uint32_t>(data.tensors.size()));
  for (const auto& nt : data.tensors) {
    MHGAN_REQUIRE(nt.name.size() <= 0xffff, "tensor name too long");
    MHGAN_REQUIRE(nt.value.rank() <= 0xff, "tensor rank too large");
    put_u16(os, static_cast<uint16_t>(nt.name.size()));
    os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    os.put(static_cast<char>(nt.value.rank()));
    for (int e : nt.value.shape) put_u32(os, static_cast<uint32_t>(e));
    for (float v : nt.value.values) put_f32(os, v);
  }
  put_u64(os, data.step);
  os.write(reinterpret_cast<const char*>(data.rng_state.data()),
           static_cast<std::streamsize>(data.rng_state.size()));
  os.flush();
  if (!os) throw CheckpointError("write to '" + path + "' failed");
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path + "'");

  char magic[4];
  need(is, magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError("bad checkpoint magic '" + std::string(magic, 4) + "' (expected 'MHGK')");

  const uint32_t version = get_u32(is, "version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");

  CheckpointData data;
  const uint32_t count = get_u32(is, "tensor count");
  data.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    const uint16_t name_len = get_u16(is, "tensor name length");
    nt.name.resize(name_len);
    need(is, nt.name.data(), name_len, "tensor name");
    char rank_byte;
    need(is, &rank_byte, 1, "tensor rank");
    Shape shape(static_cast<size_t>(static_cast<uint8_t>(rank_byte)));
    for (auto& e : shape) {
      const uint32_t ext = get_u32(is, "tensor extent");
      if (ext == 0 || ext > (1u << 28))
        throw CheckpointError("implausible extent " + std::to_string(ext) + " in tensor '" +
                              nt.name + "'");
      e = static_cast<int>(ext);
    }
    std::vector<float> values(static_cast<size_t>(numel(shape)));
    for (auto& v : values) v = get_f32(is, "tensor payload");
    nt.value = Tensor(std::move(shape), std::move(values));
    data.tensors.push_back(std::move(nt));
  }
  data.step = get_u64(is, "step counter");
  need(is, reinterpret_cast<char*>(data.rng_state.data()), data.rng_state.size(), "RNG state");

  is.peek();
  if (!is.eof()) throw CheckpointError("trailing bytes after checkpoint payload in '" + path + "'");
  return data;
}

}  // namespace mhgan
