#include "mhgan/rng.hpp"

#include <cmath>
#include <cstring>

#include "mhgan/errors.hpp"

namespace mhgan {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t x = seed;
  uint64_t a = splitmix64(x);
  x ^= stream * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull;
  return a ^ splitmix64(x);
}

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

Rng::Rng(uint64_t seed, uint64_t stream) : Rng(derive_seed(seed, stream)) {}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float Rng::uniform(float lo, float hi) {
  return lo + static_cast<float>(next_double()) * (hi - lo);
}

float Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  return static_cast<float>(r * std::cos(2.0 * 3.14159265358979323846 * u2));
}

int Rng::uniform_int(int n) {
  MHGAN_REQUIRE(n >= 1, "uniform_int needs n >= 1");
  return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                           static_cast<unsigned __int128>(n)) >> 64);
}

std::array<uint8_t, 32> Rng::state() const {
  std::array<uint8_t, 32> blob{};
  std::memcpy(blob.data(), s_, sizeof(s_));
  return blob;
}

void Rng::set_state(const std::array<uint8_t, 32>& blob) {
  std::memcpy(s_, blob.data(), sizeof(s_));
}

}  // namespace mhgan
