#pragma once

#include <array>
#include <cstdint>

namespace mhgan {

// xoshiro256** with splitmix64 seeding. Chosen over std::mt19937 because the
// whole stream position fits the checkpoint format's fixed 32-byte RNG blob.
// normal() uses Box-Muller without a cached spare so that state() captures
// the generator completely.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  Rng(uint64_t seed, uint64_t stream);

  uint64_t next_u64();
  double next_double();              // [0, 1)
  float uniform(float lo, float hi);
  float normal();                    // standard normal
  int uniform_int(int n);            // [0, n), n >= 1

  std::array<uint8_t, 32> state() const;
  void set_state(const std::array<uint8_t, 32>& blob);

 private:
  uint64_t s_[4];
};

// Deterministic seed derivation for independent sub-streams.
uint64_t derive_seed(uint64_t seed, uint64_t stream);

}  // namespace mhgan
