#pragma once

#include <stdexcept>
#include <string>

namespace mhgan {

// Violated precondition or invariant of a documented contract.
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Malformed, truncated, or otherwise unreadable checkpoint file.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss encountered during training. what() carries the component dump.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

// Unknown key, invalid value, or unusable combination in a run configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void contract_failure(const char* cond, const char* file, int line,
                                   const std::string& msg);

}  // namespace mhgan

#define MHGAN_REQUIRE(cond, msg) \
  do {                           \
    if (!(cond)) ::mhgan::contract_failure(#cond, __FILE__, __LINE__, (msg)); \
  } while (0)
