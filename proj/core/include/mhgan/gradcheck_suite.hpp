#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mhgan {

// One finite-difference comparison: samples a kink-avoided input from the
// seed and returns the max relative error between analytic and central
// differences (h = 1e-3).
struct GradCheckCase {
  std::string name;
  std::function<float(uint64_t seed)> run;
};

// Every primitive, every layer, and the composite losses, each checked per
// differentiable input slot.
const std::vector<GradCheckCase>& gradcheck_suite();

struct GradCheckRow {
  std::string name;
  float max_err = 0.0f;
  bool pass = false;
};

std::vector<GradCheckRow> run_gradcheck_suite(uint64_t seed, float tolerance);

}  // namespace mhgan
