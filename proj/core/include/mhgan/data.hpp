#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mhgan/rng.hpp"
#include "mhgan/tensor.hpp"

namespace mhgan {

// K Gaussians on a circle: class k centered at radius*(cos 2pi k/K, sin 2pi k/K).
struct RingMixtureSpec {
  int k = 8;
  float radius = 2.0f;
  float sigma = 0.05f;
};

// rows x cols Gaussians on a lattice with pitch 2, centered at the origin;
// class index is row-major.
struct GridMixtureSpec {
  int rows = 5;
  int cols = 5;
  float sigma = 0.05f;
};

// Fixed pool from a CSV file: D comma-separated floats then one integer label
// per row; a header line is skipped when its first field is not numeric.
struct CsvVectorsSpec {
  std::string path;
  int dim = 2;
  int k = 2;
};

struct DatasetSpec {
  std::variant<RingMixtureSpec, GridMixtureSpec, CsvVectorsSpec> kind;
  uint64_t seed = 1;
};

int class_count(const DatasetSpec& spec);
int data_dim(const DatasetSpec& spec);
std::vector<float> class_center(const DatasetSpec& spec, int cls);

struct Batch {
  Tensor x;                      // [n, D], detached
  std::vector<int> y;            // n labels in [0, K)
  std::vector<uint8_t> labeled;  // n flags; unlabeled y must stay out of classifier losses
  int size() const { return x.rank() == 0 ? 0 : x.shape[0]; }
};

// i.i.d. class-balanced draw; a pure function of (spec, n, rng state).
Batch sample_real(const DatasetSpec& spec, int n, Rng& rng);

// z ~ N(0, I), y uniform over classes.
std::pair<Tensor, std::vector<int>> sample_latent(int n, int z_dim, int classes, Rng& rng);

struct LabeledSplit {
  float fraction = 1.0f;
  uint64_t seed = 0;
  std::vector<uint8_t> labeled;

  int labeled_count() const;
};

// Stratified selection: round(fraction * n_class) examples of every class are
// flagged labeled; deterministic given the seed.
LabeledSplit split_labels(const std::vector<int>& labels, int classes, float fraction,
                          uint64_t seed);

Batch load_csv(const std::string& path, int dim, int classes);

}  // namespace mhgan
