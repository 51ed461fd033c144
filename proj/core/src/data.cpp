#include "mhgan/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mhgan/errors.hpp"

namespace mhgan {

namespace {

constexpr float kGridPitch = 2.0f;
constexpr double kTau = 6.283185307179586;

struct CsvPool {
  std::vector<float> x;
  std::vector<int> y;
  int dim = 0;
  int rows() const { return dim == 0 ? 0 : static_cast<int>(y.size()); }
};

bool parse_float(const std::string& field, float& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  while (ptr < end && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

CsvPool load_csv_pool(const CsvVectorsSpec& spec) {
  std::ifstream is(spec.path);
  MHGAN_REQUIRE(static_cast<bool>(is), "cannot open CSV dataset '" + spec.path + "'");
  CsvPool pool;
  pool.dim = spec.dim;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (line_no == 1 && !fields.empty()) {
      float probe;
      if (!parse_float(fields[0], probe)) continue;  // header
    }
    MHGAN_REQUIRE(static_cast<int>(fields.size()) == spec.dim + 1,
                  "CSV row " + std::to_string(line_no) + " in '" + spec.path + "' has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(spec.dim + 1));
    for (int d = 0; d < spec.dim; ++d) {
      float v;
      MHGAN_REQUIRE(parse_float(fields[static_cast<size_t>(d)], v),
                    "CSV row " + std::to_string(line_no) + ": bad float field");
      pool.x.push_back(v);
    }
    float label_f;
    MHGAN_REQUIRE(parse_float(fields.back(), label_f), "CSV row " + std::to_string(line_no) +
                                                           ": bad label field");
    const int label = static_cast<int>(label_f);
    MHGAN_REQUIRE(static_cast<float>(label) == label_f && label >= 0 && label < spec.k,
                  "CSV row " + std::to_string(line_no) + ": label out of range [0," +
                      std::to_string(spec.k) + ")");
    pool.y.push_back(label);
  }
  MHGAN_REQUIRE(pool.rows() >= 1, "CSV dataset '" + spec.path + "' is empty");
  return pool;
}

}  // namespace

int class_count(const DatasetSpec& spec) {
  if (const auto* ring = std::get_if<RingMixtureSpec>(&spec.kind)) return ring->k;
  if (const auto* grid = std::get_if<GridMixtureSpec>(&spec.kind)) return grid->rows * grid->cols;
  return std::get<CsvVectorsSpec>(spec.kind).k;
}

int data_dim(const DatasetSpec& spec) {
  if (std::holds_alternative<CsvVectorsSpec>(spec.kind))
    return std::get<CsvVectorsSpec>(spec.kind).dim;
  return 2;
}

std::vector<float> class_center(const DatasetSpec& spec, int cls) {
  MHGAN_REQUIRE(cls >= 0 && cls < class_count(spec), "class index out of range");
  if (const auto* ring = std::get_if<RingMixtureSpec>(&spec.kind)) {
    const double angle = kTau * cls / ring->k;
    return {static_cast<float>(ring->radius * std::cos(angle)),
            static_cast<float>(ring->radius * std::sin(angle))};
  }
  if (const auto* grid = std::get_if<GridMixtureSpec>(&spec.kind)) {
    const int row = cls / grid->cols;
    const int col = cls % grid->cols;
    return {kGridPitch * (static_cast<float>(col) - 0.5f * static_cast<float>(grid->cols - 1)),
            kGridPitch * (static_cast<float>(row) - 0.5f * static_cast<float>(grid->rows - 1))};
  }
  MHGAN_REQUIRE(false, "class_center is undefined for CSV datasets");
  return {};
}

Batch sample_real(const DatasetSpec& spec, int n, Rng& rng) {
  MHGAN_REQUIRE(n >= 1, "sample_real needs n >= 1");
  Batch batch;
  batch.y.resize(static_cast<size_t>(n));
  batch.labeled.assign(static_cast<size_t>(n), 1);

  if (const auto* csv = std::get_if<CsvVectorsSpec>(&spec.kind)) {
    const CsvPool pool = load_csv_pool(*csv);
    batch.x = Tensor::zeros({n, csv->dim});
    for (int i = 0; i < n; ++i) {
      const int row = rng.uniform_int(pool.rows());
      batch.y[static_cast<size_t>(i)] = pool.y[static_cast<size_t>(row)];
      for (int d = 0; d < csv->dim; ++d)
        batch.x.values[static_cast<size_t>(i) * csv->dim + d] =
            pool.x[static_cast<size_t>(row) * csv->dim + d];
    }
    return batch;
  }

  const int classes = class_count(spec);
  float sigma = 0.0f;
  if (const auto* ring = std::get_if<RingMixtureSpec>(&spec.kind)) {
    MHGAN_REQUIRE(ring->k >= 2 && ring->sigma > 0.0f, "ring mixture needs K >= 2 and sigma > 0");
    sigma = ring->sigma;
  } else {
    const auto& grid = std::get<GridMixtureSpec>(spec.kind);
    MHGAN_REQUIRE(grid.rows * grid.cols >= 2 && grid.sigma > 0.0f,
                  "grid mixture needs K >= 2 and sigma > 0");
    sigma = grid.sigma;
  }

  batch.x = Tensor::zeros({n, 2});
  for (int i = 0; i < n; ++i) {
    const int cls = rng.uniform_int(classes);
    batch.y[static_cast<size_t>(i)] = cls;
    const std::vector<float> center = class_center(spec, cls);
    batch.x.values[static_cast<size_t>(i) * 2] = center[0] + sigma * rng.normal();
    batch.x.values[static_cast<size_t>(i) * 2 + 1] = center[1] + sigma * rng.normal();
  }
  return batch;
}

std::pair<Tensor, std::vector<int>> sample_latent(int n, int z_dim, int classes, Rng& rng) {
  MHGAN_REQUIRE(n >= 1 && z_dim >= 1 && classes >= 1, "sample_latent arguments must be positive");
  Tensor z = Tensor::zeros({n, z_dim});
  for (auto& v : z.values) v = rng.normal();
  std::vector<int> y(static_cast<size_t>(n));
  for (auto& label : y) label = rng.uniform_int(classes);
  return {std::move(z), std::move(y)};
}

int LabeledSplit::labeled_count() const {
  int c = 0;
  for (uint8_t f : labeled) c += f;
  return c;
}

LabeledSplit split_labels(const std::vector<int>& labels, int classes, float fraction,
                          uint64_t seed) {
  MHGAN_REQUIRE(fraction > 0.0f && fraction <= 1.0f, "labeled fraction must be in (0, 1]");
  LabeledSplit split;
  split.fraction = fraction;
  split.seed = seed;
  split.labeled.assign(labels.size(), 0);

  std::vector<std::vector<int>> by_class(static_cast<size_t>(classes));
  for (size_t i = 0; i < labels.size(); ++i) {
    MHGAN_REQUIRE(labels[i] >= 0 && labels[i] < classes, "label out of range in split_labels");
    by_class[static_cast<size_t>(labels[i])].push_back(static_cast<int>(i));
  }

  Rng rng(seed);
  for (int cls = 0; cls < classes; ++cls) {
    auto& idx = by_class[static_cast<size_t>(cls)];
    const int n_cls = static_cast<int>(idx.size());
    const int want = static_cast<int>(std::lround(static_cast<double>(fraction) * n_cls));
    MHGAN_REQUIRE(want >= 1, "labeled fraction " + std::to_string(fraction) +
                                 " yields zero labeled examples for class " + std::to_string(cls));
    // partial Fisher-Yates: the first `want` entries are the labeled draw
    for (int i = 0; i < want; ++i) {
      const int j = i + rng.uniform_int(n_cls - i);
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
      split.labeled[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 1;
    }
  }
  return split;
}

Batch load_csv(const std::string& path, int dim, int classes) {
  CsvVectorsSpec spec{path, dim, classes};
  const CsvPool pool = load_csv_pool(spec);
  Batch batch;
  batch.x = Tensor({pool.rows(), dim}, pool.x);
  batch.y = pool.y;
  batch.labeled.assign(batch.y.size(), 1);
  return batch;
}

}  // namespace mhgan
