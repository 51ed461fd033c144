#pragma once

#include <optional>
#include <vector>

#include "mhgan/data.hpp"
#include "mhgan/linalg.hpp"
#include "mhgan/losses.hpp"
#include "mhgan/models.hpp"

namespace mhgan {

struct GaussianStats {
  std::vector<double> mean;  // d
  DMat cov;                  // d x d, symmetric
  int count = 0;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Sample mean and covariance (denominator n-1, symmetrized).
GaussianStats fit_gaussian(const Tensor& features);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues are
// clamped to zero. Rejects inputs whose asymmetry exceeds 1e-5.
DMat matrix_sqrt_spd(const DMat& a);

// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 sqrt(S1^1/2 S2 S1^1/2)), with 1e-6 I added
// to both covariances before the square roots. Symmetric; clamped at zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Plain MLP trained on real labeled data before GAN evaluation and frozen
// thereafter; the referee for feature-space FID, the score analog, and label
// agreement on generated samples.
class OracleClassifier {
 public:
  struct Hyper {
    int hidden = 64;
    int depth = 3;
    int train_samples = 8192;
    int batch = 128;
    int max_steps = 4000;
    float target_accuracy = 0.995f;
    float lr = 1e-3f;
  };

  static OracleClassifier fit(const DatasetSpec& spec, uint64_t seed);
  static OracleClassifier fit(const DatasetSpec& spec, uint64_t seed, const Hyper& hyper);

  Tensor logits(const Tensor& x) const;    // [B,K]
  Tensor features(const Tensor& x) const;  // penultimate activations [B,F]
  std::vector<int> predict(const Tensor& x) const;
  DMat posterior(const Tensor& x) const;   // softmax rows, double precision

  float train_accuracy() const { return train_accuracy_; }
  int classes() const { return classes_; }
  int feature_dim() const { return feature_dim_; }

 private:
  OracleClassifier() = default;
  mutable std::vector<LinearLayer> layers_;  // eval-mode forwards mutate nothing
  int classes_ = 0;
  int feature_dim_ = 0;
  float train_accuracy_ = 0.0f;
};

// FID between real and generated samples. Raw coordinates are the feature
// space for 2-d data; the oracle's penultimate features otherwise.
double toy_fid(const Tensor& real_x, const Tensor& fake_x, const OracleClassifier* oracle);

struct IntraFid {
  std::vector<std::optional<double>> per_class;
  std::optional<double> mean;  // present only when every class was computable
};

// Per-class FID; classes with fewer than dim+1 samples on either side are null.
IntraFid intra_fid(const Tensor& real_x, const std::vector<int>& real_y, const Tensor& fake_x,
                   const std::vector<int>& fake_y, int classes, const OracleClassifier* oracle);

// exp(E_x KL(p(y|x) || p(y))) under the oracle; always in [1, K].
double inception_like_score(const Tensor& fake_x, const OracleClassifier& oracle);

// Descending singular values of the K x F embedding table.
std::vector<double> embedding_spectrum(const Tensor& table);

double fraction_correct(const std::vector<int>& predicted, const std::vector<int>& truth);

struct Accuracies {
  std::optional<double> validation;  // co-trained classifier on held-out reals
  std::optional<double> self;        // argmax C(G(z,y)) == y
  double discriminator = 0.0;        // fraction of reals with D(x,y) > 0
  double projection_cls = 0.0;       // argmax_k D(x,k) == y on reals
};

Accuracies compute_accuracies(GeneratorNet gen, CriticNet critic, const Batch& validation,
                              int n_eval, uint64_t eval_seed);

struct MetricsReport {
  int64_t step = 0;
  std::optional<double> toy_fid;
  IntraFid intra;
  std::optional<double> is_analog;
  Accuracies acc;
  std::optional<double> margin_diag;
  std::vector<double> spectrum;
  LossBreakdown losses;  // most recent training losses, filled by the loop
};

struct EvalPools {
  Batch fid_real;     // real side of the FID fits
  Batch validation;   // held-out reals for the accuracy metrics
};

// One evaluation snapshot. Networks are taken by value: the caller's training
// state is untouched and two calls with equal inputs agree bitwise.
MetricsReport evaluate_snapshot(GeneratorNet gen, CriticNet critic,
                                const OracleClassifier& oracle, const EvalPools& pools,
                                int n_samples, uint64_t eval_seed, int64_t step);

}  // namespace mhgan
