#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mhgan/rng.hpp"
#include "mhgan/tensor.hpp"

namespace mhgan {

// Named trainable tensor. The raw value is what the optimizer updates;
// forward passes read it either directly or through a tape leaf.
struct Parameter {
  std::string name;
  Tensor value;
};

// Per-forward execution context: the tape (if any), the set of parameters
// attached to it as differentiable leaves, and the train/eval switch that
// gates batch statistics and power-iteration persistence.
class FwdCtx {
 public:
  FwdCtx() = default;
  FwdCtx(Tape& tape, bool train) : tape_(&tape), train_(train) {}

  static FwdCtx eval_mode() { return FwdCtx(); }
  static FwdCtx train_eager() {
    FwdCtx ctx;
    ctx.train_ = true;
    return ctx;
  }

  Tape* tape() const { return tape_; }
  bool train() const { return train_; }

  // Copies the parameter onto the tape as a differentiable leaf.
  void attach(Parameter& p);
  // Substitutes an existing tape expression for the parameter in forwards run
  // under this context (finite-difference fixtures use this).
  void bind(const Parameter& p, Tensor stand_in);
  Tensor use(const Parameter& p) const;
  Tensor grad_of(const Parameter& p) const;  // valid after tape backward

 private:
  Tape* tape_ = nullptr;
  bool train_ = false;
  std::unordered_map<const Parameter*, Tensor> bound_;
};

// Fully connected layer, optionally spectrally normalized. The spectral
// estimate runs one power-iteration step per forward (v = W^T u / ||W^T u||,
// u' = W v / ||W v||, sigma = u'^T W v); u' persists across steps in train
// mode only, so evaluation on a snapshot stays pure.
class LinearLayer {
 public:
  LinearLayer(const std::string& name, int in, int out, bool spectral,
              float variance_scale, Rng& init);

  Tensor forward(FwdCtx& ctx, const Tensor& x);  // [B,in] -> [B,out]

  // Normalized weight for this forward pass; the identity when spectral
  // normalization is disabled. Exposed for diagnostics and direct tests.
  Tensor normalized_weight(FwdCtx& ctx);

  bool spectral() const { return !sn_u.empty(); }
  float sigma_estimate() const { return last_sigma_; }  // from the last forward
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  void collect(std::vector<Parameter*>& out);

  Parameter weight;  // [out,in]
  Parameter bias;    // [out]
  std::vector<float> sn_u;  // unit vector, length out; empty iff not spectral

 private:
  int in_ = 0, out_ = 0;
  float last_sigma_ = 0.0f;
};

// Batch normalization with one (gain, bias) pair per class. Train mode uses
// batch statistics (biased variance) and folds them into the running stats
// with momentum 0.99; eval mode uses the running stats.
class ConditionalBatchNorm {
 public:
  ConditionalBatchNorm(const std::string& name, int classes, int features);

  Tensor forward(FwdCtx& ctx, const Tensor& x, const std::vector<int>& y);
  void collect(std::vector<Parameter*>& out);

  Parameter gamma;  // [K,F], init 1
  Parameter beta;   // [K,F], init 0
  std::vector<float> running_mean;  // F
  std::vector<float> running_var;   // F, init 1
  float eps = 1e-5f;
  float momentum = 0.99f;

 private:
  int classes_ = 0, features_ = 0;
};

// K x F table of class embeddings.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(const std::string& name, int classes, int features, Rng& init);

  Tensor rows(FwdCtx& ctx, const std::vector<int>& y) const;  // [B,F]
  void collect(std::vector<Parameter*>& out);

  int classes() const { return classes_; }
  int features() const { return features_; }

  Parameter table;  // [K,F]

 private:
  int classes_ = 0, features_ = 0;
};

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.0f;  // SAGAN-style defaults
  float beta2 = 0.9f;
  float eps = 1e-8f;
};

// Standard bias-corrected Adam update for one parameter; t is the
// already-incremented step count.
void adam_update(std::vector<float>& param, std::vector<float>& m, std::vector<float>& v,
                 const std::vector<float>& grad, int64_t t, const AdamConfig& cfg);

class Adam {
 public:
  Adam(AdamConfig cfg, std::vector<Parameter*> params);

  // Applies one update using gradients recorded on ctx's tape. Parameters
  // must all have been attached to that context.
  void step(const FwdCtx& ctx);

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Parameter*>& params() const { return params_; }
  std::vector<float>& moment1(size_t i) { return m_[i]; }
  std::vector<float>& moment2(size_t i) { return v_[i]; }

 private:
  AdamConfig cfg_;
  std::vector<Parameter*> params_;
  std::vector<std::vector<float>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace mhgan
