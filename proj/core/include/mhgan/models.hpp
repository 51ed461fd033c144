#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mhgan/nn.hpp"

namespace mhgan {

enum class HeadMode { ProjectionOnly, Aux, Shared };

const char* head_mode_name(HeadMode mode);

// Conditional generator: z -> hidden MLP with class-conditional batch norm
// after each hidden linear -> unbounded data-space output. Conditioning
// enters only through the per-class batch-norm gains and biases.
class GeneratorNet {
 public:
  GeneratorNet(int z_dim, int classes, int data_dim, Rng& init, int hidden = 64,
               int depth = 3);

  Tensor forward(FwdCtx& ctx, const Tensor& z, const std::vector<int>& y);

  std::vector<Parameter*> params();
  int z_dim() const { return z_dim_; }
  int classes() const { return classes_; }
  int data_dim() const { return data_dim_; }

  std::vector<LinearLayer> trunk;
  std::vector<ConditionalBatchNorm> cbn;
  LinearLayer out;

 private:
  int z_dim_, classes_, data_dim_;
};

// Projection critic: trunk phi, scalar head psi, class embeddings E, and an
// auxiliary classifier head psi_c in Aux mode only.
//   score(x, y)        = psi(phi(x)) + <E_y, phi(x)>
//   all_class_scores   = psi(phi(x)) 1^T + phi(x) E^T
//   classify: Aux      = psi_c(phi(x))
//             Shared   = phi(x) E^T   (the projection scores without psi)
// Every linear layer is spectrally normalized; heads share one trunk
// evaluation per forward pass.
class CriticNet {
 public:
  CriticNet(int data_dim, int classes, HeadMode mode, Rng& init, int hidden = 64,
            int depth = 3);

  Tensor features(FwdCtx& ctx, const Tensor& x);                         // [B,F]
  Tensor score(FwdCtx& ctx, const Tensor& feats, const std::vector<int>& y);  // [B]
  Tensor all_class_scores(FwdCtx& ctx, const Tensor& feats);             // [B,K]
  Tensor classify(FwdCtx& ctx, const Tensor& feats);                     // [B,K]

  bool has_classifier() const { return mode_ != HeadMode::ProjectionOnly; }

  std::vector<Parameter*> params();
  HeadMode mode() const { return mode_; }
  int data_dim() const { return data_dim_; }
  int classes() const { return classes_; }
  int feature_dim() const { return feature_dim_; }

  std::vector<LinearLayer> trunk;
  LinearLayer psi;
  EmbeddingMatrix embed;
  std::optional<LinearLayer> psi_c;  // Aux mode only

 private:
  HeadMode mode_;
  int data_dim_, classes_, feature_dim_;
};

// Convenience wrappers evaluating the trunk once.
Tensor critic_forward(CriticNet& critic, FwdCtx& ctx, const Tensor& x,
                      const std::vector<int>& y);
Tensor critic_all_classes(CriticNet& critic, FwdCtx& ctx, const Tensor& x);

}  // namespace mhgan
