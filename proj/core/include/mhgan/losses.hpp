#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mhgan/tensor.hpp"

namespace mhgan {

enum class LossVariant { SaganHinge, Mhgan, Acgan, MhganSsl, AcganSsl, MhShared };

const char* loss_variant_name(LossVariant v);
std::optional<LossVariant> parse_loss_variant(const std::string& name);
bool variant_is_ssl(LossVariant v);
bool variant_needs_classifier(LossVariant v);

// --- hinge family -----------------------------------------------------------
// margin fixed at 1, as in every loss of this family

Tensor hinge_d_real(const Tensor& scores);  // mean max(0, 1 - s)
Tensor hinge_d_fake(const Tensor& scores);  // mean max(0, 1 + s)
Tensor hinge_g(const Tensor& scores);       // -mean s

// Crammer-Singer multi-class hinge: mean max(0, 1 - C_y + max_{k!=y} C_k).
// Per example the gradient touches only the true class and the argmax
// competitor, and only inside the margin.
Tensor multi_hinge(const Tensor& logits, const std::vector<int>& y);

// Mean negative log-softmax of the true class; the only place log is clamped
// (at 1e-12).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& y);

// argmax_k C_k(x) per example, ties to the lowest index. Forward-only.
std::vector<int> pseudo_label(const Tensor& logits);

// The multi-hinge functional applied to projection scores D(x, .). Logged as
// a conditioning diagnostic, never trained on.
Tensor margin_diagnostic(const Tensor& proj_scores, const std::vector<int>& y);

// --- assemblies -------------------------------------------------------------

struct DLossTerms {
  Tensor total;
  Tensor real;
  Tensor fake;
  std::optional<Tensor> aux;
  std::optional<Tensor> unlab;
};

struct GLossTerms {
  Tensor total;
  Tensor adv;
  std::optional<Tensor> aux;  // absent when lambda == 0
};

DLossTerms sagan_d_loss(const Tensor& scores_real, const Tensor& scores_fake);
GLossTerms sagan_g_loss(const Tensor& scores_fake);

// hinge pair plus the multi-hinge auxiliary on real pairs; lambda scales only
// the generator's auxiliary term
DLossTerms mh_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                     const Tensor& cls_logits_real, const std::vector<int>& y_real);
GLossTerms mh_g_loss(const Tensor& scores_fake, const Tensor& cls_logits_fake,
                     const std::vector<int>& y_fake, float lambda);

// cross-entropy auxiliary instead of multi-hinge
DLossTerms ac_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                     const Tensor& cls_logits_real, const std::vector<int>& y_real);
GLossTerms ac_g_loss(const Tensor& scores_fake, const Tensor& cls_logits_fake,
                     const std::vector<int>& y_fake, float lambda);

// semi-supervised discriminator side: (real + unlab)/2 + fake + aux, where the
// unlabeled term scores pseudo-labeled pairs; no classifier loss touches
// unlabeled examples
DLossTerms mh_ssl_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                         const Tensor& scores_unlab, const Tensor& cls_logits_real,
                         const std::vector<int>& y_real);
DLossTerms ac_ssl_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                         const Tensor& scores_unlab, const Tensor& cls_logits_real,
                         const std::vector<int>& y_real);

// Both sides from shared inputs, for callers holding one consistent batch.
struct LossTensors {
  DLossTerms d;
  GLossTerms g;
};

LossTensors mh_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                      const Tensor& cls_logits_real, const Tensor& cls_logits_fake,
                      const std::vector<int>& labels_real, const std::vector<int>& labels_fake,
                      float lambda);
LossTensors ssl_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                       const Tensor& d_scores_unlab, const Tensor& cls_logits_real,
                       const Tensor& cls_logits_fake, const std::vector<int>& labels_real,
                       const std::vector<int>& labels_fake, float lambda);
LossTensors ac_ssl_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                          const Tensor& d_scores_unlab, const Tensor& cls_logits_real,
                          const Tensor& cls_logits_fake, const std::vector<int>& labels_real,
                          const std::vector<int>& labels_fake, float lambda);

// --- logging ----------------------------------------------------------------

struct LossBreakdown {
  std::optional<float> d_total, d_real, d_fake, d_aux, d_unlab;
  std::optional<float> g_total, g_adv, g_aux;

  void absorb_d(const DLossTerms& d);
  void absorb_g(const GLossTerms& g);
  bool finite() const;
  std::string dump() const;
};

}  // namespace mhgan
