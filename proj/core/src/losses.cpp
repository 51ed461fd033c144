#include "mhgan/losses.hpp"

#include <cmath>
#include <sstream>

namespace mhgan {

const char* loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::SaganHinge: return "SAGAN_Hinge";
    case LossVariant::Mhgan: return "MHGAN";
    case LossVariant::Acgan: return "ACGAN";
    case LossVariant::MhganSsl: return "MHGAN_SSL";
    case LossVariant::AcganSsl: return "ACGAN_SSL";
    case LossVariant::MhShared: return "MHShared";
  }
  return "?";
}

std::optional<LossVariant> parse_loss_variant(const std::string& name) {
  for (LossVariant v : {LossVariant::SaganHinge, LossVariant::Mhgan, LossVariant::Acgan,
                        LossVariant::MhganSsl, LossVariant::AcganSsl, LossVariant::MhShared})
    if (name == loss_variant_name(v)) return v;
  return std::nullopt;
}

bool variant_is_ssl(LossVariant v) {
  return v == LossVariant::MhganSsl || v == LossVariant::AcganSsl;
}

bool variant_needs_classifier(LossVariant v) { return v != LossVariant::SaganHinge; }

// ---------------------------------------------------------------------------
// per-term losses

Tensor hinge_d_real(const Tensor& scores) {
  return mean_all(relu(add_scalar(mul_scalar(scores, -1.0f), 1.0f)));
}

Tensor hinge_d_fake(const Tensor& scores) {
  return mean_all(relu(add_scalar(scores, 1.0f)));
}

Tensor hinge_g(const Tensor& scores) { return mul_scalar(mean_all(scores), -1.0f); }

namespace {

// Large enough to push the true class out of any competitor max, small enough
// to stay far from float32 overflow for sane logits.
constexpr float kExcludeShift = 1e9f;

void check_labels(const Tensor& logits, const std::vector<int>& y) {
  MHGAN_REQUIRE(logits.rank() == 2, "class logits must be [batch, K]");
  MHGAN_REQUIRE(static_cast<size_t>(logits.shape[0]) == y.size(), "labels do not match batch");
}

}  // namespace

Tensor multi_hinge(const Tensor& logits, const std::vector<int>& y) {
  check_labels(logits, y);
  const int k = logits.shape[1];
  MHGAN_REQUIRE(k >= 2, "multi-hinge needs at least two classes (no competitor otherwise)");
  Tensor hot = one_hot(y, k);
  Tensor competitor = max_axis(sub(logits, mul_scalar(hot, kExcludeShift)), 1).values;
  Tensor true_logit = sum_axis(mul(logits, hot), 1);
  return mean_all(relu(add_scalar(sub(competitor, true_logit), 1.0f)));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& y) {
  check_labels(logits, y);
  const int k = logits.shape[1];
  const int n = logits.shape[0];
  Tensor hot = one_hot(y, k);
  // detached per-row max: stabilizes the softmax without altering the function
  Tensor row_max = Tensor::zeros({n, 1});
  for (int i = 0; i < n; ++i) {
    float m = logits.values[static_cast<size_t>(i) * k];
    for (int j = 1; j < k; ++j)
      m = std::max(m, logits.values[static_cast<size_t>(i) * k + j]);
    row_max.values[i] = m;
  }
  Tensor shifted = sub(logits, tile_cols(row_max, k));
  Tensor e = mhgan::exp(shifted);
  Tensor p_true = div(sum_axis(mul(e, hot), 1), sum_axis(e, 1));
  return mul_scalar(mean_all(log_clamped(p_true, 1e-12f)), -1.0f);
}

std::vector<int> pseudo_label(const Tensor& logits) {
  MHGAN_REQUIRE(logits.rank() == 2, "class logits must be [batch, K]");
  const int n = logits.shape[0], k = logits.shape[1];
  std::vector<int> labels(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const float* row = logits.values.data() + static_cast<size_t>(i) * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    labels[static_cast<size_t>(i)] = best;
  }
  return labels;
}

Tensor margin_diagnostic(const Tensor& proj_scores, const std::vector<int>& y) {
  return multi_hinge(proj_scores, y);
}

// ---------------------------------------------------------------------------
// assemblies

DLossTerms sagan_d_loss(const Tensor& scores_real, const Tensor& scores_fake) {
  DLossTerms d;
  d.real = hinge_d_real(scores_real);
  d.fake = hinge_d_fake(scores_fake);
  d.total = add(d.real, d.fake);
  return d;
}

GLossTerms sagan_g_loss(const Tensor& scores_fake) {
  GLossTerms g;
  g.adv = hinge_g(scores_fake);
  g.total = g.adv;
  return g;
}

namespace {

DLossTerms d_loss_with_aux(const Tensor& scores_real, const Tensor& scores_fake, Tensor aux) {
  DLossTerms d;
  d.real = hinge_d_real(scores_real);
  d.fake = hinge_d_fake(scores_fake);
  d.aux = std::move(aux);
  d.total = add(add(d.real, d.fake), *d.aux);
  return d;
}

GLossTerms g_loss_with_aux(const Tensor& scores_fake, std::optional<Tensor> aux, float lambda) {
  GLossTerms g;
  g.adv = hinge_g(scores_fake);
  if (aux.has_value()) {
    g.aux = std::move(aux);
    g.total = add(g.adv, mul_scalar(*g.aux, lambda));
  } else {
    g.total = g.adv;
  }
  return g;
}

// (real + unlab)/2 + fake + aux
DLossTerms ssl_d_loss_with_aux(const Tensor& scores_real, const Tensor& scores_fake,
                               const Tensor& scores_unlab, Tensor aux) {
  DLossTerms d;
  d.real = hinge_d_real(scores_real);
  d.fake = hinge_d_fake(scores_fake);
  d.unlab = hinge_d_real(scores_unlab);
  d.aux = std::move(aux);
  Tensor half = mul_scalar(add(d.real, *d.unlab), 0.5f);
  d.total = add(add(half, d.fake), *d.aux);
  return d;
}

}  // namespace

DLossTerms mh_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                     const Tensor& cls_logits_real, const std::vector<int>& y_real) {
  return d_loss_with_aux(scores_real, scores_fake, multi_hinge(cls_logits_real, y_real));
}

GLossTerms mh_g_loss(const Tensor& scores_fake, const Tensor& cls_logits_fake,
                     const std::vector<int>& y_fake, float lambda) {
  MHGAN_REQUIRE(lambda >= 0.0f, "lambda must be nonnegative");
  std::optional<Tensor> aux;
  if (lambda > 0.0f) aux = multi_hinge(cls_logits_fake, y_fake);
  return g_loss_with_aux(scores_fake, std::move(aux), lambda);
}

DLossTerms ac_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                     const Tensor& cls_logits_real, const std::vector<int>& y_real) {
  return d_loss_with_aux(scores_real, scores_fake, cross_entropy(cls_logits_real, y_real));
}

GLossTerms ac_g_loss(const Tensor& scores_fake, const Tensor& cls_logits_fake,
                     const std::vector<int>& y_fake, float lambda) {
  MHGAN_REQUIRE(lambda >= 0.0f, "lambda must be nonnegative");
  std::optional<Tensor> aux;
  if (lambda > 0.0f) aux = cross_entropy(cls_logits_fake, y_fake);
  return g_loss_with_aux(scores_fake, std::move(aux), lambda);
}

DLossTerms mh_ssl_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                         const Tensor& scores_unlab, const Tensor& cls_logits_real,
                         const std::vector<int>& y_real) {
  return ssl_d_loss_with_aux(scores_real, scores_fake, scores_unlab,
                             multi_hinge(cls_logits_real, y_real));
}

DLossTerms ac_ssl_d_loss(const Tensor& scores_real, const Tensor& scores_fake,
                         const Tensor& scores_unlab, const Tensor& cls_logits_real,
                         const std::vector<int>& y_real) {
  return ssl_d_loss_with_aux(scores_real, scores_fake, scores_unlab,
                             cross_entropy(cls_logits_real, y_real));
}

LossTensors mh_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                      const Tensor& cls_logits_real, const Tensor& cls_logits_fake,
                      const std::vector<int>& labels_real, const std::vector<int>& labels_fake,
                      float lambda) {
  return {mh_d_loss(d_scores_real, d_scores_fake, cls_logits_real, labels_real),
          mh_g_loss(d_scores_fake, cls_logits_fake, labels_fake, lambda)};
}

LossTensors ssl_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                       const Tensor& d_scores_unlab, const Tensor& cls_logits_real,
                       const Tensor& cls_logits_fake, const std::vector<int>& labels_real,
                       const std::vector<int>& labels_fake, float lambda) {
  return {mh_ssl_d_loss(d_scores_real, d_scores_fake, d_scores_unlab, cls_logits_real,
                        labels_real),
          mh_g_loss(d_scores_fake, cls_logits_fake, labels_fake, lambda)};
}

LossTensors ac_ssl_losses(const Tensor& d_scores_real, const Tensor& d_scores_fake,
                          const Tensor& d_scores_unlab, const Tensor& cls_logits_real,
                          const Tensor& cls_logits_fake, const std::vector<int>& labels_real,
                          const std::vector<int>& labels_fake, float lambda) {
  return {ac_ssl_d_loss(d_scores_real, d_scores_fake, d_scores_unlab, cls_logits_real,
                        labels_real),
          ac_g_loss(d_scores_fake, cls_logits_fake, labels_fake, lambda)};
}

// ---------------------------------------------------------------------------
// breakdown

void LossBreakdown::absorb_d(const DLossTerms& d) {
  d_total = d.total.item();
  d_real = d.real.item();
  d_fake = d.fake.item();
  if (d.aux.has_value()) d_aux = d.aux->item();
  if (d.unlab.has_value()) d_unlab = d.unlab->item();
}

void LossBreakdown::absorb_g(const GLossTerms& g) {
  g_total = g.total.item();
  g_adv = g.adv.item();
  if (g.aux.has_value()) g_aux = g.aux->item();
}

bool LossBreakdown::finite() const {
  for (const auto& v : {d_total, d_real, d_fake, d_aux, d_unlab, g_total, g_adv, g_aux})
    if (v.has_value() && !std::isfinite(*v)) return false;
  return true;
}

std::string LossBreakdown::dump() const {
  std::ostringstream os;
  auto put = [&](const char* name, const std::optional<float>& v) {
    if (v.has_value()) os << " " << name << "=" << *v;
  };
  put("d_total", d_total);
  put("d_real", d_real);
  put("d_fake", d_fake);
  put("d_aux", d_aux);
  put("d_unlab", d_unlab);
  put("g_total", g_total);
  put("g_adv", g_adv);
  put("g_aux", g_aux);
  return os.str();
}

}  // namespace mhgan
