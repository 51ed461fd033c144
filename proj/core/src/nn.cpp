#include "mhgan/nn.hpp"

#include <cmath>

namespace mhgan {

void FwdCtx::attach(Parameter& p) {
  MHGAN_REQUIRE(tape_ != nullptr, "attach() needs a tape-backed context");
  bound_.emplace(&p, tape_->leaf(p.value));
}

void FwdCtx::bind(const Parameter& p, Tensor stand_in) {
  MHGAN_REQUIRE(stand_in.shape == p.value.shape, "bound stand-in shape differs from " + p.name);
  bound_[&p] = std::move(stand_in);
}

Tensor FwdCtx::use(const Parameter& p) const {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return it->second;
  return p.value;
}

Tensor FwdCtx::grad_of(const Parameter& p) const {
  auto it = bound_.find(&p);
  MHGAN_REQUIRE(it != bound_.end(), "gradient requested for unattached parameter " + p.name);
  return tape_->grad(it->second);
}

// ---------------------------------------------------------------------------
// LinearLayer

namespace {

Tensor gaussian_init(const Shape& shape, float variance, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  const float stddev = std::sqrt(variance);
  for (auto& v : t.values) v = stddev * rng.normal();
  return t;
}

// y += M x for row-major M [rows, cols]
void matvec(const std::vector<float>& m, int rows, int cols, const float* x, float* y) {
  for (int i = 0; i < rows; ++i) {
    const float* mi = m.data() + static_cast<size_t>(i) * cols;
    float acc = 0.0f;
    for (int j = 0; j < cols; ++j) acc += mi[j] * x[j];
    y[i] += acc;
  }
}

// y += M^T x
void matvec_t(const std::vector<float>& m, int rows, int cols, const float* x, float* y) {
  for (int i = 0; i < rows; ++i) {
    const float* mi = m.data() + static_cast<size_t>(i) * cols;
    const float xi = x[i];
    for (int j = 0; j < cols; ++j) y[j] += mi[j] * xi;
  }
}

float normalize_in_place(std::vector<float>& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const float norm = static_cast<float>(std::sqrt(sq));
  const float denom = norm > 1e-12f ? norm : 1e-12f;
  for (float& x : v) x /= denom;
  return norm;
}

}  // namespace

LinearLayer::LinearLayer(const std::string& name, int in, int out, bool spectral,
                         float variance_scale, Rng& init)
    : weight{name + ".w", gaussian_init({out, in}, variance_scale / static_cast<float>(in), init)},
      bias{name + ".b", Tensor::zeros({out})},
      in_(in),
      out_(out) {
  MHGAN_REQUIRE(in >= 1 && out >= 1, "layer dimensions must be positive");
  if (spectral) {
    sn_u.assign(static_cast<size_t>(out), 0.0f);
    for (auto& v : sn_u) v = init.normal();
    normalize_in_place(sn_u);
  }
}

Tensor LinearLayer::normalized_weight(FwdCtx& ctx) {
  Tensor w = ctx.use(weight);
  if (!spectral()) return w;

  // Power iteration runs on the raw stored weight, outside the tape.
  const std::vector<float>& raw = weight.value.values;
  std::vector<float> v(static_cast<size_t>(in_), 0.0f);
  matvec_t(raw, out_, in_, sn_u.data(), v.data());
  normalize_in_place(v);
  std::vector<float> u_next(static_cast<size_t>(out_), 0.0f);
  matvec(raw, out_, in_, v.data(), u_next.data());
  normalize_in_place(u_next);
  if (ctx.train()) sn_u = u_next;

  double sig = 0.0;
  for (int i = 0; i < out_; ++i) {
    const float* wi = raw.data() + static_cast<size_t>(i) * in_;
    double row = 0.0;
    for (int j = 0; j < in_; ++j) row += static_cast<double>(wi[j]) * v[j];
    sig += static_cast<double>(u_next[i]) * row;
  }
  last_sigma_ = static_cast<float>(sig);

  // sigma as a tape expression: sum(W * outer(u', v)), so gradients flow
  // through the normalization with u', v held constant.
  Tensor uv = Tensor::zeros({out_, in_});
  for (int i = 0; i < out_; ++i)
    for (int j = 0; j < in_; ++j)
      uv.values[static_cast<size_t>(i) * in_ + j] = u_next[i] * v[j];
  Tensor sigma = sum_all(mul(w, uv));
  return scale(w, recip(clamp_min(sigma, 1e-12f)));
}

Tensor LinearLayer::forward(FwdCtx& ctx, const Tensor& x) {
  MHGAN_REQUIRE(x.rank() == 2 && x.shape[1] == in_,
                "linear layer " + weight.name + " expects [B," + std::to_string(in_) + "], got " +
                    shape_str(x.shape));
  Tensor w = normalized_weight(ctx);
  return add(matmul_nt(x, w), ctx.use(bias));
}

void LinearLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// ConditionalBatchNorm

ConditionalBatchNorm::ConditionalBatchNorm(const std::string& name, int classes, int features)
    : gamma{name + ".gamma", Tensor::full({classes, features}, 1.0f)},
      beta{name + ".beta", Tensor::zeros({classes, features})},
      running_mean(static_cast<size_t>(features), 0.0f),
      running_var(static_cast<size_t>(features), 1.0f),
      classes_(classes),
      features_(features) {
  MHGAN_REQUIRE(classes >= 1 && features >= 1, "batch norm dimensions must be positive");
}

Tensor ConditionalBatchNorm::forward(FwdCtx& ctx, const Tensor& x, const std::vector<int>& y) {
  MHGAN_REQUIRE(x.rank() == 2 && x.shape[1] == features_, "batch norm shape mismatch");
  MHGAN_REQUIRE(static_cast<size_t>(x.shape[0]) == y.size(), "labels do not match batch");
  for (int label : y)
    MHGAN_REQUIRE(label >= 0 && label < classes_, "batch norm label out of range");

  Tensor xhat;
  if (ctx.train()) {
    MHGAN_REQUIRE(x.shape[0] >= 2, "train-mode batch norm needs batch size >= 2");
    Tensor mu = mean_axis(x, 0);
    Tensor centered = sub(x, mu);
    Tensor var = mean_axis(square(centered), 0);
    xhat = div(centered, mhgan::sqrt(add_scalar(var, eps)));
    for (int j = 0; j < features_; ++j) {
      running_mean[j] = momentum * running_mean[j] + (1.0f - momentum) * mu.values[j];
      running_var[j] = momentum * running_var[j] + (1.0f - momentum) * var.values[j];
    }
  } else {
    Tensor rm({features_}, running_mean);
    std::vector<float> denom(running_var.size());
    for (size_t j = 0; j < denom.size(); ++j) denom[j] = std::sqrt(running_var[j] + eps);
    xhat = div(sub(x, rm), Tensor({features_}, denom));
  }
  Tensor gain = index_select_rows(ctx.use(gamma), y);
  Tensor shift = index_select_rows(ctx.use(beta), y);
  return add(mul(xhat, gain), shift);
}

void ConditionalBatchNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(const std::string& name, int classes, int features, Rng& init)
    : table{name + ".table",
            gaussian_init({classes, features}, 1.0f / static_cast<float>(features), init)},
      classes_(classes),
      features_(features) {
  MHGAN_REQUIRE(classes >= 1 && features >= 1, "embedding dimensions must be positive");
}

Tensor EmbeddingMatrix::rows(FwdCtx& ctx, const std::vector<int>& y) const {
  return index_select_rows(ctx.use(table), y);
}

void EmbeddingMatrix::collect(std::vector<Parameter*>& out) { out.push_back(&table); }

// ---------------------------------------------------------------------------
// Adam

void adam_update(std::vector<float>& param, std::vector<float>& m, std::vector<float>& v,
                 const std::vector<float>& grad, int64_t t, const AdamConfig& cfg) {
  MHGAN_REQUIRE(param.size() == grad.size() && m.size() == param.size() && v.size() == param.size(),
                "adam_update shape mismatch");
  MHGAN_REQUIRE(t >= 1, "adam_update needs t >= 1");
  const float c1 = 1.0f - static_cast<float>(std::pow(static_cast<double>(cfg.beta1), static_cast<double>(t)));
  const float c2 = 1.0f - static_cast<float>(std::pow(static_cast<double>(cfg.beta2), static_cast<double>(t)));
  for (size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * grad[i] * grad[i];
    const float mhat = m[i] / c1;
    const float vhat = v[i] / c2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(AdamConfig cfg, std::vector<Parameter*> params)
    : cfg_(cfg), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.values.size(), 0.0f);
    v_.emplace_back(p->value.values.size(), 0.0f);
  }
}

void Adam::step(const FwdCtx& ctx) {
  ++t_;
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor g = ctx.grad_of(*params_[i]);
    adam_update(params_[i]->value.values, m_[i], v_[i], g.values, t_, cfg_);
  }
}

}  // namespace mhgan
