#include "mhgan/models.hpp"

namespace mhgan {

const char* head_mode_name(HeadMode mode) {
  switch (mode) {
    case HeadMode::ProjectionOnly: return "projection_only";
    case HeadMode::Aux: return "aux";
    case HeadMode::Shared: return "shared";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// GeneratorNet

GeneratorNet::GeneratorNet(int z_dim, int classes, int data_dim, Rng& init, int hidden,
                           int depth)
    : out("g.out", hidden, data_dim, /*spectral=*/true, 1.0f, init),
      z_dim_(z_dim),
      classes_(classes),
      data_dim_(data_dim) {
  MHGAN_REQUIRE(z_dim >= 1 && classes >= 1 && data_dim >= 1 && depth >= 1,
                "generator dimensions must be positive");
  trunk.reserve(static_cast<size_t>(depth));
  cbn.reserve(static_cast<size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    const int in = i == 0 ? z_dim : hidden;
    const std::string name = "g.lin" + std::to_string(i);
    trunk.emplace_back(name, in, hidden, /*spectral=*/true, 2.0f, init);
    cbn.emplace_back("g.cbn" + std::to_string(i), classes, hidden);
  }
}

Tensor GeneratorNet::forward(FwdCtx& ctx, const Tensor& z, const std::vector<int>& y) {
  MHGAN_REQUIRE(z.rank() == 2 && z.shape[1] == z_dim_, "latent batch shape mismatch");
  MHGAN_REQUIRE(static_cast<size_t>(z.shape[0]) == y.size(), "labels do not match latent batch");
  for (int label : y)
    MHGAN_REQUIRE(label >= 0 && label < classes_, "generator label out of range");
  Tensor h = z;
  for (size_t i = 0; i < trunk.size(); ++i) {
    h = trunk[i].forward(ctx, h);
    h = cbn[i].forward(ctx, h, y);
    h = relu(h);
  }
  return out.forward(ctx, h);  // unbounded data space, no output activation
}

std::vector<Parameter*> GeneratorNet::params() {
  std::vector<Parameter*> ps;
  for (auto& layer : trunk) layer.collect(ps);
  for (auto& bn : cbn) bn.collect(ps);
  out.collect(ps);
  return ps;
}

// ---------------------------------------------------------------------------
// CriticNet

CriticNet::CriticNet(int data_dim, int classes, HeadMode mode, Rng& init, int hidden,
                     int depth)
    : psi("d.psi", hidden, 1, /*spectral=*/true, 1.0f, init),
      embed("d.embed", classes, hidden, init),
      mode_(mode),
      data_dim_(data_dim),
      classes_(classes),
      feature_dim_(hidden) {
  MHGAN_REQUIRE(data_dim >= 1 && classes >= 1 && depth >= 1, "critic dimensions must be positive");
  trunk.reserve(static_cast<size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    const int in = i == 0 ? data_dim : hidden;
    trunk.emplace_back("d.lin" + std::to_string(i), in, hidden, /*spectral=*/true, 2.0f, init);
  }
  // psi_c is allocated last so configurations that differ only in head mode
  // share identical trunk/psi/embedding initializations for a given seed.
  if (mode_ == HeadMode::Aux)
    psi_c.emplace("d.psi_c", hidden, classes, /*spectral=*/true, 1.0f, init);

  // trunk, psi, and embed are constructed before this check runs
  MHGAN_REQUIRE(mode_ != HeadMode::Shared || !psi_c.has_value(),
                "shared mode must not allocate a classifier head");
}

Tensor CriticNet::features(FwdCtx& ctx, const Tensor& x) {
  MHGAN_REQUIRE(x.rank() == 2 && x.shape[1] == data_dim_, "critic input shape mismatch");
  Tensor h = x;
  for (auto& layer : trunk) h = relu(layer.forward(ctx, h));
  return h;
}

Tensor CriticNet::score(FwdCtx& ctx, const Tensor& feats, const std::vector<int>& y) {
  MHGAN_REQUIRE(static_cast<size_t>(feats.shape[0]) == y.size(), "labels do not match batch");
  for (int label : y)
    MHGAN_REQUIRE(label >= 0 && label < classes_, "critic label out of range");
  Tensor base = reshape(psi.forward(ctx, feats), {feats.shape[0]});
  Tensor proj = sum_axis(mul(feats, embed.rows(ctx, y)), 1);
  return add(base, proj);
}

Tensor CriticNet::all_class_scores(FwdCtx& ctx, const Tensor& feats) {
  Tensor base = tile_cols(psi.forward(ctx, feats), classes_);
  return add(base, matmul_nt(feats, ctx.use(embed.table)));
}

Tensor CriticNet::classify(FwdCtx& ctx, const Tensor& feats) {
  MHGAN_REQUIRE(mode_ != HeadMode::ProjectionOnly,
                "classify() is unavailable with a projection-only head");
  if (mode_ == HeadMode::Aux) return psi_c->forward(ctx, feats);
  return matmul_nt(feats, ctx.use(embed.table));
}

std::vector<Parameter*> CriticNet::params() {
  std::vector<Parameter*> ps;
  for (auto& layer : trunk) layer.collect(ps);
  psi.collect(ps);
  embed.collect(ps);
  if (psi_c.has_value()) psi_c->collect(ps);
  return ps;
}

Tensor critic_forward(CriticNet& critic, FwdCtx& ctx, const Tensor& x,
                      const std::vector<int>& y) {
  return critic.score(ctx, critic.features(ctx, x), y);
}

Tensor critic_all_classes(CriticNet& critic, FwdCtx& ctx, const Tensor& x) {
  return critic.all_class_scores(ctx, critic.features(ctx, x));
}

}  // namespace mhgan
