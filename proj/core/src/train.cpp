#include "mhgan/train.hpp"

#include "mhgan/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace mhgan {

namespace {

constexpr uint64_t kGenInitStream = 0x67;
constexpr uint64_t kCriticInitStream = 0xd7;
constexpr uint64_t kTrainStream = 0x7a;
constexpr uint64_t kEvalStream = 0xe7;
constexpr uint64_t kPoolStream = 0x90;
constexpr uint64_t kFidPoolStream = 0x91;
constexpr uint64_t kValPoolStream = 0x92;
constexpr uint64_t kSplitStream = 0x93;

GeneratorNet make_generator(const TrainConfig& cfg) {
  Rng rng(cfg.seed, kGenInitStream);
  return GeneratorNet(cfg.z_dim, class_count(cfg.dataset), data_dim(cfg.dataset), rng);
}

CriticNet make_critic(const TrainConfig& cfg) {
  Rng rng(cfg.seed, kCriticInitStream);
  return CriticNet(data_dim(cfg.dataset), class_count(cfg.dataset), cfg.head_mode, rng);
}

Batch make_pool(const TrainConfig& cfg) {
  // CSV datasets always train on the file contents; dataset_size applies to
  // the synthetic mixtures only.
  if (const auto* csv = std::get_if<CsvVectorsSpec>(&cfg.dataset.kind))
    return load_csv(csv->path, csv->dim, csv->k);
  if (cfg.dataset_size == 0) return Batch{};
  Rng rng(cfg.dataset.seed, kPoolStream);
  return sample_real(cfg.dataset, cfg.dataset_size, rng);
}

const TrainConfig& validated(const TrainConfig& cfg) {
  validate(cfg);
  return cfg;
}

}  // namespace

HeadMode default_head_mode(LossVariant v) {
  switch (v) {
    case LossVariant::SaganHinge: return HeadMode::ProjectionOnly;
    case LossVariant::MhShared: return HeadMode::Shared;
    default: return HeadMode::Aux;
  }
}

void apply_variant_defaults(TrainConfig& config, bool d_steps_set, bool lr_d_set,
                            bool head_mode_set) {
  if (!head_mode_set) config.head_mode = default_head_mode(config.variant);
  const bool acgan =
      config.variant == LossVariant::Acgan || config.variant == LossVariant::AcganSsl;
  if (!d_steps_set && acgan) config.d_steps_per_g = 2;
  if (!lr_d_set && config.variant == LossVariant::AcganSsl) config.lr_d = 5e-4f;
}

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("invalid config: " + key + " " + why);
  };
  if (cfg.d_steps_per_g < 1) fail("d_steps_per_g", "must be >= 1");
  if (!(cfg.lambda >= 0.0f)) fail("lambda", "must be >= 0");
  if (cfg.batch_size < 2) fail("batch_size", "must be >= 2");
  if (cfg.total_g_steps < 0) fail("total_g_steps", "must be >= 0");
  if (cfg.eval_interval < 1) fail("eval_interval", "must be >= 1");
  if (cfg.eval_samples < 2) fail("eval_samples", "must be >= 2");
  if (cfg.z_dim < 1) fail("z_dim", "must be >= 1");
  if (cfg.dataset_size < 0) fail("dataset_size", "must be >= 0 (0 selects the infinite sampler)");
  if (!(cfg.lr_g > 0.0f) || !(cfg.lr_d > 0.0f)) fail("lr_g/lr_d", "must be > 0");
  if (class_count(cfg.dataset) < 2) fail("dataset", "needs at least two classes");

  const bool ssl = variant_is_ssl(cfg.variant);
  if (ssl) {
    if (!(cfg.labeled_fraction > 0.0f && cfg.labeled_fraction < 1.0f))
      fail("labeled_fraction", "must be in (0,1) for SSL variants");
    if (cfg.dataset_size == 0 && !std::holds_alternative<CsvVectorsSpec>(cfg.dataset.kind))
      fail("dataset_size", "SSL needs a finite pool (the label split is over concrete examples)");
    if (cfg.batch_size % 2 != 0)
      fail("batch_size", "must be even for SSL (equal labeled/unlabeled sub-batches)");
  } else if (cfg.labeled_fraction != 1.0f) {
    fail("labeled_fraction", "must be 1.0 for fully supervised variants");
  }

  if (variant_needs_classifier(cfg.variant) && cfg.head_mode == HeadMode::ProjectionOnly)
    fail("head_mode", "this variant needs a classifier head (aux or shared)");
  if (cfg.variant == LossVariant::MhShared) {
    if (cfg.head_mode != HeadMode::Shared) fail("head_mode", "MHShared requires shared mode");
    if (cfg.switch_step < 0) fail("switch_step", "MHShared needs a switch step");
    if (cfg.switch_step >= cfg.total_g_steps && cfg.total_g_steps > 0)
      fail("switch_step", "must lie before total_g_steps");
  } else if (cfg.switch_step != -1) {
    fail("switch_step", "is only meaningful for MHShared");
  }
}

std::string resolve_out_dir(const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::path p(out_dir);
  const char* root = std::getenv("MHGAN_OUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative()) return (fs::path(root) / p).string();
  return p.string();
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const TrainConfig& config)
    : cfg_(validated(config)),
      gen_(make_generator(cfg_)),
      critic_(make_critic(cfg_)),
      opt_g_(AdamConfig{cfg_.lr_g, cfg_.adam_beta1, cfg_.adam_beta2, 1e-8f}, gen_.params()),
      opt_d_(AdamConfig{cfg_.lr_d, cfg_.adam_beta1, cfg_.adam_beta2, 1e-8f}, critic_.params()),
      train_rng_(cfg_.seed, kTrainStream),
      pool_(make_pool(cfg_)) {
  pools_ = make_eval_pools(cfg_.dataset, cfg_.eval_samples);

  if (pool_.size() > 0) {
    if (cfg_.labeled_fraction < 1.0f) {
      LabeledSplit split = split_labels(pool_.y, class_count(cfg_.dataset),
                                        cfg_.labeled_fraction,
                                        derive_seed(cfg_.dataset.seed, kSplitStream));
      pool_.labeled = split.labeled;
    }
    for (int i = 0; i < pool_.size(); ++i)
      (pool_.labeled[static_cast<size_t>(i)] ? labeled_rows_ : unlabeled_rows_).push_back(i);

    if (variant_is_ssl(cfg_.variant)) {
      MHGAN_REQUIRE(static_cast<int>(labeled_rows_.size()) >= cfg_.batch_size / 2,
                    "labeled pool smaller than the labeled sub-batch");
      MHGAN_REQUIRE(static_cast<int>(unlabeled_rows_.size()) >= cfg_.batch_size / 2,
                    "unlabeled pool smaller than the unlabeled sub-batch");
      iter_labeled_.order = labeled_rows_;
      iter_unlabeled_.order = unlabeled_rows_;
    } else {
      MHGAN_REQUIRE(pool_.size() >= cfg_.batch_size, "pool smaller than one batch");
      iter_all_.order.resize(static_cast<size_t>(pool_.size()));
      for (int i = 0; i < pool_.size(); ++i) iter_all_.order[static_cast<size_t>(i)] = i;
    }
  } else {
    MHGAN_REQUIRE(!variant_is_ssl(cfg_.variant), "SSL needs a finite pool");
  }
}

EvalPools make_eval_pools(const DatasetSpec& dataset, int eval_samples) {
  EvalPools pools;
  Rng fid_rng(dataset.seed, kFidPoolStream);
  pools.fid_real = sample_real(dataset, eval_samples, fid_rng);
  Rng val_rng(dataset.seed, kValPoolStream);
  pools.validation = sample_real(dataset, eval_samples, val_rng);
  return pools;
}

const OracleClassifier& Trainer::oracle() const {
  if (oracle_ == nullptr)
    oracle_ = std::make_unique<OracleClassifier>(
        OracleClassifier::fit(cfg_.dataset, cfg_.dataset.seed));
  return *oracle_;
}

LossVariant Trainer::effective_variant() const {
  if (cfg_.variant == LossVariant::MhShared && step_ < cfg_.switch_step)
    return LossVariant::SaganHinge;
  return cfg_.variant;
}

std::vector<int> Trainer::EpochIter::next(int n, Rng& rng) {
  MHGAN_REQUIRE(!order.empty(), "draw from an empty pool iterator");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    if (cursor >= static_cast<int64_t>(order.size())) cursor = 0;
    if (cursor == 0)
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
    out.push_back(order[static_cast<size_t>(cursor++)]);
  }
  return out;
}

Batch Trainer::gather(const std::vector<int>& rows) const {
  const int d = pool_.x.shape[1];
  Batch b;
  b.x = Tensor::zeros({static_cast<int>(rows.size()), d});
  b.y.resize(rows.size());
  b.labeled.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(pool_.x.values.data() + static_cast<size_t>(rows[i]) * d, d,
                b.x.values.data() + i * d);
    b.y[i] = pool_.y[static_cast<size_t>(rows[i])];
    b.labeled[i] = pool_.labeled[static_cast<size_t>(rows[i])];
  }
  return b;
}

Batch Trainer::next_real(int n, bool labeled_only) {
  if (pool_.size() == 0) return sample_real(cfg_.dataset, n, train_rng_);
  EpochIter& iter = labeled_only ? iter_labeled_ : iter_all_;
  return gather(iter.next(n, train_rng_));
}

Batch Trainer::next_unlabeled(int n) { return gather(iter_unlabeled_.next(n, train_rng_)); }

LossBreakdown Trainer::d_step() {
  const LossVariant eff = effective_variant();
  const bool ssl = variant_is_ssl(eff);
  const int classes = class_count(cfg_.dataset);
  const int real_n = ssl ? cfg_.batch_size / 2 : cfg_.batch_size;

  Batch rb = next_real(real_n, /*labeled_only=*/ssl);

  // fresh fakes, generated off-tape: constants with respect to the critic update
  auto [z, yf] = sample_latent(real_n, cfg_.z_dim, classes, train_rng_);
  FwdCtx gen_ctx = FwdCtx::train_eager();
  Tensor fake_x = gen_.forward(gen_ctx, z, yf);

  if (tracing_) {
    trace_ = StepTrace{};
    trace_.real = rb;
    trace_.fake_x = fake_x;
    trace_.fake_y = yf;
  }

  Tape tape;
  FwdCtx ctx(tape, true);
  for (Parameter* p : critic_.params()) ctx.attach(*p);

  Tensor feats_r = critic_.features(ctx, rb.x);
  Tensor s_r = critic_.score(ctx, feats_r, rb.y);
  Tensor feats_f = critic_.features(ctx, fake_x);
  Tensor s_f = critic_.score(ctx, feats_f, yf);

  auto guard_aux = [&](const Batch& b) {
    aux_seen_ += b.size();
    int unlabeled = 0;
    for (uint8_t f : b.labeled) unlabeled += f == 0;
    aux_unlabeled_ += unlabeled;
    MHGAN_REQUIRE(unlabeled == 0, "unlabeled example reached a classifier loss term");
  };

  DLossTerms d;
  switch (eff) {
    case LossVariant::SaganHinge:
      d = sagan_d_loss(s_r, s_f);
      break;
    case LossVariant::Mhgan:
    case LossVariant::MhShared: {
      guard_aux(rb);
      d = mh_d_loss(s_r, s_f, critic_.classify(ctx, feats_r), rb.y);
      break;
    }
    case LossVariant::Acgan: {
      guard_aux(rb);
      d = ac_d_loss(s_r, s_f, critic_.classify(ctx, feats_r), rb.y);
      break;
    }
    case LossVariant::MhganSsl:
    case LossVariant::AcganSsl: {
      Batch ub = next_unlabeled(cfg_.batch_size / 2);
      if (tracing_) trace_.unlab = ub;
      Tensor feats_u = critic_.features(ctx, ub.x);
      const std::vector<int> pseudo = pseudo_label(critic_.classify(ctx, feats_u));
      Tensor s_u = critic_.score(ctx, feats_u, pseudo);
      guard_aux(rb);
      Tensor cls_r = critic_.classify(ctx, feats_r);
      d = eff == LossVariant::MhganSsl ? mh_ssl_d_loss(s_r, s_f, s_u, cls_r, rb.y)
                                       : ac_ssl_d_loss(s_r, s_f, s_u, cls_r, rb.y);
      break;
    }
  }

  LossBreakdown bd;
  bd.absorb_d(d);
  if (!bd.finite())
    throw TrainingDiverged("non-finite discriminator loss at step " + std::to_string(step_) +
                           ":" + bd.dump());
  tape.backward(d.total);
  opt_d_.step(ctx);

  last_losses_.d_total = bd.d_total;
  last_losses_.d_real = bd.d_real;
  last_losses_.d_fake = bd.d_fake;
  last_losses_.d_aux = bd.d_aux;
  last_losses_.d_unlab = bd.d_unlab;
  return bd;
}

LossBreakdown Trainer::g_step() {
  const LossVariant eff = effective_variant();
  const int classes = class_count(cfg_.dataset);

  auto [z, yf] = sample_latent(cfg_.batch_size, cfg_.z_dim, classes, train_rng_);
  Tape tape;
  FwdCtx ctx(tape, true);
  for (Parameter* p : gen_.params()) ctx.attach(*p);

  Tensor fake = gen_.forward(ctx, z, yf);
  Tensor feats = critic_.features(ctx, fake);
  Tensor s_f = critic_.score(ctx, feats, yf);

  GLossTerms g;
  switch (eff) {
    case LossVariant::SaganHinge:
      g = sagan_g_loss(s_f);
      break;
    case LossVariant::Mhgan:
    case LossVariant::MhShared:
    case LossVariant::MhganSsl:
      g = cfg_.lambda > 0.0f ? mh_g_loss(s_f, critic_.classify(ctx, feats), yf, cfg_.lambda)
                             : sagan_g_loss(s_f);
      break;
    case LossVariant::Acgan:
    case LossVariant::AcganSsl:
      g = cfg_.lambda > 0.0f ? ac_g_loss(s_f, critic_.classify(ctx, feats), yf, cfg_.lambda)
                             : sagan_g_loss(s_f);
      break;
  }

  LossBreakdown bd;
  bd.absorb_g(g);
  if (!bd.finite())
    throw TrainingDiverged("non-finite generator loss at step " + std::to_string(step_) + ":" +
                           bd.dump());
  tape.backward(g.total);
  opt_g_.step(ctx);
  ++step_;

  last_losses_.g_total = bd.g_total;
  last_losses_.g_adv = bd.g_adv;
  last_losses_.g_aux = bd.g_aux;
  return bd;
}

LossBreakdown Trainer::full_step() {
  for (int i = 0; i < cfg_.d_steps_per_g; ++i) d_step();
  g_step();
  return last_losses_;
}

MetricsReport Trainer::evaluate(uint64_t eval_seed) const {
  MetricsReport report =
      evaluate_snapshot(gen_, critic_, oracle(), pools_, cfg_.eval_samples, eval_seed, step_);
  report.losses = last_losses_;
  return report;
}

MetricsReport Trainer::evaluate() const {
  return evaluate(derive_seed(derive_seed(cfg_.seed, kEvalStream), static_cast<uint64_t>(step_)));
}

bool Trainer::note_fid(float fid) {
  if (!best_set_ || fid < best_fid_) {
    best_fid_ = fid;
    best_fid_step_ = step_;
    best_set_ = true;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

std::string layer_base(const LinearLayer& layer) {
  const std::string& w = layer.weight.name;  // "<base>.w"
  return w.substr(0, w.size() - 2);
}

std::string cbn_base(const ConditionalBatchNorm& bn) {
  const std::string& g = bn.gamma.name;  // "<base>.gamma"
  return g.substr(0, g.size() - 6);
}

void save_linear_state(CheckpointData& data, const LinearLayer& layer) {
  if (layer.spectral())
    data.tensors.push_back(
        {layer_base(layer) + ".u", Tensor({layer.out_dim()}, layer.sn_u)});
}

void load_linear_state(const CheckpointData& data, LinearLayer& layer) {
  if (layer.spectral()) {
    const Tensor& u = data.require(layer_base(layer) + ".u");
    if (u.values.size() != layer.sn_u.size())
      throw CheckpointError("spectral state size mismatch for " + layer_base(layer));
    layer.sn_u = u.values;
  }
}

void save_cbn_state(CheckpointData& data, const ConditionalBatchNorm& bn) {
  const std::string base = cbn_base(bn);
  data.tensors.push_back(
      {base + ".rmean", Tensor({static_cast<int>(bn.running_mean.size())}, bn.running_mean)});
  data.tensors.push_back(
      {base + ".rvar", Tensor({static_cast<int>(bn.running_var.size())}, bn.running_var)});
}

void load_cbn_state(const CheckpointData& data, ConditionalBatchNorm& bn) {
  const std::string base = cbn_base(bn);
  bn.running_mean = data.require(base + ".rmean").values;
  bn.running_var = data.require(base + ".rvar").values;
}

void save_params(CheckpointData& data, const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) data.tensors.push_back({p->name, p->value});
}

void load_params(const CheckpointData& data, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const Tensor& t = data.require(p->name);
    if (t.shape != p->value.shape)
      throw CheckpointError("tensor '" + p->name + "' has shape " + shape_str(t.shape) +
                            ", expected " + shape_str(p->value.shape));
    p->value.values = t.values;
  }
}

void save_generator_state(CheckpointData& data, GeneratorNet& gen) {
  save_params(data, gen.params());
  for (const auto& layer : gen.trunk) save_linear_state(data, layer);
  save_linear_state(data, gen.out);
  for (const auto& bn : gen.cbn) save_cbn_state(data, bn);
}

void load_generator_state(const CheckpointData& data, GeneratorNet& gen) {
  load_params(data, gen.params());
  for (auto& layer : gen.trunk) load_linear_state(data, layer);
  load_linear_state(data, gen.out);
  for (auto& bn : gen.cbn) load_cbn_state(data, bn);
}

void save_critic_state(CheckpointData& data, CriticNet& critic) {
  save_params(data, critic.params());
  for (const auto& layer : critic.trunk) save_linear_state(data, layer);
  save_linear_state(data, critic.psi);
  if (critic.psi_c.has_value()) save_linear_state(data, *critic.psi_c);
}

void load_critic_state(const CheckpointData& data, CriticNet& critic) {
  load_params(data, critic.params());
  for (auto& layer : critic.trunk) load_linear_state(data, layer);
  load_linear_state(data, critic.psi);
  if (critic.psi_c.has_value()) load_linear_state(data, *critic.psi_c);
}

void save_adam_state(CheckpointData& data, const std::string& prefix, Adam& opt) {
  const auto& params = opt.params();
  for (size_t i = 0; i < params.size(); ++i) {
    data.tensors.push_back({prefix + "." + params[i]->name + ".m",
                            Tensor(params[i]->value.shape, opt.moment1(i))});
    data.tensors.push_back({prefix + "." + params[i]->name + ".v",
                            Tensor(params[i]->value.shape, opt.moment2(i))});
  }
  data.tensors.push_back(
      {prefix + ".t", Tensor({1}, {static_cast<float>(opt.step_count())})});
}

void load_adam_state(const CheckpointData& data, const std::string& prefix, Adam& opt) {
  const auto& params = opt.params();
  for (size_t i = 0; i < params.size(); ++i) {
    opt.moment1(i) = data.require(prefix + "." + params[i]->name + ".m").values;
    opt.moment2(i) = data.require(prefix + "." + params[i]->name + ".v").values;
  }
  opt.set_step_count(static_cast<int64_t>(data.require(prefix + ".t").values[0]));
}

void save_scalar(CheckpointData& data, const std::string& name, float v) {
  data.tensors.push_back({name, Tensor({1}, {v})});
}

void save_iter(CheckpointData& data, const std::string& name,
               const std::vector<int>& order, int64_t cursor) {
  std::vector<float> as_float(order.size());
  for (size_t i = 0; i < order.size(); ++i) as_float[i] = static_cast<float>(order[i]);
  data.tensors.push_back({name + ".order", Tensor({static_cast<int>(order.size())}, as_float)});
  save_scalar(data, name + ".cursor", static_cast<float>(cursor));
}

void load_iter(const CheckpointData& data, const std::string& name, std::vector<int>& order,
               int64_t& cursor) {
  const Tensor& t = data.require(name + ".order");
  if (t.values.size() != order.size())
    throw CheckpointError("iterator '" + name + "' does not match the configured pool");
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(t.values[i]);
  cursor = static_cast<int64_t>(data.require(name + ".cursor").values[0]);
}

constexpr const char* kLossMetaNames[8] = {"d_total", "d_real",  "d_fake", "d_aux",
                                           "d_unlab", "g_total", "g_adv",  "g_aux"};

std::optional<float>* loss_field(LossBreakdown& bd, int i) {
  std::optional<float>* fields[8] = {&bd.d_total, &bd.d_real,  &bd.d_fake, &bd.d_aux,
                                     &bd.d_unlab, &bd.g_total, &bd.g_adv,  &bd.g_aux};
  return fields[i];
}

}  // namespace

CheckpointData Trainer::checkpoint() const {
  CheckpointData data;
  auto& self = const_cast<Trainer&>(*this);  // state assembly only, no mutation
  save_generator_state(data, self.gen_);
  save_critic_state(data, self.critic_);
  save_adam_state(data, "opt_g", self.opt_g_);
  save_adam_state(data, "opt_d", self.opt_d_);

  save_scalar(data, "meta.head_mode", static_cast<float>(static_cast<int>(critic_.mode())));
  save_scalar(data, "meta.best_set", best_set_ ? 1.0f : 0.0f);
  save_scalar(data, "meta.best_fid", best_fid_);
  save_scalar(data, "meta.best_step", static_cast<float>(best_fid_step_));

  LossBreakdown bd = last_losses_;
  for (int i = 0; i < 8; ++i)
    if (loss_field(bd, i)->has_value())
      save_scalar(data, std::string("meta.loss.") + kLossMetaNames[i], **loss_field(bd, i));

  if (pool_.size() > 0) {
    if (variant_is_ssl(cfg_.variant)) {
      save_iter(data, "data.labeled", iter_labeled_.order, iter_labeled_.cursor);
      save_iter(data, "data.unlabeled", iter_unlabeled_.order, iter_unlabeled_.cursor);
    } else {
      save_iter(data, "data.all", iter_all_.order, iter_all_.cursor);
    }
  }

  data.step = static_cast<uint64_t>(step_);
  data.rng_state = train_rng_.state();
  return data;
}

void Trainer::save_checkpoint(const std::string& path) const {
  write_checkpoint(path, checkpoint());
}

void Trainer::restore(const CheckpointData& data) {
  load_generator_state(data, gen_);
  load_critic_state(data, critic_);
  load_adam_state(data, "opt_g", opt_g_);
  load_adam_state(data, "opt_d", opt_d_);

  best_set_ = data.require("meta.best_set").values[0] != 0.0f;
  best_fid_ = data.require("meta.best_fid").values[0];
  best_fid_step_ = static_cast<int64_t>(data.require("meta.best_step").values[0]);

  last_losses_ = LossBreakdown{};
  for (int i = 0; i < 8; ++i)
    if (const Tensor* t = data.find(std::string("meta.loss.") + kLossMetaNames[i]))
      *loss_field(last_losses_, i) = t->values[0];

  if (pool_.size() > 0) {
    if (variant_is_ssl(cfg_.variant)) {
      load_iter(data, "data.labeled", iter_labeled_.order, iter_labeled_.cursor);
      load_iter(data, "data.unlabeled", iter_unlabeled_.order, iter_unlabeled_.cursor);
    } else {
      load_iter(data, "data.all", iter_all_.order, iter_all_.cursor);
    }
  }

  step_ = static_cast<int64_t>(data.step);
  train_rng_.set_state(data.rng_state);
}

void Trainer::load_checkpoint(const std::string& path) { restore(read_checkpoint(path)); }

RestoredNets restore_nets(const CheckpointData& data) {
  RestoredNets nets;
  const Tensor& g_lin0 = data.require("g.lin0.w");
  const Tensor& g_out = data.require("g.out.w");
  const Tensor& g_cbn = data.require("g.cbn0.gamma");
  const int z_dim = g_lin0.shape[1];
  const int hidden = g_lin0.shape[0];
  const int data_dim = g_out.shape[0];
  const int classes = g_cbn.shape[0];
  int g_depth = 0;
  while (data.find("g.lin" + std::to_string(g_depth) + ".w") != nullptr) ++g_depth;
  int d_depth = 0;
  while (data.find("d.lin" + std::to_string(d_depth) + ".w") != nullptr) ++d_depth;
  const auto mode = static_cast<HeadMode>(
      static_cast<int>(data.require("meta.head_mode").values[0]));

  Rng scratch(0);
  nets.gen = std::make_unique<GeneratorNet>(z_dim, classes, data_dim, scratch, hidden, g_depth);
  nets.critic = std::make_unique<CriticNet>(data_dim, classes, mode, scratch, hidden, d_depth);
  load_generator_state(data, *nets.gen);
  load_critic_state(data, *nets.critic);
  nets.step = static_cast<int64_t>(data.step);
  return nets;
}

// ---------------------------------------------------------------------------
// CSV

std::string metrics_csv_header() {
  return "step,loss_d,loss_g,loss_d_real,loss_d_fake,loss_d_aux,loss_d_unlab,loss_g_adv,"
         "loss_g_aux,toy_fid,intra_fid_mean,is_analog,val_acc,self_acc,d_acc_real,"
         "proj_cls_acc,margin_diag,sigma1,sigma2,sigma3,sigma4,sigma5,sigma6,sigma7,sigma8";
}

namespace {

void append_float(std::string& row, const std::optional<float>& v) {
  row.push_back(',');
  if (v.has_value()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(*v));
    row += buf;
  }
}

void append_double(std::string& row, const std::optional<double>& v) {
  row.push_back(',');
  if (v.has_value()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", *v);
    row += buf;
  }
}

}  // namespace

std::string metrics_csv_row(const MetricsReport& report) {
  std::string row = std::to_string(report.step);
  append_float(row, report.losses.d_total);
  append_float(row, report.losses.g_total);
  append_float(row, report.losses.d_real);
  append_float(row, report.losses.d_fake);
  append_float(row, report.losses.d_aux);
  append_float(row, report.losses.d_unlab);
  append_float(row, report.losses.g_adv);
  append_float(row, report.losses.g_aux);
  append_double(row, report.toy_fid);
  append_double(row, report.intra.mean);
  append_double(row, report.is_analog);
  append_double(row, report.acc.validation);
  append_double(row, report.acc.self);
  append_double(row, std::optional<double>(report.acc.discriminator));
  append_double(row, std::optional<double>(report.acc.projection_cls));
  append_double(row, report.margin_diag);
  for (int i = 0; i < 8; ++i)
    append_double(row, i < static_cast<int>(report.spectrum.size())
                           ? std::optional<double>(report.spectrum[static_cast<size_t>(i)])
                           : std::nullopt);
  return row;
}

// ---------------------------------------------------------------------------
// driver

void run(const TrainConfig& config, const RunSettings& settings,
         const std::string& config_echo_json) {
  validate(config);
  namespace fs = std::filesystem;
  const fs::path dir = resolve_out_dir(settings.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);

  std::ofstream csv(dir / "metrics.csv", std::ios::trunc);
  if (!csv) throw ConfigError("output directory '" + dir.string() + "' is not writable");
  {
    const std::string echo_text =
        config_echo_json.empty() ? config_echo(RunConfig{config, settings}) : config_echo_json;
    std::ofstream echo(dir / "config.json", std::ios::trunc);
    echo << echo_text;
    if (echo_text.back() != '\n') echo << "\n";
  }

  Trainer trainer(config);
  if (!settings.resume_from.empty()) trainer.load_checkpoint(settings.resume_from);

  csv << metrics_csv_header() << "\n";
  auto emit = [&](const MetricsReport& report) {
    csv << metrics_csv_row(report) << "\n";
    csv.flush();
    if (report.toy_fid.has_value() && trainer.note_fid(static_cast<float>(*report.toy_fid)))
      trainer.save_checkpoint((dir / "ckpt_best.mhg").string());
    std::fprintf(stderr, "step %" PRId64 "/%d fid=%s self=%s\n", report.step,
                 config.total_g_steps,
                 report.toy_fid ? std::to_string(*report.toy_fid).c_str() : "-",
                 report.acc.self ? std::to_string(*report.acc.self).c_str() : "-");
  };

  emit(trainer.evaluate());
  while (trainer.step() < config.total_g_steps) {
    trainer.full_step();
    const int64_t s = trainer.step();
    if (s % config.eval_interval == 0 || s == config.total_g_steps) emit(trainer.evaluate());
    if (settings.checkpoint_interval > 0 && s % settings.checkpoint_interval == 0)
      trainer.save_checkpoint((dir / ("ckpt_step" + std::to_string(s) + ".mhg")).string());
  }
  trainer.save_checkpoint((dir / "ckpt_final.mhg").string());
}

}  // namespace mhgan
