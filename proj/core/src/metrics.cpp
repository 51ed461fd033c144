#include "mhgan/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace mhgan {

namespace {

constexpr double kCovRegularizer = 1e-6;

DMat to_dmat(const Tensor& t) {
  MHGAN_REQUIRE(t.rank() == 2, "expected a rank-2 tensor");
  DMat m(t.shape[0], t.shape[1]);
  for (size_t i = 0; i < t.values.size(); ++i) m.a[i] = t.values[i];
  return m;
}

DMat regularized(const DMat& cov) {
  DMat r = cov;
  for (int i = 0; i < r.rows; ++i) r.at(i, i) += kCovRegularizer;
  return r;
}

Tensor select_rows(const Tensor& x, const std::vector<int>& rows) {
  const int d = x.shape[1];
  Tensor out = Tensor::zeros({static_cast<int>(rows.size()), d});
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(x.values.data() + static_cast<size_t>(rows[i]) * d, d,
                out.values.data() + i * d);
  return out;
}

}  // namespace

GaussianStats fit_gaussian(const Tensor& features) {
  MHGAN_REQUIRE(features.rank() == 2, "fit_gaussian expects [n, d] features");
  const int n = features.shape[0], d = features.shape[1];
  MHGAN_REQUIRE(n >= 2, "fit_gaussian needs at least two samples");

  GaussianStats stats;
  stats.count = n;
  stats.mean.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      stats.mean[static_cast<size_t>(j)] += features.values[static_cast<size_t>(i) * d + j];
  for (auto& m : stats.mean) m /= n;

  stats.cov = DMat(d, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      const double da = features.values[static_cast<size_t>(i) * d + a] - stats.mean[static_cast<size_t>(a)];
      for (int b = a; b < d; ++b) {
        const double db = features.values[static_cast<size_t>(i) * d + b] - stats.mean[static_cast<size_t>(b)];
        stats.cov.at(a, b) += da * db;
      }
    }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const double v = stats.cov.at(a, b) / (n - 1);
      stats.cov.at(a, b) = v;
      stats.cov.at(b, a) = v;  // (S + S^T)/2 is the identity here by construction
    }
  return stats;
}

DMat matrix_sqrt_spd(const DMat& a) {
  MHGAN_REQUIRE(a.rows == a.cols, "matrix_sqrt_spd expects a square matrix");
  MHGAN_REQUIRE(max_abs_asymmetry(a) <= 1e-5, "matrix_sqrt_spd input is not symmetric");
  DMat vecs;
  std::vector<double> eig;
  eigh_symmetric(a, vecs, eig);
  DMat root(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.rows; ++k) {
        const double s = std::sqrt(std::max(eig[static_cast<size_t>(k)], 0.0));
        acc += vecs.at(i, k) * s * vecs.at(j, k);
      }
      root.at(i, j) = acc;
    }
  return root;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  MHGAN_REQUIRE(a.dim() == b.dim(), "frechet_distance dimension mismatch");
  const int d = a.dim();

  double mean_sq = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = a.mean[static_cast<size_t>(i)] - b.mean[static_cast<size_t>(i)];
    mean_sq += diff * diff;
  }

  const DMat sa = regularized(a.cov);
  const DMat sb = regularized(b.cov);
  const DMat sa_half = matrix_sqrt_spd(sa);
  // sqrt(Sa^1/2 Sb Sa^1/2): symmetric form of the (Sa Sb)^1/2 cross term
  DMat inner = matmul(matmul(sa_half, sb), sa_half);
  // symmetrize away rounding before the second root
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double v = 0.5 * (inner.at(i, j) + inner.at(j, i));
      inner.at(i, j) = v;
      inner.at(j, i) = v;
    }
  const DMat cross = matrix_sqrt_spd(inner);

  double fid = mean_sq + trace(sa) + trace(sb) - 2.0 * trace(cross);
  MHGAN_REQUIRE(fid > -1e-6, "frechet_distance is negative beyond rounding");
  return std::max(fid, 0.0);
}

// ---------------------------------------------------------------------------
// oracle classifier

OracleClassifier OracleClassifier::fit(const DatasetSpec& spec, uint64_t seed) {
  return fit(spec, seed, Hyper());
}

OracleClassifier OracleClassifier::fit(const DatasetSpec& spec, uint64_t seed,
                                        const Hyper& hyper) {
  OracleClassifier oracle;
  oracle.classes_ = class_count(spec);
  oracle.feature_dim_ = hyper.hidden;
  const int dim = data_dim(spec);

  Rng init_rng(seed, 0xa0c1e5ull);
  for (int i = 0; i < hyper.depth; ++i) {
    const int in = i == 0 ? dim : hyper.hidden;
    oracle.layers_.emplace_back("oracle.lin" + std::to_string(i), in, hyper.hidden,
                                /*spectral=*/false, 2.0f, init_rng);
  }
  oracle.layers_.emplace_back("oracle.head", hyper.hidden, oracle.classes_, /*spectral=*/false,
                              1.0f, init_rng);

  Rng data_rng(spec.seed, 0xa0c1e5da7aull);
  Batch pool = sample_real(spec, hyper.train_samples, data_rng);

  std::vector<Parameter*> params;
  for (auto& layer : oracle.layers_) layer.collect(params);
  Adam opt(AdamConfig{hyper.lr, 0.9f, 0.999f, 1e-8f}, params);

  Rng batch_rng(seed, 0xba7c4ull);
  auto train_acc = [&] {
    return fraction_correct(oracle.predict(pool.x), pool.y);
  };

  float acc = 0.0f;
  for (int step = 0; step < hyper.max_steps; ++step) {
    Tensor xb = Tensor::zeros({hyper.batch, dim});
    std::vector<int> yb(static_cast<size_t>(hyper.batch));
    for (int i = 0; i < hyper.batch; ++i) {
      const int row = batch_rng.uniform_int(pool.size());
      yb[static_cast<size_t>(i)] = pool.y[static_cast<size_t>(row)];
      std::copy_n(pool.x.values.data() + static_cast<size_t>(row) * dim, dim,
                  xb.values.data() + static_cast<size_t>(i) * dim);
    }
    Tape tape;
    FwdCtx ctx(tape, true);
    for (Parameter* p : params) ctx.attach(*p);
    Tensor h = xb;
    for (size_t l = 0; l + 1 < oracle.layers_.size(); ++l)
      h = relu(oracle.layers_[l].forward(ctx, h));
    Tensor loss = cross_entropy(oracle.layers_.back().forward(ctx, h), yb);
    tape.backward(loss);
    opt.step(ctx);

    if ((step + 1) % 200 == 0) {
      acc = static_cast<float>(train_acc());
      if (acc >= hyper.target_accuracy) break;
    }
  }
  oracle.train_accuracy_ = acc > 0.0f ? acc : static_cast<float>(train_acc());
  return oracle;
}

Tensor OracleClassifier::features(const Tensor& x) const {
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor h = x;
  for (size_t l = 0; l + 1 < layers_.size(); ++l) h = relu(layers_[l].forward(ctx, h));
  return h;
}

Tensor OracleClassifier::logits(const Tensor& x) const {
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor h = features(x);
  return layers_.back().forward(ctx, h);
}

std::vector<int> OracleClassifier::predict(const Tensor& x) const {
  return pseudo_label(logits(x));
}

DMat OracleClassifier::posterior(const Tensor& x) const {
  Tensor l = logits(x);
  const int n = l.shape[0], k = l.shape[1];
  DMat p(n, k);
  for (int i = 0; i < n; ++i) {
    const float* row = l.values.data() + static_cast<size_t>(i) * k;
    double m = row[0];
    for (int j = 1; j < k; ++j) m = std::max(m, static_cast<double>(row[j]));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j]) - m);
    for (int j = 0; j < k; ++j)
      p.at(i, j) = std::exp(static_cast<double>(row[j]) - m) / denom;
  }
  return p;
}

// ---------------------------------------------------------------------------
// scores

namespace {

Tensor fid_features(const Tensor& x, const OracleClassifier* oracle) {
  if (x.shape[1] == 2) return x;  // raw coordinates are the 2-d feature space
  MHGAN_REQUIRE(oracle != nullptr, "FID on non-2d data needs the oracle feature map");
  return oracle->features(x);
}

}  // namespace

double toy_fid(const Tensor& real_x, const Tensor& fake_x, const OracleClassifier* oracle) {
  MHGAN_REQUIRE(real_x.shape[1] == fake_x.shape[1], "real/fake dimensions differ");
  return frechet_distance(fit_gaussian(fid_features(real_x, oracle)),
                          fit_gaussian(fid_features(fake_x, oracle)));
}

IntraFid intra_fid(const Tensor& real_x, const std::vector<int>& real_y, const Tensor& fake_x,
                   const std::vector<int>& fake_y, int classes, const OracleClassifier* oracle) {
  IntraFid result;
  result.per_class.assign(static_cast<size_t>(classes), std::nullopt);
  const Tensor real_f = fid_features(real_x, oracle);
  const Tensor fake_f = fid_features(fake_x, oracle);
  const int need = real_f.shape[1] + 1;

  bool all_present = true;
  double sum = 0.0;
  for (int cls = 0; cls < classes; ++cls) {
    std::vector<int> ridx, fidx;
    for (size_t i = 0; i < real_y.size(); ++i)
      if (real_y[i] == cls) ridx.push_back(static_cast<int>(i));
    for (size_t i = 0; i < fake_y.size(); ++i)
      if (fake_y[i] == cls) fidx.push_back(static_cast<int>(i));
    if (static_cast<int>(ridx.size()) < need || static_cast<int>(fidx.size()) < need) {
      all_present = false;
      continue;
    }
    const double fid = frechet_distance(fit_gaussian(select_rows(real_f, ridx)),
                                        fit_gaussian(select_rows(fake_f, fidx)));
    result.per_class[static_cast<size_t>(cls)] = fid;
    sum += fid;
  }
  if (all_present && classes > 0) result.mean = sum / classes;
  return result;
}

double inception_like_score(const Tensor& fake_x, const OracleClassifier& oracle) {
  const DMat p = oracle.posterior(fake_x);
  const int n = p.rows, k = p.cols;
  std::vector<double> marginal(static_cast<size_t>(k), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) marginal[static_cast<size_t>(j)] += p.at(i, j);
  for (auto& m : marginal) m /= n;

  double mean_kl = 0.0;
  for (int i = 0; i < n; ++i) {
    double kl = 0.0;
    for (int j = 0; j < k; ++j) {
      const double pij = p.at(i, j);
      if (pij > 0.0 && marginal[static_cast<size_t>(j)] > 0.0)
        kl += pij * std::log(pij / marginal[static_cast<size_t>(j)]);
    }
    mean_kl += std::max(kl, 0.0);
  }
  mean_kl /= n;
  return std::clamp(std::exp(mean_kl), 1.0, static_cast<double>(k));
}

std::vector<double> embedding_spectrum(const Tensor& table) {
  return singular_values(to_dmat(table));
}

double fraction_correct(const std::vector<int>& predicted, const std::vector<int>& truth) {
  MHGAN_REQUIRE(predicted.size() == truth.size() && !truth.empty(),
                "fraction_correct needs matching nonempty vectors");
  int hits = 0;
  for (size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Accuracies compute_accuracies(GeneratorNet gen, CriticNet critic, const Batch& validation,
                              int n_eval, uint64_t eval_seed) {
  MHGAN_REQUIRE(n_eval >= 1, "compute_accuracies needs n_eval >= 1");
  MHGAN_REQUIRE(validation.size() >= 1, "compute_accuracies needs validation data");
  Accuracies acc;
  FwdCtx ctx = FwdCtx::eval_mode();

  Tensor val_feats = critic.features(ctx, validation.x);
  Tensor val_scores = critic.score(ctx, val_feats, validation.y);
  int positive = 0;
  for (float s : val_scores.values) positive += s > 0.0f;
  acc.discriminator = static_cast<double>(positive) / validation.size();

  Tensor val_all = critic.all_class_scores(ctx, val_feats);
  acc.projection_cls = fraction_correct(pseudo_label(val_all), validation.y);

  if (critic.has_classifier())
    acc.validation = fraction_correct(pseudo_label(critic.classify(ctx, val_feats)), validation.y);

  Rng rng(eval_seed);
  auto [z, y] = sample_latent(n_eval, gen.z_dim(), gen.classes(), rng);
  Tensor fake = gen.forward(ctx, z, y);
  if (critic.has_classifier()) {
    Tensor fake_feats = critic.features(ctx, fake);
    acc.self = fraction_correct(pseudo_label(critic.classify(ctx, fake_feats)), y);
  }
  return acc;
}

MetricsReport evaluate_snapshot(GeneratorNet gen, CriticNet critic,
                                const OracleClassifier& oracle, const EvalPools& pools,
                                int n_samples, uint64_t eval_seed, int64_t step) {
  MHGAN_REQUIRE(n_samples >= 2, "evaluate_snapshot needs n_samples >= 2");
  MetricsReport report;
  report.step = step;
  FwdCtx ctx = FwdCtx::eval_mode();
  const int classes = gen.classes();

  Rng rng(eval_seed);
  auto [z, y] = sample_latent(n_samples, gen.z_dim(), classes, rng);
  Tensor fake = gen.forward(ctx, z, y);

  report.toy_fid = toy_fid(pools.fid_real.x, fake, &oracle);
  report.intra = intra_fid(pools.fid_real.x, pools.fid_real.y, fake, y, classes, &oracle);
  report.is_analog = inception_like_score(fake, oracle);

  Tensor val_feats = critic.features(ctx, pools.validation.x);
  Tensor val_scores = critic.score(ctx, val_feats, pools.validation.y);
  int positive = 0;
  for (float s : val_scores.values) positive += s > 0.0f;
  report.acc.discriminator = static_cast<double>(positive) / pools.validation.size();

  Tensor val_all = critic.all_class_scores(ctx, val_feats);
  report.acc.projection_cls = fraction_correct(pseudo_label(val_all), pools.validation.y);
  report.margin_diag = margin_diagnostic(val_all, pools.validation.y).item();

  if (critic.has_classifier()) {
    report.acc.validation =
        fraction_correct(pseudo_label(critic.classify(ctx, val_feats)), pools.validation.y);
    Tensor fake_feats = critic.features(ctx, fake);
    report.acc.self = fraction_correct(pseudo_label(critic.classify(ctx, fake_feats)), y);
  }

  report.spectrum = embedding_spectrum(critic.embed.table.value);
  return report;
}

}  // namespace mhgan
