#include "mhgan/metrics.hpp"

#include <cmath>

#include "doctest.h"

using namespace mhgan;

namespace {

DMat random_spd(int d, Rng& rng) {
  DMat a(d, d);
  for (auto& v : a.a) v = rng.normal();
  DMat spd(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = i == j ? 0.1 : 0.0;
      for (int k = 0; k < d; ++k) acc += a.at(i, k) * a.at(j, k);
      spd.at(i, j) = acc;
    }
  return spd;
}

GaussianStats make_stats(std::vector<double> mean, DMat cov) {
  GaussianStats s;
  s.mean = std::move(mean);
  s.cov = std::move(cov);
  s.count = 1000;
  return s;
}

const OracleClassifier& ring_oracle() {
  static OracleClassifier oracle = [] {
    DatasetSpec spec{RingMixtureSpec{8, 2.0f, 0.05f}, 1};
    OracleClassifier::Hyper hyper;
    hyper.train_samples = 2048;
    return OracleClassifier::fit(spec, 0, hyper);
  }();
  return oracle;
}

}  // namespace

TEST_CASE("fit_gaussian closed forms") {
  Tensor constant = Tensor::full({5, 3}, 2.5f);
  GaussianStats cs = fit_gaussian(constant);
  for (double v : cs.cov.a) CHECK(v == doctest::Approx(0.0));

  Tensor two({2, 2}, {0, 0, 2, 0});
  GaussianStats ts = fit_gaussian(two);
  CHECK(ts.mean[0] == doctest::Approx(1.0));
  CHECK(ts.mean[1] == doctest::Approx(0.0));
  CHECK(ts.cov.at(0, 0) == doctest::Approx(2.0));
  CHECK(ts.cov.at(0, 1) == doctest::Approx(0.0));
  CHECK(ts.cov.at(1, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(fit_gaussian(Tensor({1, 2}, {1, 2})), ContractViolation);

  // direct two-pass recomputation on random data
  Rng rng(3);
  Tensor x = Tensor::zeros({40, 3});
  for (auto& v : x.values) v = rng.normal();
  GaussianStats s = fit_gaussian(x);
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (int i = 0; i < 40; ++i) mean += x.values[i * 3 + a];
    mean /= 40;
    CHECK(s.mean[a] == doctest::Approx(mean).epsilon(1e-9));
    for (int b = 0; b < 3; ++b) {
      double cov = 0.0;
      for (int i = 0; i < 40; ++i) {
        double meanb = 0.0;
        for (int r = 0; r < 40; ++r) meanb += x.values[r * 3 + b];
        meanb /= 40;
        cov += (x.values[i * 3 + a] - mean) * (x.values[i * 3 + b] - meanb);
      }
      cov /= 39;
      CHECK(s.cov.at(a, b) == doctest::Approx(cov).epsilon(1e-7));
    }
  }
}

TEST_CASE("matrix square root closed forms and reconstruction") {
  DMat eye = DMat::identity(3);
  DMat r = matrix_sqrt_spd(eye);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(r.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));

  DMat diag(2, 2);
  diag.at(0, 0) = 4.0;
  diag.at(1, 1) = 9.0;
  DMat droot = matrix_sqrt_spd(diag);
  CHECK(droot.at(0, 0) == doctest::Approx(2.0));
  CHECK(droot.at(1, 1) == doctest::Approx(3.0));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + rng.uniform_int(15);  // d <= 16
    DMat a = random_spd(d, rng);
    DMat b = matrix_sqrt_spd(a);
    CHECK(max_abs_asymmetry(b) < 1e-9);
    DMat bb = matmul(b, b);
    double err = 0.0;
    for (size_t i = 0; i < a.a.size(); ++i) err += (bb.a[i] - a.a[i]) * (bb.a[i] - a.a[i]);
    CHECK(std::sqrt(err) / frobenius_norm(a) < 1e-4);
  }

  DMat asym(2, 2);
  asym.at(0, 1) = 1.0;
  CHECK_THROWS_AS(matrix_sqrt_spd(asym), ContractViolation);
}

TEST_CASE("frechet distance closed forms") {
  DMat one(1, 1);
  one.at(0, 0) = 1.0;
  CHECK(frechet_distance(make_stats({0.0}, one), make_stats({0.0}, one)) ==
        doctest::Approx(0.0).epsilon(1e-5));
  CHECK(frechet_distance(make_stats({0.0}, one), make_stats({3.0}, one)) ==
        doctest::Approx(9.0).epsilon(1e-5));

  DMat s1(2, 2);
  s1.at(0, 0) = 1.0;
  s1.at(1, 1) = 4.0;
  CHECK(frechet_distance(make_stats({0.0, 0.0}, s1), make_stats({0.0, 0.0}, DMat::identity(2))) ==
        doctest::Approx(1.0).epsilon(1e-4));

  // symmetry on random stats
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianStats a = make_stats({rng.normal(), rng.normal(), rng.normal()}, random_spd(3, rng));
    GaussianStats b = make_stats({rng.normal(), rng.normal(), rng.normal()}, random_spd(3, rng));
    CHECK(frechet_distance(a, b) == doctest::Approx(frechet_distance(b, a)).epsilon(1e-6));
  }

  CHECK_THROWS_AS(frechet_distance(make_stats({0.0}, one),
                                   make_stats({0.0, 0.0}, DMat::identity(2))),
                  ContractViolation);
}

TEST_CASE("toy FID: identical sets, a known shift, and monotonicity") {
  DatasetSpec spec{RingMixtureSpec{8, 2.0f, 0.05f}, 1};
  Rng rng(9);
  Batch real = sample_real(spec, 4096, rng);

  CHECK(toy_fid(real.x, real.x, nullptr) == doctest::Approx(0.0).epsilon(1e-6));

  Tensor shifted = real.x;
  for (int i = 0; i < real.size(); ++i) shifted.values[i * 2] += 3.0f;
  const double fid3 = toy_fid(real.x, shifted, nullptr);
  CHECK(fid3 == doctest::Approx(9.0).epsilon(2e-3));

  Tensor shifted5 = real.x;
  for (int i = 0; i < real.size(); ++i) shifted5.values[i * 2] += 5.0f;
  CHECK(toy_fid(real.x, shifted5, nullptr) > fid3);
}

TEST_CASE("intra-FID per class") {
  DatasetSpec spec{RingMixtureSpec{4, 2.0f, 0.1f}, 2};
  Rng rng(11);
  Batch real = sample_real(spec, 2048, rng);

  // fake == real per class: all zeros, mean present
  IntraFid same = intra_fid(real.x, real.y, real.x, real.y, 4, nullptr);
  REQUIRE(same.mean.has_value());
  CHECK(*same.mean == doctest::Approx(0.0).epsilon(1e-6));
  for (const auto& v : same.per_class) {
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.0).epsilon(1e-6));
  }

  // collapse class 0 onto its center: its intra-FID strictly exceeds the rest
  Tensor collapsed = real.x;
  const auto c0 = class_center(spec, 0);
  for (int i = 0; i < real.size(); ++i)
    if (real.y[static_cast<size_t>(i)] == 0) {
      collapsed.values[i * 2] = c0[0];
      collapsed.values[i * 2 + 1] = c0[1];
    }
  IntraFid coll = intra_fid(real.x, real.y, collapsed, real.y, 4, nullptr);
  REQUIRE(coll.per_class[0].has_value());
  for (int cls = 1; cls < 4; ++cls) CHECK(*coll.per_class[0] > *coll.per_class[cls]);

  // K = 1 reduces to the plain FID (same feature space, same fits)
  std::vector<int> zeros(static_cast<size_t>(real.size()), 0);
  IntraFid single = intra_fid(real.x, zeros, collapsed, zeros, 1, nullptr);
  REQUIRE(single.mean.has_value());
  CHECK(*single.mean == doctest::Approx(toy_fid(real.x, collapsed, nullptr)).epsilon(1e-9));

  // too few samples on one side: the starved class is null and so is the mean
  Tensor tiny({2, 2}, {2.0f, 0.0f, 2.0f, 0.1f});
  std::vector<int> tiny_y = {0, 0};
  IntraFid starved = intra_fid(real.x, real.y, tiny, tiny_y, 4, nullptr);
  CHECK(!starved.mean.has_value());
  CHECK(!starved.per_class[1].has_value());
}

TEST_CASE("inception-like score bounds and direct recomputation") {
  const OracleClassifier& oracle = ring_oracle();
  CHECK(oracle.train_accuracy() >= 0.99f);

  // all fakes identical: the marginal equals every posterior, KL = 0, score 1
  Tensor same = Tensor::zeros({64, 2});
  for (int i = 0; i < 64; ++i) {
    same.values[i * 2] = 1.3f;
    same.values[i * 2 + 1] = -0.4f;
  }
  CHECK(inception_like_score(same, oracle) == doctest::Approx(1.0).epsilon(1e-9));

  // near one-hot posteriors balanced over classes: score approaches K
  DatasetSpec spec{RingMixtureSpec{8, 2.0f, 0.05f}, 1};
  Rng rng(13);
  Batch real = sample_real(spec, 2048, rng);
  const double is_real = inception_like_score(real.x, oracle);
  CHECK(is_real > 7.0);
  CHECK(is_real <= 8.0);

  // direct double-loop KL recomputation
  Tensor mix = Tensor::zeros({32, 2});
  for (auto& v : mix.values) v = 2.0f * rng.normal();
  const DMat p = oracle.posterior(mix);
  std::vector<double> marginal(8, 0.0);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 8; ++j) marginal[static_cast<size_t>(j)] += p.at(i, j) / 32.0;
  double mean_kl = 0.0;
  for (int i = 0; i < 32; ++i) {
    double kl = 0.0;
    for (int j = 0; j < 8; ++j)
      if (p.at(i, j) > 0.0) kl += p.at(i, j) * std::log(p.at(i, j) / marginal[static_cast<size_t>(j)]);
    mean_kl += std::max(kl, 0.0) / 32.0;
  }
  CHECK(inception_like_score(mix, oracle) ==
        doctest::Approx(std::clamp(std::exp(mean_kl), 1.0, 8.0)).epsilon(1e-9));
}

TEST_CASE("embedding spectrum") {
  // identity block: all singular values 1
  Tensor eye = Tensor::zeros({3, 5});
  for (int i = 0; i < 3; ++i) eye.values[i * 5 + i] = 1.0f;
  auto sv = embedding_spectrum(eye);
  REQUIRE(sv.size() == 3);
  for (double v : sv) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  // rank-1 u v^T: one value ||u|| ||v||, the rest zero
  const std::vector<float> u = {1.0f, -2.0f, 0.5f};
  const std::vector<float> w = {0.4f, 1.2f, -0.3f, 2.0f};
  Tensor rank1 = Tensor::zeros({3, 4});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) rank1.values[i * 4 + j] = u[static_cast<size_t>(i)] * w[static_cast<size_t>(j)];
  auto sv1 = embedding_spectrum(rank1);
  double un = 0.0, wn = 0.0;
  for (float v : u) un += v * v;
  for (float v : w) wn += v * v;
  CHECK(sv1[0] == doctest::Approx(std::sqrt(un) * std::sqrt(wn)).epsilon(1e-6));
  CHECK(sv1[1] == doctest::Approx(0.0).epsilon(1e-6));

  // nonincreasing order on random tables, top-3 match a deflation oracle
  Rng rng(17);
  Tensor table = Tensor::zeros({6, 9});
  for (auto& v : table.values) v = rng.normal();
  auto spec = embedding_spectrum(table);
  for (size_t i = 1; i < spec.size(); ++i) CHECK(spec[i] <= spec[i - 1] + 1e-12);

  // power iteration with deflation on E E^T, in double precision
  DMat gram(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 9; ++k)
        acc += static_cast<double>(table.values[i * 9 + k]) * table.values[j * 9 + k];
      gram.at(i, j) = acc;
    }
  DMat deflated = gram;
  for (int top = 0; top < 3; ++top) {
    std::vector<double> vec(6, 0.0);
    for (int i = 0; i < 6; ++i) vec[static_cast<size_t>(i)] = rng.normal();
    double lambda = 0.0;
    for (int it = 0; it < 3000; ++it) {
      std::vector<double> next(6, 0.0);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) next[static_cast<size_t>(i)] += deflated.at(i, j) * vec[static_cast<size_t>(j)];
      double norm = 0.0;
      for (double v : next) norm += v * v;
      norm = std::sqrt(norm);
      for (auto& v : next) v /= norm;
      lambda = norm;
      vec = next;
    }
    CHECK(std::sqrt(lambda) == doctest::Approx(spec[static_cast<size_t>(top)]).epsilon(1e-3));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        deflated.at(i, j) -= lambda * vec[static_cast<size_t>(i)] * vec[static_cast<size_t>(j)];
  }
}

TEST_CASE("accuracies: lookup, constant classifier, and counting") {
  Rng grng(19);
  GeneratorNet gen(4, 3, 2, grng);
  CriticNet critic(2, 3, HeadMode::Aux, grng);

  // constant classifier favoring class 1: zero weights, biased head
  critic.psi_c->weight.value = Tensor::zeros(critic.psi_c->weight.value.shape);
  critic.psi_c->bias.value = Tensor({3}, {0.0f, 5.0f, 0.0f});

  // single-class validation pool makes the constant classifier a perfect lookup
  DatasetSpec spec{RingMixtureSpec{3, 2.0f, 0.05f}, 3};
  Rng drng(21);
  Batch val = sample_real(spec, 512, drng);
  for (auto& label : val.y) label = 1;

  const uint64_t eval_seed = 77;
  Accuracies acc = compute_accuracies(gen, critic, val, 1024, eval_seed);
  REQUIRE(acc.validation.has_value());
  CHECK(*acc.validation == doctest::Approx(1.0));

  // self accuracy equals the frequency of class 1 among the conditioning draws
  Rng replay(eval_seed);
  auto [z, y] = sample_latent(1024, gen.z_dim(), gen.classes(), replay);
  int ones = 0;
  for (int label : y) ones += label == 1;
  REQUIRE(acc.self.has_value());
  CHECK(*acc.self == doctest::Approx(static_cast<double>(ones) / 1024.0));

  // discriminator accuracy equals a direct count of positive scores
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor scores = critic_forward(critic, ctx, val.x, val.y);
  int positive = 0;
  for (float s : scores.values) positive += s > 0.0f;
  CHECK(acc.discriminator == doctest::Approx(static_cast<double>(positive) / val.size()));
}

TEST_CASE("metric evaluation is a pure function of snapshot and seed") {
  Rng grng(23);
  GeneratorNet gen(4, 8, 2, grng);
  CriticNet critic(2, 8, HeadMode::Aux, grng);
  const OracleClassifier& oracle = ring_oracle();

  DatasetSpec spec{RingMixtureSpec{8, 2.0f, 0.05f}, 1};
  EvalPools pools;
  Rng prng(25);
  pools.fid_real = sample_real(spec, 1024, prng);
  pools.validation = sample_real(spec, 512, prng);

  MetricsReport a = evaluate_snapshot(gen, critic, oracle, pools, 512, 99, 0);
  MetricsReport b = evaluate_snapshot(gen, critic, oracle, pools, 512, 99, 0);
  CHECK(*a.toy_fid == *b.toy_fid);
  CHECK(*a.is_analog == *b.is_analog);
  CHECK(*a.acc.validation == *b.acc.validation);
  CHECK(*a.acc.self == *b.acc.self);
  CHECK(a.acc.discriminator == b.acc.discriminator);
  CHECK(a.acc.projection_cls == b.acc.projection_cls);
  CHECK(*a.margin_diag == *b.margin_diag);
  CHECK(a.spectrum == b.spectrum);
  CHECK(a.is_analog >= 1.0);
  CHECK(a.is_analog <= 8.0);
}
