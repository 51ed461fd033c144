#include "mhgan/models.hpp"

#include <cmath>

#include "doctest.h"

using namespace mhgan;

namespace {

Tensor random_batch(int n, int d, Rng& rng) {
  Tensor t = Tensor::zeros({n, d});
  for (auto& v : t.values) v = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("critic score is psi(phi) plus the projection term") {
  Rng rng(1);
  CriticNet critic(2, 3, HeadMode::ProjectionOnly, rng, /*hidden=*/2, /*depth=*/1);
  // psi weight is unit-norm so spectral normalization is exactly the identity;
  // the bias lifts psi(phi) to 3 for phi = [1,2].
  critic.psi.weight.value = Tensor({1, 2}, {0.6f, 0.8f});
  critic.psi.bias.value = Tensor({1}, {0.8f});
  critic.embed.table.value = Tensor({3, 2}, {0.5f, -1.0f, 0.0f, 0.0f, 0.5f, -1.0f});

  FwdCtx ctx = FwdCtx::eval_mode();
  const Tensor feats({1, 2}, {1.0f, 2.0f});
  Tensor d0 = critic.score(ctx, feats, {0});
  CHECK(d0.values[0] == doctest::Approx(1.5f));  // 3 + (0.5 - 2)

  // zero embedding row: the score is psi(phi) alone
  Tensor d1 = critic.score(ctx, feats, {1});
  CHECK(d1.values[0] == doctest::Approx(3.0f));

  // equal embedding rows give equal scores
  Tensor d2 = critic.score(ctx, feats, {2});
  CHECK(d2.values[0] == doctest::Approx(d0.values[0]));
}

TEST_CASE("all-class scores match a loop of single-class calls") {
  Rng rng(2);
  const int k = 5;
  CriticNet critic(2, k, HeadMode::Aux, rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor x = random_batch(7, 2, rng);
  Tensor feats = critic.features(ctx, x);
  Tensor all = critic.all_class_scores(ctx, feats);
  for (int cls = 0; cls < k; ++cls) {
    Tensor single = critic.score(ctx, feats, std::vector<int>(7, cls));
    for (int i = 0; i < 7; ++i)
      CHECK(all.values[i * k + cls] == doctest::Approx(single.values[i]).epsilon(1e-5));
  }
}

TEST_CASE("single-class critic: the lone column equals the direct score") {
  Rng rng(3);
  CriticNet critic(2, 1, HeadMode::ProjectionOnly, rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor x = random_batch(4, 2, rng);
  Tensor feats = critic.features(ctx, x);
  Tensor all = critic.all_class_scores(ctx, feats);
  Tensor single = critic.score(ctx, feats, {0, 0, 0, 0});
  CHECK(all.shape == Shape{4, 1});
  for (int i = 0; i < 4; ++i)
    CHECK(all.values[i] == doctest::Approx(single.values[i]).epsilon(1e-5));
}

TEST_CASE("psi cancels in all-class argmax comparisons") {
  Rng rng(4);
  const int k = 6;
  CriticNet critic(3, k, HeadMode::Shared, rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor x = random_batch(16, 3, rng);
  Tensor feats = critic.features(ctx, x);
  Tensor all = critic.all_class_scores(ctx, feats);
  Tensor proj = matmul_nt(feats, critic.embed.table.value);
  for (int i = 0; i < 16; ++i) {
    int arg_all = 0, arg_proj = 0;
    for (int c = 1; c < k; ++c) {
      if (all.values[i * k + c] > all.values[i * k + arg_all]) arg_all = c;
      if (proj.values[i * k + c] > proj.values[i * k + arg_proj]) arg_proj = c;
    }
    CHECK(arg_all == arg_proj);
  }
}

TEST_CASE("shared-mode classify returns the projection logits") {
  Rng rng(5);
  CriticNet critic(2, 3, HeadMode::Shared, rng, /*hidden=*/4, /*depth=*/1);
  // identity-like embedding rows select phi coordinates
  critic.embed.table.value = Tensor({3, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0});
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor feats({2, 4}, {0.3f, -0.7f, 1.2f, 9.0f, 0.1f, 0.2f, -0.4f, 9.0f});
  Tensor logits = critic.classify(ctx, feats);
  CHECK(logits.shape == Shape{2, 3});
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(logits.values[i * 3 + c] == doctest::Approx(feats.values[i * 4 + c]));

  // classify and all-class scores agree on the argmax in shared mode
  Rng rng2(6);
  CriticNet shared(2, 5, HeadMode::Shared, rng2);
  Tensor x = random_batch(12, 2, rng2);
  Tensor f2 = shared.features(ctx, x);
  Tensor cls = shared.classify(ctx, f2);
  Tensor all = shared.all_class_scores(ctx, f2);
  for (int i = 0; i < 12; ++i) {
    int a = 0, b = 0;
    for (int c = 1; c < 5; ++c) {
      if (cls.values[i * 5 + c] > cls.values[i * 5 + a]) a = c;
      if (all.values[i * 5 + c] > all.values[i * 5 + b]) b = c;
    }
    CHECK(a == b);
  }
}

TEST_CASE("aux classify with a zero head gives zero logits") {
  Rng rng(7);
  CriticNet critic(2, 4, HeadMode::Aux, rng);
  critic.psi_c->weight.value = Tensor::zeros(critic.psi_c->weight.value.shape);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor feats = random_batch(3, critic.feature_dim(), rng);
  Tensor logits = critic.classify(ctx, feats);
  for (float v : logits.values) CHECK(v == 0.0f);
}

TEST_CASE("projection-only critic rejects classify") {
  Rng rng(8);
  CriticNet critic(2, 4, HeadMode::ProjectionOnly, rng);
  CHECK(!critic.psi_c.has_value());
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor feats = random_batch(2, critic.feature_dim(), rng);
  CHECK_THROWS_AS(critic.classify(ctx, feats), ContractViolation);
}

TEST_CASE("shared mode owns no classifier parameters") {
  Rng rng(9);
  CriticNet critic(2, 4, HeadMode::Shared, rng);
  CHECK(!critic.psi_c.has_value());
  for (const Parameter* p : critic.params())
    CHECK(p->name.find("psi_c") == std::string::npos);
}

TEST_CASE("generator output is deterministic and eval rows are per-example") {
  Rng init(10);
  GeneratorNet gen(4, 3, 2, init);

  Rng zrng(11);
  Tensor z = random_batch(5, 4, zrng);
  const std::vector<int> y = {0, 1, 2, 1, 0};

  FwdCtx ctx1 = FwdCtx::eval_mode();
  Tensor a = gen.forward(ctx1, z, y);
  FwdCtx ctx2 = FwdCtx::eval_mode();
  Tensor b = gen.forward(ctx2, z, y);
  CHECK(a.values == b.values);  // bitwise reproducible

  // n copies of the same (z, y) in eval mode: identical rows
  Tensor zrep = Tensor::zeros({6, 4});
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) zrep.values[i * 4 + j] = z.values[j];
  Tensor rep = gen.forward(ctx1, zrep, std::vector<int>(6, 2));
  for (int i = 1; i < 6; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(rep.values[i * 2 + j] == rep.values[j]);
}

TEST_CASE("conditioning enters through the class gains and biases") {
  Rng init(12);
  GeneratorNet gen(4, 3, 2, init);
  // make the per-class affine parameters nontrivial, as after training
  Rng prng(13);
  for (auto& bn : gen.cbn) {
    for (auto& v : bn.gamma.value.values) v = 1.0f + 0.3f * prng.normal();
    for (auto& v : bn.beta.value.values) v = 0.5f * prng.normal();
  }
  Rng zrng(14);
  Tensor z = random_batch(4, 4, zrng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor out0 = gen.forward(ctx, z, {0, 0, 0, 0});
  Tensor out1 = gen.forward(ctx, z, {1, 1, 1, 1});
  float diff = 0.0f;
  for (size_t i = 0; i < out0.values.size(); ++i)
    diff = std::max(diff, std::abs(out0.values[i] - out1.values[i]));
  CHECK(diff > 1e-4f);

  CHECK_THROWS_AS(gen.forward(ctx, z, {0, 0, 0, 3}), ContractViolation);
}

TEST_CASE("heads read one trunk evaluation") {
  Rng rng(15);
  CriticNet critic(2, 3, HeadMode::Aux, rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor x = random_batch(3, 2, rng);
  Tensor feats = critic.features(ctx, x);
  // convenience wrappers equal explicit composition through the same features
  Tensor via_wrapper = critic_forward(critic, ctx, x, {0, 1, 2});
  Tensor via_feats = critic.score(ctx, feats, {0, 1, 2});
  for (int i = 0; i < 3; ++i)
    CHECK(via_wrapper.values[i] == doctest::Approx(via_feats.values[i]));
}

TEST_CASE("gradients reach the generator input through the critic") {
  Rng rng(16);
  GeneratorNet gen(3, 2, 2, rng);
  CriticNet critic(2, 2, HeadMode::Aux, rng);
  auto f = [&](Tape& tape, const Tensor& zflat) {
    FwdCtx ctx(tape, false);
    Tensor z = reshape(zflat, {2, 3});
    Tensor x = gen.forward(ctx, z, {0, 1});
    return mean_all(critic_forward(critic, ctx, x, {0, 1}));
  };
  Rng zrng(17);
  Tensor z0 = random_batch(1, 6, zrng);
  float err = grad_check(f, Tensor({6}, z0.values), 1e-3f);
  CHECK(err < 1e-3f);
}
