#include <benchmark/benchmark.h>

#include "mhgan/train.hpp"

using namespace mhgan;

namespace {

TrainConfig bench_config(LossVariant variant) {
  TrainConfig cfg;
  cfg.variant = variant;
  cfg.head_mode = default_head_mode(variant);
  cfg.total_g_steps = 1 << 20;
  if (variant_is_ssl(variant)) cfg.labeled_fraction = 0.1f;
  return cfg;
}

}  // namespace

static void BM_MatmulForward(benchmark::State& state) {
  Rng rng(1);
  Tensor a = Tensor::zeros({128, 64});
  Tensor b = Tensor::zeros({64, 64});
  for (auto& v : a.values) v = rng.normal();
  for (auto& v : b.values) v = rng.normal();
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.values.data());
  }
}
BENCHMARK(BM_MatmulForward);

static void BM_MatmulBackward(benchmark::State& state) {
  Rng rng(2);
  Tensor a = Tensor::zeros({128, 64});
  Tensor b = Tensor::zeros({64, 64});
  for (auto& v : a.values) v = rng.normal();
  for (auto& v : b.values) v = rng.normal();
  for (auto _ : state) {
    Tape tape;
    Tensor al = tape.leaf(a);
    Tensor loss = mean_all(matmul(al, b));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(al).values.data());
  }
}
BENCHMARK(BM_MatmulBackward);

static void BM_GeneratorForward(benchmark::State& state) {
  Rng rng(3);
  GeneratorNet gen(16, 8, 2, rng);
  Rng zrng(4);
  auto [z, y] = sample_latent(128, 16, 8, zrng);
  for (auto _ : state) {
    FwdCtx ctx = FwdCtx::eval_mode();
    Tensor x = gen.forward(ctx, z, y);
    benchmark::DoNotOptimize(x.values.data());
  }
}
BENCHMARK(BM_GeneratorForward);

static void BM_CriticForward(benchmark::State& state) {
  Rng rng(5);
  CriticNet critic(2, 8, HeadMode::Aux, rng);
  DatasetSpec spec{RingMixtureSpec{}, 1};
  Rng drng(6);
  Batch batch = sample_real(spec, 128, drng);
  for (auto _ : state) {
    FwdCtx ctx = FwdCtx::eval_mode();
    Tensor s = critic_forward(critic, ctx, batch.x, batch.y);
    benchmark::DoNotOptimize(s.values.data());
  }
}
BENCHMARK(BM_CriticForward);

static void BM_DStep(benchmark::State& state) {
  Trainer trainer(bench_config(LossVariant::Mhgan));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.d_step().d_total);
}
BENCHMARK(BM_DStep);

static void BM_GStep(benchmark::State& state) {
  Trainer trainer(bench_config(LossVariant::Mhgan));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.g_step().g_total);
}
BENCHMARK(BM_GStep);

static void BM_FullStepSsl(benchmark::State& state) {
  Trainer trainer(bench_config(LossVariant::MhganSsl));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.full_step().d_total);
}
BENCHMARK(BM_FullStepSsl);

BENCHMARK_MAIN();
