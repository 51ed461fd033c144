#include "mhgan/gradcheck_suite.hpp"

#include <cmath>

#include "mhgan/losses.hpp"
#include "mhgan/models.hpp"

namespace mhgan {

namespace {

using Builder = std::function<Tensor(Tape&, const Tensor&)>;
using PointGen = std::function<Tensor(Rng&)>;

Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Resample until the probe forward stays clear of kinks, then run the
// central-difference comparison at h = 1e-3.
float checked(const Builder& f, const PointGen& gen, uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 500; ++attempt) {
    Tensor point = gen(rng);
    Tape probe;
    Tensor x = probe.leaf(point);
    (void)f(probe, x);
    if (probe.min_kink_margin() > 1e-2f) return grad_check(f, point, 1e-3f);
  }
  MHGAN_REQUIRE(false, "gradcheck could not sample a kink-free point");
  return 1.0f;
}

GradCheckCase make(const std::string& name, Builder f, PointGen gen) {
  return {name, [f = std::move(f), gen = std::move(gen)](uint64_t seed) {
            return checked(f, gen, seed);
          }};
}

PointGen gen_unit(Shape shape) {
  return [shape](Rng& rng) { return random_tensor(shape, rng); };
}

PointGen gen_positive(Shape shape) {
  return [shape](Rng& rng) { return random_tensor(shape, rng, 0.5f, 2.0f); };
}

std::vector<GradCheckCase> build_suite() {
  std::vector<GradCheckCase> cases;
  auto push = [&](const std::string& name, Builder f, PointGen gen) {
    cases.push_back(make(name, std::move(f), std::move(gen)));
  };

  // --- primitives ---
  const Tensor mat({2, 4}, {0.3f, 1.1f, -0.6f, 0.9f, -1.4f, 0.2f, 0.8f, -0.5f});
  const Tensor vec4({4}, {0.7f, -1.2f, 0.4f, 1.5f});
  const Tensor nz4({4}, {0.8f, -1.1f, 0.6f, 1.4f});
  const Tensor mat43({4, 3},
                     {0.2f, -0.5f, 0.8f, 1.1f, -0.3f, 0.6f, -0.9f, 0.4f, 0.1f, 0.7f, -0.2f, 0.5f});
  const Tensor mat34({3, 4},
                     {0.2f, -0.5f, 0.8f, 1.1f, -0.3f, 0.6f, -0.9f, 0.4f, 0.1f, 0.7f, -0.2f, 0.5f});

  push("prim/add", [=](Tape&, const Tensor& x) { return mean_all(add(x, mat)); }, gen_unit({2, 4}));
  push("prim/add_broadcast",
      [=](Tape&, const Tensor& x) { return mean_all(add(mat, sum_axis(square(x), 0))); },
      gen_unit({2, 4}));
  push("prim/sub", [=](Tape&, const Tensor& x) { return mean_all(sub(x, mat)); }, gen_unit({2, 4}));
  push("prim/mul", [=](Tape&, const Tensor& x) { return mean_all(mul(x, mat)); }, gen_unit({2, 4}));
  push("prim/div_num", [=](Tape&, const Tensor& x) { return mean_all(div(x, nz4)); },
      gen_unit({2, 4}));
  push("prim/div_den",
      [=](Tape&, const Tensor& x) { return mean_all(div(mat, sum_axis(square(x), 0))); },
      gen_positive({2, 4}));
  push("prim/add_scalar", [](Tape&, const Tensor& x) { return mean_all(add_scalar(x, 1.5f)); },
      gen_unit({2, 4}));
  push("prim/mul_scalar", [](Tape&, const Tensor& x) { return mean_all(mul_scalar(x, -0.7f)); },
      gen_unit({2, 4}));
  push("prim/scale", [=](Tape&, const Tensor& x) { return sum_all(scale(mat, mean_all(x))); },
      gen_unit({2, 4}));
  push("prim/recip", [](Tape&, const Tensor& x) { return mean_all(recip(x)); },
      gen_positive({2, 4}));
  push("prim/matmul", [=](Tape&, const Tensor& x) { return mean_all(matmul(x, mat43)); },
      gen_unit({2, 4}));
  push("prim/matmul_nt", [=](Tape&, const Tensor& x) { return mean_all(matmul_nt(x, mat34)); },
      gen_unit({2, 4}));
  push("prim/sum_axis0", [](Tape&, const Tensor& x) { return mean_all(square(sum_axis(x, 0))); },
      gen_unit({2, 4}));
  push("prim/sum_axis1", [](Tape&, const Tensor& x) { return mean_all(square(sum_axis(x, 1))); },
      gen_unit({2, 4}));
  push("prim/mean_axis0", [](Tape&, const Tensor& x) { return sum_all(square(mean_axis(x, 0))); },
      gen_unit({2, 4}));
  push("prim/mean_axis1", [](Tape&, const Tensor& x) { return sum_all(square(mean_axis(x, 1))); },
      gen_unit({2, 4}));
  push("prim/max_axis0", [](Tape&, const Tensor& x) { return mean_all(max_axis(x, 0).values); },
      gen_unit({2, 4}));
  push("prim/max_axis1", [](Tape&, const Tensor& x) { return mean_all(max_axis(x, 1).values); },
      gen_unit({2, 4}));
  push("prim/relu", [](Tape&, const Tensor& x) { return mean_all(relu(x)); }, gen_unit({2, 4}));
  push("prim/exp", [](Tape&, const Tensor& x) { return mean_all(mhgan::exp(x)); },
      gen_unit({2, 4}));
  push("prim/log", [](Tape&, const Tensor& x) { return mean_all(mhgan::log(x)); },
      gen_positive({2, 4}));
  push("prim/log_clamped",
      [](Tape&, const Tensor& x) { return mean_all(log_clamped(x, 1e-12f)); },
      gen_positive({2, 4}));
  push("prim/sqrt", [](Tape&, const Tensor& x) { return mean_all(mhgan::sqrt(x)); },
      gen_positive({2, 4}));
  push("prim/square", [](Tape&, const Tensor& x) { return mean_all(square(x)); },
      gen_unit({2, 4}));
  push("prim/clamp_min", [](Tape&, const Tensor& x) { return mean_all(clamp_min(x, 0.25f)); },
      gen_unit({2, 4}));
  push("prim/tile_cols",
      [](Tape&, const Tensor& x) {
        return mean_all(square(tile_cols(reshape(sum_axis(x, 1), {2, 1}), 5)));
      },
      gen_unit({2, 4}));
  push("prim/index_select_rows",
      [](Tape&, const Tensor& x) { return mean_all(square(index_select_rows(x, {1, 0, 1}))); },
      gen_unit({2, 4}));
  push("prim/concat_axis0",
      [=](Tape&, const Tensor& x) { return mean_all(square(concat(x, mat, 0))); },
      gen_unit({2, 4}));
  push("prim/concat_axis1",
      [=](Tape&, const Tensor& x) { return mean_all(square(concat(x, mat, 1))); },
      gen_unit({2, 4}));
  push("prim/reshape", [](Tape&, const Tensor& x) { return mean_all(square(reshape(x, {4, 2}))); },
      gen_unit({2, 4}));

  // --- layers ---
  push("layer/linear_weight",
      [](Tape& tape, const Tensor& w) {
        Rng rng(3);
        LinearLayer lin("l", 3, 2, false, 1.0f, rng);
        FwdCtx ctx(tape, false);
        ctx.bind(lin.weight, reshape(w, {2, 3}));
        const Tensor x({2, 3}, {0.4f, -1.2f, 0.7f, 1.1f, 0.3f, -0.8f});
        return mean_all(square(lin.forward(ctx, x)));
      },
      gen_unit({6}));
  push("layer/linear_bias",
      [](Tape& tape, const Tensor& b) {
        Rng rng(4);
        LinearLayer lin("l", 3, 2, false, 1.0f, rng);
        FwdCtx ctx(tape, false);
        ctx.bind(lin.bias, b);
        const Tensor x({2, 3}, {0.4f, -1.2f, 0.7f, 1.1f, 0.3f, -0.8f});
        return mean_all(square(lin.forward(ctx, x)));
      },
      gen_unit({2}));
  push("layer/linear_input",
      [](Tape&, const Tensor& x) {
        Rng rng(5);
        LinearLayer lin("l", 4, 3, false, 1.0f, rng);
        FwdCtx ctx = FwdCtx::eval_mode();
        Tensor xin = reshape(x, {2, 4});
        Tensor w = lin.weight.value;
        return mean_all(square(add(matmul_nt(xin, w), lin.bias.value)));
      },
      gen_unit({8}));
  push("layer/spectral_weight",
      [](Tape& tape, const Tensor& w) {
        Rng rng(6);
        LinearLayer lin("l", 3, 2, true, 1.0f, rng);
        FwdCtx ctx(tape, false);
        ctx.bind(lin.weight, reshape(w, {2, 3}));
        const Tensor x({2, 3}, {0.4f, -1.2f, 0.7f, 1.1f, 0.3f, -0.8f});
        return mean_all(square(lin.forward(ctx, x)));
      },
      gen_unit({6}));
  push("layer/cbn_input",
      [](Tape& tape, const Tensor& x) {
        ConditionalBatchNorm bn("bn", 2, 3);
        Rng rng(7);
        for (auto& v : bn.gamma.value.values) v = 1.0f + 0.2f * rng.normal();
        for (auto& v : bn.beta.value.values) v = 0.1f * rng.normal();
        FwdCtx ctx(tape, true);
        return mean_all(square(bn.forward(ctx, reshape(x, {4, 3}), {0, 1, 0, 1})));
      },
      gen_unit({12}));
  push("layer/cbn_gamma",
      [](Tape& tape, const Tensor& g) {
        ConditionalBatchNorm bn("bn", 2, 3);
        FwdCtx ctx(tape, true);
        ctx.bind(bn.gamma, reshape(g, {2, 3}));
        const Tensor x({4, 3}, {0.4f, -1.2f, 0.7f, 1.1f, 0.3f, -0.8f, -0.6f, 0.9f, 0.2f, 1.4f,
                                -0.3f, 0.5f});
        return mean_all(square(bn.forward(ctx, x, {0, 1, 0, 1})));
      },
      gen_unit({6}));
  push("layer/cbn_beta",
      [](Tape& tape, const Tensor& b) {
        ConditionalBatchNorm bn("bn", 2, 3);
        FwdCtx ctx(tape, true);
        ctx.bind(bn.beta, reshape(b, {2, 3}));
        const Tensor x({4, 3}, {0.4f, -1.2f, 0.7f, 1.1f, 0.3f, -0.8f, -0.6f, 0.9f, 0.2f, 1.4f,
                                -0.3f, 0.5f});
        return mean_all(square(bn.forward(ctx, x, {0, 1, 0, 1})));
      },
      gen_unit({6}));
  push("layer/embedding_table",
      [](Tape& tape, const Tensor& t) {
        Rng rng(8);
        EmbeddingMatrix embed("e", 3, 4, rng);
        FwdCtx ctx(tape, false);
        ctx.bind(embed.table, reshape(t, {3, 4}));
        return mean_all(square(embed.rows(ctx, {2, 0, 1, 2})));
      },
      gen_unit({12}));
  push("layer/generator_z",
      [](Tape&, const Tensor& z) {
        Rng rng(9);
        GeneratorNet gen(3, 2, 2, rng, /*hidden=*/8, /*depth=*/2);
        FwdCtx ctx = FwdCtx::eval_mode();
        return mean_all(square(gen.forward(ctx, reshape(z, {2, 3}), {0, 1})));
      },
      gen_unit({6}));
  push("layer/critic_input",
      [](Tape&, const Tensor& x) {
        Rng rng(10);
        CriticNet critic(2, 3, HeadMode::Aux, rng, /*hidden=*/8, /*depth=*/2);
        FwdCtx ctx = FwdCtx::eval_mode();
        return mean_all(critic_forward(critic, ctx, reshape(x, {3, 2}), {0, 1, 2}));
      },
      gen_unit({6}));

  // --- losses, per input slot ---
  const int n = 4, k = 4;
  const std::vector<int> y_fixed = {0, 2, 1, 3};
  const Tensor cls_fixed({4, 4}, {0.4f, -0.2f, 0.9f, 0.1f, -0.7f, 0.8f, 0.3f, -0.1f,
                                  0.2f, 0.5f, -0.4f, 0.6f, 0.9f, -0.8f, 0.7f, -0.3f});
  const Tensor scores_fixed({4}, {0.6f, -0.9f, 0.3f, -0.2f});

  push("loss/hinge_d_real", [](Tape&, const Tensor& s) { return hinge_d_real(s); },
      gen_unit({n}));
  push("loss/hinge_d_fake", [](Tape&, const Tensor& s) { return hinge_d_fake(s); },
      gen_unit({n}));
  push("loss/hinge_g", [](Tape&, const Tensor& s) { return hinge_g(s); }, gen_unit({n}));
  push("loss/multi_hinge",
      [=](Tape&, const Tensor& l) { return multi_hinge(reshape(l, {n, k}), y_fixed); },
      gen_unit({n * k}));
  push("loss/margin_diagnostic",
      [=](Tape&, const Tensor& l) { return margin_diagnostic(reshape(l, {n, k}), y_fixed); },
      gen_unit({n * k}));
  push("loss/cross_entropy",
      [=](Tape&, const Tensor& l) { return cross_entropy(reshape(l, {n, k}), y_fixed); },
      gen_unit({n * k}));
  push("loss/mh_d_total_scores_real",
      [=](Tape&, const Tensor& s) {
        return mh_d_loss(s, scores_fixed, cls_fixed, y_fixed).total;
      },
      gen_unit({n}));
  push("loss/mh_d_total_scores_fake",
      [=](Tape&, const Tensor& s) {
        return mh_d_loss(scores_fixed, s, cls_fixed, y_fixed).total;
      },
      gen_unit({n}));
  push("loss/mh_d_total_cls",
      [=](Tape&, const Tensor& l) {
        return mh_d_loss(scores_fixed, scores_fixed, reshape(l, {n, k}), y_fixed).total;
      },
      gen_unit({n * k}));
  push("loss/mh_g_total_scores",
      [=](Tape&, const Tensor& s) { return mh_g_loss(s, cls_fixed, y_fixed, 0.1f).total; },
      gen_unit({n}));
  push("loss/mh_g_total_cls",
      [=](Tape&, const Tensor& l) {
        return mh_g_loss(scores_fixed, reshape(l, {n, k}), y_fixed, 0.1f).total;
      },
      gen_unit({n * k}));
  push("loss/ssl_d_total_unlab_scores",
      [=](Tape&, const Tensor& s) {
        return mh_ssl_d_loss(scores_fixed, scores_fixed, s, cls_fixed, y_fixed).total;
      },
      gen_unit({n}));
  push("loss/ssl_d_total_scores_real",
      [=](Tape&, const Tensor& s) {
        return mh_ssl_d_loss(s, scores_fixed, scores_fixed, cls_fixed, y_fixed).total;
      },
      gen_unit({n}));
  push("loss/ssl_d_total_cls",
      [=](Tape&, const Tensor& l) {
        return mh_ssl_d_loss(scores_fixed, scores_fixed, scores_fixed, reshape(l, {n, k}), y_fixed)
            .total;
      },
      gen_unit({n * k}));
  push("loss/ac_ssl_d_total_cls",
      [=](Tape&, const Tensor& l) {
        return ac_ssl_d_loss(scores_fixed, scores_fixed, scores_fixed, reshape(l, {n, k}), y_fixed)
            .total;
      },
      gen_unit({n * k}));
  push("loss/ac_g_total_cls",
      [=](Tape&, const Tensor& l) {
        return ac_g_loss(scores_fixed, reshape(l, {n, k}), y_fixed, 0.1f).total;
      },
      gen_unit({n * k}));
  push("loss/ac_d_total_cls",
      [=](Tape&, const Tensor& l) {
        return ac_d_loss(scores_fixed, scores_fixed, reshape(l, {n, k}), y_fixed).total;
      },
      gen_unit({n * k}));

  // --- end to end through the networks ---
  push("composite/mh_d_total_input",
      [](Tape&, const Tensor& x) {
        Rng rng(11);
        CriticNet critic(2, 3, HeadMode::Aux, rng, /*hidden=*/4, /*depth=*/2);
        FwdCtx ctx = FwdCtx::eval_mode();
        Tensor xin = reshape(x, {2, 2});
        const std::vector<int> y = {0, 2};
        Tensor feats = critic.features(ctx, xin);
        Tensor s = critic.score(ctx, feats, y);
        return mh_d_loss(s, mul_scalar(s, 0.5f), critic.classify(ctx, feats), y).total;
      },
      gen_unit({4}));
  push("composite/mh_g_total_latent",
      [](Tape&, const Tensor& z) {
        Rng rng(12);
        GeneratorNet gen(3, 2, 2, rng, /*hidden=*/4, /*depth=*/2);
        CriticNet critic(2, 2, HeadMode::Aux, rng, /*hidden=*/4, /*depth=*/2);
        FwdCtx ctx = FwdCtx::eval_mode();
        const std::vector<int> y = {0, 1};
        Tensor fake = gen.forward(ctx, reshape(z, {2, 3}), y);
        Tensor feats = critic.features(ctx, fake);
        Tensor s = critic.score(ctx, feats, y);
        return mh_g_loss(s, critic.classify(ctx, feats), y, 0.1f).total;
      },
      gen_unit({6}));

  return cases;
}

}  // namespace

const std::vector<GradCheckCase>& gradcheck_suite() {
  static const std::vector<GradCheckCase> suite = build_suite();
  return suite;
}

std::vector<GradCheckRow> run_gradcheck_suite(uint64_t seed, float tolerance) {
  std::vector<GradCheckRow> rows;
  rows.reserve(gradcheck_suite().size());
  for (const auto& c : gradcheck_suite()) {
    GradCheckRow row;
    row.name = c.name;
    row.max_err = c.run(seed);
    row.pass = row.max_err < tolerance;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mhgan
