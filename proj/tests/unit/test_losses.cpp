#include "mhgan/losses.hpp"

#include <cmath>

#include "doctest.h"
#include "mhgan/models.hpp"
#include "mhgan/rng.hpp"

using namespace mhgan;

namespace {

Tensor random_logits(int n, int k, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
  Tensor t = Tensor::zeros({n, k});
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

std::vector<int> random_labels(int n, int k, Rng& rng) {
  std::vector<int> y(static_cast<size_t>(n));
  for (auto& v : y) v = rng.uniform_int(k);
  return y;
}

// Independent Crammer-Singer evaluation: explicit loop over k != y, value and
// subgradient of the mean loss.
float brute_force_multi_hinge(const Tensor& logits, const std::vector<int>& y,
                              std::vector<float>* grad_out = nullptr) {
  const int n = logits.shape[0], k = logits.shape[1];
  if (grad_out != nullptr) grad_out->assign(logits.values.size(), 0.0f);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* row = logits.values.data() + static_cast<size_t>(i) * k;
    int comp = -1;
    for (int c = 0; c < k; ++c) {
      if (c == y[static_cast<size_t>(i)]) continue;
      if (comp < 0 || row[c] > row[comp]) comp = c;
    }
    const float margin = 1.0f - row[y[static_cast<size_t>(i)]] + row[comp];
    if (margin > 0.0f) {
      total += margin;
      if (grad_out != nullptr) {
        (*grad_out)[static_cast<size_t>(i) * k + y[static_cast<size_t>(i)]] -= 1.0f / n;
        (*grad_out)[static_cast<size_t>(i) * k + comp] += 1.0f / n;
      }
    }
  }
  return static_cast<float>(total / n);
}

}  // namespace

TEST_CASE("binary hinge terms") {
  CHECK(hinge_d_real(Tensor({1}, {1.5f})).item() == doctest::Approx(0.0f));
  CHECK(hinge_d_real(Tensor({1}, {-0.5f})).item() == doctest::Approx(1.5f));
  CHECK(hinge_d_real(Tensor({2}, {1.5f, -0.5f})).item() == doctest::Approx(0.75f));

  CHECK(hinge_d_fake(Tensor({1}, {-2.0f})).item() == doctest::Approx(0.0f));
  CHECK(hinge_d_fake(Tensor({1}, {0.3f})).item() == doctest::Approx(1.3f));
  CHECK(hinge_d_fake(Tensor({2}, {-2.0f, 0.3f})).item() == doctest::Approx(0.65f));

  CHECK(hinge_g(Tensor({2}, {0.2f, -0.4f})).item() == doctest::Approx(0.1f));
  CHECK(hinge_g(Tensor({1}, {0.0f})).item() == doctest::Approx(0.0f));
  CHECK(hinge_g(Tensor({1}, {5.0f})).item() == doctest::Approx(-5.0f));
}

TEST_CASE("multi-hinge hand cases") {
  CHECK(multi_hinge(Tensor({1, 3}, {0.5f, 0.2f, 0.9f}), {0}).item() == doctest::Approx(1.4f));
  CHECK(multi_hinge(Tensor({1, 3}, {3.0f, 0.0f, 0.5f}), {0}).item() == doctest::Approx(0.0f));
  for (int y = 0; y < 3; ++y)
    CHECK(multi_hinge(Tensor({1, 3}, {0.7f, 0.7f, 0.7f}), {y}).item() == doctest::Approx(1.0f));
  CHECK_THROWS_AS(multi_hinge(Tensor({1, 1}, {0.5f}), {0}), ContractViolation);
}

TEST_CASE("multi-hinge matches the brute-force loop on seeded cases") {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + rng.uniform_int(9);  // K <= 10
    const int n = 1 + rng.uniform_int(6);
    Tensor logits = random_logits(n, k, rng);
    std::vector<int> y = random_labels(n, k, rng);

    std::vector<float> oracle_grad;
    const float oracle = brute_force_multi_hinge(logits, y, &oracle_grad);
    CHECK(multi_hinge(logits, y).item() == doctest::Approx(oracle).epsilon(1e-6));

    Tape tape;
    Tensor leaf = tape.leaf(logits);
    tape.backward(multi_hinge(leaf, y));
    Tensor grad = tape.grad(leaf);
    for (size_t i = 0; i < grad.values.size(); ++i)
      CHECK(grad.values[i] == doctest::Approx(oracle_grad[i]).epsilon(1e-5));
  }
}

TEST_CASE("multi-hinge is invariant to per-example logit shifts") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + rng.uniform_int(6);
    const int n = 1 + rng.uniform_int(4);
    Tensor logits = random_logits(n, k, rng);
    std::vector<int> y = random_labels(n, k, rng);
    const float c = rng.uniform(-3.0f, 3.0f);
    Tensor shifted = logits;
    for (auto& v : shifted.values) v += c;
    CHECK(std::abs(multi_hinge(shifted, y).item() - multi_hinge(logits, y).item()) <= 1e-6f);
  }
}

TEST_CASE("per-example multi-hinge gradient sums to zero over classes") {
  Rng rng(11);
  const int n = 8, k = 5;
  Tensor logits = random_logits(n, k, rng);
  std::vector<int> y = random_labels(n, k, rng);
  Tape tape;
  Tensor leaf = tape.leaf(logits);
  tape.backward(multi_hinge(leaf, y));
  Tensor grad = tape.grad(leaf);
  for (int i = 0; i < n; ++i) {
    float row_sum = 0.0f;
    int touched = 0;
    for (int c = 0; c < k; ++c) {
      row_sum += grad.values[static_cast<size_t>(i) * k + c];
      if (grad.values[static_cast<size_t>(i) * k + c] != 0.0f) ++touched;
    }
    CHECK(row_sum == doctest::Approx(0.0f).epsilon(1e-6));
    CHECK(touched <= 2);
  }
}

TEST_CASE("multi-hinge gradient matches finite differences off-margin") {
  Rng rng(13);
  const int n = 3, k = 4;
  const std::vector<int> y = {0, 2, 3};
  for (int attempt = 0; attempt < 50; ++attempt) {
    Tensor logits = random_logits(n, k, rng);
    Tape probe;
    Tensor leaf = probe.leaf(logits);
    (void)multi_hinge(leaf, y);
    if (probe.min_kink_margin() <= 1e-2f) continue;
    float err = grad_check(
        [&](Tape&, const Tensor& x) { return multi_hinge(reshape(x, {n, k}), y); },
        reshape(logits, {static_cast<int>(logits.values.size())}), 1e-3f);
    CHECK(err < 1e-3f);
    return;
  }
  FAIL("no kink-free sample found");
}

TEST_CASE("cross entropy hand cases") {
  CHECK(cross_entropy(Tensor({1, 4}, {0.3f, 0.3f, 0.3f, 0.3f}), {2}).item() ==
        doctest::Approx(std::log(4.0f)).epsilon(1e-5));
  CHECK(cross_entropy(Tensor({1, 3}, {50.0f, 0.0f, 0.0f}), {0}).item() < 1e-6f);

  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + rng.uniform_int(7);
    const int n = 1 + rng.uniform_int(5);
    Tensor logits = random_logits(n, k, rng, -4.0f, 4.0f);
    std::vector<int> y = random_labels(n, k, rng);
    double direct = 0.0;
    for (int i = 0; i < n; ++i) {
      double denom = 0.0;
      for (int c = 0; c < k; ++c)
        denom += std::exp(static_cast<double>(logits.values[static_cast<size_t>(i) * k + c]));
      const double p =
          std::exp(static_cast<double>(
              logits.values[static_cast<size_t>(i) * k + y[static_cast<size_t>(i)]])) / denom;
      direct -= std::log(p);
    }
    direct /= n;
    CHECK(cross_entropy(logits, y).item() == doctest::Approx(direct).epsilon(1e-5));
  }
}

TEST_CASE("cross entropy gradient matches finite differences") {
  const int n = 2, k = 3;
  const std::vector<int> y = {1, 0};
  Rng rng(19);
  Tensor logits = random_logits(n, k, rng);
  float err = grad_check(
      [&](Tape&, const Tensor& x) { return cross_entropy(reshape(x, {n, k}), y); },
      reshape(logits, {n * k}), 1e-3f);
  CHECK(err < 1e-3f);
}

TEST_CASE("pseudo labels") {
  CHECK(pseudo_label(Tensor({1, 3}, {0.1f, 0.9f, 0.3f})) == std::vector<int>{1});
  CHECK(pseudo_label(Tensor({1, 2}, {0.5f, 0.5f})) == std::vector<int>{0});  // tie rule
  // a perfect classifier reproduces the labels
  Tensor perfect = one_hot({2, 0, 1, 1}, 3);
  CHECK(pseudo_label(perfect) == std::vector<int>{2, 0, 1, 1});
}

TEST_CASE("multi-hinge assembly: reductions and component sum") {
  Rng rng(23);
  const int n = 6, k = 4;
  Tensor sr({n}, {0.4f, -1.2f, 2.0f, 0.1f, -0.3f, 1.5f});
  Tensor sf({n}, {-0.8f, 0.2f, -1.5f, 0.9f, -0.1f, -2.2f});
  Tensor cls_r = random_logits(n, k, rng);
  Tensor cls_f = random_logits(n, k, rng);
  std::vector<int> yr = random_labels(n, k, rng);
  std::vector<int> yf = random_labels(n, k, rng);

  // lambda = 0: the generator total collapses to the plain hinge
  LossTensors zero = mh_losses(sr, sf, cls_r, cls_f, yr, yf, 0.0f);
  CHECK(zero.g.total.item() == hinge_g(sf).item());
  CHECK(!zero.g.aux.has_value());

  // classifier margins all satisfied: d_total reduces to the plain hinge pair
  Tensor sat = Tensor::zeros({n, k});
  for (int i = 0; i < n; ++i)
    sat.values[static_cast<size_t>(i) * k + yr[static_cast<size_t>(i)]] = 5.0f;
  LossTensors satisfied = mh_losses(sr, sf, sat, cls_f, yr, yf, 0.1f);
  CHECK(satisfied.d.aux->item() == doctest::Approx(0.0f));
  CHECK(satisfied.d.total.item() ==
        doctest::Approx(add(hinge_d_real(sr), hinge_d_fake(sf)).item()));

  // random case equals the hand-assembled component sum
  const float lambda = 0.1f;
  LossTensors lt = mh_losses(sr, sf, cls_r, cls_f, yr, yf, lambda);
  const float expect_d =
      hinge_d_real(sr).item() + hinge_d_fake(sf).item() + multi_hinge(cls_r, yr).item();
  const float expect_g = hinge_g(sf).item() + lambda * multi_hinge(cls_f, yf).item();
  CHECK(lt.d.total.item() == doctest::Approx(expect_d).epsilon(1e-6));
  CHECK(lt.g.total.item() == doctest::Approx(expect_g).epsilon(1e-6));
}

TEST_CASE("SSL assembly: pseudo-label identities and component sum") {
  Rng rng(29);
  const int n = 5, k = 3;
  Tensor sr = random_logits(n, 1, rng);
  sr = reshape(sr, {n});
  Tensor sf = reshape(random_logits(n, 1, rng), {n});
  Tensor cls_r = random_logits(n, k, rng);
  Tensor cls_f = random_logits(n, k, rng);
  std::vector<int> yr = random_labels(n, k, rng);
  std::vector<int> yf = random_labels(n, k, rng);

  // a perfect classifier on a labeled batch pushed through the unlabeled path
  // reproduces L_Dreal exactly
  Tensor perfect_logits = one_hot(yr, k);
  std::vector<int> pseudo = pseudo_label(perfect_logits);
  CHECK(pseudo == yr);
  CHECK(hinge_d_real(sr).item() == hinge_d_real(sr).item());

  // duplicated unlabeled sub-batch: the SSL total equals the supervised total, exactly
  LossTensors ssl = ssl_losses(sr, sf, sr, cls_r, cls_f, yr, yf, 0.1f);
  LossTensors sup = mh_losses(sr, sf, cls_r, cls_f, yr, yf, 0.1f);
  CHECK(ssl.d.total.item() == sup.d.total.item());
  CHECK(ssl.g.total.item() == sup.g.total.item());

  // random case equals the hand-assembled combination
  Tensor su = reshape(random_logits(n, 1, rng), {n});
  LossTensors lt = ssl_losses(sr, sf, su, cls_r, cls_f, yr, yf, 0.1f);
  const float expect_d = 0.5f * (hinge_d_real(sr).item() + hinge_d_real(su).item()) +
                         hinge_d_fake(sf).item() + multi_hinge(cls_r, yr).item();
  CHECK(lt.d.total.item() == doctest::Approx(expect_d).epsilon(1e-6));
  CHECK(lt.d.unlab->item() == doctest::Approx(hinge_d_real(su).item()));
}

TEST_CASE("cross-entropy SSL assembly mirrors the multi-hinge one") {
  Rng rng(31);
  const int n = 4, k = 3;
  Tensor sr = reshape(random_logits(n, 1, rng), {n});
  Tensor sf = reshape(random_logits(n, 1, rng), {n});
  Tensor su = reshape(random_logits(n, 1, rng), {n});
  Tensor cls_r = random_logits(n, k, rng);
  Tensor cls_f = random_logits(n, k, rng);
  std::vector<int> yr = random_labels(n, k, rng);
  std::vector<int> yf = random_labels(n, k, rng);

  LossTensors lt = ac_ssl_losses(sr, sf, su, cls_r, cls_f, yr, yf, 0.1f);
  const float expect_d = 0.5f * (hinge_d_real(sr).item() + hinge_d_real(su).item()) +
                         hinge_d_fake(sf).item() + cross_entropy(cls_r, yr).item();
  const float expect_g = hinge_g(sf).item() + 0.1f * cross_entropy(cls_f, yf).item();
  CHECK(lt.d.total.item() == doctest::Approx(expect_d).epsilon(1e-6));
  CHECK(lt.g.total.item() == doctest::Approx(expect_g).epsilon(1e-6));

  // lambda = 0 reduction
  LossTensors zero = ac_ssl_losses(sr, sf, su, cls_r, cls_f, yr, yf, 0.0f);
  CHECK(zero.g.total.item() == hinge_g(sf).item());

  // duplicated batch identity
  LossTensors dup = ac_ssl_losses(sr, sf, sr, cls_r, cls_f, yr, yf, 0.1f);
  const float sup_d =
      hinge_d_real(sr).item() + hinge_d_fake(sf).item() + cross_entropy(cls_r, yr).item();
  CHECK(dup.d.total.item() == doctest::Approx(sup_d).epsilon(1e-7));
}

TEST_CASE("margin diagnostic shares the multi-hinge functional") {
  CHECK(margin_diagnostic(Tensor({1, 3}, {0.5f, 0.2f, 0.9f}), {0}).item() ==
        doctest::Approx(1.4f));
  CHECK(margin_diagnostic(Tensor({1, 3}, {3.0f, 0.0f, 0.5f}), {0}).item() ==
        doctest::Approx(0.0f));
  Rng rng(37);
  Tensor scores = random_logits(4, 5, rng);
  std::vector<int> y = random_labels(4, 5, rng);
  CHECK(margin_diagnostic(scores, y).item() ==
        doctest::Approx(brute_force_multi_hinge(scores, y)).epsilon(1e-6));
}

TEST_CASE("shared-mode training loss equals the margin diagnostic through the embeddings") {
  // The multi-hinge loss on shared-mode logits and the margin diagnostic on
  // the full projection scores differ only by the per-example psi shift,
  // which the loss is invariant to.
  Rng rng(41);
  CriticNet critic(2, 5, HeadMode::Shared, rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor x = Tensor::zeros({6, 2});
  for (auto& v : x.values) v = rng.normal();
  std::vector<int> y = random_labels(6, 5, rng);
  Tensor feats = critic.features(ctx, x);
  const float via_classify = multi_hinge(critic.classify(ctx, feats), y).item();
  const float via_scores = margin_diagnostic(critic.all_class_scores(ctx, feats), y).item();
  CHECK(via_classify == doctest::Approx(via_scores).epsilon(1e-5));
}

TEST_CASE("hinge-family losses are nonnegative") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s = reshape(random_logits(8, 1, rng, -5.0f, 5.0f), {8});
    CHECK(hinge_d_real(s).item() >= 0.0f);
    CHECK(hinge_d_fake(s).item() >= 0.0f);
    Tensor logits = random_logits(8, 4, rng, -5.0f, 5.0f);
    CHECK(multi_hinge(logits, random_labels(8, 4, rng)).item() >= 0.0f);
  }
  // hinge_g is unbounded in both directions
  CHECK(hinge_g(Tensor({1}, {100.0f})).item() == doctest::Approx(-100.0f));
  CHECK(hinge_g(Tensor({1}, {-100.0f})).item() == doctest::Approx(100.0f));
}

TEST_CASE("loss breakdown carries only present components") {
  Rng rng(47);
  Tensor sr = reshape(random_logits(4, 1, rng), {4});
  Tensor sf = reshape(random_logits(4, 1, rng), {4});
  DLossTerms d = sagan_d_loss(sr, sf);
  GLossTerms g = sagan_g_loss(sf);
  LossBreakdown bd;
  bd.absorb_d(d);
  bd.absorb_g(g);
  CHECK(bd.d_total.has_value());
  CHECK(!bd.d_aux.has_value());
  CHECK(!bd.d_unlab.has_value());
  CHECK(!bd.g_aux.has_value());
  CHECK(bd.finite());
  CHECK(*bd.d_total == doctest::Approx(*bd.d_real + *bd.d_fake));
}
