#include "mhgan/tensor.hpp"

#include <cmath>
#include <functional>

#include "doctest.h"
#include "mhgan/rng.hpp"

using namespace mhgan;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Resamples the point until the forward pass stays clear of kinks, then runs
// the central-difference comparison. h = 1e-3 per the finite-difference
// protocol; kink margin 1e-2 keeps both evaluations on one linear piece.
float checked_grad_err(const std::function<Tensor(Tape&, const Tensor&)>& f,
                       const std::function<Tensor(Rng&)>& point_gen, uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Tensor point = point_gen(rng);
    Tape probe;
    Tensor x = probe.leaf(point);
    (void)f(probe, x);
    if (probe.min_kink_margin() > 1e-2f) return grad_check(f, point, 1e-3f);
  }
  FAIL("could not sample a kink-free point");
  return 1.0f;
}

}  // namespace

TEST_CASE("matmul hand cases") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {1, 1});
  Tensor c = matmul(a, b);
  CHECK(c.shape == Shape{2, 1});
  CHECK(c.values[0] == doctest::Approx(3));
  CHECK(c.values[1] == doctest::Approx(7));

  Tensor d = matmul_nt(a, Tensor({1, 2}, {1, 1}));
  CHECK(d.values[0] == doctest::Approx(3));
  CHECK(d.values[1] == doctest::Approx(7));
}

TEST_CASE("relu and max_axis hand cases") {
  Tensor x({3}, {-1, 0, 2});
  Tensor r = relu(x);
  CHECK(r.values == std::vector<float>{0, 0, 2});

  MaxResult m = max_axis(Tensor({1, 3}, {0.5f, 0.2f, 0.9f}), 1);
  CHECK(m.values.shape == Shape{1});
  CHECK(m.values.values[0] == doctest::Approx(0.9f));
  CHECK(m.argmax == std::vector<int>{2});
}

TEST_CASE("max tie goes to the lowest index") {
  MaxResult m = max_axis(Tensor({1, 4}, {0.5f, 0.7f, 0.7f, 0.1f}), 1);
  CHECK(m.argmax == std::vector<int>{1});

  Tape tape;
  Tensor x = tape.leaf(Tensor({1, 4}, {0.5f, 0.7f, 0.7f, 0.1f}));
  MaxResult mm = max_axis(x, 1);
  tape.backward(sum_all(mm.values));
  Tensor g = tape.grad(x);
  CHECK(g.values == std::vector<float>{0, 1, 0, 0});
}

TEST_CASE("backward of sum(relu(x)) uses the inactive-at-zero subgradient") {
  Tape tape;
  Tensor x = tape.leaf(Tensor({2}, {-1, 2}));
  tape.backward(sum_all(relu(x)));
  CHECK(tape.grad(x).values == std::vector<float>{0, 1});

  Tape tape2;
  Tensor z = tape2.leaf(Tensor({1}, {0.0f}));
  tape2.backward(sum_all(relu(z)));
  CHECK(tape2.grad(z).values[0] == 0.0f);  // kink convention: inactive at 0
}

TEST_CASE("backward of sum(matmul(W, v))") {
  Tape tape;
  Tensor w = tape.leaf(Tensor({3, 2}, {0.5f, -1, 2, 0.25f, -3, 1}));
  Tensor v({2, 1}, {1, 2});
  tape.backward(sum_all(matmul(w, v)));
  Tensor g = tape.grad(w);
  for (int i = 0; i < 3; ++i) {
    CHECK(g.values[2 * i + 0] == doctest::Approx(1));
    CHECK(g.values[2 * i + 1] == doctest::Approx(2));
  }
}

TEST_CASE("grad_check closed-form cases") {
  // sum of squares: analytic gradient 2x
  float err = grad_check(
      [](Tape&, const Tensor& x) { return sum_all(square(x)); },
      Tensor({3}, {1, 2, 3}), 1e-3f);
  CHECK(err < 1e-4f);

  // constant function: both gradients identically zero
  float cerr = grad_check(
      [](Tape&, const Tensor& x) { return mul_scalar(sum_all(mul_scalar(x, 0.0f)), 1.0f); },
      Tensor({3}, {1, 2, 3}), 1e-3f);
  CHECK(cerr == 0.0f);
}

TEST_CASE("composite loss gradient matches central differences") {
  // mean(relu(W x + b)^2)-style composite over a single packed input
  auto f = [](Tape&, const Tensor& x) {
    Tensor a = reshape(x, {2, 4});
    Tensor w({4, 3}, {0.3f, -0.2f, 0.9f, 0.5f, 0.1f, -0.4f, 0.8f, -0.6f, 0.2f, -0.1f, 0.7f, 0.4f});
    Tensor h = relu(matmul(a, w));
    Tensor s = mul(h, h);
    return mean_all(add(sum_axis(s, 1), mul_scalar(sum_axis(exp(mul_scalar(a, 0.3f)), 1), 0.5f)));
  };
  float err = checked_grad_err(
      f, [](Rng& rng) { return random_tensor({8}, rng); }, 7);
  CHECK(err < 1e-3f);
}

TEST_CASE("every primitive matches finite differences on seeded random input") {
  auto unit = [](Rng& rng) { return random_tensor({2, 4}, rng); };
  auto positive = [](Rng& rng) { return random_tensor({2, 4}, rng, 0.5f, 2.0f); };
  auto vec = [](Rng& rng) { return random_tensor({4}, rng); };

  struct Case {
    const char* name;
    std::function<Tensor(Tape&, const Tensor&)> f;
    std::function<Tensor(Rng&)> gen;
  };
  const Tensor other({4}, {0.7f, -1.2f, 0.4f, 1.5f});
  const Tensor mat({2, 4}, {0.3f, 1.1f, -0.6f, 0.9f, -1.4f, 0.2f, 0.8f, -0.5f});
  const Tensor nz({4}, {0.8f, -1.1f, 0.6f, 1.4f});
  const std::vector<Case> cases = {
      {"add", [&](Tape&, const Tensor& x) { return mean_all(add(x, other)); }, unit},
      {"add_bcast_rhs",
       [&](Tape&, const Tensor& x) { return mean_all(add(mat, sum_axis(mul(x, x), 0))); }, unit},
      {"sub", [&](Tape&, const Tensor& x) { return mean_all(sub(x, other)); }, unit},
      {"mul", [&](Tape&, const Tensor& x) { return mean_all(mul(x, mat)); }, unit},
      {"mul_rhs", [&](Tape&, const Tensor& x) { return mean_all(mul(mat, sum_axis(x, 0))); }, unit},
      {"div", [&](Tape&, const Tensor& x) { return mean_all(div(mat, sum_axis(mul(x, x), 0))); },
       positive},
      {"div_lhs", [&](Tape&, const Tensor& x) { return mean_all(div(x, nz)); }, unit},
      {"add_scalar", [](Tape&, const Tensor& x) { return mean_all(add_scalar(x, 1.5f)); }, unit},
      {"mul_scalar", [](Tape&, const Tensor& x) { return mean_all(mul_scalar(x, -0.7f)); }, unit},
      {"scale_factor",
       [&](Tape&, const Tensor& x) { return sum_all(scale(mat, mean_all(x))); }, unit},
      {"recip", [](Tape&, const Tensor& x) { return mean_all(recip(x)); }, positive},
      {"matmul",
       [&](Tape&, const Tensor& x) { return mean_all(matmul(x, Tensor({4, 3}, {0.2f, -0.5f, 0.8f, 1.1f, -0.3f, 0.6f, -0.9f, 0.4f, 0.1f, 0.7f, -0.2f, 0.5f}))); },
       unit},
      {"matmul_nt",
       [&](Tape&, const Tensor& x) { return mean_all(matmul_nt(x, Tensor({3, 4}, {0.2f, -0.5f, 0.8f, 1.1f, -0.3f, 0.6f, -0.9f, 0.4f, 0.1f, 0.7f, -0.2f, 0.5f}))); },
       unit},
      {"sum_axis0", [](Tape&, const Tensor& x) { return mean_all(square(sum_axis(x, 0))); }, unit},
      {"sum_axis1", [](Tape&, const Tensor& x) { return mean_all(square(sum_axis(x, 1))); }, unit},
      {"mean_axis0", [](Tape&, const Tensor& x) { return sum_all(square(mean_axis(x, 0))); }, unit},
      {"mean_axis1", [](Tape&, const Tensor& x) { return sum_all(square(mean_axis(x, 1))); }, unit},
      {"max_axis1", [](Tape&, const Tensor& x) { return mean_all(max_axis(x, 1).values); }, unit},
      {"max_axis0", [](Tape&, const Tensor& x) { return mean_all(max_axis(x, 0).values); }, unit},
      {"relu", [](Tape&, const Tensor& x) { return mean_all(relu(x)); }, unit},
      {"exp", [](Tape&, const Tensor& x) { return mean_all(mhgan::exp(x)); }, unit},
      {"log", [](Tape&, const Tensor& x) { return mean_all(mhgan::log(x)); }, positive},
      {"log_clamped",
       [](Tape&, const Tensor& x) { return mean_all(log_clamped(x, 1e-12f)); }, positive},
      {"sqrt", [](Tape&, const Tensor& x) { return mean_all(mhgan::sqrt(x)); }, positive},
      {"square", [](Tape&, const Tensor& x) { return mean_all(square(x)); }, unit},
      {"clamp_min", [](Tape&, const Tensor& x) { return mean_all(clamp_min(x, 0.25f)); }, unit},
      {"tile_cols",
       [](Tape&, const Tensor& x) { return mean_all(square(tile_cols(reshape(sum_axis(x, 1), {2, 1}), 5))); },
       unit},
      {"index_select_rows",
       [](Tape&, const Tensor& x) { return mean_all(square(index_select_rows(x, {1, 0, 1}))); },
       unit},
      {"concat_axis0", [&](Tape&, const Tensor& x) { return mean_all(square(concat(x, mat, 0))); }, unit},
      {"concat_axis1", [&](Tape&, const Tensor& x) { return mean_all(square(concat(x, mat, 1))); }, unit},
      {"concat_rank1", [&](Tape&, const Tensor& x) { return mean_all(square(concat(sum_axis(x, 0), other, 0))); }, unit},
      {"reshape", [](Tape&, const Tensor& x) { return mean_all(square(reshape(x, {4, 2}))); }, unit},
      {"sum_all_vec", [](Tape&, const Tensor& x) { return square(sum_all(x)); }, vec},
  };

  for (const auto& c : cases) {
    CAPTURE(c.name);
    float err = checked_grad_err(c.f, c.gen, 1234);
    CHECK_MESSAGE(err < 1e-3f, c.name << " rel err " << err);
  }
}

TEST_CASE("adjoint accumulation is linear over paths") {
  // loss = f(x) + g(x): the leaf gradient equals grad f + grad g computed separately
  auto f = [](Tape&, const Tensor& x) { return mean_all(square(x)); };
  auto g = [](Tape&, const Tensor& x) { return mean_all(relu(x)); };

  Rng rng(99);
  Tensor p = random_tensor({2, 3}, rng);
  for (auto& v : p.values)
    if (std::abs(v) < 0.05f) v += 0.1f;

  Tape t_sum;
  Tensor xs = t_sum.leaf(p);
  t_sum.backward(add(f(t_sum, xs), g(t_sum, xs)));
  Tensor gs = t_sum.grad(xs);

  Tape t_f;
  Tensor xf = t_f.leaf(p);
  t_f.backward(f(t_f, xf));
  Tensor gf = t_f.grad(xf);

  Tape t_g;
  Tensor xg = t_g.leaf(p);
  t_g.backward(g(t_g, xg));
  Tensor gg = t_g.grad(xg);

  for (size_t i = 0; i < p.values.size(); ++i)
    CHECK(gs.values[i] == doctest::Approx(gf.values[i] + gg.values[i]).epsilon(1e-6));
}

TEST_CASE("contract violations") {
  CHECK_THROWS_AS(add(Tensor({2}, {1, 2}), Tensor({3}, {1, 2, 3})), ContractViolation);
  CHECK_THROWS_AS(matmul(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({3, 1}, {1, 2, 3})),
                  ContractViolation);
  CHECK_THROWS_AS(index_select_rows(Tensor({2, 2}, {1, 2, 3, 4}), {2}), ContractViolation);
  CHECK_THROWS_AS(mhgan::log(Tensor({1}, {0.0f})), ContractViolation);
  CHECK_THROWS_AS(div(Tensor({1}, {1.0f}), Tensor({1}, {0.0f})), ContractViolation);

  Tape tape;
  Tensor detached({1}, {1.0f});
  CHECK_THROWS_AS(tape.backward(detached), ContractViolation);

  Tensor x = tape.leaf(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(tape.backward(square(x)), ContractViolation);  // not scalar

  Tape tape2;
  Tensor y = tape2.leaf(Tensor({2}, {1, 2}));
  Tensor loss = sum_all(square(y));
  tape2.backward(loss);
  CHECK_THROWS_AS(tape2.backward(loss), ContractViolation);  // backward runs once
}

TEST_CASE("ops on two different tapes are rejected") {
  Tape a, b;
  Tensor xa = a.leaf(Tensor({2}, {1, 2}));
  Tensor xb = b.leaf(Tensor({2}, {3, 4}));
  CHECK_THROWS_AS(add(xa, xb), ContractViolation);
}

TEST_CASE("forward results on finite inputs stay finite") {
  Rng rng(5);
  Tensor x = random_tensor({4, 4}, rng);
  Tensor y = random_tensor({4, 4}, rng, 0.5f, 2.0f);
  for (const Tensor& t : {add(x, y), mul(x, y), div(x, y), matmul(x, y), relu(x), square(x)})
    for (float v : t.values) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(mhgan::exp(Tensor({1}, {200.0f})), ContractViolation);
}
