#include "mhgan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mhgan {

void contract_failure(const char* cond, const char* file, int line, const std::string& msg) {
  std::ostringstream os;
  os << "contract violation: " << msg << " [" << cond << " at " << file << ":" << line << "]";
  throw ContractViolation(os.str());
}

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int e : shape) {
    MHGAN_REQUIRE(e > 0, "extents must be positive");
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, std::vector<float> v) : shape(std::move(s)), values(std::move(v)) {
  MHGAN_REQUIRE(numel(shape) == static_cast<int64_t>(values.size()),
                "shape " + shape_str(shape) + " does not match value count");
}

Tensor Tensor::zeros(const Shape& s) { return full(s, 0.0f); }

Tensor Tensor::full(const Shape& s, float value) {
  return Tensor(s, std::vector<float>(static_cast<size_t>(numel(s)), value));
}

Tensor Tensor::scalar(float value) { return Tensor({}, {value}); }

int Tensor::extent(int axis) const {
  MHGAN_REQUIRE(axis >= 0 && axis < rank(), "axis out of range");
  return shape[static_cast<size_t>(axis)];
}

float Tensor::item() const {
  MHGAN_REQUIRE(values.size() == 1, "item() needs a single-element tensor, got " + shape_str(shape));
  return values[0];
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::leaf(const Tensor& init) {
  Tensor t(init.shape, init.values);
  t.tape = this;
  t.node = add_node(init.shape);
  return t;
}

int Tape::add_node(const Shape& shape) {
  nodes_.push_back({shape, std::vector<float>(static_cast<size_t>(numel(shape)), 0.0f)});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::record(std::function<void()> backward_fn) {
  records_.push_back(std::move(backward_fn));
}

std::vector<float>& Tape::grad_of(int node) {
  MHGAN_REQUIRE(node >= 0 && node < static_cast<int>(nodes_.size()), "bad node id");
  return nodes_[static_cast<size_t>(node)].grad;
}

const std::vector<float>& Tape::grad_of(int node) const {
  MHGAN_REQUIRE(node >= 0 && node < static_cast<int>(nodes_.size()), "bad node id");
  return nodes_[static_cast<size_t>(node)].grad;
}

const Shape& Tape::shape_of(int node) const {
  MHGAN_REQUIRE(node >= 0 && node < static_cast<int>(nodes_.size()), "bad node id");
  return nodes_[static_cast<size_t>(node)].shape;
}

void Tape::note_kink_margin(float margin) { min_kink_ = std::min(min_kink_, margin); }

void Tape::backward(const Tensor& loss) {
  MHGAN_REQUIRE(loss.tape == this && loss.node >= 0, "backward() needs a tensor on this tape");
  MHGAN_REQUIRE(loss.size() == 1, "backward() needs a scalar loss");
  MHGAN_REQUIRE(!backward_done_, "backward() already ran on this tape");
  backward_done_ = true;
  grad_of(loss.node).assign(1, 1.0f);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

Tensor Tape::grad(const Tensor& t) const {
  MHGAN_REQUIRE(t.tape == this && t.node >= 0, "grad() of a tensor not on this tape");
  return Tensor(t.shape, grad_of(t.node));
}

// ---------------------------------------------------------------------------
// op helpers

namespace {

Tape* common_tape(const Tensor& a, const Tensor& b) {
  if (a.on_tape() && b.on_tape())
    MHGAN_REQUIRE(a.tape == b.tape, "operands live on different tapes");
  return a.on_tape() ? a.tape : b.tape;
}

Tensor attach(Tape* tape, Shape shape, std::vector<float> values) {
  Tensor t(std::move(shape), std::move(values));
  if (tape != nullptr) {
    t.tape = tape;
    t.node = tape->add_node(t.shape);
  }
  return t;
}

void axpy(std::vector<float>& acc, const std::vector<float>& g) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

bool leading_broadcast(const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return false;
  MHGAN_REQUIRE(a.rank() == b.rank() + 1 &&
                    std::equal(b.shape.begin(), b.shape.end(), a.shape.begin() + 1),
                "shapes " + shape_str(a.shape) + " and " + shape_str(b.shape) +
                    " neither match nor broadcast over the leading extent");
  return true;
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(int m, int k, int n, const float* a, const float* b, float* c) {
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<size_t>(i) * k;
    float* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      const float* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(int m, int k, int n, const float* a, const float* b, float* c) {
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<size_t>(i) * k;
    float* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const float* bj = b + static_cast<size_t>(j) * k;
      float acc = 0.0f;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(int m, int k, int n, const float* a, const float* b, float* c) {
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<size_t>(i) * k;
    const float* bi = b + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      if (av == 0.0f) continue;
      float* cp = c + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

enum class BinOp { Add, Sub, Mul, Div };

Tensor binary_op(const Tensor& a, const Tensor& b, BinOp op) {
  const bool bcast = leading_broadcast(a, b);
  const size_t n = a.values.size();
  const size_t block = bcast ? b.values.size() : n;
  if (op == BinOp::Div) {
    for (float v : b.values)
      MHGAN_REQUIRE(v != 0.0f, "division by zero; guard the denominator at the call site");
  }
  std::vector<float> out(n);
  const float* av = a.values.data();
  const float* bv = b.values.data();
  for (size_t i = 0; i < n; ++i) {
    const float x = av[i], y = bv[i % block];
    switch (op) {
      case BinOp::Add: out[i] = x + y; break;
      case BinOp::Sub: out[i] = x - y; break;
      case BinOp::Mul: out[i] = x * y; break;
      case BinOp::Div: out[i] = x / y; break;
    }
  }
  Tape* tape = common_tape(a, b);
  Tensor r = attach(tape, a.shape, std::move(out));
  if (tape == nullptr) return r;

  const int na = a.node, nb = b.node, nr = r.node;
  std::vector<float> asaved, bsaved;
  if (op == BinOp::Mul || op == BinOp::Div) {
    if (nb >= 0) asaved = a.values;
    bsaved = b.values;
  }
  tape->record([tape, na, nb, nr, op, block, asaved = std::move(asaved),
                bsaved = std::move(bsaved)] {
    const std::vector<float>& g = tape->grad_of(nr);
    if (na >= 0) {
      std::vector<float>& ga = tape->grad_of(na);
      for (size_t i = 0; i < g.size(); ++i) {
        switch (op) {
          case BinOp::Add:
          case BinOp::Sub: ga[i] += g[i]; break;
          case BinOp::Mul: ga[i] += g[i] * bsaved[i % block]; break;
          case BinOp::Div: ga[i] += g[i] / bsaved[i % block]; break;
        }
      }
    }
    if (nb >= 0) {
      std::vector<float>& gb = tape->grad_of(nb);
      for (size_t i = 0; i < g.size(); ++i) {
        const size_t j = i % block;
        switch (op) {
          case BinOp::Add: gb[j] += g[i]; break;
          case BinOp::Sub: gb[j] -= g[i]; break;
          case BinOp::Mul: gb[j] += g[i] * asaved[i]; break;
          case BinOp::Div: {
            const float y = bsaved[j];
            gb[j] -= g[i] * asaved[i] / (y * y);
            break;
          }
        }
      }
    }
  });
  return r;
}

// Element-wise unary op: out = f(x), backward gx += g * dfdx(x, out).
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd f, Bwd dfdx) {
  std::vector<float> out(a.values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.values[i]);
  Tensor r = attach(a.tape, a.shape, std::move(out));
  if (a.tape == nullptr) return r;
  Tape* tape = a.tape;
  const int na = a.node, nr = r.node;
  tape->record([tape, na, nr, dfdx, xs = a.values, ys = r.values] {
    const std::vector<float>& g = tape->grad_of(nr);
    std::vector<float>& ga = tape->grad_of(na);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xs[i], ys[i]);
  });
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// arithmetic

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::Mul); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::Div); }

Tensor add_scalar(const Tensor& a, float c) {
  return unary_op(a, [c](float x) { return x + c; }, [](float, float) { return 1.0f; });
}

Tensor mul_scalar(const Tensor& a, float c) {
  return unary_op(a, [c](float x) { return x * c; }, [c](float, float) { return c; });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  MHGAN_REQUIRE(s.size() == 1, "scale() needs a scalar factor");
  const float sv = s.values[0];
  std::vector<float> out(a.values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] * sv;
  Tape* tape = common_tape(a, s);
  Tensor r = attach(tape, a.shape, std::move(out));
  if (tape == nullptr) return r;
  const int na = a.node, ns = s.node, nr = r.node;
  tape->record([tape, na, ns, nr, sv, av = a.values] {
    const std::vector<float>& g = tape->grad_of(nr);
    if (na >= 0) {
      std::vector<float>& ga = tape->grad_of(na);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv;
    }
    if (ns >= 0) {
      float acc = 0.0f;
      for (size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      tape->grad_of(ns)[0] += acc;
    }
  });
  return r;
}

Tensor recip(const Tensor& a) {
  for (float v : a.values) MHGAN_REQUIRE(v != 0.0f, "recip() of zero");
  return unary_op(a, [](float x) { return 1.0f / x; },
                  [](float, float y) { return -y * y; });
}

// ---------------------------------------------------------------------------
// matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
  MHGAN_REQUIRE(a.rank() == 2 && b.rank() == 2, "matmul needs rank-2 operands");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  MHGAN_REQUIRE(b.shape[0] == k, "matmul inner extents differ: " + shape_str(a.shape) + " x " +
                                     shape_str(b.shape));
  std::vector<float> out(static_cast<size_t>(m) * n, 0.0f);
  gemm_nn(m, k, n, a.values.data(), b.values.data(), out.data());
  Tape* tape = common_tape(a, b);
  Tensor r = attach(tape, {m, n}, std::move(out));
  if (tape == nullptr) return r;
  const int na = a.node, nb = b.node, nr = r.node;
  tape->record([tape, na, nb, nr, m, k, n, av = a.values, bv = b.values] {
    const std::vector<float>& g = tape->grad_of(nr);
    if (na >= 0) gemm_nt(m, n, k, g.data(), bv.data(), tape->grad_of(na).data());
    if (nb >= 0) gemm_tn(m, k, n, av.data(), g.data(), tape->grad_of(nb).data());
  });
  return r;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  MHGAN_REQUIRE(a.rank() == 2 && b.rank() == 2, "matmul_nt needs rank-2 operands");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[0];
  MHGAN_REQUIRE(b.shape[1] == k, "matmul_nt inner extents differ: " + shape_str(a.shape) +
                                     " x " + shape_str(b.shape) + "^T");
  std::vector<float> out(static_cast<size_t>(m) * n, 0.0f);
  gemm_nt(m, k, n, a.values.data(), b.values.data(), out.data());
  Tape* tape = common_tape(a, b);
  Tensor r = attach(tape, {m, n}, std::move(out));
  if (tape == nullptr) return r;
  const int na = a.node, nb = b.node, nr = r.node;
  tape->record([tape, na, nb, nr, m, k, n, av = a.values, bv = b.values] {
    const std::vector<float>& g = tape->grad_of(nr);
    if (na >= 0) gemm_nn(m, n, k, g.data(), bv.data(), tape->grad_of(na).data());
    if (nb >= 0) gemm_tn(m, n, k, g.data(), av.data(), tape->grad_of(nb).data());
  });
  return r;
}

// ---------------------------------------------------------------------------
// reductions

namespace {

void reduction_extents(const Tensor& a, int axis, int& outer, int& len, int& inner, Shape& rshape) {
  MHGAN_REQUIRE(a.rank() >= 1 && a.rank() <= 2, "axis reductions support rank 1 and 2");
  MHGAN_REQUIRE(axis >= 0 && axis < a.rank(), "reduction axis out of range");
  if (a.rank() == 1) {
    outer = 1; len = a.shape[0]; inner = 1; rshape = {};
  } else if (axis == 0) {
    outer = 1; len = a.shape[0]; inner = a.shape[1]; rshape = {a.shape[1]};
  } else {
    outer = a.shape[0]; len = a.shape[1]; inner = 1; rshape = {a.shape[0]};
  }
}

Tensor reduce_sum(const Tensor& a, int axis, bool mean) {
  int outer, len, inner;
  Shape rshape;
  reduction_extents(a, axis, outer, len, inner, rshape);
  const float w = mean ? 1.0f / static_cast<float>(len) : 1.0f;
  std::vector<float> out(static_cast<size_t>(outer) * inner, 0.0f);
  for (int o = 0; o < outer; ++o)
    for (int l = 0; l < len; ++l)
      for (int i = 0; i < inner; ++i)
        out[static_cast<size_t>(o) * inner + i] +=
            a.values[(static_cast<size_t>(o) * len + l) * inner + i];
  if (mean)
    for (float& v : out) v *= w;
  Tensor r = attach(a.tape, rshape, std::move(out));
  if (a.tape == nullptr) return r;
  Tape* tape = a.tape;
  const int na = a.node, nr = r.node;
  tape->record([tape, na, nr, outer, len, inner, w] {
    const std::vector<float>& g = tape->grad_of(nr);
    std::vector<float>& ga = tape->grad_of(na);
    for (int o = 0; o < outer; ++o)
      for (int l = 0; l < len; ++l)
        for (int i = 0; i < inner; ++i)
          ga[(static_cast<size_t>(o) * len + l) * inner + i] +=
              g[static_cast<size_t>(o) * inner + i] * w;
  });
  return r;
}

}  // namespace

Tensor sum_axis(const Tensor& a, int axis) { return reduce_sum(a, axis, false); }
Tensor mean_axis(const Tensor& a, int axis) { return reduce_sum(a, axis, true); }

Tensor sum_all(const Tensor& a) {
  if (a.rank() <= 1) {
    if (a.rank() == 0) return reshape(a, {});
    return reduce_sum(a, 0, false);
  }
  return reduce_sum(reduce_sum(a, 1, false), 0, false);
}

Tensor mean_all(const Tensor& a) {
  Tensor s = sum_all(a);
  return mul_scalar(s, 1.0f / static_cast<float>(a.size()));
}

MaxResult max_axis(const Tensor& a, int axis) {
  int outer, len, inner;
  Shape rshape;
  reduction_extents(a, axis, outer, len, inner, rshape);
  std::vector<float> out(static_cast<size_t>(outer) * inner);
  std::vector<int> arg(out.size());
  float min_gap = std::numeric_limits<float>::infinity();
  for (int o = 0; o < outer; ++o)
    for (int i = 0; i < inner; ++i) {
      float best = -std::numeric_limits<float>::infinity();
      float second = best;
      int best_l = 0;
      for (int l = 0; l < len; ++l) {
        const float v = a.values[(static_cast<size_t>(o) * len + l) * inner + i];
        if (v > best) {
          second = best;
          best = v;
          best_l = l;
        } else if (v > second) {
          second = v;
        }
      }
      out[static_cast<size_t>(o) * inner + i] = best;
      arg[static_cast<size_t>(o) * inner + i] = best_l;
      if (len > 1) min_gap = std::min(min_gap, best - second);
    }
  Tensor r = attach(a.tape, rshape, std::move(out));
  if (a.tape != nullptr) {
    a.tape->note_kink_margin(min_gap);
    Tape* tape = a.tape;
    const int na = a.node, nr = r.node;
    tape->record([tape, na, nr, outer, len, inner, arg] {
      const std::vector<float>& g = tape->grad_of(nr);
      std::vector<float>& ga = tape->grad_of(na);
      for (int o = 0; o < outer; ++o)
        for (int i = 0; i < inner; ++i) {
          const size_t ri = static_cast<size_t>(o) * inner + i;
          ga[(static_cast<size_t>(o) * len + arg[ri]) * inner + i] += g[ri];
        }
    });
  }
  return {std::move(r), std::move(arg)};
}

// ---------------------------------------------------------------------------
// element-wise nonlinearities

Tensor relu(const Tensor& a) {
  if (a.tape != nullptr) {
    float margin = std::numeric_limits<float>::infinity();
    for (float v : a.values) margin = std::min(margin, std::abs(v));
    a.tape->note_kink_margin(margin);
  }
  return unary_op(a, [](float x) { return x > 0.0f ? x : 0.0f; },
                  [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor exp(const Tensor& a) {
  Tensor r = unary_op(a, [](float x) { return std::exp(x); },
                      [](float, float y) { return y; });
  for (float v : r.values)
    MHGAN_REQUIRE(std::isfinite(v), "exp() overflowed; bound the argument at the call site");
  return r;
}

Tensor log(const Tensor& a) {
  for (float v : a.values) MHGAN_REQUIRE(v > 0.0f, "log() of a non-positive value");
  return unary_op(a, [](float x) { return std::log(x); },
                  [](float x, float) { return 1.0f / x; });
}

Tensor log_clamped(const Tensor& a, float eps) {
  MHGAN_REQUIRE(eps > 0.0f, "log_clamped eps must be positive");
  if (a.tape != nullptr) {
    float margin = std::numeric_limits<float>::infinity();
    for (float v : a.values) margin = std::min(margin, std::abs(v - eps));
    a.tape->note_kink_margin(margin);
  }
  return unary_op(a, [eps](float x) { return std::log(x > eps ? x : eps); },
                  [eps](float x, float) { return x > eps ? 1.0f / x : 0.0f; });
}

Tensor sqrt(const Tensor& a) {
  for (float v : a.values) MHGAN_REQUIRE(v > 0.0f, "sqrt() needs strictly positive input");
  return unary_op(a, [](float x) { return std::sqrt(x); },
                  [](float, float y) { return 0.5f / y; });
}

Tensor square(const Tensor& a) {
  return unary_op(a, [](float x) { return x * x; },
                  [](float x, float) { return 2.0f * x; });
}

Tensor clamp_min(const Tensor& a, float c) {
  if (a.tape != nullptr) {
    float margin = std::numeric_limits<float>::infinity();
    for (float v : a.values) margin = std::min(margin, std::abs(v - c));
    a.tape->note_kink_margin(margin);
  }
  return unary_op(a, [c](float x) { return x > c ? x : c; },
                  [c](float x, float) { return x > c ? 1.0f : 0.0f; });
}

// ---------------------------------------------------------------------------
// structure ops

Tensor tile_cols(const Tensor& col, int k) {
  MHGAN_REQUIRE(col.rank() == 2 && col.shape[1] == 1, "tile_cols needs an [m,1] tensor");
  MHGAN_REQUIRE(k >= 1, "tile_cols needs k >= 1");
  const int m = col.shape[0];
  std::vector<float> out(static_cast<size_t>(m) * k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) out[static_cast<size_t>(i) * k + j] = col.values[i];
  Tensor r = attach(col.tape, {m, k}, std::move(out));
  if (col.tape == nullptr) return r;
  Tape* tape = col.tape;
  const int na = col.node, nr = r.node;
  tape->record([tape, na, nr, m, k] {
    const std::vector<float>& g = tape->grad_of(nr);
    std::vector<float>& ga = tape->grad_of(na);
    for (int i = 0; i < m; ++i) {
      float acc = 0.0f;
      for (int j = 0; j < k; ++j) acc += g[static_cast<size_t>(i) * k + j];
      ga[i] += acc;
    }
  });
  return r;
}

Tensor index_select_rows(const Tensor& table, const std::vector<int>& idx) {
  MHGAN_REQUIRE(table.rank() == 2, "index_select_rows needs a rank-2 table");
  const int rows = table.shape[0], width = table.shape[1];
  for (int i : idx)
    MHGAN_REQUIRE(i >= 0 && i < rows, "row index " + std::to_string(i) + " out of range [0," +
                                          std::to_string(rows) + ")");
  const int n = static_cast<int>(idx.size());
  std::vector<float> out(static_cast<size_t>(n) * width);
  for (int i = 0; i < n; ++i)
    std::copy_n(table.values.data() + static_cast<size_t>(idx[i]) * width, width,
                out.data() + static_cast<size_t>(i) * width);
  Tensor r = attach(table.tape, {n, width}, std::move(out));
  if (table.tape == nullptr) return r;
  Tape* tape = table.tape;
  const int na = table.node, nr = r.node;
  tape->record([tape, na, nr, width, idx] {
    const std::vector<float>& g = tape->grad_of(nr);
    std::vector<float>& ga = tape->grad_of(na);
    for (size_t i = 0; i < idx.size(); ++i) {
      const float* gi = g.data() + i * width;
      float* t = ga.data() + static_cast<size_t>(idx[i]) * width;
      for (int j = 0; j < width; ++j) t[j] += gi[j];
    }
  });
  return r;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  MHGAN_REQUIRE(a.rank() == b.rank() && a.rank() >= 1 && a.rank() <= 2,
                "concat supports rank-1 and rank-2 tensors of equal rank");
  MHGAN_REQUIRE(axis >= 0 && axis < a.rank(), "concat axis out of range");
  Shape rshape = a.shape;
  for (int d = 0; d < a.rank(); ++d)
    if (d != axis)
      MHGAN_REQUIRE(a.shape[d] == b.shape[d], "concat extents differ off the concat axis");
  rshape[axis] = a.shape[axis] + b.shape[axis];

  std::vector<float> out;
  out.reserve(a.values.size() + b.values.size());
  if (a.rank() == 1 || axis == 0) {
    out.insert(out.end(), a.values.begin(), a.values.end());
    out.insert(out.end(), b.values.begin(), b.values.end());
  } else {
    const int m = a.shape[0], ca = a.shape[1], cb = b.shape[1];
    out.resize(a.values.size() + b.values.size());
    for (int i = 0; i < m; ++i) {
      std::copy_n(a.values.data() + static_cast<size_t>(i) * ca, ca,
                  out.data() + static_cast<size_t>(i) * (ca + cb));
      std::copy_n(b.values.data() + static_cast<size_t>(i) * cb, cb,
                  out.data() + static_cast<size_t>(i) * (ca + cb) + ca);
    }
  }
  Tape* tape = common_tape(a, b);
  Tensor r = attach(tape, rshape, std::move(out));
  if (tape == nullptr) return r;
  const int na = a.node, nb = b.node, nr = r.node;
  const bool rowwise = (a.rank() == 1 || axis == 0);
  const int m = a.rank() == 2 ? a.shape[0] : 1;
  const int ca = a.rank() == 2 ? a.shape[1] : a.shape[0];
  const int cb = b.rank() == 2 ? b.shape[1] : b.shape[0];
  const size_t asize = a.values.size();
  tape->record([tape, na, nb, nr, rowwise, m, ca, cb, asize] {
    const std::vector<float>& g = tape->grad_of(nr);
    if (rowwise) {
      if (na >= 0) {
        std::vector<float>& ga = tape->grad_of(na);
        for (size_t i = 0; i < asize; ++i) ga[i] += g[i];
      }
      if (nb >= 0) {
        std::vector<float>& gb = tape->grad_of(nb);
        for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[asize + i];
      }
    } else {
      for (int i = 0; i < m; ++i) {
        const float* gi = g.data() + static_cast<size_t>(i) * (ca + cb);
        if (na >= 0) {
          float* t = tape->grad_of(na).data() + static_cast<size_t>(i) * ca;
          for (int j = 0; j < ca; ++j) t[j] += gi[j];
        }
        if (nb >= 0) {
          float* t = tape->grad_of(nb).data() + static_cast<size_t>(i) * cb;
          for (int j = 0; j < cb; ++j) t[j] += gi[ca + j];
        }
      }
    }
  });
  return r;
}

Tensor reshape(const Tensor& a, const Shape& s) {
  MHGAN_REQUIRE(numel(s) == a.size(), "reshape to " + shape_str(s) + " changes element count");
  Tensor r = attach(a.tape, s, a.values);
  if (a.tape == nullptr) return r;
  Tape* tape = a.tape;
  const int na = a.node, nr = r.node;
  tape->record([tape, na, nr] { axpy(tape->grad_of(na), tape->grad_of(nr)); });
  return r;
}

Tensor one_hot(const std::vector<int>& labels, int k) {
  MHGAN_REQUIRE(k >= 1, "one_hot needs k >= 1");
  const int n = static_cast<int>(labels.size());
  Tensor t = Tensor::zeros({n, k});
  for (int i = 0; i < n; ++i) {
    MHGAN_REQUIRE(labels[i] >= 0 && labels[i] < k, "label out of range for one_hot");
    t.values[static_cast<size_t>(i) * k + labels[i]] = 1.0f;
  }
  return t;
}

// ---------------------------------------------------------------------------
// finite differences

float grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                 const Tensor& point, float step) {
  MHGAN_REQUIRE(step > 0.0f, "grad_check step must be positive");
  Tape tape;
  Tensor x = tape.leaf(point);
  Tensor y = f(tape, x);
  MHGAN_REQUIRE(y.size() == 1, "grad_check needs a scalar-valued function");
  tape.backward(y);
  Tensor analytic = tape.grad(x);

  auto eval = [&](const Tensor& p) {
    Tape t;
    Tensor xp = t.leaf(p);
    return f(t, xp).item();
  };

  float max_err = 0.0f;
  Tensor p = point;
  for (size_t i = 0; i < p.values.size(); ++i) {
    const float saved = p.values[i];
    p.values[i] = saved + step;
    const float fp = eval(p);
    p.values[i] = saved - step;
    const float fm = eval(p);
    p.values[i] = saved;
    const float numeric = (fp - fm) / (2.0f * step);
    const float g = analytic.values[i];
    const float err = std::abs(g - numeric) / std::max(1.0f, std::abs(g));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace mhgan
