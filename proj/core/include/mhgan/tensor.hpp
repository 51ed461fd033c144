#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mhgan/errors.hpp"

namespace mhgan {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

// Dense row-major float32 array. A tensor is either detached (plain data) or
// attached to a gradient tape via (tape, node); operations propagate the
// attachment, so anything computed from a tape leaf stays on that tape.
struct Tensor {
  Shape shape;
  std::vector<float> values;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() = default;
  Tensor(Shape s, std::vector<float> v);

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, float value);
  static Tensor scalar(float value);

  bool on_tape() const { return tape != nullptr; }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t size() const { return static_cast<int64_t>(values.size()); }
  int extent(int axis) const;
  float item() const;  // requires exactly one element
};

struct MaxResult {
  Tensor values;
  std::vector<int> argmax;  // ties resolved to the lowest index
};

// Records every executed operation in order; execution order is a topological
// order by construction. Rebuilt per training step, backward() runs at most
// once per tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Copies `init` into a new differentiable leaf on this tape.
  Tensor leaf(const Tensor& init);

  // Reverse sweep from a scalar loss living on this tape.
  void backward(const Tensor& loss);

  // Gradient of the last backward() with respect to `t` (zeros if unreached).
  Tensor grad(const Tensor& t) const;

  // Smallest distance to a nondifferentiable point (relu zero crossing,
  // max tie gap, clamp boundary) seen by any forward op on this tape.
  // Finite-difference checks resample inputs until this is comfortably large.
  float min_kink_margin() const { return min_kink_; }

  // Op-construction interface (used by the op library and by test fixtures
  // that register custom rules).
  int add_node(const Shape& shape);
  void record(std::function<void()> backward_fn);
  std::vector<float>& grad_of(int node);
  const std::vector<float>& grad_of(int node) const;
  const Shape& shape_of(int node) const;
  void note_kink_margin(float margin);

 private:
  struct Node {
    Shape shape;
    std::vector<float> grad;
  };
  std::vector<Node> nodes_;
  std::vector<std::function<void()>> records_;
  float min_kink_ = std::numeric_limits<float>::infinity();
  bool backward_done_ = false;
};

// Element-wise binary ops. Shapes must match exactly, or `b` may match `a`
// with the leading extent dropped, in which case it broadcasts over the
// leading (batch) dimension. Richer broadcasting is not provided.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);  // requires b nonzero everywhere

Tensor add_scalar(const Tensor& a, float c);
Tensor mul_scalar(const Tensor& a, float c);
Tensor scale(const Tensor& a, const Tensor& s);  // s is rank-0, differentiable
Tensor recip(const Tensor& a);                   // requires a nonzero

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k] x [k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k] x [n,k]^T

// Reductions over one axis of a rank-1/2 tensor, or over all elements.
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
MaxResult max_axis(const Tensor& a, int axis);

Tensor relu(const Tensor& a);  // subgradient 0 at the kink
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);                     // requires a > 0
Tensor log_clamped(const Tensor& a, float eps);  // log(max(a, eps)); zero grad when clamped
Tensor sqrt(const Tensor& a);                    // requires a > 0
Tensor square(const Tensor& a);
Tensor clamp_min(const Tensor& a, float c);  // grad passes only where a > c

Tensor tile_cols(const Tensor& col, int k);  // [m,1] -> [m,k]
Tensor index_select_rows(const Tensor& table, const std::vector<int>& idx);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor reshape(const Tensor& a, const Shape& s);

Tensor one_hot(const std::vector<int>& labels, int k);  // detached constant

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a scalar-valued tensor function. The caller is responsible for keeping
// the evaluation point away from kinks (see Tape::min_kink_margin).
float grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                 const Tensor& point, float step);

}  // namespace mhgan
