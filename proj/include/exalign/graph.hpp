#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace exalign {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor. Parameters live outside any tape and persist across
/// forward passes; `Tape::leaf` creates per-pass nodes that accumulate
/// gradients back into `grad`. Callers zero `grad` between batches.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  std::size_t index = 0;
};

/// Record of one forward pass. Nodes are appended in execution order, so
/// every node's inputs precede it and a reverse sweep visits each node
/// after all of its consumers. Tapes are confined to the thread that built
/// them; run one tape per example.
class Tape {
 public:
  using BackpropFn = std::function<void(Tape&, const Matrix&)>;

  /// Node with no gradient of its own (embeddings, literals, detached values).
  Var constant(Matrix value);

  /// Node backed by a Parameter; backward adds into p.grad. Leafing the same
  /// parameter more than once on a tape is fine, contributions sum.
  Var leaf(Parameter& p);

  /// Low-level append used by the op_* functions. `backprop` receives this
  /// node's accumulated gradient and must add into parents via add_grad().
  Var emit(Matrix value, BackpropFn backprop);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  const Matrix& grad(Var v) const { return nodes_[v.index].grad; }
  void add_grad(Var v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }
  void zero_grads();

  /// Reverse sweep from a scalar (1x1) loss node. Seeds d(loss)/d(loss) = 1
  /// and replays the tape in reverse. Throws std::invalid_argument for a
  /// non-scalar loss.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackpropFn backprop;
  };
  std::vector<Node> nodes_;
};

// Differentiable operations. Operands must live on the same tape; shape
// mismatches throw std::invalid_argument.

Var op_matmul(Var a, Var b);
Var op_add(Var a, Var b);
Var op_sub(Var a, Var b);
Var op_mul_elementwise(Var a, Var b);
Var op_tanh(Var a);
Var op_sigmoid(Var a);

/// Horizontal concatenation [a, b] of two row blocks with equal row counts.
Var op_concat(Var a, Var b);

/// Column-wise mean: M x C -> 1 x C.
Var op_mean_rows(Var a);

/// Scalar (1x1) times tensor.
Var op_scale(Var s, Var v);

/// dot(a, b) / (max(|a|, eps) * max(|b|, eps)) over same-shape operands.
/// Bitwise-identical operands short-circuit to exactly 1 with a zero
/// gradient contribution, which is the analytic limit at a == b and makes
/// the identical-input degeneracy downstream exact.
Var op_cosine(Var a, Var b, double eps);

/// Row selection with scatter-add backward: forward picks `rows` of `src`;
/// backward deposits each upstream gradient row onto the source row it was
/// read from (repeated indices accumulate). The indices are plain
/// constants fixed at forward time — this is the dynamically constructed
/// link between the alignment and the layers above it.
Var op_gather_rows(Var src, std::vector<Eigen::Index> rows);

/// Stack K row vectors (1 x C each) into a K x C matrix.
Var op_stack_rows(std::span<const Var> rows);

/// Contiguous column slice, backward scatters into the slice.
Var op_slice_cols(Var v, Eigen::Index start, Eigen::Index count);

inline void backward(Var loss) { loss.tape->backward(loss); }

}  // namespace exalign
