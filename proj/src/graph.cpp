#include "exalign/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace exalign {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument(std::string(op) + ": operands must share a tape");
  }
}

}  // namespace

Var Tape::constant(Matrix value) {
  return emit(std::move(value), nullptr);
}

Var Tape::leaf(Parameter& p) {
  Parameter* param = &p;
  return emit(p.value, [param](Tape&, const Matrix& g) { param->grad += g; });
}

Var Tape::emit(Matrix value, BackpropFn backprop) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::add_grad(Var v, const Matrix& g) {
  nodes_[v.index].grad += g;
}

void Tape::zero_grads() {
  for (Node& n : nodes_) n.grad.setZero();
}

void Tape::backward(Var loss) {
  require(loss.tape == this, "backward: loss lives on a different tape");
  require(nodes_[loss.index].value.rows() == 1 && nodes_[loss.index].value.cols() == 1,
          "backward: loss must be a 1x1 scalar");
  nodes_[loss.index].grad(0, 0) += 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backprop || n.grad.isZero(0.0)) continue;
    n.backprop(*this, n.grad);
  }
}

Var op_matmul(Var a, Var b) {
  require_same_tape(a, b, "op_matmul");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.rows(), "op_matmul: inner dimensions differ");
  return t.emit(av * bv, [a, b](Tape& tp, const Matrix& g) {
    tp.add_grad(a, g * tp.value(b).transpose());
    tp.add_grad(b, tp.value(a).transpose() * g);
  });
}

Var op_add(Var a, Var b) {
  require_same_tape(a, b, "op_add");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "op_add: shape mismatch");
  return t.emit(av + bv, [a, b](Tape& tp, const Matrix& g) {
    tp.add_grad(a, g);
    tp.add_grad(b, g);
  });
}

Var op_sub(Var a, Var b) {
  require_same_tape(a, b, "op_sub");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "op_sub: shape mismatch");
  return t.emit(av - bv, [a, b](Tape& tp, const Matrix& g) {
    tp.add_grad(a, g);
    tp.add_grad(b, -g);
  });
}

Var op_mul_elementwise(Var a, Var b) {
  require_same_tape(a, b, "op_mul_elementwise");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(),
          "op_mul_elementwise: shape mismatch");
  return t.emit(av.cwiseProduct(bv), [a, b](Tape& tp, const Matrix& g) {
    tp.add_grad(a, g.cwiseProduct(tp.value(b)));
    tp.add_grad(b, g.cwiseProduct(tp.value(a)));
  });
}

Var op_tanh(Var a) {
  Tape& t = *a.tape;
  Matrix y = t.value(a).array().tanh();
  return t.emit(y, [a, y](Tape& tp, const Matrix& g) {
    tp.add_grad(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var op_sigmoid(Var a) {
  Tape& t = *a.tape;
  Matrix y = (1.0 / (1.0 + (-t.value(a).array()).exp())).matrix();
  return t.emit(y, [a, y](Tape& tp, const Matrix& g) {
    tp.add_grad(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var op_concat(Var a, Var b) {
  require_same_tape(a, b, "op_concat");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows(), "op_concat: row counts differ");
  Matrix y(av.rows(), av.cols() + bv.cols());
  y << av, bv;
  const Eigen::Index ac = av.cols();
  const Eigen::Index bc = bv.cols();
  return t.emit(std::move(y), [a, b, ac, bc](Tape& tp, const Matrix& g) {
    tp.add_grad(a, g.leftCols(ac));
    tp.add_grad(b, g.rightCols(bc));
  });
}

Var op_mean_rows(Var a) {
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  require(av.rows() >= 1, "op_mean_rows: empty input");
  const double m = static_cast<double>(av.rows());
  Matrix y = av.colwise().mean();
  const Eigen::Index rows = av.rows();
  return t.emit(std::move(y), [a, rows, m](Tape& tp, const Matrix& g) {
    tp.add_grad(a, (g / m).replicate(rows, 1));
  });
}

Var op_scale(Var s, Var v) {
  require_same_tape(s, v, "op_scale");
  Tape& t = *s.tape;
  const Matrix& sv = t.value(s);
  require(sv.rows() == 1 && sv.cols() == 1, "op_scale: scale factor must be 1x1");
  const double c = sv(0, 0);
  return t.emit(c * t.value(v), [s, v, c](Tape& tp, const Matrix& g) {
    Matrix ds(1, 1);
    ds(0, 0) = g.cwiseProduct(tp.value(v)).sum();
    tp.add_grad(s, ds);
    tp.add_grad(v, c * g);
  });
}

Var op_cosine(Var a, Var b, double eps) {
  require_same_tape(a, b, "op_cosine");
  require(eps > 0.0, "op_cosine: eps must be positive");
  Tape& t = *a.tape;
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "op_cosine: length mismatch");

  if ((av.array() == bv.array()).all()) {
    // cosine of a vector with itself: exactly 1, gradient exactly 0
    Matrix one(1, 1);
    one(0, 0) = 1.0;
    return t.emit(std::move(one), [](Tape&, const Matrix&) {});
  }

  const double dot = av.cwiseProduct(bv).sum();
  const double norm_a = av.norm();
  const double norm_b = bv.norm();
  const double na = std::max(norm_a, eps);
  const double nb = std::max(norm_b, eps);
  Matrix y(1, 1);
  y(0, 0) = dot / (na * nb);

  const bool a_live = norm_a > eps;  // gradient through the norm only when unclamped
  const bool b_live = norm_b > eps;
  return t.emit(std::move(y), [a, b, dot, na, nb, a_live, b_live](Tape& tp, const Matrix& g) {
    const double up = g(0, 0);
    const Matrix& av = tp.value(a);
    const Matrix& bv = tp.value(b);
    const double denom = na * nb;
    Matrix da = bv / denom;
    if (a_live) da -= (dot / (na * na)) * av / denom;
    Matrix db = av / denom;
    if (b_live) db -= (dot / (nb * nb)) * bv / denom;
    tp.add_grad(a, up * da);
    tp.add_grad(b, up * db);
  });
}

Var op_gather_rows(Var src, std::vector<Eigen::Index> rows) {
  Tape& t = *src.tape;
  const Matrix& sv = t.value(src);
  for (Eigen::Index r : rows) {
    require(r >= 0 && r < sv.rows(), "op_gather_rows: row index out of range");
  }
  Matrix y(static_cast<Eigen::Index>(rows.size()), sv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) y.row(static_cast<Eigen::Index>(k)) = sv.row(rows[k]);
  return t.emit(std::move(y), [src, rows = std::move(rows)](Tape& tp, const Matrix& g) {
    Matrix ds = Matrix::Zero(tp.value(src).rows(), tp.value(src).cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ds.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
    }
    tp.add_grad(src, ds);
  });
}

Var op_stack_rows(std::span<const Var> rows) {
  require(!rows.empty(), "op_stack_rows: empty input");
  Tape& t = *rows[0].tape;
  const Eigen::Index cols = t.value(rows[0]).cols();
  Matrix y(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require_same_tape(rows[0], rows[k], "op_stack_rows");
    const Matrix& rv = t.value(rows[k]);
    require(rv.rows() == 1 && rv.cols() == cols, "op_stack_rows: expected 1 x C rows");
    y.row(static_cast<Eigen::Index>(k)) = rv;
  }
  std::vector<Var> parents(rows.begin(), rows.end());
  return t.emit(std::move(y), [parents = std::move(parents)](Tape& tp, const Matrix& g) {
    for (std::size_t k = 0; k < parents.size(); ++k) {
      tp.add_grad(parents[k], g.row(static_cast<Eigen::Index>(k)));
    }
  });
}

Var op_slice_cols(Var v, Eigen::Index start, Eigen::Index count) {
  Tape& t = *v.tape;
  const Matrix& vv = t.value(v);
  require(start >= 0 && count >= 1 && start + count <= vv.cols(),
          "op_slice_cols: slice out of range");
  return t.emit(vv.middleCols(start, count),
                [v, start, count](Tape& tp, const Matrix& g) {
                  Matrix dv = Matrix::Zero(tp.value(v).rows(), tp.value(v).cols());
                  dv.middleCols(start, count) = g;
                  tp.add_grad(v, dv);
                });
}

}  // namespace exalign
