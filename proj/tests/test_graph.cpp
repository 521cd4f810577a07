#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "exalign/graph.hpp"
#include "support/gradcheck.hpp"

using namespace exalign;
using exalign::testing::check_gradients;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                     double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Var sum_all(Var v) {
  Tape& t = *v.tape;
  Var ones_col = t.constant(Matrix::Ones(t.value(v).cols(), 1));
  Var row_sums = op_matmul(v, ones_col);              // R x 1
  Var ones_row = t.constant(Matrix::Ones(1, t.value(row_sums).rows()));
  return op_matmul(ones_row, row_sums);               // 1 x 1
}

}  // namespace

TEST_CASE("finite differences validate every registered op") {
  std::mt19937_64 rng(2024);

  SUBCASE("matmul") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 3, 4));
    ps.emplace_back("b", random_matrix(rng, 4, 2));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      return sum_all(op_matmul(v[0], v[1]));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("add, sub, mul_elementwise") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 2, 3));
    ps.emplace_back("b", random_matrix(rng, 2, 3));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      Var x = op_add(v[0], v[1]);
      Var y = op_sub(x, op_mul_elementwise(v[0], v[1]));
      return sum_all(op_mul_elementwise(y, y));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("tanh and sigmoid") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 2, 4));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      return sum_all(op_mul_elementwise(op_tanh(v[0]), op_sigmoid(v[0])));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("concat") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 1, 3));
    ps.emplace_back("b", random_matrix(rng, 1, 2));
    const Matrix w = random_matrix(rng, 1, 5);
    auto r = check_gradients(ps, [&w](Tape& t, std::span<const Var> v) {
      Var c = op_concat(v[0], v[1]);
      return sum_all(op_mul_elementwise(c, t.constant(w)));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("mean_rows") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 4, 3));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      Var m = op_mean_rows(v[0]);
      return sum_all(op_mul_elementwise(m, m));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("scale") {
    std::vector<Parameter> ps;
    ps.emplace_back("s", random_matrix(rng, 1, 1));
    ps.emplace_back("v", random_matrix(rng, 1, 4));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      Var scaled = op_scale(v[0], v[1]);
      return sum_all(op_mul_elementwise(scaled, scaled));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("cosine") {
    std::vector<Parameter> ps;
    ps.emplace_back("a", random_matrix(rng, 1, 5));
    ps.emplace_back("b", random_matrix(rng, 1, 5));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      return op_cosine(v[0], v[1], 1e-8);
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("gather_rows with a repeated index") {
    std::vector<Parameter> ps;
    ps.emplace_back("src", random_matrix(rng, 3, 2));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      Var g = op_gather_rows(v[0], {1, 1, 2});
      return sum_all(op_mul_elementwise(g, g));
    });
    CHECK(r.max_err < 1e-6);
  }
  SUBCASE("stack_rows and slice_cols") {
    std::vector<Parameter> ps;
    ps.emplace_back("r0", random_matrix(rng, 1, 4));
    ps.emplace_back("r1", random_matrix(rng, 1, 4));
    auto r = check_gradients(ps, [](Tape&, std::span<const Var> v) {
      std::vector<Var> rows{v[0], v[1]};
      Var stacked = op_stack_rows(rows);
      Var sliced = op_slice_cols(stacked, 1, 2);
      return sum_all(op_mul_elementwise(sliced, sliced));
    });
    CHECK(r.max_err < 1e-6);
  }
}

TEST_CASE("op value examples") {
  Tape t;

  Var s = t.constant(0.5 * Matrix::Ones(1, 1));
  Matrix v(1, 2);
  v << 2, 4;
  Matrix scaled = t.value(op_scale(s, t.constant(v)));
  CHECK(scaled(0, 0) == 1.0);
  CHECK(scaled(0, 1) == 2.0);

  Matrix row(1, 3);
  row << 1, 2, 3;
  CHECK(t.value(op_mean_rows(t.constant(row))) == row);

  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  CHECK(t.value(op_cosine(t.constant(a), t.constant(b), 1e-8))(0, 0) == 0.0);

  Matrix w(1, 3);
  w << 0.3, -0.7, 2.0;
  CHECK(t.value(op_cosine(t.constant(w), t.constant(w), 1e-8))(0, 0) == 1.0);
}

TEST_CASE("scale gradient w.r.t. the scalar is dot(v, upstream)") {
  Parameter s("s", 0.7 * Matrix::Ones(1, 1));
  Matrix v(1, 3), g(3, 1);
  v << 1.5, -2.0, 0.25;
  g << 0.5, 1.0, -3.0;

  Tape t;
  Var loss = op_matmul(op_scale(t.leaf(s), t.constant(v)), t.constant(g));
  t.backward(loss);
  CHECK(s.grad(0, 0) == doctest::Approx(v(0, 0) * g(0, 0) + v(0, 1) * g(1, 0) +
                                        v(0, 2) * g(2, 0)).epsilon(1e-12));
}

TEST_CASE("gather examples") {
  Tape t;

  Matrix one_row(1, 2);
  one_row << 3, 4;
  CHECK(t.value(op_gather_rows(t.constant(one_row), {0})) == one_row);

  // swap of a two-row matrix; backward transposes the permutation
  Parameter src("src", Matrix::Zero(2, 1));
  src.value << 5, 7;
  Tape t2;
  Var g = op_gather_rows(t2.leaf(src), {1, 0});
  CHECK(t2.value(g)(0, 0) == 7.0);
  CHECK(t2.value(g)(1, 0) == 5.0);
  Matrix up(2, 1);
  up << 2.0, 3.0;  // upstream [g2, g1]
  Var loss = op_matmul(t2.constant(up.transpose()), g);
  t2.backward(loss);
  CHECK(src.grad(0, 0) == 3.0);
  CHECK(src.grad(1, 0) == 2.0);

  CHECK_THROWS_AS(op_gather_rows(t.constant(one_row), {1}), std::invalid_argument);
}

TEST_CASE("gather backward is the transpose of its forward as a linear map") {
  std::mt19937_64 rng(5);
  Parameter src("src", random_matrix(rng, 5, 3));
  const std::vector<Eigen::Index> idx{3, 0, 2};

  Matrix selection = Matrix::Zero(3, 5);
  for (std::size_t k = 0; k < idx.size(); ++k) selection(static_cast<Eigen::Index>(k), idx[k]) = 1.0;

  Tape t;
  Var g = op_gather_rows(t.leaf(src), idx);
  CHECK(t.value(g) == selection * src.value);

  const Matrix upstream = random_matrix(rng, 3, 3);
  // contract with a fixed upstream to drive backward with that exact gradient
  Var loss = sum_all(op_mul_elementwise(g, t.constant(upstream)));
  t.backward(loss);
  CHECK(src.grad == selection.transpose() * upstream);
}

TEST_CASE("backward basics") {
  SUBCASE("sum of a parameter gives an all-ones gradient") {
    Parameter p("p", Matrix::Zero(1, 4));
    Tape t;
    Var leaf = t.leaf(p);
    t.backward(op_matmul(leaf, t.constant(Matrix::Ones(4, 1))));
    CHECK(p.grad == Matrix::Ones(1, 4));
  }
  SUBCASE("chained scalar ops reproduce the product rule") {
    Parameter a("a", 2.0 * Matrix::Ones(1, 1));
    Parameter b("b", 3.0 * Matrix::Ones(1, 1));
    Parameter c("c", 5.0 * Matrix::Ones(1, 1));
    Tape t;
    Var y = op_mul_elementwise(op_mul_elementwise(t.leaf(a), t.leaf(b)), t.leaf(c));
    t.backward(y);
    CHECK(a.grad(0, 0) == 15.0);
    CHECK(b.grad(0, 0) == 10.0);
    CHECK(c.grad(0, 0) == 6.0);
  }
  SUBCASE("a node consumed twice receives both contributions") {
    Parameter x("x", 3.0 * Matrix::Ones(1, 1));
    Tape t;
    Var leaf = t.leaf(x);
    t.backward(op_add(leaf, leaf));
    CHECK(x.grad(0, 0) == 2.0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape t;
    Var v = t.constant(Matrix::Zero(1, 2));
    CHECK_THROWS_AS(t.backward(v), std::invalid_argument);
  }
}

TEST_CASE("replaying a tape yields bit-identical gradients") {
  std::mt19937_64 rng(17);
  Parameter a("a", random_matrix(rng, 3, 3));
  Parameter b("b", random_matrix(rng, 3, 3));

  Tape t;
  Var la = t.leaf(a);
  Var lb = t.leaf(b);
  Var h = op_tanh(op_matmul(la, lb));
  Var c = op_cosine(op_gather_rows(h, {0}), op_gather_rows(h, {2}), 1e-8);
  Var loss = op_mul_elementwise(c, c);

  a.zero_grad();
  b.zero_grad();
  t.backward(loss);
  const Matrix ga = a.grad, gb = b.grad;

  a.zero_grad();
  b.zero_grad();
  t.zero_grads();
  t.backward(loss);
  CHECK(a.grad == ga);
  CHECK(b.grad == gb);
}

TEST_CASE("shape mismatches throw") {
  Tape t;
  Var a = t.constant(Matrix::Zero(2, 3));
  Var b = t.constant(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(op_add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(op_mul_elementwise(a, b), std::invalid_argument);
  CHECK_THROWS_AS(op_matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(op_cosine(a, b, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(op_cosine(a, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(op_slice_cols(a, 2, 2), std::invalid_argument);
}
