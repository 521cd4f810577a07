#include "exalign/hungarian_layer.hpp"

#include <stdexcept>

namespace exalign {

std::vector<std::vector<Var>> pairwise_cosine(Tape& tape, Var source, Var target, double eps) {
  const Eigen::Index m = tape.value(source).rows();
  const Eigen::Index n = tape.value(target).rows();
  if (m < 1 || n < 1) {
    throw std::invalid_argument("pairwise_cosine: empty sequence");
  }

  std::vector<Var> source_rows, target_rows;
  source_rows.reserve(static_cast<std::size_t>(m));
  target_rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < m; ++i) source_rows.push_back(op_gather_rows(source, {i}));
  for (Eigen::Index j = 0; j < n; ++j) target_rows.push_back(op_gather_rows(target, {j}));

  std::vector<std::vector<Var>> cells(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& row = cells[static_cast<std::size_t>(i)];
    row.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      row.push_back(op_cosine(source_rows[static_cast<std::size_t>(i)],
                              target_rows[static_cast<std::size_t>(j)], eps));
    }
  }
  return cells;
}

Matrix similarity_values(const std::vector<std::vector<Var>>& cells) {
  const Eigen::Index m = static_cast<Eigen::Index>(cells.size());
  const Eigen::Index n = static_cast<Eigen::Index>(cells.front().size());
  Matrix w(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Var cell = cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      w(i, j) = cell.tape->value(cell)(0, 0);
    }
  return w;
}

std::vector<AlignedPair> align(Tape& tape, Var source, Var target, const AlignOptions& options) {
  const auto cells = pairwise_cosine(tape, source, target, options.eps);
  const Matrix w = similarity_values(cells);
  const Assignment assignment = solve_max_assignment(w);

  std::vector<AlignedPair> result;
  result.reserve(assignment.pairs.size());
  for (const AssignedPair& p : assignment.pairs) {
    AlignedPair out;
    out.g = p.source;
    out.h = p.target;
    out.a = op_gather_rows(source, {p.source});
    out.b = op_gather_rows(target, {p.target});
    const Var cell =
        cells[static_cast<std::size_t>(p.source)][static_cast<std::size_t>(p.target)];
    out.m = options.detach_similarity ? tape.constant(tape.value(cell)) : cell;
    result.push_back(out);
  }
  return result;
}

std::vector<WeightedConcat> weight_and_concat(Tape& tape, std::span<const AlignedPair> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("weight_and_concat: empty pair list");
  }
  std::vector<WeightedConcat> result;
  result.reserve(pairs.size());
  Var one = tape.constant(Matrix::Ones(1, 1));
  for (const AlignedPair& p : pairs) {
    WeightedConcat wc;
    wc.alpha = op_sub(one, p.m);
    wc.r = op_scale(wc.alpha, op_concat(p.a, p.b));
    result.push_back(wc);
  }
  return result;
}

std::vector<bool> mark_unmatched(std::span<const AlignedPair> pairs, double cut) {
  std::vector<bool> flags;
  flags.reserve(pairs.size());
  for (const AlignedPair& p : pairs) {
    flags.push_back(p.m.tape->value(p.m)(0, 0) < cut);
  }
  return flags;
}

}  // namespace exalign
