#pragma once

#include <span>
#include <vector>

#include "exalign/assignment.hpp"
#include "exalign/graph.hpp"

namespace exalign {

/// One aligned position: the gathered source/target hidden vectors (1 x 2H
/// each), their cosine similarity node m, and the constant aligned
/// positions (g, h) the links were built from.
struct AlignedPair {
  Var a;
  Var b;
  Var m;
  Eigen::Index g = 0;
  Eigen::Index h = 0;
};

/// Dissimilarity-weighted concatenation: alpha = 1 - m, r = alpha * [a, b].
struct WeightedConcat {
  Var r;      // 1 x 4H
  Var alpha;  // 1 x 1
};

struct AlignOptions {
  double eps = 1e-8;
  /// Ablation switch: when true, m enters the graph as a detached constant,
  /// so no gradient flows through the similarity into alpha; the gather
  /// links still carry gradient into the hidden vectors.
  bool detach_similarity = false;
};

/// All-pairs cosine similarity between the rows of S (M x 2H) and T
/// (N x 2H); cell [i][j] is a differentiable scalar node.
std::vector<std::vector<Var>> pairwise_cosine(Tape& tape, Var source, Var target, double eps);

/// Detached copy of the similarity cells' values.
Matrix similarity_values(const std::vector<std::vector<Var>>& cells);

/// The exclusive alignment: build the similarity matrix, solve the
/// maximum assignment on its detached values, then re-organize the hidden
/// vectors through op_gather_rows with the resulting constant indices.
/// The solve itself carries no gradient; the constructed links do.
/// Returns min(M, N) pairs sorted by source position.
std::vector<AlignedPair> align(Tape& tape, Var source, Var target,
                               const AlignOptions& options = {});

/// Dissimilarity weighting: alpha_i = 1 - m_i (a node, so gradients reach
/// the similarity path), r_i = alpha_i * [a_i, b_i].
std::vector<WeightedConcat> weight_and_concat(Tape& tape, std::span<const AlignedPair> pairs);

/// Diagnostic flags: true where the aligned similarity value falls below
/// `cut`. Never used in the training path.
std::vector<bool> mark_unmatched(std::span<const AlignedPair> pairs, double cut);

}  // namespace exalign
