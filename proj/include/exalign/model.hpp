#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exalign/encoder.hpp"
#include "exalign/hungarian_layer.hpp"
#include "exalign/label.hpp"

namespace exalign {

/// Score cut chosen on development data only.
struct Threshold {
  double cut = 0.0;
};

struct ModelConfig {
  Eigen::Index hidden_dim = 32;
  double eps = 1e-8;
  bool lowercase = true;
  std::string loss_id = "squared_error";
};

/// The full pipeline state: frozen embeddings, the shared BiLSTM, and the
/// calibrated threshold once one exists.
struct Model {
  ModelConfig config;
  EmbeddingTable embeddings;
  LstmParams lstm;
  std::optional<Threshold> threshold;

  static Model init(EmbeddingTable table, Eigen::Index hidden_dim, std::uint64_t seed);

  std::vector<Parameter*> parameters();
};

struct PairScore {
  double y = 0.0;                 // in [-1, 1] up to float rounding
  Eigen::RowVectorXd r_p, r_q;    // source/target halves of the averaged representation
  std::optional<Label> label;     // set when the model carries a threshold
};

/// Graph handles from one scored pair, for training and diagnostics.
struct ScoreGraph {
  Var y;                                 // guarded cosine node, the training signal
  double reported_y = 0.0;               // zero-residual rule applied (see score_pair)
  std::vector<AlignedPair> pairs;
  std::vector<WeightedConcat> weighted;
  Matrix r_p, r_q;                       // 1 x 2H values
};

/// Encode both sentences with the shared encoder, align, weight, average
/// the K = min(M, N) weighted concatenations, and score the two halves
/// with the eps-guarded cosine. When both halves have norm below eps the
/// reported score is +1 (every aligned pair matched perfectly); the graph
/// node keeps the guarded cosine for the training path.
ScoreGraph score_pair_graph(Tape& tape, Model& model,
                            const std::vector<std::string>& p_tokens,
                            const std::vector<std::string>& q_tokens);

PairScore score_pair(Model& model, const std::vector<std::string>& p_tokens,
                     const std::vector<std::string>& q_tokens);

/// Squared error against a +1/-1 target.
Var loss(Tape& tape, Var y, Label gold);

struct Calibration {
  Threshold threshold;
  double accuracy = 0.0;
};

/// Cut maximizing dev accuracy, searched over the midpoints of consecutive
/// distinct sorted scores plus the extremes -1 and +1; ties break toward
/// the smallest cut. Throws if the dev set holds a single class.
Calibration calibrate_threshold(std::span<const std::pair<double, Label>> dev_scores);

/// Paraphrase iff y >= cut (boundary inclusive).
Label predict(double y, Threshold t);

}  // namespace exalign
