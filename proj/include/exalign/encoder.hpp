#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "exalign/graph.hpp"

namespace exalign {

struct Vocabulary {
  std::vector<std::string> tokens;                         // index -> token
  std::unordered_map<std::string, Eigen::Index> index;     // token -> index

  Eigen::Index size() const { return static_cast<Eigen::Index>(tokens.size()); }
  std::optional<Eigen::Index> lookup(const std::string& token) const;
  Eigen::Index add(const std::string& token);
};

/// Pre-trained word vectors, one row per vocabulary entry. The table is a
/// plain matrix, never wrapped in a Parameter, so no gradient can reach it;
/// out-of-vocabulary tokens map to the all-zero vector.
struct EmbeddingTable {
  Vocabulary vocab;
  Matrix vectors;

  Eigen::Index dim() const { return vectors.cols(); }
};

/// Text embedding format: one entry per line, token followed by d
/// space-separated decimal floats. The first line fixes d; lines with a
/// different arity are rejected with their line number.
EmbeddingTable load_embedding_file(const std::filesystem::path& path);

/// Gate parameters for one LSTM direction: input-to-hidden (d x H),
/// hidden-to-hidden (H x H) and bias (1 x H) for the input, forget, output
/// and candidate gates.
struct LstmDirection {
  Parameter Wi, Wf, Wo, Wc;
  Parameter Ui, Uf, Uo, Uc;
  Parameter bi, bf, bo, bc;

  template <typename F>
  void for_each_parameter(F&& f) {
    f(Wi); f(Wf); f(Wo); f(Wc);
    f(Ui); f(Uf); f(Uo); f(Uc);
    f(bi); f(bf); f(bo); f(bc);
  }

  template <typename F>
  void for_each_parameter(F&& f) const {
    f(Wi); f(Wf); f(Wo); f(Wc);
    f(Ui); f(Uf); f(Uo); f(Uc);
    f(bi); f(bf); f(bo); f(bc);
  }
};

/// Both directions of the encoder. The same instance encodes source and
/// target sentences (parameter sharing).
struct LstmParams {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  LstmDirection fwd, bwd;

  /// Weights uniform in [-r, r] with r = sqrt(6 / (fan_in + fan_out)),
  /// forget-gate bias 1, other biases 0. Deterministic under the seed.
  static LstmParams init(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed);

  template <typename F>
  void for_each_parameter(F&& f) {
    fwd.for_each_parameter(f);
    bwd.for_each_parameter(f);
  }

  template <typename F>
  void for_each_parameter(F&& f) const {
    fwd.for_each_parameter(f);
    bwd.for_each_parameter(f);
  }
};

/// Per-tape leaf handles for one direction.
struct LstmDirectionVars {
  Var Wi, Wf, Wo, Wc, Ui, Uf, Uo, Uc, bi, bf, bo, bc;
};

LstmDirectionVars lift(Tape& tape, LstmDirection& dir);

struct LstmState {
  Var h, c;  // 1 x H each
};

/// One gated update: i, f, o via logistic sigmoid, candidate via tanh,
/// c = f*c_prev + i*g, h = o*tanh(c).
LstmState lstm_step(Tape& tape, LstmState prev, Var x, const LstmDirectionVars& p);

/// Row i is the embedding of tokens[i]; OOV rows are zero. Enters the graph
/// as a constant. Throws on an empty token list.
Var embed(Tape& tape, const std::vector<std::string>& tokens, const EmbeddingTable& table);
Matrix embed_values(const std::vector<std::string>& tokens, const EmbeddingTable& table);

/// Encode an M x d embedding matrix into the M x 2H hidden sequence: a
/// left-to-right pass and a right-to-left pass from zero initial states,
/// position i holding [h_fwd_i, h_bwd_i].
Var bilstm_encode(Tape& tape, Var embeddings, LstmParams& params);

}  // namespace exalign
