#include "exalign/encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace exalign {

std::optional<Eigen::Index> Vocabulary::lookup(const std::string& token) const {
  auto it = index.find(token);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

Eigen::Index Vocabulary::add(const std::string& token) {
  auto it = index.find(token);
  if (it != index.end()) return it->second;
  const Eigen::Index id = size();
  tokens.push_back(token);
  index.emplace(token, id);
  return id;
}

EmbeddingTable load_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path.string());
  }

  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed embedding value");
    }
    if (dim < 0) {
      dim = static_cast<Eigen::Index>(values.size());
      if (dim == 0) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": entry has no vector components");
      }
    }
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " components, got " +
                               std::to_string(values.size()));
    }
    if (table.vocab.lookup(token)) continue;  // keep the first occurrence
    table.vocab.add(token);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw std::runtime_error("embedding file has no entries: " + path.string());
  }

  table.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      table.vectors(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return table;
}

namespace {

Matrix uniform_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-r, r);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

LstmDirection init_direction(const std::string& prefix, Eigen::Index d, Eigen::Index h,
                             std::mt19937_64& rng) {
  LstmDirection dir;
  dir.Wi = Parameter(prefix + ".Wi", uniform_init(rng, d, h));
  dir.Wf = Parameter(prefix + ".Wf", uniform_init(rng, d, h));
  dir.Wo = Parameter(prefix + ".Wo", uniform_init(rng, d, h));
  dir.Wc = Parameter(prefix + ".Wc", uniform_init(rng, d, h));
  dir.Ui = Parameter(prefix + ".Ui", uniform_init(rng, h, h));
  dir.Uf = Parameter(prefix + ".Uf", uniform_init(rng, h, h));
  dir.Uo = Parameter(prefix + ".Uo", uniform_init(rng, h, h));
  dir.Uc = Parameter(prefix + ".Uc", uniform_init(rng, h, h));
  dir.bi = Parameter(prefix + ".bi", Matrix::Zero(1, h));
  dir.bf = Parameter(prefix + ".bf", Matrix::Ones(1, h));
  dir.bo = Parameter(prefix + ".bo", Matrix::Zero(1, h));
  dir.bc = Parameter(prefix + ".bc", Matrix::Zero(1, h));
  return dir;
}

}  // namespace

LstmParams LstmParams::init(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("LstmParams::init: dimensions must be >= 1");
  }
  std::mt19937_64 rng(seed);
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.fwd = init_direction("fwd", input_dim, hidden_dim, rng);
  p.bwd = init_direction("bwd", input_dim, hidden_dim, rng);
  return p;
}

LstmDirectionVars lift(Tape& tape, LstmDirection& dir) {
  return LstmDirectionVars{
      tape.leaf(dir.Wi), tape.leaf(dir.Wf), tape.leaf(dir.Wo), tape.leaf(dir.Wc),
      tape.leaf(dir.Ui), tape.leaf(dir.Uf), tape.leaf(dir.Uo), tape.leaf(dir.Uc),
      tape.leaf(dir.bi), tape.leaf(dir.bf), tape.leaf(dir.bo), tape.leaf(dir.bc)};
}

LstmState lstm_step(Tape& tape, LstmState prev, Var x, const LstmDirectionVars& p) {
  auto gate = [&](Var W, Var U, Var b) {
    return op_add(op_add(op_matmul(x, W), op_matmul(prev.h, U)), b);
  };
  Var i = op_sigmoid(gate(p.Wi, p.Ui, p.bi));
  Var f = op_sigmoid(gate(p.Wf, p.Uf, p.bf));
  Var o = op_sigmoid(gate(p.Wo, p.Uo, p.bo));
  Var g = op_tanh(gate(p.Wc, p.Uc, p.bc));
  Var c = op_add(op_mul_elementwise(f, prev.c), op_mul_elementwise(i, g));
  Var h = op_mul_elementwise(o, op_tanh(c));
  (void)tape;
  return LstmState{h, c};
}

Matrix embed_values(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  if (tokens.empty()) {
    throw std::invalid_argument("embed: empty token list");
  }
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(tokens.size()), table.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (auto id = table.vocab.lookup(tokens[i])) {
      m.row(static_cast<Eigen::Index>(i)) = table.vectors.row(*id);
    }
  }
  return m;
}

Var embed(Tape& tape, const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  return tape.constant(embed_values(tokens, table));
}

Var bilstm_encode(Tape& tape, Var embeddings, LstmParams& params) {
  const Eigen::Index len = tape.value(embeddings).rows();
  if (len < 1) {
    throw std::invalid_argument("bilstm_encode: empty input");
  }
  if (tape.value(embeddings).cols() != params.input_dim) {
    throw std::invalid_argument("bilstm_encode: embedding dim does not match encoder input dim");
  }

  const LstmDirectionVars fv = lift(tape, params.fwd);
  const LstmDirectionVars bv = lift(tape, params.bwd);
  const Eigen::Index h = params.hidden_dim;

  std::vector<Var> inputs;
  inputs.reserve(static_cast<std::size_t>(len));
  for (Eigen::Index i = 0; i < len; ++i) {
    inputs.push_back(op_gather_rows(embeddings, {i}));
  }

  std::vector<Var> forward(static_cast<std::size_t>(len));
  LstmState state{tape.constant(Matrix::Zero(1, h)), tape.constant(Matrix::Zero(1, h))};
  for (Eigen::Index i = 0; i < len; ++i) {
    state = lstm_step(tape, state, inputs[static_cast<std::size_t>(i)], fv);
    forward[static_cast<std::size_t>(i)] = state.h;
  }

  std::vector<Var> backward(static_cast<std::size_t>(len));
  state = LstmState{tape.constant(Matrix::Zero(1, h)), tape.constant(Matrix::Zero(1, h))};
  for (Eigen::Index i = len; i-- > 0;) {
    state = lstm_step(tape, state, inputs[static_cast<std::size_t>(i)], bv);
    backward[static_cast<std::size_t>(i)] = state.h;
  }

  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(len));
  for (Eigen::Index i = 0; i < len; ++i) {
    rows.push_back(op_concat(forward[static_cast<std::size_t>(i)],
                             backward[static_cast<std::size_t>(i)]));
  }
  return op_stack_rows(rows);
}

}  // namespace exalign
