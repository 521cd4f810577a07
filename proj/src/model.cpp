#include "exalign/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace exalign {

Model Model::init(EmbeddingTable table, Eigen::Index hidden_dim, std::uint64_t seed) {
  if (table.vocab.size() < 1) {
    throw std::invalid_argument("Model::init: empty embedding table");
  }
  Model m;
  m.config.hidden_dim = hidden_dim;
  m.embeddings = std::move(table);
  m.lstm = LstmParams::init(m.embeddings.dim(), hidden_dim, seed);
  return m;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  lstm.for_each_parameter([&out](Parameter& p) { out.push_back(&p); });
  return out;
}

ScoreGraph score_pair_graph(Tape& tape, Model& model,
                            const std::vector<std::string>& p_tokens,
                            const std::vector<std::string>& q_tokens) {
  if (p_tokens.empty() || q_tokens.empty()) {
    throw std::invalid_argument("score_pair: empty sentence");
  }

  Var p_emb = embed(tape, p_tokens, model.embeddings);
  Var q_emb = embed(tape, q_tokens, model.embeddings);
  Var source = bilstm_encode(tape, p_emb, model.lstm);
  Var target = bilstm_encode(tape, q_emb, model.lstm);

  ScoreGraph sg;
  AlignOptions opt;
  opt.eps = model.config.eps;
  sg.pairs = align(tape, source, target, opt);
  sg.weighted = weight_and_concat(tape, sg.pairs);

  std::vector<Var> rows;
  rows.reserve(sg.weighted.size());
  for (const WeightedConcat& wc : sg.weighted) rows.push_back(wc.r);
  Var r = op_mean_rows(op_stack_rows(rows));

  const Eigen::Index two_h = 2 * model.config.hidden_dim;
  Var r_p = op_slice_cols(r, 0, two_h);
  Var r_q = op_slice_cols(r, two_h, two_h);
  sg.r_p = tape.value(r_p);
  sg.r_q = tape.value(r_q);
  sg.y = op_cosine(r_p, r_q, model.config.eps);

  const double eps = model.config.eps;
  if (sg.r_p.norm() < eps && sg.r_q.norm() < eps) {
    sg.reported_y = 1.0;  // zero residual: every aligned pair matched
  } else {
    sg.reported_y = tape.value(sg.y)(0, 0);
  }
  return sg;
}

PairScore score_pair(Model& model, const std::vector<std::string>& p_tokens,
                     const std::vector<std::string>& q_tokens) {
  Tape tape;
  ScoreGraph sg = score_pair_graph(tape, model, p_tokens, q_tokens);
  PairScore score;
  score.y = sg.reported_y;
  score.r_p = sg.r_p.row(0);
  score.r_q = sg.r_q.row(0);
  if (model.threshold) score.label = predict(score.y, *model.threshold);
  return score;
}

Var loss(Tape& tape, Var y, Label gold) {
  const double target = gold == Label::paraphrase ? 1.0 : -1.0;
  Var diff = op_sub(y, tape.constant(target * Matrix::Ones(1, 1)));
  return op_mul_elementwise(diff, diff);
}

Calibration calibrate_threshold(std::span<const std::pair<double, Label>> dev_scores) {
  if (dev_scores.empty()) {
    throw std::invalid_argument("calibrate_threshold: empty dev set");
  }
  std::vector<std::pair<double, Label>> sorted(dev_scores.begin(), dev_scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t n = sorted.size();
  std::size_t positives = 0;
  for (const auto& [score, label] : sorted) positives += label == Label::paraphrase;
  if (positives == 0 || positives == n) {
    throw std::invalid_argument("calibrate_threshold: dev set must contain both classes");
  }

  // suffix_pos[i]: paraphrase count in sorted[i..n); prefix_neg[i]: the rest below i
  std::vector<std::size_t> suffix_pos(n + 1, 0), prefix_neg(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    suffix_pos[i] = suffix_pos[i + 1] + (sorted[i].second == Label::paraphrase);
  }
  for (std::size_t i = 0; i < n; ++i) {
    prefix_neg[i + 1] = prefix_neg[i] + (sorted[i].second == Label::non_paraphrase);
  }

  std::vector<double> candidates;
  candidates.push_back(-1.0);
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i].first != sorted[i - 1].first) {
      candidates.push_back(0.5 * (sorted[i].first + sorted[i - 1].first));
    }
  }
  candidates.push_back(1.0);

  auto accuracy_at = [&](double cut) {
    const auto it = std::lower_bound(
        sorted.begin(), sorted.end(), cut,
        [](const std::pair<double, Label>& s, double c) { return s.first < c; });
    const std::size_t idx = static_cast<std::size_t>(it - sorted.begin());
    return static_cast<double>(suffix_pos[idx] + prefix_neg[idx]) / static_cast<double>(n);
  };

  Calibration best;
  best.threshold.cut = candidates.front();
  best.accuracy = accuracy_at(candidates.front());
  for (double cut : candidates) {
    const double acc = accuracy_at(cut);
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.threshold.cut = cut;
    }
  }
  return best;
}

Label predict(double y, Threshold t) {
  return y >= t.cut ? Label::paraphrase : Label::non_paraphrase;
}

}  // namespace exalign
