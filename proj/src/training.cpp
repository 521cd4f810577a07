#include "exalign/training.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace exalign {

void adadelta_step(Parameter& param, AdaDeltaState& state, const AdaDeltaConfig& config) {
  if (state.avg_sq_grad.size() == 0) {
    state.avg_sq_grad = Matrix::Zero(param.value.rows(), param.value.cols());
    state.avg_sq_update = Matrix::Zero(param.value.rows(), param.value.cols());
  }
  if (state.avg_sq_grad.rows() != param.value.rows() ||
      state.avg_sq_grad.cols() != param.value.cols() ||
      param.grad.rows() != param.value.rows() || param.grad.cols() != param.value.cols()) {
    throw std::invalid_argument("adadelta_step: shape mismatch for " + param.name);
  }
  if (!param.grad.allFinite()) {
    throw std::runtime_error("adadelta_step: non-finite gradient for " + param.name);
  }

  const double rho = config.rho;
  const double eps = config.eps;
  state.avg_sq_grad = rho * state.avg_sq_grad.array() + (1.0 - rho) * param.grad.array().square();
  const Matrix update =
      (-(state.avg_sq_update.array() + eps).sqrt() / (state.avg_sq_grad.array() + eps).sqrt() *
       param.grad.array())
          .matrix();
  state.avg_sq_update =
      rho * state.avg_sq_update.array() + (1.0 - rho) * update.array().square();
  param.value += update;
}

void AdaDelta::step(std::span<Parameter* const> params) {
  if (states_.empty()) {
    states_.resize(params.size());
  } else if (states_.size() != params.size()) {
    throw std::invalid_argument("AdaDelta::step: parameter count changed");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    adadelta_step(*params[i], states_[i], config_);
  }
}

TrainConfig TrainConfig::desk() {
  return TrainConfig{};
}

TrainConfig TrainConfig::reference() {
  TrainConfig cfg;
  cfg.batch_size = 512;
  cfg.max_epochs = 30;
  return cfg;
}

namespace {

std::vector<std::pair<double, Label>> dev_scores(Model& model,
                                                 const std::vector<PairExample>& dev_set) {
  std::vector<std::pair<double, Label>> scores;
  scores.reserve(dev_set.size());
  for (const PairExample& ex : dev_set) {
    scores.emplace_back(score_pair(model, ex.source, ex.target).y, ex.label);
  }
  return scores;
}

}  // namespace

TrainResult train(Model model, const std::vector<PairExample>& train_set,
                  const std::vector<PairExample>& dev_set, const TrainConfig& config) {
  if (train_set.empty() || dev_set.empty()) {
    throw std::invalid_argument("train: train and dev splits must be non-empty");
  }
  bool has_pos = false, has_neg = false;
  for (const PairExample& ex : dev_set) {
    (ex.label == Label::paraphrase ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("train: dev split must contain both classes");
  }
  if (config.batch_size < 1 || config.max_epochs < 1) {
    throw std::invalid_argument("train: batch size and epochs must be >= 1");
  }

  const auto params = model.parameters();
  AdaDelta optimizer(config.optimizer);
  std::mt19937_64 rng(config.seed);

  TrainResult result;
  double best_accuracy = -1.0;
  std::vector<Matrix> best_params;
  Threshold best_threshold;
  int epochs_since_improvement = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    seeded_shuffle(order, rng);

    double epoch_loss = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size), ++batch_id) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double batch_count = static_cast<double>(end - start);

      for (Parameter* p : params) p->zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const PairExample& ex = train_set[order[k]];
        Tape tape;
        ScoreGraph sg = score_pair_graph(tape, model, ex.source, ex.target);
        Var l = loss(tape, sg.y, ex.label);
        const double value = tape.value(l)(0, 0);
        if (!std::isfinite(value)) {
          throw std::runtime_error("train: non-finite loss in epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_id) + " (example " +
                                   ex.id + ")");
        }
        epoch_loss += value;
        tape.backward(l);
      }
      for (Parameter* p : params) {
        p->grad /= batch_count;  // batch gradient is the mean over examples
        if (!p->grad.allFinite()) {
          throw std::runtime_error("train: non-finite gradient in epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_id));
        }
      }
      optimizer.step(params);
    }
    epoch_loss /= static_cast<double>(train_set.size());

    const auto scores = dev_scores(model, dev_set);
    const Calibration calibration = calibrate_threshold(scores);
    result.history.push_back(
        {epoch, epoch_loss, calibration.accuracy, calibration.threshold.cut});

    if (calibration.accuracy > best_accuracy) {
      best_accuracy = calibration.accuracy;
      best_threshold = calibration.threshold;
      best_params.clear();
      for (const Parameter* p : params) best_params.push_back(p->value);
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
    }
    if (epochs_since_improvement >= config.patience) break;
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
  model.threshold = best_threshold;
  result.model = std::move(model);
  result.best_dev_accuracy = best_accuracy;
  return result;
}

void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write history: " + path.string());
  }
  out << "epoch\ttrain_loss\tdev_accuracy\tthreshold\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const EpochRecord& rec : history) {
    out << rec.epoch << '\t' << rec.train_loss << '\t' << rec.dev_accuracy << '\t'
        << rec.threshold << '\n';
  }
}

double evaluate_accuracy(Model& model, std::span<const PairExample> examples) {
  if (!model.threshold) {
    throw std::invalid_argument("evaluate_accuracy: model has no calibrated threshold");
  }
  if (examples.empty()) {
    throw std::invalid_argument("evaluate_accuracy: empty evaluation set");
  }
  std::size_t correct = 0;
  for (const PairExample& ex : examples) {
    const PairScore score = score_pair(model, ex.source, ex.target);
    correct += *score.label == ex.label;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace exalign
