#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "exalign/data.hpp"
#include "exalign/model.hpp"

namespace exalign {

struct AdaDeltaConfig {
  double rho = 0.6;      // decay of both running averages
  double eps = 1e-6;     // stabilizer inside the square roots
};

/// Per-parameter running averages; shapes mirror the parameter.
struct AdaDeltaState {
  Matrix avg_sq_grad;
  Matrix avg_sq_update;
};

/// One update from param.grad:
///   E[g2]  <- rho E[g2] + (1-rho) g^2
///   dx     <- -sqrt(E[dx2]+eps) / sqrt(E[g2]+eps) * g
///   E[dx2] <- rho E[dx2] + (1-rho) dx^2
///   param  += dx
/// Throws on shape mismatch or a non-finite gradient.
void adadelta_step(Parameter& param, AdaDeltaState& state, const AdaDeltaConfig& config);

/// Optimizer over a fixed parameter list, states bound by position on the
/// first step.
class AdaDelta {
 public:
  explicit AdaDelta(AdaDeltaConfig config = {}) : config_(config) {}
  void step(std::span<Parameter* const> params);
  const AdaDeltaConfig& config() const { return config_; }

 private:
  AdaDeltaConfig config_;
  std::vector<AdaDeltaState> states_;
};

struct TrainConfig {
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 5;      // epochs without dev improvement before stopping
  std::uint64_t seed = 7;
  AdaDeltaConfig optimizer;

  /// CI-friendly defaults: batch 32, at most 50 epochs.
  static TrainConfig desk();
  /// Reference configuration: batch 512, at most 30 epochs.
  static TrainConfig reference();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double threshold = 0.0;
};

struct TrainResult {
  Model model;  // best-dev checkpoint with its threshold
  std::vector<EpochRecord> history;
  double best_dev_accuracy = 0.0;
};

/// Mini-batch loop: seeded shuffles, mean-of-batch gradients, one AdaDelta
/// step per batch, per-epoch dev calibration, early stopping on patience,
/// best-dev checkpoint returned. Deterministic under the seed.
/// Throws on empty splits, a single-class dev set, or divergence
/// (non-finite loss/gradient, reported with the offending batch id).
TrainResult train(Model model, const std::vector<PairExample>& train_set,
                  const std::vector<PairExample>& dev_set, const TrainConfig& config);

/// Tab-separated history: epoch, train_loss, dev_accuracy, threshold.
void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history);

/// Accuracy of the stored threshold on a labeled set.
double evaluate_accuracy(Model& model, std::span<const PairExample> examples);

}  // namespace exalign
