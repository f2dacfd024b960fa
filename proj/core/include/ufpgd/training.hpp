#pragma once

#include <cstdint>
#include <vector>

#include "ufpgd/dataset.hpp"
#include "ufpgd/metrics.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"
#include "ufpgd/unfolded.hpp"

namespace ufpgd {

enum class LossKind { kSupervised, kUnsupervised };

struct TrainConfig {
  LossKind loss_kind = LossKind::kUnsupervised;
  double lambda_cost = 1.0 / 15.0;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  int threads = 0;  // <= 0 picks default_thread_count()

  void validate() const;
};

// MSE to the ground-truth precoder, ||W - W_gt||_F^2.
double supervised_loss(const PrecoderMatrix& precoder,
                       const PrecoderMatrix& ground_truth);

// Real-pair gradient 2 (W - W_gt).
ComplexMatrix supervised_loss_grad(const PrecoderMatrix& precoder,
                                   const PrecoderMatrix& ground_truth);

// The solver's own objective,
// lambda_cost ||W||_{2,1} + ||H W^T - sigma_nu D^{1/2}||_F^2.
double unsupervised_loss(const PrecoderMatrix& precoder,
                         const ChannelMatrix& channel,
                         const SystemConfig& cfg, double lambda_cost);

// Real-pair gradient: lambda_cost w_m/||w_m|| per column (zero
// subgradient on zero columns) plus twice the smooth-term gradient.
ComplexMatrix unsupervised_loss_grad(const PrecoderMatrix& precoder,
                                     const ChannelMatrix& channel,
                                     const SystemConfig& cfg,
                                     double lambda_cost);

// Adam with bias correction over a flat parameter vector. The network
// packs as [lambda_0, eta_0, lambda_1, eta_1, ...].
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t num_params)
      : m(num_params, 0.0), v(num_params, 0.0) {}
};

std::vector<double> pack_params(const UnfoldedNetwork& net);
void unpack_params(const std::vector<double>& params, UnfoldedNetwork& net);

// One Adam step, in place. Throws TrainingError naming the parameter
// index on a non-finite gradient.
void adam_update(AdamState& state, const std::vector<double>& grads,
                 std::vector<double>& params, double lr);

struct EpochRecord {
  long epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mean_pcg = 0.0;
  double val_mean_sum_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  long stopping_epoch = -1;  // last epoch that actually ran
  long best_epoch = -1;      // epoch of the lowest validation loss
  std::vector<LayerParams> best_params;
};

struct TrainResult {
  UnfoldedNetwork network;  // best-validation-epoch parameters
  TrainHistory history;
};

// Mini-batch Adam loop with per-epoch validation and early stopping
// after `patience` epochs without validation-loss improvement.
// Parameters are projected after every optimizer step. Per-sample
// forward/backward runs on the worker pool; gradient reduction is an
// ordered sum, so a fixed seed reproduces TrainHistory exactly
// regardless of thread count. Throws TrainingError with epoch/batch
// coordinates on a non-finite loss.
TrainResult train(const UnfoldedNetwork& net, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg,
                  const SystemConfig& sys);

struct EvalOptions {
  bool per_layer = false;
  // lambda used for the lagrangian column of the per-layer curves.
  double lagrangian_lambda = 1.0 / 15.0;
  int threads = 0;
};

struct EvaluationSummary {
  MetricsReport mean;       // final-layer means over the test set
  MetricsReport std_error;  // standard errors of those means
  std::size_t num_channels = 0;
  // Layer-indexed curves including layer 0 (the initialization), so
  // net.layers.size() + 1 records when per_layer is requested.
  std::vector<TraceRecord> per_layer;
};

// Forward on every test channel; means and standard errors at the
// final layer, optionally full per-layer metric curves.
EvaluationSummary evaluate(const UnfoldedNetwork& net, const Dataset& test_set,
                           const SystemConfig& sys,
                           const EvalOptions& options = {});

}  // namespace ufpgd
