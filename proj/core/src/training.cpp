#include "ufpgd/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ufpgd/errors.hpp"
#include "ufpgd/parallel.hpp"
#include "ufpgd/pgd.hpp"
#include "ufpgd/rng.hpp"
#include "ufpgd/zf.hpp"

namespace ufpgd {
namespace {

constexpr std::uint64_t kShuffleStream = 0x7D5A1E0B33C4F216ULL;

void check_dataset(const Dataset& data, const SystemConfig& sys,
                   const char* which) {
  if (data.size() == 0) {
    throw TrainingError(std::string(which) + " dataset is empty");
  }
  if (data.num_users != sys.K || data.num_antennas != sys.M) {
    throw TrainingError(std::string(which) +
                        " dataset dimensions do not match SystemConfig");
  }
}

void project_flat(std::vector<double>& params, double eta_lo, double eta_hi) {
  for (std::size_t i = 0; i + 1 < params.size(); i += 2) {
    params[i] = std::max(0.0, params[i]);
    params[i + 1] = std::min(std::max(params[i + 1], eta_lo), eta_hi);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda_cost >= 0.0)) {
    throw std::invalid_argument("TrainConfig: lambda_cost must be >= 0");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  }
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  }
  if (max_epochs < 1) {
    throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  }
  if (patience < 1) {
    throw std::invalid_argument("TrainConfig: patience must be >= 1");
  }
}

double supervised_loss(const PrecoderMatrix& precoder,
                       const PrecoderMatrix& ground_truth) {
  if (precoder.rows() != ground_truth.rows() ||
      precoder.cols() != ground_truth.cols()) {
    throw std::invalid_argument("supervised_loss: shape mismatch");
  }
  return (precoder - ground_truth).squaredNorm();
}

ComplexMatrix supervised_loss_grad(const PrecoderMatrix& precoder,
                                   const PrecoderMatrix& ground_truth) {
  if (precoder.rows() != ground_truth.rows() ||
      precoder.cols() != ground_truth.cols()) {
    throw std::invalid_argument("supervised_loss_grad: shape mismatch");
  }
  return 2.0 * (precoder - ground_truth);
}

double unsupervised_loss(const PrecoderMatrix& precoder,
                         const ChannelMatrix& channel,
                         const SystemConfig& cfg, double lambda_cost) {
  return lagrangian_value(precoder, channel, cfg, lambda_cost);
}

ComplexMatrix unsupervised_loss_grad(const PrecoderMatrix& precoder,
                                     const ChannelMatrix& channel,
                                     const SystemConfig& cfg,
                                     double lambda_cost) {
  ComplexMatrix grad = 2.0 * grad_f(precoder, channel, cfg);
  for (Eigen::Index m = 0; m < precoder.cols(); ++m) {
    double norm = precoder.col(m).norm();
    if (norm > 0.0) {
      grad.col(m) += (lambda_cost / norm) * precoder.col(m);
    }
  }
  return grad;
}

std::vector<double> pack_params(const UnfoldedNetwork& net) {
  std::vector<double> params(2 * net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    params[2 * i] = net.layers[i].lambda_i;
    params[2 * i + 1] = net.layers[i].eta_i;
  }
  return params;
}

void unpack_params(const std::vector<double>& params, UnfoldedNetwork& net) {
  if (params.size() != 2 * net.layers.size()) {
    throw std::invalid_argument("unpack_params: size mismatch");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    net.layers[i].lambda_i = params[2 * i];
    net.layers[i].eta_i = params[2 * i + 1];
  }
}

void adam_update(AdamState& state, const std::vector<double>& grads,
                 std::vector<double>& params, double lr) {
  if (grads.size() != params.size() || grads.size() != state.m.size() ||
      grads.size() != state.v.size()) {
    throw TrainingError("adam_update: parameter/gradient size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError("adam_update: non-finite gradient for parameter " +
                          std::to_string(i));
    }
  }
  state.step += 1;
  double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    double m_hat = state.m[i] / bias1;
    double v_hat = state.v[i] / bias2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

TrainResult train(const UnfoldedNetwork& net, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg,
                  const SystemConfig& sys) {
  cfg.validate();
  sys.validate();
  check_dataset(train_set, sys, "train");
  check_dataset(val_set, sys, "validation");
  if (cfg.loss_kind == LossKind::kSupervised &&
      (!train_set.has_labels() || !val_set.has_labels())) {
    throw TrainingError("train: supervised mode requires labeled datasets");
  }

  UnfoldedNetwork model = project_params(net);
  if (model.num_users != sys.K || model.num_antennas != sys.M) {
    throw TrainingError("train: network dimensions do not match SystemConfig");
  }
  const std::size_t depth = model.layers.size();
  const double eta_hi = 1.0 / model.mp_bound;
  const double eta_lo = 0.5 * eta_hi;
  const int threads = cfg.threads;

  std::vector<double> params = pack_params(model);
  AdamState adam(params.size());

  // ZF consumption per validation channel, fixed across epochs.
  std::vector<double> val_zf_l21(val_set.size());
  parallel_for(
      val_set.size(),
      [&](std::size_t j) {
        val_zf_l21[j] = l21_norm(zf_precoder(val_set.channels[j], sys));
      },
      threads);

  Rng shuffle_rng = Rng::stream(cfg.seed, kShuffleStream);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  struct SampleSlot {
    std::vector<double> grads;
    double loss = 0.0;
  };
  struct ValSlot {
    double loss = 0.0;
    double pcg = 0.0;
    double sum_rate = 0.0;
  };
  std::vector<SampleSlot> slots;
  std::vector<ValSlot> val_slots(val_set.size());

  TrainResult result;
  TrainHistory& history = result.history;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double epoch_loss_sum = 0.0;

    for (std::size_t batch_start = 0; batch_start < train_set.size();
         batch_start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(cfg.batch_size,
                                train_set.size() - batch_start);
      slots.assign(count, SampleSlot{});
      parallel_for(
          count,
          [&](std::size_t b) {
            const std::size_t idx = order[batch_start + b];
            const ChannelMatrix& channel = train_set.channels[idx];
            ForwardOptions opts;
            opts.with_tape = true;
            ForwardResult fwd = forward(model, channel, sys, std::nullopt,
                                        opts);
            ComplexMatrix cost_grad;
            if (cfg.loss_kind == LossKind::kSupervised) {
              const PrecoderMatrix& label = train_set.labels[idx];
              slots[b].loss = supervised_loss(fwd.output, label);
              cost_grad = supervised_loss_grad(fwd.output, label);
            } else {
              slots[b].loss = unsupervised_loss(fwd.output, channel, sys,
                                                cfg.lambda_cost);
              cost_grad = unsupervised_loss_grad(fwd.output, channel, sys,
                                                 cfg.lambda_cost);
            }
            ParamGradients pg =
                backward(fwd.tape, model, channel, sys, cost_grad);
            slots[b].grads.resize(2 * depth);
            for (std::size_t i = 0; i < depth; ++i) {
              slots[b].grads[2 * i] = pg.d_lambda[i];
              slots[b].grads[2 * i + 1] = pg.d_eta[i];
            }
          },
          threads);

      // Deterministic ordered reduction over the batch.
      std::vector<double> mean_grads(2 * depth, 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        batch_loss += slots[b].loss;
        for (std::size_t p = 0; p < mean_grads.size(); ++p) {
          mean_grads[p] += slots[b].grads[p];
        }
      }
      const double scale = 1.0 / static_cast<double>(count);
      batch_loss *= scale;
      for (double& g : mean_grads) g *= scale;
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train: non-finite loss at epoch " +
                            std::to_string(epoch) + " batch " +
                            std::to_string(batch_start / cfg.batch_size));
      }
      epoch_loss_sum += batch_loss * static_cast<double>(count);

      adam_update(adam, mean_grads, params, cfg.learning_rate);
      project_flat(params, eta_lo, eta_hi);
      unpack_params(params, model);
    }

    parallel_for(
        val_set.size(),
        [&](std::size_t j) {
          const ChannelMatrix& channel = val_set.channels[j];
          PrecoderMatrix out = forward_infer(model, channel, sys);
          if (cfg.loss_kind == LossKind::kSupervised) {
            val_slots[j].loss = supervised_loss(out, val_set.labels[j]);
          } else {
            val_slots[j].loss =
                unsupervised_loss(out, channel, sys, cfg.lambda_cost);
          }
          val_slots[j].pcg = val_zf_l21[j] / l21_norm(out);
          val_slots[j].sum_rate = sum_rate(sinr_per_user(channel, out, sys));
        },
        threads);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss_sum / static_cast<double>(train_set.size());
    double val_n = static_cast<double>(val_set.size());
    for (const ValSlot& slot : val_slots) {
      record.val_loss += slot.loss;
      record.val_mean_pcg += slot.pcg;
      record.val_mean_sum_rate += slot.sum_rate;
    }
    record.val_loss /= val_n;
    record.val_mean_pcg /= val_n;
    record.val_mean_sum_rate /= val_n;
    if (!std::isfinite(record.val_loss)) {
      throw TrainingError("train: non-finite validation loss at epoch " +
                          std::to_string(epoch));
    }
    history.epochs.push_back(record);
    history.stopping_epoch = epoch;

    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      history.best_epoch = epoch;
      history.best_params = model.layers;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= cfg.patience) break;
  }

  model.layers = history.best_params;
  result.network = std::move(model);
  return result;
}

EvaluationSummary evaluate(const UnfoldedNetwork& net, const Dataset& test_set,
                           const SystemConfig& sys,
                           const EvalOptions& options) {
  sys.validate();
  check_dataset(test_set, sys, "test");
  UnfoldedNetwork model = net;
  model.validate();

  const std::size_t n = test_set.size();
  const std::size_t depth = model.layers.size();
  std::vector<MetricsReport> reports(n);
  std::vector<std::vector<TraceRecord>> curves;
  if (options.per_layer) curves.assign(n, {});

  parallel_for(
      n,
      [&](std::size_t j) {
        const ChannelMatrix& channel = test_set.channels[j];
        PrecoderMatrix zf = zf_precoder(channel, sys);
        if (options.per_layer) {
          ForwardOptions opts;
          opts.with_iterates = true;
          ForwardResult fwd = forward(model, channel, sys, std::nullopt,
                                      opts);
          curves[j].resize(depth + 1);
          for (std::size_t layer = 0; layer <= depth; ++layer) {
            const PrecoderMatrix& w = fwd.iterates[layer];
            MetricsReport rep = compute_metrics(channel, w, zf, sys);
            TraceRecord& rec = curves[j][layer];
            rec.index = static_cast<long>(layer);
            rec.lagrangian =
                options.lagrangian_lambda * l21_norm(w) +
                rep.residual * rep.residual;
            rec.residual = rep.residual;
            rec.pcg = rep.pcg;
            rec.sum_rate = rep.sum_rate;
            int active = 0;
            for (Eigen::Index m = 0; m < w.cols(); ++m) {
              if (w.col(m).squaredNorm() > 0.0) ++active;
            }
            rec.active_columns = active;
          }
          reports[j] = compute_metrics(channel, fwd.output, zf, sys);
        } else {
          reports[j] =
              compute_metrics(channel, forward_infer(model, channel, sys),
                              zf, sys);
        }
      },
      options.threads);

  EvaluationSummary summary;
  summary.num_channels = n;
  summary.mean.sinr = RealVector::Zero(sys.K);
  summary.std_error.sinr = RealVector::Zero(sys.K);
  for (const MetricsReport& rep : reports) {
    summary.mean.tx_power += rep.tx_power;
    summary.mean.cons_power += rep.cons_power;
    summary.mean.sinr += rep.sinr;
    summary.mean.sum_rate += rep.sum_rate;
    summary.mean.pcg += rep.pcg;
    summary.mean.residual += rep.residual;
  }
  const double scale = 1.0 / static_cast<double>(n);
  summary.mean.tx_power *= scale;
  summary.mean.cons_power *= scale;
  summary.mean.sinr *= scale;
  summary.mean.sum_rate *= scale;
  summary.mean.pcg *= scale;
  summary.mean.residual *= scale;
  if (n > 1) {
    MetricsReport& se = summary.std_error;
    for (const MetricsReport& rep : reports) {
      auto sq = [](double d) { return d * d; };
      se.tx_power += sq(rep.tx_power - summary.mean.tx_power);
      se.cons_power += sq(rep.cons_power - summary.mean.cons_power);
      se.sinr += (rep.sinr - summary.mean.sinr).cwiseAbs2();
      se.sum_rate += sq(rep.sum_rate - summary.mean.sum_rate);
      se.pcg += sq(rep.pcg - summary.mean.pcg);
      se.residual += sq(rep.residual - summary.mean.residual);
    }
    const double var_scale =
        1.0 / (static_cast<double>(n - 1) * static_cast<double>(n));
    se.tx_power = std::sqrt(se.tx_power * var_scale);
    se.cons_power = std::sqrt(se.cons_power * var_scale);
    se.sinr = (se.sinr * var_scale).cwiseSqrt();
    se.sum_rate = std::sqrt(se.sum_rate * var_scale);
    se.pcg = std::sqrt(se.pcg * var_scale);
    se.residual = std::sqrt(se.residual * var_scale);
  }

  if (options.per_layer) {
    summary.per_layer.resize(depth + 1);
    for (std::size_t layer = 0; layer <= depth; ++layer) {
      TraceRecord& rec = summary.per_layer[layer];
      rec.index = static_cast<long>(layer);
      for (std::size_t j = 0; j < n; ++j) {
        rec.lagrangian += curves[j][layer].lagrangian;
        rec.residual += curves[j][layer].residual;
        rec.pcg += curves[j][layer].pcg;
        rec.sum_rate += curves[j][layer].sum_rate;
        rec.active_columns += curves[j][layer].active_columns;
      }
      rec.lagrangian *= scale;
      rec.residual *= scale;
      rec.pcg *= scale;
      rec.sum_rate *= scale;
      rec.active_columns *= scale;
    }
  }
  return summary;
}

}  // namespace ufpgd
