#pragma once

#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"

namespace ufpgd {

// Sum of column 2-norms ||W||_{2,1}; column m is the signal through
// antenna m's PA.
double l21_norm(const PrecoderMatrix& precoder);

// Transmit power ||W||_F^2.
double tx_power(const PrecoderMatrix& precoder);

// Total PA consumed power alpha * ||W||_{2,1}.
double consumed_power(const PrecoderMatrix& precoder, double alpha);

// Per-user SINR of the effective channel G = H W^T:
//   SINR_k = |G_kk|^2 / (sum_{j != k} |G_kj|^2 + sigma_nu^2).
RealVector sinr_per_user(const ChannelMatrix& channel,
                         const PrecoderMatrix& precoder,
                         const SystemConfig& cfg);

// Sum rate sum_k log2(1 + SINR_k) in bits per symbol.
double sum_rate(const RealVector& sinr);

// Consumed-power gain of `precoder` relative to the classical ZF
// precoder of the same channel: consumed_power(ZF) divided by
// consumed_power(precoder), > 1 means the precoder saves energy.
// Throws std::invalid_argument when the precoder consumes zero power.
double pcg(const ChannelMatrix& channel, const PrecoderMatrix& precoder,
           const SystemConfig& cfg);

// Same ratio with a precomputed ZF reference, for callers that score
// many precoders against one channel.
double pcg_from_reference(const PrecoderMatrix& zf_reference,
                          const PrecoderMatrix& precoder);

// Frobenius norm of the constraint residual H W^T - sigma_nu D^{1/2}.
double constraint_residual(const ChannelMatrix& channel,
                           const PrecoderMatrix& precoder,
                           const SystemConfig& cfg);

struct MetricsReport {
  double tx_power = 0.0;
  double cons_power = 0.0;
  RealVector sinr;
  double sum_rate = 0.0;
  double pcg = 0.0;
  double residual = 0.0;
};

// All metrics of `precoder` on `channel`, with PCG taken against the
// caller-supplied ZF reference.
MetricsReport compute_metrics(const ChannelMatrix& channel,
                              const PrecoderMatrix& precoder,
                              const PrecoderMatrix& zf_reference,
                              const SystemConfig& cfg);

}  // namespace ufpgd
