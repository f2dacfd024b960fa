#pragma once

#include <optional>
#include <vector>

#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"

namespace ufpgd {

// Proximal gradient descent on the scaled Lagrangian
//   L(W) = lambda ||W||_{2,1} + ||H W^T - sigma_nu D^{1/2}||_F^2.
// The gradient below follows the d f / d W^* convention without a
// factor 2, so the stable step range is eta <= 1 / lambda_max(H^T H^*).

struct PgdParams {
  double lambda = 1.0 / 15.0;  // shrinkage weight, >= 0
  double eta = 0.0;            // step size, > 0
  long max_iters = 0;          // >= 0
  double residual_tol = 0.0;   // relative iterate-change tolerance, 0 disables
  long trace_every = 0;        // sampling stride for the trace, 0 disables

  void validate() const;
};

// One sampled point of a solve. active_columns is an exact count for a
// single run and a mean when records are averaged over channels.
struct TraceRecord {
  long index = 0;
  double lagrangian = 0.0;
  double residual = 0.0;
  double pcg = 0.0;
  double sum_rate = 0.0;
  double active_columns = 0.0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;
};

// Gradient of f(W) = ||H W^T - sigma_nu D^{1/2}||_F^2 with respect to
// the conjugated precoder:
//   grad f(W) = (W H^T) H^* - (sigma_nu D^{1/2}) H^*.
// The factored product order costs O(K^2 M) instead of O(K M^2).
ComplexMatrix grad_f(const PrecoderMatrix& precoder,
                     const ChannelMatrix& channel, const SystemConfig& cfg);

// Precomputed pieces of grad_f for repeated application to one channel.
struct SmoothGradient {
  ComplexMatrix h_trans;  // M x K, H^T
  ComplexMatrix h_conj;   // K x M, H^*
  ComplexMatrix offset;   // K x M, (sigma_nu D^{1/2}) H^*

  static SmoothGradient make(const ChannelMatrix& channel,
                             const SystemConfig& cfg);

  ComplexMatrix apply(const PrecoderMatrix& precoder) const;

  // out = grad_f(precoder); scratch must be K x K. No allocations.
  void apply_into(const PrecoderMatrix& precoder, ComplexMatrix& scratch,
                  ComplexMatrix& out) const;
};

// Column-wise block soft threshold, the proximal map of
// t * ||.||_{2,1}: column v becomes (1 - t / max(||v||, t)) * v, which
// is exactly zero when ||v|| <= t. t must be >= 0.
PrecoderMatrix prox_l21(const ComplexMatrix& input, double t);

// One iteration W -> prox_{lambda eta ||.||_{2,1}}(W - eta grad_f(W)).
PrecoderMatrix pgd_step(const PrecoderMatrix& precoder,
                        const ChannelMatrix& channel,
                        const SystemConfig& cfg, double lambda, double eta);

// Largest stable step is 1 / lambda_max(H^T H^*). `exact` comes from
// power iteration; `mp` is the Marchenko-Pastur edge surrogate
// (sqrt(K) + sqrt(M))^2, an upper bound for large i.i.d. channels that
// needs no access to H.
struct LipschitzBound {
  double exact = 0.0;
  double mp = 0.0;
};

double mp_bound(int num_users, int num_antennas);

// Power iteration on H^T H^* (relative tolerance 1e-8, at most 1e4
// iterations, then ConvergenceError). Once the tolerance is met the
// estimate keeps refining while the cap allows, so the result is
// normally accurate to near machine precision.
LipschitzBound lipschitz_bound(const ChannelMatrix& channel);

// Objective value lambda ||W||_{2,1} + residual^2 driving the solver.
double lagrangian_value(const PrecoderMatrix& precoder,
                        const ChannelMatrix& channel,
                        const SystemConfig& cfg, double lambda);

struct PgdResult {
  PrecoderMatrix precoder;
  SolveTrace trace;
  long iterations = 0;  // steps actually taken
};

// Runs PGD from `start` (default H^*). Stops at max_iters or when the
// relative iterate change ||W_next - W||_F / max(||W||_F, 1e-12) drops
// below residual_tol. Iterates are checked for NaN/Inf and a
// DivergenceError carries the failing iteration. With trace_every > 0
// the trace holds iterate 0, every trace_every-th iterate and the
// final one, indices strictly increasing.
PgdResult solve_pgd(const ChannelMatrix& channel, const SystemConfig& cfg,
                    const PgdParams& params,
                    const std::optional<PrecoderMatrix>& start = std::nullopt);

// Reference solution: PGD with eta = 1 / exact Lipschitz bound,
// max_iters = 1e5 and iterate-change tolerance 1e-10, no tracing.
PrecoderMatrix oracle_solve(const ChannelMatrix& channel,
                            const SystemConfig& cfg, double lambda);

}  // namespace ufpgd
