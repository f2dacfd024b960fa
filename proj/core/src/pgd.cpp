#include "ufpgd/pgd.hpp"

#include <cmath>
#include <stdexcept>

#include "ufpgd/errors.hpp"
#include "ufpgd/metrics.hpp"
#include "ufpgd/rng.hpp"
#include "ufpgd/zf.hpp"

namespace ufpgd {
namespace {

constexpr std::uint64_t kPowerIterationSeed = 0x1F2E3D4C5B6A7988ULL;

void check_shapes(const ChannelMatrix& channel, const SystemConfig& cfg) {
  cfg.validate();
  if (channel.rows() != cfg.K || channel.cols() != cfg.M) {
    throw std::invalid_argument("channel shape does not match SystemConfig");
  }
}

int count_active_columns(const PrecoderMatrix& precoder) {
  int active = 0;
  for (Eigen::Index m = 0; m < precoder.cols(); ++m) {
    if (precoder.col(m).squaredNorm() > 0.0) ++active;
  }
  return active;
}

}  // namespace

void PgdParams::validate() const {
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("PgdParams: lambda must be >= 0");
  }
  if (!(eta > 0.0)) {
    throw std::invalid_argument("PgdParams: eta must be > 0");
  }
  if (max_iters < 0) {
    throw std::invalid_argument("PgdParams: max_iters must be >= 0");
  }
  if (!(residual_tol >= 0.0)) {
    throw std::invalid_argument("PgdParams: residual_tol must be >= 0");
  }
  if (trace_every < 0) {
    throw std::invalid_argument("PgdParams: trace_every must be >= 0");
  }
}

SmoothGradient SmoothGradient::make(const ChannelMatrix& channel,
                                    const SystemConfig& cfg) {
  check_shapes(channel, cfg);
  SmoothGradient grad;
  grad.h_trans = channel.transpose();
  grad.h_conj = channel.conjugate();
  grad.offset = cfg.constraint_diag().asDiagonal() * grad.h_conj;
  return grad;
}

ComplexMatrix SmoothGradient::apply(const PrecoderMatrix& precoder) const {
  ComplexMatrix scratch(precoder.rows(), precoder.rows());
  ComplexMatrix out(precoder.rows(), precoder.cols());
  apply_into(precoder, scratch, out);
  return out;
}

void SmoothGradient::apply_into(const PrecoderMatrix& precoder,
                                ComplexMatrix& scratch,
                                ComplexMatrix& out) const {
  scratch.noalias() = precoder * h_trans;
  out.noalias() = scratch * h_conj;
  out -= offset;
}

ComplexMatrix grad_f(const PrecoderMatrix& precoder,
                     const ChannelMatrix& channel, const SystemConfig& cfg) {
  if (precoder.rows() != channel.rows() ||
      precoder.cols() != channel.cols()) {
    throw std::invalid_argument("grad_f: precoder/channel shape mismatch");
  }
  return SmoothGradient::make(channel, cfg).apply(precoder);
}

PrecoderMatrix prox_l21(const ComplexMatrix& input, double t) {
  if (!(t >= 0.0)) {
    throw std::invalid_argument("prox_l21: threshold must be >= 0");
  }
  PrecoderMatrix out(input.rows(), input.cols());
  for (Eigen::Index m = 0; m < input.cols(); ++m) {
    double norm = input.col(m).norm();
    if (norm > t) {
      out.col(m) = (1.0 - t / norm) * input.col(m);
    } else {
      out.col(m).setZero();
    }
  }
  return out;
}

PrecoderMatrix pgd_step(const PrecoderMatrix& precoder,
                        const ChannelMatrix& channel,
                        const SystemConfig& cfg, double lambda, double eta) {
  if (!(lambda >= 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("pgd_step: need lambda >= 0 and eta > 0");
  }
  return prox_l21(precoder - eta * grad_f(precoder, channel, cfg),
                  lambda * eta);
}

double mp_bound(int num_users, int num_antennas) {
  if (num_users < 1 || num_antennas < 1) {
    throw std::invalid_argument("mp_bound: dimensions must be positive");
  }
  double edge = std::sqrt(static_cast<double>(num_users)) +
                std::sqrt(static_cast<double>(num_antennas));
  return edge * edge;
}

LipschitzBound lipschitz_bound(const ChannelMatrix& channel) {
  if (channel.rows() < 1 || channel.cols() < 1) {
    throw std::invalid_argument("lipschitz_bound: empty channel");
  }
  LipschitzBound bound;
  bound.mp = mp_bound(static_cast<int>(channel.rows()),
                      static_cast<int>(channel.cols()));

  ComplexMatrix h_trans = channel.transpose();
  ComplexMatrix h_conj = channel.conjugate();

  Rng rng(kPowerIterationSeed);
  ComplexVector v(channel.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.complex_gaussian();
  v.normalize();

  constexpr long kMaxIters = 10000;
  constexpr double kTol = 1e-8;
  // Extra refinement once the contract tolerance is met; the Rayleigh
  // quotient of a PSD operator approaches the top eigenvalue from
  // below, so tightening only improves the estimate.
  constexpr double kRefineTol = 1e-13;

  double estimate = 0.0;
  double previous = -1.0;
  bool reached_tol = false;
  for (long iter = 0; iter < kMaxIters; ++iter) {
    ComplexVector w = h_trans * (h_conj * v);
    estimate = v.dot(w).real();
    double w_norm = w.norm();
    if (w_norm == 0.0) {
      bound.exact = 0.0;
      return bound;
    }
    v = w / w_norm;
    if (previous >= 0.0) {
      double change = std::abs(estimate - previous) /
                      std::max(std::abs(estimate), 1e-300);
      if (change <= kTol) reached_tol = true;
      if (change <= kRefineTol) break;
    }
    previous = estimate;
  }
  if (!reached_tol) {
    throw ConvergenceError("lipschitz_bound: power iteration did not reach "
                           "tolerance 1e-8 within 10000 iterations");
  }
  bound.exact = estimate;
  return bound;
}

double lagrangian_value(const PrecoderMatrix& precoder,
                        const ChannelMatrix& channel,
                        const SystemConfig& cfg, double lambda) {
  double residual = constraint_residual(channel, precoder, cfg);
  return lambda * l21_norm(precoder) + residual * residual;
}

PgdResult solve_pgd(const ChannelMatrix& channel, const SystemConfig& cfg,
                    const PgdParams& params,
                    const std::optional<PrecoderMatrix>& start) {
  check_shapes(channel, cfg);
  params.validate();

  PrecoderMatrix w = start ? *start : PrecoderMatrix(channel.conjugate());
  if (w.rows() != cfg.K || w.cols() != cfg.M) {
    throw std::invalid_argument("solve_pgd: W0 shape mismatch");
  }

  SmoothGradient grad = SmoothGradient::make(channel, cfg);
  ComplexMatrix scratch(cfg.K, cfg.K);
  ComplexMatrix step_image(cfg.K, cfg.M);
  PrecoderMatrix w_next(cfg.K, cfg.M);
  double threshold = params.lambda * params.eta;

  PgdResult result;
  const bool tracing = params.trace_every > 0;
  PrecoderMatrix zf_reference;
  ComplexMatrix target;
  if (tracing) {
    zf_reference = zf_precoder(channel, cfg);
    target = ComplexMatrix(cfg.constraint_diag().asDiagonal());
  }

  auto record = [&](long index) {
    ComplexMatrix effective = channel * w.transpose();
    TraceRecord rec;
    rec.index = index;
    rec.residual = (effective - target).norm();
    rec.lagrangian = params.lambda * l21_norm(w) + rec.residual * rec.residual;
    rec.pcg = pcg_from_reference(zf_reference, w);
    RealVector sinr(cfg.K);
    double noise_power = cfg.sigma_nu * cfg.sigma_nu;
    for (int k = 0; k < cfg.K; ++k) {
      double signal = std::norm(effective(k, k));
      double interference = effective.row(k).squaredNorm() - signal;
      sinr[k] = signal / (interference + noise_power);
    }
    rec.sum_rate = sum_rate(sinr);
    rec.active_columns = count_active_columns(w);
    result.trace.records.push_back(rec);
  };

  if (tracing) record(0);

  long last_recorded = 0;
  for (long iter = 1; iter <= params.max_iters; ++iter) {
    step_image = w;
    scratch.noalias() = w * grad.h_trans;
    step_image.noalias() -= params.eta * (scratch * grad.h_conj);
    step_image += params.eta * grad.offset;
    // Checked before the prox: a NaN column norm fails the threshold
    // comparison and would be shrunk to zero, hiding the blow-up.
    if (!step_image.allFinite()) {
      throw DivergenceError("solve_pgd: non-finite iterate", iter);
    }

    for (int m = 0; m < cfg.M; ++m) {
      double norm = step_image.col(m).norm();
      if (norm > threshold) {
        w_next.col(m) = (1.0 - threshold / norm) * step_image.col(m);
      } else {
        w_next.col(m).setZero();
      }
    }

    double relative_change = -1.0;
    if (params.residual_tol > 0.0) {
      relative_change =
          (w_next - w).norm() / std::max(w.norm(), 1e-12);
    }
    w.swap(w_next);
    result.iterations = iter;

    if (tracing && iter % params.trace_every == 0) {
      record(iter);
      last_recorded = iter;
    }
    if (relative_change >= 0.0 && relative_change < params.residual_tol) {
      break;
    }
  }

  if (tracing && result.iterations > last_recorded) {
    record(result.iterations);
  }
  result.precoder = std::move(w);
  return result;
}

PrecoderMatrix oracle_solve(const ChannelMatrix& channel,
                            const SystemConfig& cfg, double lambda) {
  PgdParams params;
  params.lambda = lambda;
  params.eta = 1.0 / lipschitz_bound(channel).exact;
  params.max_iters = 100000;
  params.residual_tol = 1e-10;
  params.trace_every = 0;
  return solve_pgd(channel, cfg, params).precoder;
}

}  // namespace ufpgd
