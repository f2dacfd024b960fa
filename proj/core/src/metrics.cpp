#include "ufpgd/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "ufpgd/zf.hpp"

namespace ufpgd {

double l21_norm(const PrecoderMatrix& precoder) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < precoder.cols(); ++m) {
    total += precoder.col(m).norm();
  }
  return total;
}

double tx_power(const PrecoderMatrix& precoder) {
  return precoder.squaredNorm();
}

double consumed_power(const PrecoderMatrix& precoder, double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("consumed_power: alpha must be > 0");
  }
  return alpha * l21_norm(precoder);
}

RealVector sinr_per_user(const ChannelMatrix& channel,
                         const PrecoderMatrix& precoder,
                         const SystemConfig& cfg) {
  cfg.validate();
  if (channel.rows() != cfg.K || channel.cols() != cfg.M ||
      precoder.rows() != cfg.K || precoder.cols() != cfg.M) {
    throw std::invalid_argument("sinr_per_user: shape mismatch");
  }
  ComplexMatrix effective = channel * precoder.transpose();
  RealVector sinr(cfg.K);
  double noise_power = cfg.sigma_nu * cfg.sigma_nu;
  for (int k = 0; k < cfg.K; ++k) {
    double signal = std::norm(effective(k, k));
    double interference = effective.row(k).squaredNorm() - signal;
    sinr[k] = signal / (interference + noise_power);
  }
  return sinr;
}

double sum_rate(const RealVector& sinr) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < sinr.size(); ++k) {
    total += std::log2(1.0 + sinr[k]);
  }
  return total;
}

double pcg_from_reference(const PrecoderMatrix& zf_reference,
                          const PrecoderMatrix& precoder) {
  double denom = l21_norm(precoder);
  if (!(denom > 0.0)) {
    throw std::invalid_argument("pcg: precoder consumes zero power");
  }
  // The PA constant alpha cancels out of the ratio.
  return l21_norm(zf_reference) / denom;
}

double pcg(const ChannelMatrix& channel, const PrecoderMatrix& precoder,
           const SystemConfig& cfg) {
  return pcg_from_reference(zf_precoder(channel, cfg), precoder);
}

double constraint_residual(const ChannelMatrix& channel,
                           const PrecoderMatrix& precoder,
                           const SystemConfig& cfg) {
  ComplexMatrix residual = channel * precoder.transpose();
  residual -= ComplexMatrix(cfg.constraint_diag().asDiagonal());
  return residual.norm();
}

MetricsReport compute_metrics(const ChannelMatrix& channel,
                              const PrecoderMatrix& precoder,
                              const PrecoderMatrix& zf_reference,
                              const SystemConfig& cfg) {
  MetricsReport report;
  report.tx_power = tx_power(precoder);
  report.cons_power = consumed_power(precoder, cfg.alpha);
  report.sinr = sinr_per_user(channel, precoder, cfg);
  report.sum_rate = sum_rate(report.sinr);
  report.pcg = pcg_from_reference(zf_reference, precoder);
  report.residual = constraint_residual(channel, precoder, cfg);
  return report;
}

}  // namespace ufpgd
