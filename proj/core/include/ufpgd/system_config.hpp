#pragma once

#include "ufpgd/types.hpp"

namespace ufpgd {

// Downlink system description: K single-antenna users, M base-station
// antennas, per-user SINR targets gamma_k (linear scale) and receiver
// noise standard deviation sigma_nu. alpha is the PA constant
// sqrt(p_max) / eta_max that turns the l2,1 norm of the precoder into
// consumed power.
struct SystemConfig {
  int K = 0;
  int M = 0;
  double sigma_nu = 1.0;
  RealVector gamma;
  double alpha = 1.0;

  // Same SINR target for every user.
  static SystemConfig uniform(int num_users, int num_antennas,
                              double sinr_target, double noise_std = 1.0,
                              double pa_scale = 1.0);

  // Throws std::invalid_argument when an invariant is violated:
  // 1 <= K <= M, sigma_nu >= 0, gamma.size() == K with every entry
  // > 0, alpha > 0.
  void validate() const;

  // Diagonal of the precoding target sigma_nu * D_gamma^{1/2}; the ZF
  // constraint is H W^T = diag of this vector.
  RealVector constraint_diag() const;
};

}  // namespace ufpgd
