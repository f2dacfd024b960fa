#include "ufpgd/system_config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ufpgd {

SystemConfig SystemConfig::uniform(int num_users, int num_antennas,
                                   double sinr_target, double noise_std,
                                   double pa_scale) {
  SystemConfig cfg;
  cfg.K = num_users;
  cfg.M = num_antennas;
  cfg.sigma_nu = noise_std;
  cfg.gamma = RealVector::Constant(std::max(num_users, 0), sinr_target);
  cfg.alpha = pa_scale;
  cfg.validate();
  return cfg;
}

void SystemConfig::validate() const {
  if (K < 1) throw std::invalid_argument("SystemConfig: K must be >= 1");
  if (M < K) {
    throw std::invalid_argument("SystemConfig: need K <= M, got K=" +
                                std::to_string(K) + " M=" + std::to_string(M));
  }
  if (!(sigma_nu >= 0.0)) {
    throw std::invalid_argument("SystemConfig: sigma_nu must be >= 0");
  }
  if (gamma.size() != K) {
    throw std::invalid_argument("SystemConfig: gamma must have K entries");
  }
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    if (!(gamma[k] > 0.0)) {
      throw std::invalid_argument("SystemConfig: gamma[" + std::to_string(k) +
                                  "] must be > 0");
    }
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("SystemConfig: alpha must be > 0");
  }
}

RealVector SystemConfig::constraint_diag() const {
  return sigma_nu * gamma.cwiseSqrt();
}

}  // namespace ufpgd
