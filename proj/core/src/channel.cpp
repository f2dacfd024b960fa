#include "ufpgd/channel.hpp"

#include <stdexcept>

namespace ufpgd {

ChannelMatrix generate_channel(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  ChannelMatrix channel(cfg.K, cfg.M);
  for (int k = 0; k < cfg.K; ++k) {
    for (int m = 0; m < cfg.M; ++m) {
      channel(k, m) = rng.complex_gaussian();
    }
  }
  return channel;
}

ComplexVector simulate_received(const ChannelMatrix& channel,
                                const PrecoderMatrix& precoder,
                                const ComplexVector& symbols,
                                const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  if (channel.rows() != cfg.K || channel.cols() != cfg.M ||
      precoder.rows() != cfg.K || precoder.cols() != cfg.M ||
      symbols.size() != cfg.K) {
    throw std::invalid_argument("simulate_received: shape mismatch");
  }
  ComplexVector received = channel * (precoder.transpose() * symbols);
  for (int k = 0; k < cfg.K; ++k) {
    received[k] += cfg.sigma_nu * rng.complex_gaussian();
  }
  return received;
}

}  // namespace ufpgd
