#pragma once

#include "ufpgd/rng.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"

namespace ufpgd {

// i.i.d. Rayleigh channel: K x M with CN(0, 1) entries, drawn row by
// row in row-major order from `rng`.
ChannelMatrix generate_channel(const SystemConfig& cfg, Rng& rng);

// Received vector r = H W^T s + n with n ~ CN(0, sigma_nu^2 I).
ComplexVector simulate_received(const ChannelMatrix& channel,
                                const PrecoderMatrix& precoder,
                                const ComplexVector& symbols,
                                const SystemConfig& cfg, Rng& rng);

}  // namespace ufpgd
