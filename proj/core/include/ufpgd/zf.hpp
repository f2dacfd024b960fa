#pragma once

#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"

namespace ufpgd {

// Gram matrices with a 2-norm condition number beyond this are treated
// as singular.
inline constexpr double kSingularConditionLimit = 1e12;

// Minimum-Frobenius-norm zero-forcing precoder
//   W = sigma_nu D_gamma^{1/2} conj((H H^H)^{-1} H),
// the unique solution of H W^T = sigma_nu D_gamma^{1/2} with minimal
// ||W||_F. Throws SingularChannelError when H H^H is ill-conditioned
// past kSingularConditionLimit.
PrecoderMatrix zf_precoder(const ChannelMatrix& channel,
                           const SystemConfig& cfg);

}  // namespace ufpgd
