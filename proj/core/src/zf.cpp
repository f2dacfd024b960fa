#include "ufpgd/zf.hpp"

#include <Eigen/Eigenvalues>

#include "ufpgd/errors.hpp"

namespace ufpgd {

PrecoderMatrix zf_precoder(const ChannelMatrix& channel,
                           const SystemConfig& cfg) {
  cfg.validate();
  if (channel.rows() != cfg.K || channel.cols() != cfg.M) {
    throw std::invalid_argument("zf_precoder: channel shape mismatch");
  }
  ComplexMatrix gram = channel * channel.adjoint();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram,
                                                   Eigen::EigenvaluesOnly);
  double min_eig = eig.eigenvalues().minCoeff();
  double max_eig = eig.eigenvalues().maxCoeff();
  if (!(min_eig > 0.0) || max_eig > kSingularConditionLimit * min_eig) {
    throw SingularChannelError("zf_precoder: channel Gram matrix is singular");
  }

  // H W^T = T with minimal ||W||_F: W^T = H^H (H H^H)^{-1} T, i.e.
  // W = T conj(gram^{-1} H) since T and gram^{-1} interact through
  // transposes only.
  ComplexMatrix solved = gram.llt().solve(channel);
  return cfg.constraint_diag().asDiagonal() * solved.conjugate();
}

}  // namespace ufpgd
