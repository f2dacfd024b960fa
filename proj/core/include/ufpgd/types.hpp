#pragma once

#include <complex>

#include <Eigen/Dense>

namespace ufpgd {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// K x M downlink channel, row k = user, column m = antenna.
using ChannelMatrix = ComplexMatrix;

// K x M precoder in the row-per-user layout; the transmitted
// vector for symbol s is W^T s, so column m collects the weights
// feeding antenna m and its PA.
using PrecoderMatrix = ComplexMatrix;

}  // namespace ufpgd
