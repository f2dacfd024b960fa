#pragma once

#include <stdexcept>
#include <string>

namespace ufpgd {

// Channel Gram matrix is numerically singular, no ZF precoder exists.
class SingularChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterates left the representable range (NaN/Inf). `index` is the
// iteration or layer at which the blow-up was detected.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long index)
      : std::runtime_error(what), index(index) {}
  long index;
};

// An iterative routine failed to reach its tolerance within its cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or truncated dataset, trace, or model file.
class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient, or inconsistent inputs, during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ufpgd
