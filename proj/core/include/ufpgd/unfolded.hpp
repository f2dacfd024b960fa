#pragma once

#include <string>
#include <vector>

#include "ufpgd/pgd.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"

namespace ufpgd {

// Deep-unfolded PGD: the solver fixed at I iterations, each iteration
// promoted to a layer with its own learnable scalars (lambda_i, eta_i).

struct LayerParams {
  double lambda_i = 0.0;  // >= 0 after projection
  double eta_i = 0.0;     // in [1/(2 mp), 1/mp] after projection
};

struct UnfoldedNetwork {
  int num_users = 0;     // K
  int num_antennas = 0;  // M
  double mp_bound = 0.0;
  std::vector<LayerParams> layers;

  // Classical-PGD configuration: every layer gets lambda_i = lambda
  // and eta_i = 1/mp_bound, so the untrained network reproduces
  // num_layers iterations of PGD exactly.
  static UnfoldedNetwork pgd_init(int num_users, int num_antennas,
                                  int num_layers, double lambda);

  // Throws std::invalid_argument on empty layers, bad dimensions or a
  // mp_bound that does not match (K, M).
  void validate() const;
};

// lambda_i <- max(0, lambda_i); eta_i clamped to [1/(2 mp), 1/mp].
UnfoldedNetwork project_params(const UnfoldedNetwork& net);

// Intermediates of one layer, enough to replay the layer exactly and
// to drive the backward sweep without recomputing the forward pass.
struct LayerTape {
  PrecoderMatrix input;       // W entering the layer
  PrecoderMatrix step_image;  // V = W - eta * grad_f(W)
  RealVector column_norms;    // ||V_m||_2 per column
  RealVector shrink_factors;  // prox scale per column, 0 for inactive
};

struct ForwardTape {
  std::vector<LayerTape> layers;
};

struct ForwardOptions {
  bool with_tape = false;
  bool with_iterates = false;
};

struct ForwardResult {
  PrecoderMatrix output;
  ForwardTape tape;                       // empty unless with_tape
  std::vector<PrecoderMatrix> iterates;   // W0..WI, empty unless with_iterates
};

// Applies the I layers from start (default H^*). Expects a projected
// network. Throws DivergenceError with the layer index on NaN/Inf.
ForwardResult forward(const UnfoldedNetwork& net, const ChannelMatrix& channel,
                      const SystemConfig& cfg,
                      const std::optional<PrecoderMatrix>& start = std::nullopt,
                      const ForwardOptions& options = {});

// Output-only forward pass, the inference path.
PrecoderMatrix forward_infer(const UnfoldedNetwork& net,
                             const ChannelMatrix& channel,
                             const SystemConfig& cfg);

struct ParamGradients {
  std::vector<double> d_lambda;  // dC/d lambda_i
  std::vector<double> d_eta;     // dC/d eta_i
};

// Reverse-mode sweep over a tape produced by forward(with_tape).
// dcost_dw packages the gradient of a real cost C with respect to the
// real and imaginary parts of the network output as
// dC/dRe(W) + i dC/dIm(W). Columns at the prox kink (||V_m|| == t)
// take the zero-branch derivative. Throws TrainingError when tape and
// network disagree structurally.
ParamGradients backward(const ForwardTape& tape, const UnfoldedNetwork& net,
                        const ChannelMatrix& channel, const SystemConfig& cfg,
                        const ComplexMatrix& dcost_dw);

// Versioned JSON document {version, K, M, I, mp_bound, layers}.
std::string to_json_string(const UnfoldedNetwork& net);
UnfoldedNetwork network_from_json_string(const std::string& text);
void save_network(const UnfoldedNetwork& net, const std::string& path);
UnfoldedNetwork load_network(const std::string& path);

}  // namespace ufpgd
