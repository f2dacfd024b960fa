#include "ufpgd/unfolded.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "ufpgd/errors.hpp"
#include "ufpgd/trace_io.hpp"

namespace ufpgd {
namespace {

// Projection box for eta_i, slightly widened so that round-tripped
// parameters sitting exactly on a bound still validate.
constexpr double kBoundSlack = 1e-12;

void check_projected(const UnfoldedNetwork& net) {
  double hi = 1.0 / net.mp_bound;
  double lo = 0.5 * hi;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerParams& layer = net.layers[i];
    if (!(layer.lambda_i >= 0.0) || !std::isfinite(layer.lambda_i)) {
      throw std::invalid_argument("UnfoldedNetwork: layer " +
                                  std::to_string(i) + " lambda_i < 0");
    }
    if (!(layer.eta_i >= lo * (1.0 - kBoundSlack)) ||
        !(layer.eta_i <= hi * (1.0 + kBoundSlack))) {
      throw std::invalid_argument("UnfoldedNetwork: layer " +
                                  std::to_string(i) +
                                  " eta_i outside [1/(2L), 1/L]");
    }
  }
}

}  // namespace

UnfoldedNetwork UnfoldedNetwork::pgd_init(int num_users, int num_antennas,
                                          int num_layers, double lambda) {
  if (num_layers < 1) {
    throw std::invalid_argument("pgd_init: need at least one layer");
  }
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("pgd_init: lambda must be >= 0");
  }
  UnfoldedNetwork net;
  net.num_users = num_users;
  net.num_antennas = num_antennas;
  net.mp_bound = ufpgd::mp_bound(num_users, num_antennas);
  net.layers.assign(static_cast<std::size_t>(num_layers),
                    LayerParams{lambda, 1.0 / net.mp_bound});
  net.validate();
  return net;
}

void UnfoldedNetwork::validate() const {
  if (num_users < 1 || num_antennas < num_users) {
    throw std::invalid_argument("UnfoldedNetwork: bad dimensions");
  }
  if (layers.empty()) {
    throw std::invalid_argument("UnfoldedNetwork: no layers");
  }
  double expected = ufpgd::mp_bound(num_users, num_antennas);
  if (!(std::abs(mp_bound - expected) <= 1e-9 * expected)) {
    throw std::invalid_argument(
        "UnfoldedNetwork: mp_bound does not match (K, M)");
  }
}

UnfoldedNetwork project_params(const UnfoldedNetwork& net) {
  net.validate();
  UnfoldedNetwork projected = net;
  double hi = 1.0 / projected.mp_bound;
  double lo = 0.5 * hi;
  for (LayerParams& layer : projected.layers) {
    layer.lambda_i = std::max(0.0, layer.lambda_i);
    layer.eta_i = std::min(std::max(layer.eta_i, lo), hi);
  }
  return projected;
}

ForwardResult forward(const UnfoldedNetwork& net, const ChannelMatrix& channel,
                      const SystemConfig& cfg,
                      const std::optional<PrecoderMatrix>& start,
                      const ForwardOptions& options) {
  net.validate();
  check_projected(net);
  cfg.validate();
  if (cfg.K != net.num_users || cfg.M != net.num_antennas ||
      channel.rows() != cfg.K || channel.cols() != cfg.M) {
    throw std::invalid_argument("forward: dimension mismatch");
  }

  const std::size_t depth = net.layers.size();
  PrecoderMatrix w = start ? *start : PrecoderMatrix(channel.conjugate());
  if (w.rows() != cfg.K || w.cols() != cfg.M) {
    throw std::invalid_argument("forward: W0 shape mismatch");
  }

  SmoothGradient grad = SmoothGradient::make(channel, cfg);
  ComplexMatrix scratch(cfg.K, cfg.K);
  ComplexMatrix step_image(cfg.K, cfg.M);

  ForwardResult result;
  if (options.with_tape) result.tape.layers.resize(depth);
  if (options.with_iterates) {
    result.iterates.reserve(depth + 1);
    result.iterates.push_back(w);
  }

  for (std::size_t i = 0; i < depth; ++i) {
    double eta = net.layers[i].eta_i;
    double threshold = net.layers[i].lambda_i * eta;

    step_image = w;
    scratch.noalias() = w * grad.h_trans;
    step_image.noalias() -= eta * (scratch * grad.h_conj);
    step_image += eta * grad.offset;
    // Checked before the prox: a NaN column norm fails the threshold
    // comparison and would be shrunk to zero, hiding the blow-up.
    if (!step_image.allFinite()) {
      throw DivergenceError("forward: non-finite iterate at layer",
                            static_cast<long>(i));
    }

    LayerTape* tape = options.with_tape ? &result.tape.layers[i] : nullptr;
    if (tape) {
      tape->input = w;
      tape->step_image = step_image;
      tape->column_norms.resize(cfg.M);
      tape->shrink_factors.resize(cfg.M);
    }

    for (int m = 0; m < cfg.M; ++m) {
      double norm = step_image.col(m).norm();
      double shrink = norm > threshold ? 1.0 - threshold / norm : 0.0;
      w.col(m) = shrink * step_image.col(m);
      if (tape) {
        tape->column_norms[m] = norm;
        tape->shrink_factors[m] = shrink;
      }
    }

    if (options.with_iterates) result.iterates.push_back(w);
  }

  result.output = std::move(w);
  return result;
}

PrecoderMatrix forward_infer(const UnfoldedNetwork& net,
                             const ChannelMatrix& channel,
                             const SystemConfig& cfg) {
  return forward(net, channel, cfg).output;
}

ParamGradients backward(const ForwardTape& tape, const UnfoldedNetwork& net,
                        const ChannelMatrix& channel, const SystemConfig& cfg,
                        const ComplexMatrix& dcost_dw) {
  net.validate();
  cfg.validate();
  const std::size_t depth = net.layers.size();
  if (tape.layers.size() != depth) {
    throw TrainingError("backward: tape depth does not match network");
  }
  if (dcost_dw.rows() != cfg.K || dcost_dw.cols() != cfg.M ||
      channel.rows() != cfg.K || channel.cols() != cfg.M) {
    throw TrainingError("backward: shape mismatch");
  }
  for (const LayerTape& layer : tape.layers) {
    if (layer.input.rows() != cfg.K || layer.input.cols() != cfg.M ||
        layer.step_image.rows() != cfg.K || layer.step_image.cols() != cfg.M ||
        layer.column_norms.size() != cfg.M ||
        layer.shrink_factors.size() != cfg.M) {
      throw TrainingError("backward: malformed tape layer");
    }
  }

  SmoothGradient grad = SmoothGradient::make(channel, cfg);
  ComplexMatrix scratch(cfg.K, cfg.K);
  ComplexMatrix g = dcost_dw;           // dC/dW flowing out of layer i
  ComplexMatrix g_image(cfg.K, cfg.M);  // dC/dV inside layer i

  ParamGradients grads;
  grads.d_lambda.assign(depth, 0.0);
  grads.d_eta.assign(depth, 0.0);

  for (std::size_t idx = depth; idx-- > 0;) {
    const LayerTape& layer = tape.layers[idx];
    double lambda = net.layers[idx].lambda_i;
    double eta = net.layers[idx].eta_i;
    if (!(eta > 0.0)) {
      throw TrainingError("backward: layer step size must be > 0");
    }
    double threshold = lambda * eta;

    // Prox backward, columnwise. Active column (||v|| > t):
    //   u = (1 - t/||v||) v
    //   dC/dv = s dC/du + (t/||v||^3) Re(v^H dC/du) v
    //   dC/dt accumulates -Re(v^H dC/du)/||v||.
    // Inactive columns (zero branch at the kink) contribute nothing.
    double d_threshold = 0.0;
    for (int m = 0; m < cfg.M; ++m) {
      double norm = layer.column_norms[m];
      if (norm > threshold) {
        double inner = layer.step_image.col(m).dot(g.col(m)).real();
        d_threshold -= inner / norm;
        g_image.col(m) = layer.shrink_factors[m] * g.col(m) +
                         (threshold / (norm * norm * norm)) * inner *
                             layer.step_image.col(m);
      } else {
        g_image.col(m).setZero();
      }
    }

    // V = W - eta grad_f(W); recover grad_f(W) from the tape instead
    // of recomputing it.
    // dC/deta has a direct term -Re<dC/dV, grad_f(W)> plus the chain
    // through t = lambda eta; dC/dlambda flows only through t.
    double d_eta_direct = 0.0;
    for (int m = 0; m < cfg.M; ++m) {
      d_eta_direct -=
          (g_image.col(m).dot(layer.input.col(m) - layer.step_image.col(m)))
              .real() /
          eta;
    }
    grads.d_lambda[idx] = eta * d_threshold;
    grads.d_eta[idx] = lambda * d_threshold + d_eta_direct;

    // Input adjoint through the linear map W -> W (I - eta H^T H^*):
    // the map's matrix is Hermitian, so the real-pair adjoint applies
    // the same matrix to the packaged gradient.
    scratch.noalias() = g_image * grad.h_trans;
    g = g_image;
    g.noalias() -= eta * (scratch * grad.h_conj);
  }
  return grads;
}

std::string to_json_string(const UnfoldedNetwork& net) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["K"] = net.num_users;
  doc["M"] = net.num_antennas;
  doc["I"] = net.layers.size();
  doc["mp_bound"] = net.mp_bound;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerParams& layer : net.layers) {
    layers.push_back({{"lambda", layer.lambda_i}, {"eta", layer.eta_i}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

UnfoldedNetwork network_from_json_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& err) {
    throw DataFormatError(std::string("model JSON parse error: ") +
                          err.what());
  }
  try {
    if (doc.at("version").get<int>() != 1) {
      throw DataFormatError("model JSON: unsupported version");
    }
    UnfoldedNetwork net;
    net.num_users = doc.at("K").get<int>();
    net.num_antennas = doc.at("M").get<int>();
    net.mp_bound = doc.at("mp_bound").get<double>();
    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) {
      throw DataFormatError("model JSON: layers must be a non-empty array");
    }
    if (doc.at("I").get<std::size_t>() != layers.size()) {
      throw DataFormatError("model JSON: I does not match layers length");
    }
    for (const auto& entry : layers) {
      net.layers.push_back(LayerParams{entry.at("lambda").get<double>(),
                                       entry.at("eta").get<double>()});
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& err) {
    throw DataFormatError(std::string("model JSON: ") + err.what());
  } catch (const std::invalid_argument& err) {
    throw DataFormatError(std::string("model JSON: ") + err.what());
  }
}

void save_network(const UnfoldedNetwork& net, const std::string& path) {
  write_file_atomic(path, to_json_string(net));
}

UnfoldedNetwork load_network(const std::string& path) {
  return network_from_json_string(read_file(path));
}

}  // namespace ufpgd
