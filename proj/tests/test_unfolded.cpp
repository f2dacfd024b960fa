#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ufpgd/channel.hpp"
#include "ufpgd/errors.hpp"
#include "ufpgd/pgd.hpp"
#include "ufpgd/rng.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/types.hpp"
#include "ufpgd/unfolded.hpp"
#include "ufpgd/zf.hpp"

#include "support.hpp"

using ufpgd::ChannelMatrix;
using ufpgd::Complex;
using ufpgd::ComplexMatrix;
using ufpgd::PrecoderMatrix;
using ufpgd::SystemConfig;
using ufpgd::UnfoldedNetwork;

namespace {

ChannelMatrix channel_for(const SystemConfig& cfg, std::uint64_t seed,
                          std::uint64_t stream) {
  ufpgd::Rng rng = ufpgd::Rng::stream(seed, stream);
  return ufpgd::generate_channel(cfg, rng);
}

// Scalar re-evaluation of one layer, free of any library matrix code.
ComplexMatrix scripted_layer(const ComplexMatrix& w, const ChannelMatrix& h,
                             const std::vector<double>& target, double lambda,
                             double eta, bool* hit_zero_branch) {
  const Eigen::Index rows = w.rows();
  const Eigen::Index cols = w.cols();
  ComplexMatrix v = ComplexMatrix::Zero(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (Eigen::Index m = 0; m < cols; ++m) {
      Complex smooth(0.0, 0.0);
      for (Eigen::Index j = 0; j < rows; ++j) {
        Complex wh(0.0, 0.0);
        for (Eigen::Index l = 0; l < cols; ++l) wh += w(k, l) * h(j, l);
        smooth += wh * std::conj(h(j, m));
      }
      smooth -= target[static_cast<std::size_t>(k)] * std::conj(h(k, m));
      v(k, m) = w(k, m) - eta * smooth;
    }
  }
  const double threshold = lambda * eta;
  ComplexMatrix out = ComplexMatrix::Zero(rows, cols);
  for (Eigen::Index m = 0; m < cols; ++m) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < rows; ++k) acc += std::norm(v(k, m));
    double nrm = std::sqrt(acc);
    if (nrm > threshold) {
      double scale = 1.0 - threshold / nrm;
      for (Eigen::Index k = 0; k < rows; ++k) out(k, m) = scale * v(k, m);
    } else if (hit_zero_branch) {
      *hit_zero_branch = true;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pgd_init builds the classical configuration") {
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(8, 64, 20, 1.0 / 15.0);
  CHECK(net.num_users == 8);
  CHECK(net.num_antennas == 64);
  CHECK(net.mp_bound == ufpgd::mp_bound(8, 64));
  REQUIRE(net.layers.size() == 20);
  for (const ufpgd::LayerParams& layer : net.layers) {
    CHECK(layer.lambda_i == 1.0 / 15.0);
    CHECK(layer.eta_i == 1.0 / net.mp_bound);
  }
  CHECK_NOTHROW(net.validate());

  CHECK_THROWS_AS(UnfoldedNetwork::pgd_init(8, 64, 0, 1.0 / 15.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(UnfoldedNetwork::pgd_init(8, 64, 5, -0.1),
                  std::invalid_argument);

  UnfoldedNetwork bad = net;
  bad.mp_bound = 100.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = net;
  bad.layers.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward with constant parameters reproduces solve_pgd") {
  SystemConfig cfg = SystemConfig::uniform(4, 16, 10.0);
  const int num_layers = 20;
  const double lambda = 1.0 / 15.0;
  UnfoldedNetwork net =
      UnfoldedNetwork::pgd_init(cfg.K, cfg.M, num_layers, lambda);

  ufpgd::PgdParams params;
  params.lambda = lambda;
  params.eta = 1.0 / net.mp_bound;
  params.max_iters = num_layers;
  params.residual_tol = 0.0;

  for (std::uint64_t draw = 0; draw < 10; ++draw) {
    ChannelMatrix h = channel_for(cfg, 41, draw);
    PrecoderMatrix via_net = ufpgd::forward(net, h, cfg).output;
    PrecoderMatrix via_pgd = ufpgd::solve_pgd(h, cfg, params).precoder;
    CHECK((via_net - via_pgd).norm() <
          1e-12 * std::max(1.0, via_pgd.norm()));

    PrecoderMatrix infer = ufpgd::forward_infer(net, h, cfg);
    CHECK((infer - via_net).norm() == 0.0);
  }
}

TEST_CASE("a single zero-shrinkage layer keeps a feasible start fixed") {
  SystemConfig cfg = SystemConfig::uniform(3, 8, 10.0);
  ChannelMatrix h = channel_for(cfg, 42, 0);
  PrecoderMatrix w0 = ufpgd::zf_precoder(h, cfg);

  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 1, 0.0);
  PrecoderMatrix out = ufpgd::forward(net, h, cfg, w0).output;
  CHECK((out - w0).norm() < 1e-9 * std::max(1.0, w0.norm()));
}

TEST_CASE("forward matches a scripted layer-by-layer fixture") {
  SystemConfig cfg;
  cfg.K = 2;
  cfg.M = 4;
  cfg.sigma_nu = 0.8;
  cfg.gamma = ufpgd::RealVector(2);
  cfg.gamma << 2.0, 0.5;
  cfg.alpha = 1.0;
  cfg.validate();

  ChannelMatrix h(2, 4);
  h(0, 0) = Complex(0.6, 0.3);
  h(0, 1) = Complex(-0.2, 0.9);
  h(0, 2) = Complex(0.05, -0.02);
  h(0, 3) = Complex(1.1, 0.0);
  h(1, 0) = Complex(-0.7, 0.1);
  h(1, 1) = Complex(0.4, -0.4);
  h(1, 2) = Complex(0.03, 0.01);
  h(1, 3) = Complex(-0.5, 0.6);

  UnfoldedNetwork net;
  net.num_users = 2;
  net.num_antennas = 4;
  net.mp_bound = ufpgd::mp_bound(2, 4);
  net.layers = {{0.9, 0.05}, {1.5, 0.07}, {0.3, 0.08}};
  net.validate();

  std::vector<double> target = {0.8 * std::sqrt(2.0), 0.8 * std::sqrt(0.5)};
  ComplexMatrix scripted = h.conjugate();
  bool hit_zero_branch = false;
  for (const ufpgd::LayerParams& layer : net.layers) {
    scripted = scripted_layer(scripted, h, target, layer.lambda_i,
                              layer.eta_i, &hit_zero_branch);
  }
  REQUIRE(hit_zero_branch);

  ufpgd::ForwardOptions options;
  options.with_iterates = true;
  ufpgd::ForwardResult result = ufpgd::forward(net, h, cfg, {}, options);

  CHECK((result.output - scripted).norm() <
        1e-14 * std::max(1.0, scripted.norm()));
  REQUIRE(result.iterates.size() == 4);
  CHECK((result.iterates.front() - PrecoderMatrix(h.conjugate())).norm() ==
        0.0);
  CHECK((result.iterates.back() - result.output).norm() == 0.0);
}

TEST_CASE("project_params clamps into the trainable box") {
  const double mp = ufpgd::mp_bound(8, 64);
  UnfoldedNetwork net;
  net.num_users = 8;
  net.num_antennas = 64;
  net.mp_bound = mp;
  net.layers = {{-0.1, 1.0}, {0.5, 0.006}, {0.02, 1e-9}};

  UnfoldedNetwork projected = ufpgd::project_params(net);
  CHECK(projected.layers[0].lambda_i == 0.0);
  CHECK(projected.layers[0].eta_i == 1.0 / mp);
  CHECK(projected.layers[1].lambda_i == 0.5);
  CHECK(projected.layers[1].eta_i == 0.006);
  CHECK(projected.layers[2].eta_i == 1.0 / (2.0 * mp));

  UnfoldedNetwork twice = ufpgd::project_params(projected);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(twice.layers[i].lambda_i == projected.layers[i].lambda_i);
    CHECK(twice.layers[i].eta_i == projected.layers[i].eta_i);
  }

  UnfoldedNetwork in_range = UnfoldedNetwork::pgd_init(8, 64, 4, 0.3);
  UnfoldedNetwork same = ufpgd::project_params(in_range);
  for (std::size_t i = 0; i < in_range.layers.size(); ++i) {
    CHECK(same.layers[i].lambda_i == in_range.layers[i].lambda_i);
    CHECK(same.layers[i].eta_i == in_range.layers[i].eta_i);
  }
}

TEST_CASE("forward rejects unprojected parameters") {
  SystemConfig cfg = SystemConfig::uniform(3, 8, 10.0);
  ChannelMatrix h = channel_for(cfg, 43, 0);
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 2, 0.1);
  net.layers[1].eta_i = 1.0;
  CHECK_THROWS_AS(ufpgd::forward(net, h, cfg), std::invalid_argument);
}

TEST_CASE("forward diverges loudly on a pathological channel") {
  SystemConfig cfg = SystemConfig::uniform(2, 4, 10.0);
  ChannelMatrix h = ChannelMatrix::Constant(2, 4, Complex(1e200, 0.0));
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(2, 4, 3, 0.1);

  long reported = -1;
  try {
    ufpgd::forward(net, h, cfg);
  } catch (const ufpgd::DivergenceError& err) {
    reported = err.index;
  }
  CHECK(reported == 0);
}

TEST_CASE("forward tapes are deterministic and consistent with iterates") {
  SystemConfig cfg = SystemConfig::uniform(4, 12, 10.0);
  ChannelMatrix h = channel_for(cfg, 44, 0);
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 6, 0.4);

  ufpgd::ForwardOptions options;
  options.with_tape = true;
  options.with_iterates = true;
  ufpgd::ForwardResult a = ufpgd::forward(net, h, cfg, {}, options);
  ufpgd::ForwardResult b = ufpgd::forward(net, h, cfg, {}, options);

  REQUIRE(a.tape.layers.size() == 6);
  REQUIRE(b.tape.layers.size() == 6);
  for (std::size_t i = 0; i < a.tape.layers.size(); ++i) {
    const ufpgd::LayerTape& ta = a.tape.layers[i];
    const ufpgd::LayerTape& tb = b.tape.layers[i];
    CHECK((ta.input - tb.input).norm() == 0.0);
    CHECK((ta.step_image - tb.step_image).norm() == 0.0);
    CHECK((ta.column_norms - tb.column_norms).norm() == 0.0);
    CHECK((ta.shrink_factors - tb.shrink_factors).norm() == 0.0);
    CHECK((ta.input - a.iterates[i]).norm() == 0.0);
  }
  CHECK((a.output - b.output).norm() == 0.0);
  CHECK((a.iterates.back() - a.output).norm() == 0.0);

  ufpgd::ForwardResult plain = ufpgd::forward(net, h, cfg);
  CHECK(plain.tape.layers.empty());
  CHECK(plain.iterates.empty());
}

TEST_CASE("backward of a zero cost gradient is zero") {
  SystemConfig cfg = SystemConfig::uniform(3, 10, 10.0);
  ChannelMatrix h = channel_for(cfg, 45, 0);
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 4, 0.2);

  ufpgd::ForwardOptions options;
  options.with_tape = true;
  ufpgd::ForwardResult fwd = ufpgd::forward(net, h, cfg, {}, options);

  ComplexMatrix zero = ComplexMatrix::Zero(cfg.K, cfg.M);
  ufpgd::ParamGradients grads =
      ufpgd::backward(fwd.tape, net, h, cfg, zero);
  REQUIRE(grads.d_lambda.size() == 4);
  REQUIRE(grads.d_eta.size() == 4);
  for (std::size_t i = 0; i < grads.d_lambda.size(); ++i) {
    CHECK(grads.d_lambda[i] == 0.0);
    CHECK(grads.d_eta[i] == 0.0);
  }
}

TEST_CASE("an all-shrunk layer has zero parameter gradients") {
  SystemConfig cfg = SystemConfig::uniform(3, 6, 10.0);
  ChannelMatrix h = channel_for(cfg, 46, 0);

  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 1, 1e3);

  ufpgd::ForwardOptions options;
  options.with_tape = true;
  ufpgd::ForwardResult fwd = ufpgd::forward(net, h, cfg, {}, options);
  REQUIRE(fwd.output.isZero(0.0));

  ufpgd::Rng rng = ufpgd::Rng::stream(47, 0);
  ComplexMatrix dcost = support::random_matrix(cfg.K, cfg.M, rng);
  ufpgd::ParamGradients grads =
      ufpgd::backward(fwd.tape, net, h, cfg, dcost);
  CHECK(grads.d_lambda[0] == 0.0);
  CHECK(grads.d_eta[0] == 0.0);
}

TEST_CASE("backward matches central finite differences of the cost") {
  SystemConfig cfg = SystemConfig::uniform(4, 16, 10.0);
  const int num_layers = 5;
  const double lo = 1.0 / (2.0 * ufpgd::mp_bound(cfg.K, cfg.M));
  const double hi = 1.0 / ufpgd::mp_bound(cfg.K, cfg.M);
  const double fd_step = 1e-6;
  const double kink_margin = 1e-4;

  auto cost = [&](const UnfoldedNetwork& net, const ChannelMatrix& h,
                  const ComplexMatrix& ref) {
    PrecoderMatrix out = ufpgd::forward_infer(net, h, cfg);
    return (out - ref).squaredNorm();
  };

  bool found_clean_draw = false;
  for (std::uint64_t attempt = 0; attempt < 50 && !found_clean_draw;
       ++attempt) {
    ChannelMatrix h = channel_for(cfg, 48, attempt);
    ufpgd::Rng rng = ufpgd::Rng::stream(49, attempt);

    UnfoldedNetwork net;
    net.num_users = cfg.K;
    net.num_antennas = cfg.M;
    net.mp_bound = ufpgd::mp_bound(cfg.K, cfg.M);
    for (int i = 0; i < num_layers; ++i) {
      double lambda = (0.5 + rng.uniform()) / 15.0;
      double eta = lo + 3.0 * fd_step +
                   rng.uniform() * (hi - lo - 6.0 * fd_step);
      net.layers.push_back({lambda, eta});
    }
    ComplexMatrix ref = support::random_matrix(cfg.K, cfg.M, rng);

    ufpgd::ForwardOptions options;
    options.with_tape = true;
    ufpgd::ForwardResult fwd = ufpgd::forward(net, h, cfg, {}, options);

    bool near_kink = false;
    for (int i = 0; i < num_layers; ++i) {
      double threshold = net.layers[static_cast<std::size_t>(i)].lambda_i *
                         net.layers[static_cast<std::size_t>(i)].eta_i;
      const ufpgd::LayerTape& tape =
          fwd.tape.layers[static_cast<std::size_t>(i)];
      for (int m = 0; m < cfg.M; ++m) {
        if (std::abs(tape.column_norms[m] - threshold) < kink_margin) {
          near_kink = true;
        }
      }
    }
    if (near_kink) continue;
    found_clean_draw = true;

    ComplexMatrix dcost = 2.0 * (fwd.output - ref);
    ufpgd::ParamGradients grads =
        ufpgd::backward(fwd.tape, net, h, cfg, dcost);

    for (int i = 0; i < num_layers; ++i) {
      std::size_t idx = static_cast<std::size_t>(i);

      UnfoldedNetwork plus = net;
      UnfoldedNetwork minus = net;
      plus.layers[idx].lambda_i += fd_step;
      minus.layers[idx].lambda_i -= fd_step;
      double numeric =
          (cost(plus, h, ref) - cost(minus, h, ref)) / (2.0 * fd_step);
      double analytic = grads.d_lambda[idx];
      CHECK(std::abs(numeric - analytic) <=
            1e-5 * std::max({std::abs(numeric), std::abs(analytic), 1e-2}));

      plus = net;
      minus = net;
      plus.layers[idx].eta_i += fd_step;
      minus.layers[idx].eta_i -= fd_step;
      numeric = (cost(plus, h, ref) - cost(minus, h, ref)) / (2.0 * fd_step);
      analytic = grads.d_eta[idx];
      CHECK(std::abs(numeric - analytic) <=
            1e-5 * std::max({std::abs(numeric), std::abs(analytic), 1e-2}));
    }
  }
  REQUIRE(found_clean_draw);
}

TEST_CASE("backward rejects a tape from a different network") {
  SystemConfig cfg = SystemConfig::uniform(3, 8, 10.0);
  ChannelMatrix h = channel_for(cfg, 50, 0);
  UnfoldedNetwork deep = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 5, 0.2);
  UnfoldedNetwork shallow = UnfoldedNetwork::pgd_init(cfg.K, cfg.M, 3, 0.2);

  ufpgd::ForwardOptions options;
  options.with_tape = true;
  ufpgd::ForwardResult fwd = ufpgd::forward(deep, h, cfg, {}, options);

  ComplexMatrix dcost = ComplexMatrix::Zero(cfg.K, cfg.M);
  CHECK_THROWS_AS(ufpgd::backward(fwd.tape, shallow, h, cfg, dcost),
                  ufpgd::TrainingError);

  ComplexMatrix bad_shape = ComplexMatrix::Zero(cfg.K, cfg.M + 1);
  CHECK_THROWS_AS(ufpgd::backward(fwd.tape, deep, h, cfg, bad_shape),
                  ufpgd::TrainingError);
}

TEST_CASE("network json round trip is exact") {
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(8, 64, 20, 1.0 / 15.0);
  ufpgd::Rng rng = ufpgd::Rng::stream(51, 0);
  const double lo = 1.0 / (2.0 * net.mp_bound);
  const double hi = 1.0 / net.mp_bound;
  for (ufpgd::LayerParams& layer : net.layers) {
    layer.lambda_i = rng.uniform();
    layer.eta_i = lo + rng.uniform() * (hi - lo);
  }

  std::string text = ufpgd::to_json_string(net);
  UnfoldedNetwork parsed = ufpgd::network_from_json_string(text);

  CHECK(parsed.num_users == net.num_users);
  CHECK(parsed.num_antennas == net.num_antennas);
  CHECK(parsed.mp_bound == net.mp_bound);
  REQUIRE(parsed.layers.size() == net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(parsed.layers[i].lambda_i == net.layers[i].lambda_i);
    CHECK(parsed.layers[i].eta_i == net.layers[i].eta_i);
  }
}

TEST_CASE("network json rejects malformed documents") {
  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(4, 16, 3, 0.1);
  std::string good = ufpgd::to_json_string(net);

  CHECK_THROWS_AS(ufpgd::network_from_json_string("not json"),
                  ufpgd::DataFormatError);

  std::string wrong_version = good;
  wrong_version.replace(wrong_version.find("\"version\": 1"),
                        std::string("\"version\": 1").size(),
                        "\"version\": 2");
  CHECK_THROWS_AS(ufpgd::network_from_json_string(wrong_version),
                  ufpgd::DataFormatError);

  std::string wrong_depth = good;
  wrong_depth.replace(wrong_depth.find("\"I\": 3"),
                      std::string("\"I\": 3").size(), "\"I\": 4");
  CHECK_THROWS_AS(ufpgd::network_from_json_string(wrong_depth),
                  ufpgd::DataFormatError);

  std::string missing_key = good;
  missing_key.replace(missing_key.find("\"mp_bound\""),
                      std::string("\"mp_bound\"").size(), "\"mp_bnd\"");
  CHECK_THROWS_AS(ufpgd::network_from_json_string(missing_key),
                  ufpgd::DataFormatError);
}

TEST_CASE("save and load preserve the network bit for bit") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "ufpgd_test_network.json";

  UnfoldedNetwork net = UnfoldedNetwork::pgd_init(8, 64, 20, 1.0 / 15.0);
  net.layers[7].lambda_i = 0.123456789012345678;
  ufpgd::save_network(net, path.string());

  UnfoldedNetwork loaded = ufpgd::load_network(path.string());
  CHECK(loaded.num_users == net.num_users);
  CHECK(loaded.num_antennas == net.num_antennas);
  CHECK(loaded.mp_bound == net.mp_bound);
  REQUIRE(loaded.layers.size() == net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(loaded.layers[i].lambda_i == net.layers[i].lambda_i);
    CHECK(loaded.layers[i].eta_i == net.layers[i].eta_i);
  }
  fs::remove(path);

  CHECK_THROWS_AS(ufpgd::load_network((fs::temp_directory_path() /
                                       "ufpgd_no_such_file.json")
                                          .string()),
                  std::runtime_error);
}
