#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ufpgd/channel.hpp"
#include "ufpgd/dataset.hpp"
#include "ufpgd/errors.hpp"
#include "ufpgd/metrics.hpp"
#include "ufpgd/parallel.hpp"
#include "ufpgd/pgd.hpp"
#include "ufpgd/rng.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/trace_io.hpp"
#include "ufpgd/training.hpp"
#include "ufpgd/unfolded.hpp"
#include "ufpgd/zf.hpp"

namespace ufpgd_cli {
namespace {

using nlohmann::json;

// The CLI talks dB, the library talks linear scale.
double sinr_from_db(double sinr_db) { return std::pow(10.0, sinr_db / 10.0); }

ufpgd::SystemConfig system_for(int num_users, int num_antennas, double sinr_db,
                               double noise_std, double alpha) {
  ufpgd::SystemConfig cfg = ufpgd::SystemConfig::uniform(
      num_users, num_antennas, sinr_from_db(sinr_db), noise_std, alpha);
  cfg.validate();
  return cfg;
}

double resolve_eta(const std::string& text, int num_users, int num_antennas) {
  if (text == "auto") {
    return 1.0 / ufpgd::mp_bound(num_users, num_antennas);
  }
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument("--eta must be 'auto' or a positive number");
  }
  return value;
}

int count_active_columns(const ufpgd::PrecoderMatrix& precoder) {
  int active = 0;
  for (Eigen::Index m = 0; m < precoder.cols(); ++m) {
    if (precoder.col(m).squaredNorm() > 0.0) ++active;
  }
  return active;
}

ufpgd::TraceRecord record_for(const ufpgd::ChannelMatrix& channel,
                              const ufpgd::PrecoderMatrix& precoder,
                              const ufpgd::PrecoderMatrix& zf_reference,
                              const ufpgd::SystemConfig& cfg, double lambda,
                              long index) {
  ufpgd::TraceRecord rec;
  rec.index = index;
  rec.lagrangian = ufpgd::lagrangian_value(precoder, channel, cfg, lambda);
  rec.residual = ufpgd::constraint_residual(channel, precoder, cfg);
  rec.pcg = ufpgd::pcg_from_reference(zf_reference, precoder);
  rec.sum_rate = ufpgd::sum_rate(ufpgd::sinr_per_user(channel, precoder, cfg));
  rec.active_columns = count_active_columns(precoder);
  return rec;
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Every successful run leaves <primary output>.run.json next to its
// main artifact; `ufpgd replay --sidecar <it>` re-executes the argv.
void write_sidecar(const std::string& primary_out, const std::string& command,
                   const std::vector<std::string>& argv, const json& resolved) {
  json doc;
  doc["tool_version"] = "1.0.0";
  doc["command"] = command;
  doc["argv"] = argv;
  doc["resolved"] = resolved;
  ufpgd::write_file_atomic(primary_out + ".run.json", doc.dump(2) + "\n");
}

json system_flags_json(double sinr_db, double noise_std, double alpha) {
  json j;
  j["sinr_db"] = sinr_db;
  j["noise_std"] = noise_std;
  j["alpha"] = alpha;
  return j;
}

json metrics_json(const ufpgd::MetricsReport& report) {
  json j;
  j["tx_power"] = report.tx_power;
  j["cons_power"] = report.cons_power;
  j["sum_rate"] = report.sum_rate;
  j["pcg"] = report.pcg;
  j["residual"] = report.residual;
  std::vector<double> sinr(report.sinr.data(),
                           report.sinr.data() + report.sinr.size());
  j["sinr"] = sinr;
  return j;
}

void check_model_matches_dataset(const ufpgd::UnfoldedNetwork& net,
                                 const ufpgd::Dataset& data,
                                 const std::string& command) {
  if (net.num_users != data.num_users ||
      net.num_antennas != data.num_antennas) {
    throw ufpgd::DataFormatError(
        command + ": model is " + std::to_string(net.num_users) + "x" +
        std::to_string(net.num_antennas) + " but dataset is " +
        std::to_string(data.num_users) + "x" +
        std::to_string(data.num_antennas));
  }
}

void check_nonempty(const ufpgd::Dataset& data, const std::string& command) {
  if (data.size() == 0) {
    throw ufpgd::DataFormatError(command + ": dataset holds no channels");
  }
}

}  // namespace

int run_gen(const GenArgs& args, const std::vector<std::string>& argv) {
  if (args.n <= 0) {
    throw std::invalid_argument("--n must be positive");
  }
  if (!(args.lambda >= 0.0)) {
    throw std::invalid_argument("--lambda must be >= 0");
  }
  ufpgd::SystemConfig cfg =
      system_for(args.k, args.m, args.sinr_db, args.noise_std, args.alpha);

  ufpgd::Dataset data;
  data.num_users = args.k;
  data.num_antennas = args.m;
  data.seed = args.seed;
  data.channels.resize(static_cast<std::size_t>(args.n));
  for (long i = 0; i < args.n; ++i) {
    ufpgd::Rng rng = ufpgd::Rng::stream(args.seed, static_cast<std::uint64_t>(i));
    data.channels[static_cast<std::size_t>(i)] = ufpgd::generate_channel(cfg, rng);
  }
  if (args.labels) {
    data.labels.resize(data.channels.size());
    ufpgd::parallel_for(data.channels.size(), [&](std::size_t i) {
      data.labels[i] = ufpgd::oracle_solve(data.channels[i], cfg, args.lambda);
    });
  }
  ufpgd::write_dataset(data, args.out);

  json resolved;
  resolved["k"] = args.k;
  resolved["m"] = args.m;
  resolved["n"] = args.n;
  resolved["seed"] = args.seed;
  resolved["labels"] = args.labels;
  resolved["lambda"] = args.lambda;
  resolved["system"] = system_flags_json(args.sinr_db, args.noise_std, args.alpha);
  write_sidecar(args.out, "gen", argv, resolved);

  std::cout << "wrote " << args.n << (args.labels ? " labeled" : "")
            << " channels (" << args.k << "x" << args.m << ") to " << args.out
            << "\n";
  return 0;
}

int run_solve(const SolveArgs& args, const std::vector<std::string>& argv) {
  ufpgd::Dataset data = ufpgd::read_dataset(args.data);
  check_nonempty(data, "solve");
  ufpgd::SystemConfig cfg = system_for(data.num_users, data.num_antennas,
                                       args.sinr_db, args.noise_std, args.alpha);
  const std::size_t n = data.size();

  std::vector<ufpgd::TraceRecord> sums;
  json resolved;
  if (args.algo == "pgd") {
    if (args.trace_every <= 0) {
      throw std::invalid_argument("--trace-every must be positive");
    }
    ufpgd::PgdParams params;
    params.lambda = args.lambda;
    params.eta = resolve_eta(args.eta, data.num_users, data.num_antennas);
    params.max_iters = args.iters;
    params.residual_tol = 0.0;
    params.trace_every = args.trace_every;
    params.validate();
    resolved["eta"] = params.eta;
    resolved["iters"] = params.max_iters;
    resolved["trace_every"] = params.trace_every;

    // residual_tol 0 keeps every channel's trace on the same index
    // grid, so records average position by position. Channels run in
    // blocks to bound trace memory; slot order keeps the reduction
    // deterministic.
    const std::size_t block = 64;
    std::vector<ufpgd::SolveTrace> slots;
    for (std::size_t base = 0; base < n; base += block) {
      const std::size_t count = std::min(block, n - base);
      slots.assign(count, ufpgd::SolveTrace{});
      ufpgd::parallel_for(count, [&](std::size_t j) {
        slots[j] =
            std::move(ufpgd::solve_pgd(data.channels[base + j], cfg, params).trace);
      });
      for (std::size_t j = 0; j < count; ++j) {
        const std::vector<ufpgd::TraceRecord>& records = slots[j].records;
        if (sums.empty()) {
          sums.resize(records.size());
        }
        if (records.size() != sums.size()) {
          throw std::runtime_error("solve: trace lengths differ across channels");
        }
        for (std::size_t r = 0; r < records.size(); ++r) {
          sums[r].index = records[r].index;
          sums[r].lagrangian += records[r].lagrangian;
          sums[r].residual += records[r].residual;
          sums[r].pcg += records[r].pcg;
          sums[r].sum_rate += records[r].sum_rate;
          sums[r].active_columns += records[r].active_columns;
        }
      }
    }
  } else {
    // oracle: one row for the start iterate H^*, one for the solution
    // at the solver's iteration cap.
    std::vector<ufpgd::TraceRecord> first(n);
    std::vector<ufpgd::TraceRecord> last(n);
    ufpgd::parallel_for(n, [&](std::size_t i) {
      const ufpgd::ChannelMatrix& channel = data.channels[i];
      ufpgd::PrecoderMatrix zf = ufpgd::zf_precoder(channel, cfg);
      ufpgd::PrecoderMatrix start = channel.conjugate();
      ufpgd::PrecoderMatrix solution =
          ufpgd::oracle_solve(channel, cfg, args.lambda);
      first[i] = record_for(channel, start, zf, cfg, args.lambda, 0);
      last[i] = record_for(channel, solution, zf, cfg, args.lambda, 100000);
    });
    sums.resize(2);
    for (std::size_t i = 0; i < n; ++i) {
      for (int r = 0; r < 2; ++r) {
        const ufpgd::TraceRecord& rec = r == 0 ? first[i] : last[i];
        sums[static_cast<std::size_t>(r)].index = rec.index;
        sums[static_cast<std::size_t>(r)].lagrangian += rec.lagrangian;
        sums[static_cast<std::size_t>(r)].residual += rec.residual;
        sums[static_cast<std::size_t>(r)].pcg += rec.pcg;
        sums[static_cast<std::size_t>(r)].sum_rate += rec.sum_rate;
        sums[static_cast<std::size_t>(r)].active_columns += rec.active_columns;
      }
    }
  }

  std::vector<ufpgd::TraceRow> rows;
  rows.reserve(sums.size());
  for (const ufpgd::TraceRecord& sum : sums) {
    ufpgd::TraceRecord mean = sum;
    mean.lagrangian /= static_cast<double>(n);
    mean.residual /= static_cast<double>(n);
    mean.pcg /= static_cast<double>(n);
    mean.sum_rate /= static_cast<double>(n);
    mean.active_columns /= static_cast<double>(n);
    rows.push_back(ufpgd::TraceRow{args.algo, mean});
  }
  ufpgd::write_trace_csv(args.trace_out, rows);

  resolved["data"] = args.data;
  resolved["algo"] = args.algo;
  resolved["lambda"] = args.lambda;
  resolved["num_channels"] = n;
  resolved["system"] = system_flags_json(args.sinr_db, args.noise_std, args.alpha);
  write_sidecar(args.trace_out, "solve", argv, resolved);

  std::cout << "averaged " << args.algo << " trace over " << n
            << " channels, " << rows.size() << " rows to " << args.trace_out
            << "\n";
  return 0;
}

int run_train(const TrainArgs& args, const std::vector<std::string>& argv) {
  ufpgd::Dataset train_set = ufpgd::read_dataset(args.train_path);
  ufpgd::Dataset val_set = ufpgd::read_dataset(args.val_path);
  check_nonempty(train_set, "train");
  check_nonempty(val_set, "train");
  if (train_set.num_users != val_set.num_users ||
      train_set.num_antennas != val_set.num_antennas) {
    throw ufpgd::DataFormatError(
        "train: training and validation sets have different dimensions");
  }
  ufpgd::SystemConfig cfg =
      system_for(train_set.num_users, train_set.num_antennas, args.sinr_db,
                 args.noise_std, args.alpha);

  ufpgd::TrainConfig train_cfg;
  train_cfg.loss_kind = args.loss == "sup" ? ufpgd::LossKind::kSupervised
                                           : ufpgd::LossKind::kUnsupervised;
  train_cfg.lambda_cost = args.lambda_cost;
  train_cfg.batch_size = args.batch;
  train_cfg.learning_rate = args.lr;
  train_cfg.max_epochs = args.epochs;
  train_cfg.patience = args.patience;
  train_cfg.seed = args.seed;
  train_cfg.threads = args.threads;
  train_cfg.validate();
  if (train_cfg.loss_kind == ufpgd::LossKind::kSupervised &&
      (!train_set.has_labels() || !val_set.has_labels())) {
    throw ufpgd::DataFormatError(
        "train: supervised loss needs labeled datasets, regenerate with "
        "--labels");
  }

  ufpgd::UnfoldedNetwork net = ufpgd::UnfoldedNetwork::pgd_init(
      train_set.num_users, train_set.num_antennas, args.layers,
      args.lambda_cost);
  ufpgd::TrainResult result =
      ufpgd::train(net, train_set, val_set, train_cfg, cfg);

  ufpgd::save_network(result.network, args.model_out);

  std::string history = "epoch,train_loss,val_loss,val_mean_pcg,val_mean_sum_rate\n";
  for (const ufpgd::EpochRecord& rec : result.history.epochs) {
    history += std::to_string(rec.epoch);
    history += ',';
    history += format_double(rec.train_loss);
    history += ',';
    history += format_double(rec.val_loss);
    history += ',';
    history += format_double(rec.val_mean_pcg);
    history += ',';
    history += format_double(rec.val_mean_sum_rate);
    history += '\n';
  }
  ufpgd::write_file_atomic(args.history_out, history);

  json resolved;
  resolved["train"] = args.train_path;
  resolved["val"] = args.val_path;
  resolved["loss"] = args.loss;
  resolved["layers"] = args.layers;
  resolved["epochs"] = args.epochs;
  resolved["batch"] = args.batch;
  resolved["lr"] = args.lr;
  resolved["patience"] = args.patience;
  resolved["lambda_cost"] = args.lambda_cost;
  resolved["seed"] = args.seed;
  resolved["history_out"] = args.history_out;
  resolved["best_epoch"] = result.history.best_epoch;
  resolved["stopping_epoch"] = result.history.stopping_epoch;
  resolved["system"] = system_flags_json(args.sinr_db, args.noise_std, args.alpha);
  write_sidecar(args.model_out, "train", argv, resolved);

  std::cout << "trained " << args.layers << " layers for "
            << result.history.epochs.size() << " epochs, best epoch "
            << result.history.best_epoch << ", model to " << args.model_out
            << "\n";
  return 0;
}

int run_eval(const EvalArgs& args, const std::vector<std::string>& argv) {
  ufpgd::UnfoldedNetwork net = ufpgd::load_network(args.model);
  ufpgd::Dataset data = ufpgd::read_dataset(args.data);
  check_model_matches_dataset(net, data, "eval");
  check_nonempty(data, "eval");
  ufpgd::SystemConfig cfg = system_for(data.num_users, data.num_antennas,
                                       args.sinr_db, args.noise_std, args.alpha);

  ufpgd::EvalOptions options;
  options.per_layer = args.per_layer;
  options.lagrangian_lambda = args.lambda_cost;
  options.threads = args.threads;
  ufpgd::EvaluationSummary summary = ufpgd::evaluate(net, data, cfg, options);

  json report;
  report["num_channels"] = summary.num_channels;
  report["mean"] = metrics_json(summary.mean);
  report["std_error"] = metrics_json(summary.std_error);
  ufpgd::write_file_atomic(args.out, report.dump(2) + "\n");

  std::string layers_path;
  if (args.per_layer) {
    layers_path =
        args.per_layer_out.empty() ? args.out + ".layers.csv" : args.per_layer_out;
    std::vector<ufpgd::TraceRow> rows;
    rows.reserve(summary.per_layer.size());
    for (const ufpgd::TraceRecord& rec : summary.per_layer) {
      rows.push_back(ufpgd::TraceRow{"layer", rec});
    }
    ufpgd::write_trace_csv(layers_path, rows);
  }

  json resolved;
  resolved["model"] = args.model;
  resolved["data"] = args.data;
  resolved["num_channels"] = summary.num_channels;
  resolved["per_layer"] = args.per_layer;
  if (args.per_layer) {
    resolved["per_layer_out"] = layers_path;
  }
  resolved["lambda_cost"] = args.lambda_cost;
  resolved["system"] = system_flags_json(args.sinr_db, args.noise_std, args.alpha);
  write_sidecar(args.out, "eval", argv, resolved);

  std::cout << "evaluated " << summary.num_channels << " channels, mean pcg "
            << summary.mean.pcg << ", mean sum rate " << summary.mean.sum_rate
            << ", report to " << args.out << "\n";
  return 0;
}

int run_bench(const BenchArgs& args, const std::vector<std::string>& argv) {
  if (args.reps <= 0) {
    throw std::invalid_argument("--reps must be positive");
  }
  ufpgd::UnfoldedNetwork net = ufpgd::load_network(args.model);
  ufpgd::Dataset data = ufpgd::read_dataset(args.data);
  check_model_matches_dataset(net, data, "bench");
  check_nonempty(data, "bench");
  ufpgd::SystemConfig cfg = system_for(data.num_users, data.num_antennas,
                                       args.sinr_db, args.noise_std, args.alpha);

  ufpgd::PgdParams params;
  params.lambda = args.lambda;
  params.eta = 1.0 / ufpgd::mp_bound(data.num_users, data.num_antennas);
  params.max_iters = args.pgd_iters;
  params.residual_tol = 0.0;
  params.trace_every = 0;
  params.validate();

  const std::size_t n = data.size();
  using clock = std::chrono::steady_clock;
  double sink = 0.0;

  // One untimed pass warms caches and faults in the lazy allocations.
  sink += ufpgd::forward_infer(net, data.channels[0], cfg).squaredNorm();
  sink += ufpgd::solve_pgd(data.channels[0], cfg, params).precoder.squaredNorm();

  std::vector<double> unfolded_us(static_cast<std::size_t>(args.reps));
  std::vector<double> pgd_us(static_cast<std::size_t>(args.reps));
  for (int rep = 0; rep < args.reps; ++rep) {
    clock::time_point t0 = clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      sink += ufpgd::forward_infer(net, data.channels[i], cfg).squaredNorm();
    }
    clock::time_point t1 = clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      sink += ufpgd::solve_pgd(data.channels[i], cfg, params).precoder.squaredNorm();
    }
    clock::time_point t2 = clock::now();
    const double scale = 1e-3 / static_cast<double>(n);
    unfolded_us[static_cast<std::size_t>(rep)] =
        static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()) *
        scale;
    pgd_us[static_cast<std::size_t>(rep)] =
        static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count()) *
        scale;
  }
  if (!std::isfinite(sink)) {
    throw ufpgd::DivergenceError("bench: non-finite precoder output", 0);
  }

  std::vector<double> sorted = unfolded_us;
  std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                   sorted.end());
  const double unfolded_median = sorted[mid];
  sorted = pgd_us;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                   sorted.end());
  const double pgd_median = sorted[mid];

  json report;
  report["reps"] = args.reps;
  report["pgd_iters"] = args.pgd_iters;
  report["num_channels"] = n;
  report["num_layers"] = net.layers.size();
  report["unfolded_us_per_channel"] = unfolded_median;
  report["pgd_us_per_channel"] = pgd_median;
  report["speedup"] = pgd_median / unfolded_median;
  report["unfolded_us_samples"] = unfolded_us;
  report["pgd_us_samples"] = pgd_us;
  json machine;
  machine["hardware_concurrency"] = std::thread::hardware_concurrency();
  machine["threads"] = ufpgd::default_thread_count();
  report["machine"] = machine;
  ufpgd::write_file_atomic(args.out, report.dump(2) + "\n");

  json resolved;
  resolved["model"] = args.model;
  resolved["data"] = args.data;
  resolved["lambda"] = args.lambda;
  resolved["system"] = system_flags_json(args.sinr_db, args.noise_std, args.alpha);
  write_sidecar(args.out, "bench", argv, resolved);

  std::cout << "unfolded " << unfolded_median << " us/channel, pgd("
            << args.pgd_iters << ") " << pgd_median << " us/channel, speedup "
            << pgd_median / unfolded_median << "x, report to " << args.out
            << "\n";
  return 0;
}

std::vector<std::string> load_replay_argv(const std::string& sidecar_path) {
  const std::string text = ufpgd::read_file(sidecar_path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ufpgd::DataFormatError(std::string("replay: sidecar is not JSON: ") +
                                 e.what());
  }
  std::string command;
  std::vector<std::string> argv;
  try {
    command = doc.at("command").get<std::string>();
    argv = doc.at("argv").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ufpgd::DataFormatError(std::string("replay: bad sidecar fields: ") +
                                 e.what());
  }
  if (command == "replay") {
    throw ufpgd::DataFormatError("replay: sidecar records another replay");
  }
  if (argv.empty()) {
    throw ufpgd::DataFormatError("replay: sidecar argv is empty");
  }
  return argv;
}

}  // namespace ufpgd_cli
