#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ufpgd_cli {

// One sub-command per struct; main.cpp binds the flags, the run_*
// functions do the work and write the output files plus a JSON run
// sidecar (<primary output>.run.json) holding the argv for replay.

struct GenArgs {
  int k = 8;
  int m = 64;
  long n = 100;
  std::uint64_t seed = 1;
  bool labels = false;
  double lambda = 1.0 / 15.0;
  double sinr_db = 10.0;
  double noise_std = 1.0;
  double alpha = 1.0;
  std::string out;
};

struct SolveArgs {
  std::string data;
  std::string algo = "pgd";
  long iters = 20;
  double lambda = 1.0 / 15.0;
  std::string eta = "auto";
  long trace_every = 1;
  double sinr_db = 10.0;
  double noise_std = 1.0;
  double alpha = 1.0;
  std::string trace_out;
};

struct TrainArgs {
  std::string train_path;
  std::string val_path;
  std::string loss = "unsup";
  int layers = 20;
  int epochs = 200;
  int batch = 64;
  double lr = 1e-3;
  int patience = 10;
  double lambda_cost = 1.0 / 15.0;
  std::uint64_t seed = 1;
  int threads = 0;
  double sinr_db = 10.0;
  double noise_std = 1.0;
  double alpha = 1.0;
  std::string model_out;
  std::string history_out;
};

struct EvalArgs {
  std::string model;
  std::string data;
  bool per_layer = false;
  std::string per_layer_out;
  double lambda_cost = 1.0 / 15.0;
  int threads = 0;
  double sinr_db = 10.0;
  double noise_std = 1.0;
  double alpha = 1.0;
  std::string out;
};

struct BenchArgs {
  std::string model;
  std::string data;
  long pgd_iters = 5000;
  int reps = 5;
  double lambda = 1.0 / 15.0;
  double sinr_db = 10.0;
  double noise_std = 1.0;
  double alpha = 1.0;
  std::string out;
};

int run_gen(const GenArgs& args, const std::vector<std::string>& argv);
int run_solve(const SolveArgs& args, const std::vector<std::string>& argv);
int run_train(const TrainArgs& args, const std::vector<std::string>& argv);
int run_eval(const EvalArgs& args, const std::vector<std::string>& argv);
int run_bench(const BenchArgs& args, const std::vector<std::string>& argv);

// Reads the sidecar's argv and re-runs it through a fresh parser.
std::vector<std::string> load_replay_argv(const std::string& sidecar_path);

// Parses one command line (sub-command first, program name excluded)
// and executes it. Returns the process exit code.
int dispatch(const std::vector<std::string>& argv);

}  // namespace ufpgd_cli
