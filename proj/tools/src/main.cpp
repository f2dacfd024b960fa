#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ufpgd/errors.hpp"

namespace ufpgd_cli {
namespace {

void add_system_flags(CLI::App* cmd, double& sinr_db, double& noise_std,
                      double& alpha) {
  cmd->add_option("--sinr-db", sinr_db, "Per-user SINR target in dB")
      ->capture_default_str();
  cmd->add_option("--noise-std", noise_std, "Receiver noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--alpha", alpha, "PA consumed-power scale")
      ->capture_default_str();
}

}  // namespace

int dispatch(const std::vector<std::string>& argv) {
  CLI::App app{"Energy-efficient massive MIMO precoding toolbox"};
  app.name("ufpgd");
  app.require_subcommand(1);

  GenArgs gen;
  SolveArgs solve;
  TrainArgs train;
  EvalArgs eval;
  BenchArgs bench;
  std::string sidecar_path;

  CLI::App* gen_cmd =
      app.add_subcommand("gen", "Generate an i.i.d. Rayleigh channel dataset");
  gen_cmd->add_option("--k", gen.k, "Number of users")->capture_default_str();
  gen_cmd->add_option("--m", gen.m, "Number of antennas")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of channels")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Dataset RNG seed")
      ->capture_default_str();
  gen_cmd->add_flag("--labels", gen.labels,
                    "Attach reference-solver precoder labels");
  gen_cmd->add_option("--lambda", gen.lambda, "Shrinkage weight for labels")
      ->capture_default_str();
  add_system_flags(gen_cmd, gen.sinr_db, gen.noise_std, gen.alpha);
  gen_cmd->add_option("--out", gen.out, "Output dataset path")->required();

  CLI::App* solve_cmd = app.add_subcommand(
      "solve", "Average a solver trace over a channel dataset");
  solve_cmd->add_option("--data", solve.data, "Input dataset path")->required();
  solve_cmd->add_option("--algo", solve.algo, "Solver to trace")
      ->check(CLI::IsMember({"pgd", "oracle"}))
      ->capture_default_str();
  solve_cmd->add_option("--iters", solve.iters, "PGD iteration count")
      ->capture_default_str();
  solve_cmd->add_option("--lambda", solve.lambda, "Shrinkage weight")
      ->capture_default_str();
  solve_cmd
      ->add_option("--eta", solve.eta,
                   "Step size, 'auto' takes 1 over the (sqrt(K)+sqrt(M))^2 bound")
      ->capture_default_str();
  solve_cmd->add_option("--trace-every", solve.trace_every, "Trace sampling stride")
      ->capture_default_str();
  add_system_flags(solve_cmd, solve.sinr_db, solve.noise_std, solve.alpha);
  solve_cmd->add_option("--trace-out", solve.trace_out, "Output trace CSV path")
      ->required();

  CLI::App* train_cmd =
      app.add_subcommand("train", "Train an unfolded network on a dataset");
  train_cmd->add_option("--train", train.train_path, "Training dataset path")
      ->required();
  train_cmd->add_option("--val", train.val_path, "Validation dataset path")
      ->required();
  train_cmd->add_option("--loss", train.loss, "Training loss")
      ->check(CLI::IsMember({"sup", "unsup"}))
      ->capture_default_str();
  train_cmd->add_option("--layers", train.layers, "Number of unfolded layers")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs, "Maximum epochs")
      ->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "Mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")
      ->capture_default_str();
  train_cmd->add_option("--patience", train.patience, "Early-stopping patience")
      ->capture_default_str();
  train_cmd
      ->add_option("--lambda-cost", train.lambda_cost,
                   "Shrinkage weight of the unsupervised loss")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Batch-shuffling seed")
      ->capture_default_str();
  train_cmd->add_option("--threads", train.threads, "Worker threads, 0 = auto")
      ->capture_default_str();
  add_system_flags(train_cmd, train.sinr_db, train.noise_std, train.alpha);
  train_cmd->add_option("--model-out", train.model_out, "Output model JSON path")
      ->required();
  train_cmd
      ->add_option("--history-out", train.history_out, "Output history CSV path")
      ->required();

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a trained model on a dataset");
  eval_cmd->add_option("--model", eval.model, "Model JSON path")->required();
  eval_cmd->add_option("--data", eval.data, "Test dataset path")->required();
  eval_cmd->add_flag("--per-layer", eval.per_layer,
                     "Also write per-layer metric curves");
  eval_cmd->add_option("--per-layer-out", eval.per_layer_out,
                       "Per-layer CSV path, default <out>.layers.csv");
  eval_cmd
      ->add_option("--lambda-cost", eval.lambda_cost,
                   "Shrinkage weight of the reported lagrangian")
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval.threads, "Worker threads, 0 = auto")
      ->capture_default_str();
  add_system_flags(eval_cmd, eval.sinr_db, eval.noise_std, eval.alpha);
  eval_cmd->add_option("--out", eval.out, "Output report JSON path")->required();

  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Time unfolded inference against iterative PGD");
  bench_cmd->add_option("--model", bench.model, "Model JSON path")->required();
  bench_cmd->add_option("--data", bench.data, "Channel dataset path")->required();
  bench_cmd->add_option("--pgd-iters", bench.pgd_iters, "PGD iteration count")
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Timing repetitions")
      ->capture_default_str();
  bench_cmd->add_option("--lambda", bench.lambda, "Shrinkage weight")
      ->capture_default_str();
  add_system_flags(bench_cmd, bench.sinr_db, bench.noise_std, bench.alpha);
  bench_cmd->add_option("--out", bench.out, "Output report JSON path")->required();

  CLI::App* replay_cmd =
      app.add_subcommand("replay", "Re-run the command recorded in a sidecar");
  replay_cmd->add_option("--sidecar", sidecar_path, "Run sidecar JSON path")
      ->required();

  int exit_code = 0;
  gen_cmd->callback([&] { exit_code = run_gen(gen, argv); });
  solve_cmd->callback([&] { exit_code = run_solve(solve, argv); });
  train_cmd->callback([&] { exit_code = run_train(train, argv); });
  eval_cmd->callback([&] { exit_code = run_eval(eval, argv); });
  bench_cmd->callback([&] { exit_code = run_bench(bench, argv); });
  replay_cmd->callback(
      [&] { exit_code = dispatch(load_replay_argv(sidecar_path)); });

  try {
    // CLI11 consumes the vector form back to front.
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return exit_code;
}

}  // namespace ufpgd_cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return ufpgd_cli::dispatch(args);
  } catch (const ufpgd::DataFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ufpgd::SingularChannelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ufpgd::DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (index " << e.index << ")\n";
    return 3;
  } catch (const ufpgd::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ufpgd::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
