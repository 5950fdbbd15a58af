// fitzloss: evaluate losses, emit loss curves, run property suites, train
// and benchmark linear label-proportion models.

#include <iostream>

#include "CLI11.hpp"
#include "fitzloss/cli.hpp"
#include "fitzloss/errors.hpp"

namespace cli = fitzloss::cli;

namespace {

bool parse_range(const std::string& text, double& lo, double& hi) {
  try {
    const auto v = cli::parse_vector(text);
    if (v.size() != 2) return false;
    lo = v[0];
    hi = v[1];
    return true;
  } catch (const fitzloss::ParseError&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fenchel-Young and Fitzpatrick losses"};
  app.require_subcommand(1);

  cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one loss at (y, theta)");
  eval_cmd->add_option("--loss", eval.loss, "e.g. logistic, fitzpatrick-sparsemax")
      ->required();
  eval_cmd->add_option("--y", eval.y, "comma-separated target")->required();
  eval_cmd->add_option("--theta", eval.theta, "comma-separated scores")->required();

  cli::CurveOptions curve;
  std::string s_range = "-5,5";
  auto* curve_cmd = app.add_subcommand(
      "curve", "Write s, fy_value, fitz_value for y = e_1, theta = (s, 0, ...)");
  curve_cmd->add_option("--generator", curve.generator)->capture_default_str();
  curve_cmd->add_option("--k", curve.k)->capture_default_str();
  curve_cmd->add_option("--s-range", s_range, "lo,hi")->capture_default_str();
  curve_cmd->add_option("--steps", curve.steps)->capture_default_str();
  curve_cmd->add_option("--out", curve.out, "CSV path")->required();

  cli::CheckOptions check;
  auto* check_cmd = app.add_subcommand("check", "Run randomized property suites");
  check_cmd->add_option("--suite", check.suite, "suite name or 'all'")
      ->capture_default_str();
  check_cmd->add_option("--seed", check.seed)->capture_default_str();
  check_cmd->add_option("--trials", check.trials)->capture_default_str();
  check_cmd->add_option("--k", check.k, "fixed dimension (0: random)")
      ->capture_default_str();
  check_cmd->add_option("--resolution", check.resolution, "grid suite resolution")
      ->capture_default_str();

  cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a linear model");
  train_cmd->add_option("--manifest", train.manifest)->required();
  train_cmd->add_option("--dataset", train.dataset);
  train_cmd->add_option("--loss", train.loss)->capture_default_str();
  train_cmd->add_option("--lambda", train.lambda)->capture_default_str();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--model-out", train.model_out);
  train_cmd->add_option("--max-iter", train.max_iter)->capture_default_str();
  train_cmd->add_option("--grad-tol", train.grad_tol)->capture_default_str();
  train_cmd->add_option("--memory", train.memory)->capture_default_str();
  train_cmd->add_option("--workers", train.workers)->capture_default_str();

  cli::BenchmarkOptions bench;
  auto* bench_cmd = app.add_subcommand(
      "benchmark", "Tune lambda on dev MSE for every dataset x loss");
  bench_cmd->add_option("--manifest", bench.manifest)->required();
  bench_cmd->add_option("--losses", bench.losses)->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--lambda-grid", bench.lambda_grid)
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "writes <out>.json and <out>.csv")
      ->required();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers)->capture_default_str();
  bench_cmd->add_option("--max-iter", bench.max_iter)->capture_default_str();
  bench_cmd->add_option("--grad-tol", bench.grad_tol)->capture_default_str();
  bench_cmd->add_option("--memory", bench.memory)->capture_default_str();
  bench_cmd->add_option("--timestamp", bench.timestamp,
                        "recorded instead of the current time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kSuccess : cli::kUsage;
  }

  try {
    if (*eval_cmd) return cli::cmd_eval(eval, std::cout, std::cerr);
    if (*curve_cmd) {
      if (!parse_range(s_range, curve.s_lo, curve.s_hi)) {
        std::cerr << "error: --s-range expects lo,hi\n";
        return cli::kUsage;
      }
      return cli::cmd_curve(curve, std::cout, std::cerr);
    }
    if (*check_cmd) return cli::cmd_check(check, std::cout, std::cerr);
    if (*train_cmd) return cli::cmd_train(train, std::cout, std::cerr);
    if (*bench_cmd) return cli::cmd_benchmark(bench, std::cout, std::cerr);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return cli::kFailure;
  }
  return cli::kUsage;
}
