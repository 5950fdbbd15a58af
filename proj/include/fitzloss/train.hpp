#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fitzloss/data.hpp"
#include "fitzloss/errors.hpp"
#include "fitzloss/losses.hpp"

namespace fitzloss::train {

/// k x d model matrix of the linear model x -> link(W x), row-major.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), v_(rows * cols, 0.0) {}
  WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v_[r * cols_ + c];
  }
  std::span<double> flat() noexcept { return v_; }
  std::span<const double> flat() const noexcept { return v_; }

  double squared_norm() const noexcept;
  /// W x.
  std::vector<double> apply(std::span<const double> x) const;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

struct TrainConfig {
  LossSpec loss;
  double lambda = 1.0;
  int lbfgs_memory = 10;
  double grad_tol = 1e-6;  ///< on ||grad|| / ||grad at W = 0||
  int max_iter = 500;
  std::uint64_t seed = 0;
  /// Threads used for per-sample loss evaluation. The reduction order is
  /// fixed, so results do not depend on this.
  int workers = 1;
  numeric::BisectionConfig solver;
};

struct ObjectiveValue {
  double value = 0.0;
  WeightMatrix grad;
};

/// sum_i L(y_i, W x_i) + (lambda / 2) ||W||^2 over the given rows, with its
/// gradient. Loss failures are rethrown as Error naming the sample index.
ObjectiveValue objective(const WeightMatrix& w, const data::Dataset& data,
                         std::span<const std::size_t> rows,
                         const TrainConfig& cfg);

/// Line search or evaluation failure; carries the best iterate so far.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, std::vector<double> best)
      : Error(what), best_(std::move(best)) {}
  const std::vector<double>& best_iterate() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

struct LbfgsOptions {
  int memory = 10;
  double grad_tol = 1e-6;  ///< relative to the gradient norm at x0
  int max_iter = 500;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  std::vector<double> trace;  ///< f(x0), then f after every iteration
  int iterations = 0;
  int evaluations = 0;
  double relative_grad_norm = 0.0;
  bool converged = false;
};

/// Value-and-gradient callback: returns f(x) and writes grad f(x).
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

/// L-BFGS with two-loop recursion and a strong-Wolfe line search.
LbfgsResult minimize_lbfgs(const Objective& fg, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

struct TrainResult {
  WeightMatrix weights;
  std::vector<double> trace;
  int iterations = 0;
  double relative_grad_norm = 0.0;
  bool converged = false;
};

/// Minimizes the objective over `rows`, starting from W = 0.
TrainResult lbfgs_minimize(const data::Dataset& data,
                           std::span<const std::size_t> rows,
                           const TrainConfig& cfg);

/// link(W x). The Fitzpatrick family shares its sibling's link, so only the
/// generator matters.
std::vector<double> predict(const WeightMatrix& w, std::span<const double> x,
                            const LossSpec& loss);

/// (1/n) sum_i ||prediction_i - target_i||^2.
double mse(std::span<const std::vector<double>> predictions,
           std::span<const std::vector<double>> targets);

/// Predicts every row and scores against its label.
double split_mse(const WeightMatrix& w, const data::Dataset& data,
                 std::span<const std::size_t> rows, const LossSpec& loss);

}  // namespace fitzloss::train
