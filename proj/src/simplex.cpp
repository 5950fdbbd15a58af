#include "fitzloss/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fitzloss/errors.hpp"
#include "fitzloss/numeric.hpp"

namespace fitzloss {

namespace {

void require_nonempty_finite(std::span<const double> v, const char* who) {
  if (v.empty()) throw DomainError(std::string(who) + ": empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DomainError(std::string(who) + ": non-finite entry");
    }
  }
}

}  // namespace

ProbVector::ProbVector(std::vector<double> entries) : v_(std::move(entries)) {
  if (v_.empty()) throw InfeasibleTargetError("ProbVector: empty vector");
  double sum = 0.0;
  for (double& x : v_) {
    if (!std::isfinite(x)) {
      throw InfeasibleTargetError("ProbVector: non-finite entry");
    }
    if (std::abs(x) < kSnapTolerance) x = 0.0;
    if (x < 0.0) {
      throw InfeasibleTargetError("ProbVector: negative entry " +
                                  std::to_string(x));
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexSumTolerance) {
    throw InfeasibleTargetError("ProbVector: entries sum to " +
                                std::to_string(sum));
  }
}

ProbVector ProbVector::unchecked(std::vector<double> entries) {
  return ProbVector(std::move(entries), Unchecked{});
}

std::size_t ProbVector::support_size() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(v_.begin(), v_.end(), [](double x) { return x != 0.0; }));
}

ScoreVector::ScoreVector(std::vector<double> entries) : v_(std::move(entries)) {
  require_nonempty_finite(v_, "ScoreVector");
}

bool on_simplex(std::span<const double> y) noexcept {
  if (y.empty()) return false;
  double sum = 0.0;
  for (double x : y) {
    if (!std::isfinite(x) || x <= -kSnapTolerance) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= kSimplexSumTolerance;
}

ProbVector project_simplex(std::span<const double> z) {
  require_nonempty_finite(z, "project_simplex");
  std::vector<double> u(z.begin(), z.end());
  std::sort(u.begin(), u.end(), std::greater<>());

  // Largest rho with u_rho - (sum_{j<=rho} u_j - 1) / rho > 0.
  double cumsum = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) {
      rho = j + 1;
      tau = t;
    }
  }

  std::vector<double> y(z.size());
  if (rho == 1) {
    // Single-element support: return the exact vertex.
    const auto top = std::max_element(z.begin(), z.end());
    y[static_cast<std::size_t>(top - z.begin())] = 1.0;
    return ProbVector::unchecked(std::move(y));
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    y[i] = std::max(z[i] - tau, 0.0);
  }
  return ProbVector::unchecked(std::move(y));
}

ProbVector softargmax(std::span<const double> theta) {
  require_nonempty_finite(theta, "softargmax");
  const double lse = numeric::log_sum_exp(theta);
  std::vector<double> y(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    y[i] = std::exp(theta[i] - lse);
  }
  return ProbVector::unchecked(std::move(y));
}

ProbVector argmax_vertex(std::span<const double> theta) {
  require_nonempty_finite(theta, "argmax_vertex");
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto top = std::max_element(theta.begin(), theta.end());
  std::vector<double> y(theta.size(), 0.0);
  y[static_cast<std::size_t>(top - theta.begin())] = 1.0;
  return ProbVector::unchecked(std::move(y));
}

}  // namespace fitzloss
