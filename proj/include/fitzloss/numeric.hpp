#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fitzloss::numeric {

struct BisectionConfig {
  double abs_tol = 1e-12;       ///< stop once the bracket is narrower than this
  double residual_tol = 1e-10;  ///< acceptance threshold on |f(x)|
  int max_iter = 200;
};

struct BisectionResult {
  double root = 0.0;
  double residual = 0.0;  ///< |f(root)|
  int iterations = 0;
  double lo = 0.0;  ///< bracket after expansion, before shrinking
  double hi = 0.0;
};

/// Principal branch of the Lambert W function: the w >= 0 with w e^w = z.
/// Throws DomainError for negative or non-finite z.
double lambert_w(double z);

/// W(e^x), evaluated without forming e^x when it would overflow.
double lambert_w_exp(double x);

/// log(sum_i exp(theta_i)) with the max-shift; throws DomainError when empty.
double log_sum_exp(std::span<const double> theta);

/// Root of a monotone nonincreasing f with f(lo) >= 0 >= f(hi).
///
/// If the sign condition fails at the given endpoints the interval is
/// doubled outward (lo moves down while f(lo) < 0, hi moves up while
/// f(hi) > 0), at most 60 times. Halving continues until the bracket is
/// narrower than abs_tol or can no longer be split in floating point; the
/// endpoint or midpoint with smallest |f| is returned.
///
/// Throws NoRootError when no sign change is found and ConvergenceError
/// (carrying the best iterate) when max_iter is exhausted with
/// |f| > residual_tol.
BisectionResult bisect(const std::function<double(double)>& f, double lo,
                       double hi, const BisectionConfig& cfg = {});

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Throws EvaluationError naming the coordinate on a non-finite probe.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-6);

}  // namespace fitzloss::numeric
