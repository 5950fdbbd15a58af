#include "fitzloss/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fitzloss/errors.hpp"

namespace fitzloss::numeric {

namespace {

constexpr int kMaxHalley = 64;
constexpr int kMaxExpansions = 60;

bool close_enough(double next, double current) {
  return std::abs(next - current) <=
         4.0 * std::numeric_limits<double>::epsilon() * std::abs(next);
}

// Solves w + log w = log_z by Newton steps on the log-domain residual.
// Used for large z where w e^w itself would overflow.
double lambert_w_log_domain(double log_z) {
  double w = log_z - std::log(log_z);
  for (int i = 0; i < kMaxHalley; ++i) {
    const double next = w * (1.0 + log_z - std::log(w)) / (1.0 + w);
    if (close_enough(next, w)) return next;
    w = next;
  }
  return w;
}

}  // namespace

double lambert_w(double z) {
  if (!std::isfinite(z) || z < 0.0) {
    throw DomainError("lambert_w: argument must be finite and >= 0, got " +
                      std::to_string(z));
  }
  if (z == 0.0) return 0.0;
  if (z > 1e300) return lambert_w_log_domain(std::log(z));

  double w;
  if (z < 1.0) {
    w = z;
  } else if (z < std::numbers::e) {
    // Linear between W(1) = 0.567... and W(e) = 1.
    w = 0.5671432904097838 +
        (z - 1.0) * (1.0 - 0.5671432904097838) / (std::numbers::e - 1.0);
  } else {
    const double lz = std::log(z);
    w = lz - std::log(lz);
  }

  for (int i = 0; i < kMaxHalley; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double next = w - f / denom;
    if (close_enough(next, w)) return next;
    w = next;
  }
  return w;
}

double lambert_w_exp(double x) {
  if (!std::isfinite(x)) {
    throw DomainError("lambert_w_exp: argument must be finite");
  }
  if (x > 700.0) return lambert_w_log_domain(x);
  // W(z) ~ z for tiny z; exp underflows gracefully to a subnormal or zero.
  if (x < -700.0) return std::exp(x);
  return lambert_w(std::exp(x));
}

double log_sum_exp(std::span<const double> theta) {
  if (theta.empty()) throw DomainError("log_sum_exp: empty vector");
  const double m = *std::max_element(theta.begin(), theta.end());
  if (!std::isfinite(m)) throw DomainError("log_sum_exp: non-finite entry");
  double s = 0.0;
  for (double t : theta) s += std::exp(t - m);
  return m + std::log(s);
}

BisectionResult bisect(const std::function<double(double)>& f, double lo,
                       double hi, const BisectionConfig& cfg) {
  if (!(cfg.abs_tol > 0.0) || !(cfg.residual_tol > 0.0) || cfg.max_iter < 1) {
    throw DomainError("bisect: invalid configuration");
  }
  if (!(lo < hi)) throw DomainError("bisect: need lo < hi");

  double f_lo = f(lo);
  double f_hi = f(hi);
  for (int i = 0; i < kMaxExpansions && (f_lo < 0.0 || f_hi > 0.0); ++i) {
    const double width = hi - lo;
    if (f_lo < 0.0) {
      lo -= width;
      f_lo = f(lo);
    }
    if (f_hi > 0.0) {
      hi += width;
      f_hi = f(hi);
    }
  }
  if (f_lo < 0.0 || f_hi > 0.0 || std::isnan(f_lo) || std::isnan(f_hi)) {
    throw NoRootError("bisect: no sign change on [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  }

  BisectionResult out;
  out.lo = lo;
  out.hi = hi;

  double best = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  double best_f = std::min(std::abs(f_lo), std::abs(f_hi));
  int it = 0;
  bool done = false;
  for (; it < cfg.max_iter; ++it) {
    if (hi - lo <= cfg.abs_tol) {
      done = true;
      break;
    }
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) {  // one ulp apart
      done = true;
      break;
    }
    const double fm = f(mid);
    if (std::isnan(fm)) {
      throw ConvergenceError("bisect: f returned NaN", best);
    }
    if (std::abs(fm) < best_f || (std::abs(fm) == best_f)) {
      best = mid;
      best_f = std::abs(fm);
    }
    if (fm == 0.0) {
      done = true;
      break;
    }
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  out.root = best;
  out.residual = best_f;
  out.iterations = it;
  if (!done && best_f > cfg.residual_tol) {
    throw ConvergenceError("bisect: max_iter reached with residual " +
                               std::to_string(best_f),
                           best);
  }
  return out;
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: h must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvaluationError(
          "finite_diff_grad: non-finite value at coordinate " +
              std::to_string(i),
          i);
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace fitzloss::numeric
