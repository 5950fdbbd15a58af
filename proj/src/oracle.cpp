#include "fitzloss/oracle.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fitzloss/errors.hpp"
#include "fitzloss/numeric.hpp"

namespace fitzloss::oracle {

namespace {

void require_nonnegative(std::span<const double> v, const char* who) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      throw DomainError(std::string(who) + ": entries must be finite and >= 0");
    }
  }
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Enumerates compositions n_0 + ... + n_{k-1} = total in lexicographic order.
template <typename Visit>
void for_each_composition(std::vector<int>& parts, std::size_t pos,
                          int remaining, Visit&& visit) {
  if (pos + 1 == parts.size()) {
    parts[pos] = remaining;
    visit(parts);
    return;
  }
  for (int n = 0; n <= remaining; ++n) {
    parts[pos] = n;
    for_each_composition(parts, pos + 1, remaining - n, visit);
  }
}

}  // namespace

double potential(Potential p, std::span<const double> y,
                 const NegentropySpec& neg) {
  double s = 0.0;
  if (p == Potential::squared) {
    for (double v : y) s += 0.5 * v * v;
    return s;
  }
  require_nonnegative(y, "potential");
  for (double v : y) s += xlogx(v) - neg.alpha * v;
  return s;
}

double bregman(Potential p, std::span<const double> y,
               std::span<const double> y_prime, const NegentropySpec&) {
  if (y.size() != y_prime.size()) {
    throw DimensionMismatchError("bregman: size mismatch");
  }
  double s = 0.0;
  if (p == Potential::squared) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - y_prime[i];
      s += 0.5 * d * d;
    }
    return s;
  }
  require_nonnegative(y, "bregman");
  require_nonnegative(y_prime, "bregman");
  // The linear term -alpha sum y_i cancels in the divergence.
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y_prime[i] == 0.0) return std::numeric_limits<double>::infinity();
    if (y[i] > 0.0) s += y[i] * std::log(y[i] / y_prime[i]);
    s -= y[i] - y_prime[i];
  }
  return s;
}

GridMaximum shifted_conjugate_grid(Potential p, std::span<const double> y,
                                   std::span<const double> theta,
                                   const GridConfig& cfg) {
  const std::size_t k = y.size();
  if (theta.size() != k) {
    throw DimensionMismatchError("shifted_conjugate_grid: size mismatch");
  }
  if (cfg.resolution < 10 || cfg.k_max < 2 || cfg.k_max > 3) {
    throw DomainError("shifted_conjugate_grid: invalid grid configuration");
  }
  if (k < 2 || k > static_cast<std::size_t>(cfg.k_max)) {
    throw DomainError("shifted_conjugate_grid: unsupported dimension k=" +
                      std::to_string(k));
  }
  const ProbVector target(std::vector<double>(y.begin(), y.end()));

  const double denom = cfg.resolution + 0.5 * static_cast<double>(k);
  std::vector<int> parts(k);
  std::vector<double> point(k);
  std::vector<double> best_point;
  double best = -std::numeric_limits<double>::infinity();

  for_each_composition(parts, 0, cfg.resolution, [&](const std::vector<int>& n) {
    for (std::size_t j = 0; j < k; ++j) point[j] = (n[j] + 0.5) / denom;
    double objective = 0.0;
    for (std::size_t j = 0; j < k; ++j) objective += point[j] * theta[j];
    objective -= potential(p, point) + bregman(p, target, point);
    if (objective > best) {
      best = objective;
      best_point = point;
    }
  });
  return {best, ProbVector::unchecked(std::move(best_point))};
}

double fitz_value_by_grid(Potential p, std::span<const double> y,
                          std::span<const double> theta,
                          const GridConfig& cfg) {
  const GridMaximum m = shifted_conjugate_grid(p, y, theta, cfg);
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * theta[i];
  return potential(p, y) + m.value - inner;
}

double lower_bound_quadratic(Potential p, std::span<const double> y,
                             std::span<const double> y_star) {
  if (y.size() != y_star.size()) {
    throw DimensionMismatchError("lower_bound_quadratic: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_star[i];
    if (p == Potential::squared) {
      s += d * d;
    } else if (y_star[i] > 0.0) {
      s += d * d / y_star[i];
    } else if (d != 0.0) {
      throw DomainError(
          "lower_bound_quadratic: zero y* entry with nonzero y entry");
    }
  }
  return s;
}

StationaryFitz separable_stationary_fitz(Potential p,
                                         std::span<const double> y,
                                         std::span<const double> theta,
                                         const NegentropySpec& neg) {
  if (y.size() != theta.size()) {
    throw DimensionMismatchError("separable_stationary_fitz: size mismatch");
  }
  numeric::BisectionConfig cfg;
  cfg.abs_tol = 1e-15;
  cfg.max_iter = 400;

  StationaryFitz out;
  out.y_star.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yi = y[i];
    const double ti = theta[i];
    double ys;
    double grad;
    double hess;
    if (p == Potential::squared) {
      // (y' - y) - (theta - y'), negated so the residual decreases.
      auto f = [&](double v) { return -((v - yi) - (ti - v)); };
      ys = numeric::bisect(f, std::min(yi, ti) - 1.0, std::max(yi, ti) + 1.0,
                           cfg)
               .root;
      grad = ys;
      hess = 1.0;
    } else {
      if (yi < 0.0) throw DomainError("separable_stationary_fitz: y < 0");
      // In t = log y': (1 - y e^{-t}) - (theta - t - 1 + alpha), increasing.
      auto f = [&](double t) {
        return -((1.0 - yi * std::exp(-t)) - (ti - t - 1.0 + neg.alpha));
      };
      const double center = ti - 2.0 + neg.alpha;
      const double t = numeric::bisect(f, center - 4.0, center + 4.0, cfg).root;
      ys = std::exp(t);
      grad = t + 1.0 - neg.alpha;
      hess = 1.0 / ys;
    }
    out.y_star[i] = ys;
    out.value_inner += (ys - yi) * (ti - grad);
    out.value_quadratic += (ys - yi) * hess * (ys - yi);
  }
  return out;
}

}  // namespace fitzloss::oracle
