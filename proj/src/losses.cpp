#include "fitzloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fitzloss/errors.hpp"

namespace fitzloss {

namespace {

constexpr std::string_view kFitzPrefix = "fitzpatrick-";

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void require_same_size(std::span<const double> y,
                       std::span<const double> theta) {
  if (y.size() != theta.size()) {
    throw DimensionMismatchError("loss: y has " + std::to_string(y.size()) +
                                 " entries but theta has " +
                                 std::to_string(theta.size()));
  }
  if (theta.empty()) throw DomainError("loss: empty vectors");
  for (double t : theta) {
    if (!std::isfinite(t)) throw DomainError("loss: non-finite theta");
  }
}

void require_finite(std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) throw InfeasibleTargetError("loss: non-finite y");
  }
}

// Validated (and snapped) copy of a simplex target.
ProbVector simplex_target(std::span<const double> y,
                          std::span<const double> theta) {
  require_same_size(y, theta);
  return ProbVector(std::vector<double>(y.begin(), y.end()));
}

std::vector<double> difference(std::span<const double> a,
                               std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double nonneg(double v) { return v < 0.0 ? 0.0 : v; }

}  // namespace

// ---------------------------------------------------------------------------

std::string_view generator_name(Generator g) {
  switch (g) {
    case Generator::squared:
      return "squared";
    case Generator::perceptron:
      return "perceptron";
    case Generator::sparsemax:
      return "sparsemax";
    case Generator::logistic:
      return "logistic";
  }
  return "unknown";
}

Generator parse_generator(std::string_view name) {
  for (Generator g : {Generator::squared, Generator::perceptron,
                      Generator::sparsemax, Generator::logistic}) {
    if (generator_name(g) == name) return g;
  }
  throw DomainError("unknown generator '" + std::string(name) + "'");
}

LossSpec LossSpec::parse(std::string_view name) {
  LossSpec spec;
  if (name.starts_with(kFitzPrefix)) {
    spec.family = Family::fitzpatrick;
    name.remove_prefix(kFitzPrefix.size());
  }
  spec.generator = parse_generator(name);
  return spec;
}

std::string LossSpec::name() const {
  std::string out =
      family == Family::fitzpatrick ? std::string(kFitzPrefix) : std::string();
  out += generator_name(generator);
  return out;
}

std::vector<LossSpec> all_loss_specs() {
  std::vector<LossSpec> specs;
  for (Generator g : {Generator::squared, Generator::perceptron,
                      Generator::sparsemax, Generator::logistic}) {
    specs.push_back({g, Family::fenchel_young});
    specs.push_back({g, Family::fitzpatrick});
  }
  return specs;
}

std::vector<double> link(Generator g, std::span<const double> theta) {
  switch (g) {
    case Generator::squared:
      for (double t : theta) {
        if (!std::isfinite(t)) throw DomainError("link: non-finite theta");
      }
      return {theta.begin(), theta.end()};
    case Generator::perceptron:
      return argmax_vertex(theta).values();
    case Generator::sparsemax:
      return project_simplex(theta).values();
    case Generator::logistic:
      return softargmax(theta).values();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Fenchel-Young

double sparsemax_conjugate(std::span<const double> theta) {
  const ProbVector y_hat = project_simplex(theta);
  return dot(y_hat, theta) - 0.5 * squared_norm(y_hat);
}

double fy_value(Generator g, std::span<const double> y,
                std::span<const double> theta) {
  if (g == Generator::squared) {
    require_same_size(y, theta);
    require_finite(y);
    return 0.5 * squared_norm(difference(y, theta));
  }
  const ProbVector target = simplex_target(y, theta);
  switch (g) {
    case Generator::perceptron: {
      const double m = *std::max_element(theta.begin(), theta.end());
      return nonneg(m - dot(target, theta));
    }
    case Generator::sparsemax: {
      // Omega(y) + Omega*(theta) - <y, theta>, grouped so that the value is
      // exactly zero whenever P(theta) == y bitwise.
      const ProbVector y_hat = project_simplex(theta);
      const double v =
          dot(difference(y_hat, target), theta) +
          0.5 * (squared_norm(target) - squared_norm(y_hat));
      return nonneg(v);
    }
    case Generator::logistic: {
      double neg_entropy = 0.0;
      for (double v : target) {
        if (v > 0.0) neg_entropy += v * std::log(v);
      }
      return nonneg(numeric::log_sum_exp(theta) + neg_entropy -
                    dot(target, theta));
    }
    case Generator::squared:
      break;
  }
  return 0.0;
}

std::vector<double> fy_grad(Generator g, std::span<const double> y,
                            std::span<const double> theta) {
  if (g == Generator::squared) {
    require_same_size(y, theta);
    require_finite(y);
    return difference(theta, y);
  }
  const ProbVector target = simplex_target(y, theta);
  return difference(link(g, theta), target);
}

// ---------------------------------------------------------------------------
// Fitzpatrick: closed forms

FitzResult fitz_squared(std::span<const double> y,
                        std::span<const double> theta) {
  require_same_size(y, theta);
  require_finite(y);
  FitzResult out;
  out.y_star.resize(y.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.y_star[i] = 0.5 * (y[i] + theta[i]);
    const double d = y[i] - theta[i];
    sq += d * d;
  }
  out.value = 0.25 * sq;
  return out;
}

SimplexFitzResult fitz_perceptron(std::span<const double> y,
                                  std::span<const double> theta) {
  const ProbVector target = simplex_target(y, theta);
  const double m = *std::max_element(theta.begin(), theta.end());
  return {nonneg(m - dot(target, theta)), argmax_vertex(theta)};
}

SimplexFitzResult fitz_sparsemax(std::span<const double> y,
                                 std::span<const double> theta) {
  const ProbVector target = simplex_target(y, theta);
  std::vector<double> mid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    mid[i] = 0.5 * (target[i] + theta[i]);
  }
  ProbVector y_star = project_simplex(mid);
  double v = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    v += (y_star[i] - target[i]) * (theta[i] - y_star[i]);
  }
  return {nonneg(v), std::move(y_star)};
}

double fitz_sparsemax_conjugate_form(std::span<const double> y,
                                     std::span<const double> theta) {
  const ProbVector target = simplex_target(y, theta);
  std::vector<double> mid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    mid[i] = 0.5 * (target[i] + theta[i]);
  }
  return 2.0 * sparsemax_conjugate(mid) - dot(target, theta);
}

// ---------------------------------------------------------------------------
// Fitzpatrick logistic

namespace {

// For a trial multiplier l, log y*_i = theta_i - l + w_i where
// w_i = W(y_i e^{l - theta_i}) for y_i > 0 and w_i = 0 otherwise. This
// follows from log W(z) = log z - W(z) and avoids both overflow of the W
// argument and the division y_i / W.
void log_maximizer(const ProbVector& y, std::span<const double> theta,
                   double lambda, std::vector<double>& w,
                   std::vector<double>& log_y_star) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    w[i] = y[i] > 0.0
               ? numeric::lambert_w_exp(std::log(y[i]) + lambda - theta[i])
               : 0.0;
    log_y_star[i] = theta[i] - lambda + w[i];
  }
}

}  // namespace

std::pair<double, double> fitz_logistic_bracket(
    std::span<const double> y, std::span<const double> theta) {
  const ProbVector target = simplex_target(y, theta);
  const double lo = numeric::log_sum_exp(theta);

  std::vector<double> zero_theta;
  double support_term = -std::numeric_limits<double>::infinity();
  const auto support = static_cast<double>(target.support_size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 0.0) {
      zero_theta.push_back(theta[i]);
    } else {
      support_term =
          std::max(support_term, theta[i] + 2.0 * support * target[i]);
    }
  }
  support_term += std::log(support);
  const double zero_term = zero_theta.empty()
                               ? -std::numeric_limits<double>::infinity()
                               : numeric::log_sum_exp(zero_theta);
  const double hi = std::numbers::ln2 + std::max(zero_term, support_term);
  return {lo, hi};
}

FitzSolveResult fitz_logistic_solve(std::span<const double> y,
                                    std::span<const double> theta,
                                    const numeric::BisectionConfig& cfg) {
  const ProbVector target = simplex_target(y, theta);
  const auto [lo, hi] = fitz_logistic_bracket(target, theta);

  const std::size_t k = target.size();
  std::vector<double> w(k);
  std::vector<double> log_y_star(k);
  auto residual = [&](double lambda) {
    log_maximizer(target, theta, lambda, w, log_y_star);
    double s = 0.0;
    for (double l : log_y_star) s += std::exp(l);
    return s - 1.0;
  };

  numeric::BisectionResult root;
  if (hi > lo) {
    root = numeric::bisect(residual, lo, hi, cfg);
  } else {
    // Degenerate bracket (lo == hi up to rounding).
    root.root = lo;
    root.residual = std::abs(residual(lo));
  }

  FitzSolveResult out;
  out.lambda_star = root.root;
  out.iterations = root.iterations;
  out.bracket = {lo, hi};
  const double r = residual(root.root);
  out.residual = std::abs(r);
  if (out.residual > cfg.residual_tol) {
    throw ConvergenceError("fitz_logistic_solve: residual " +
                               std::to_string(out.residual) +
                               " above tolerance",
                           root.root);
  }
  std::vector<double> y_star(k);
  for (std::size_t i = 0; i < k; ++i) y_star[i] = std::exp(log_y_star[i]);
  out.y_star = ProbVector::unchecked(std::move(y_star));
  out.log_y_star = std::move(log_y_star);
  return out;
}

double fitz_logistic_value(std::span<const double> y,
                           std::span<const double> theta,
                           const FitzSolveResult& solve) {
  const ProbVector target = simplex_target(y, theta);
  // <y* - y, theta - log y* - 1>, plus (lambda - 2)(1 - sum y*). The extra
  // term is zero at the exact root and makes the value stationary in
  // lambda, so root error enters only at second order.
  double v = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double ys = solve.y_star[i];
    v += (ys - target[i]) * (theta[i] - solve.log_y_star[i] - 1.0);
    mass += ys;
  }
  v += (solve.lambda_star - 2.0) * (1.0 - mass);
  return nonneg(v);
}

SimplexFitzResult fitz_logistic(std::span<const double> y,
                                std::span<const double> theta,
                                const numeric::BisectionConfig& cfg) {
  FitzSolveResult solve = fitz_logistic_solve(y, theta, cfg);
  const double v = fitz_logistic_value(y, theta, solve);
  return {v, std::move(solve.y_star)};
}

// ---------------------------------------------------------------------------

double fitz_value(Generator g, std::span<const double> y,
                  std::span<const double> theta) {
  switch (g) {
    case Generator::squared:
      return fitz_squared(y, theta).value;
    case Generator::perceptron:
      return fitz_perceptron(y, theta).value;
    case Generator::sparsemax:
      return fitz_sparsemax(y, theta).value;
    case Generator::logistic:
      return fitz_logistic(y, theta).value;
  }
  return 0.0;
}

std::vector<double> fitz_grad(Generator g, std::span<const double> y,
                              std::span<const double> theta) {
  switch (g) {
    case Generator::squared:
      return difference(fitz_squared(y, theta).y_star, y);
    case Generator::perceptron:
      return difference(fitz_perceptron(y, theta).y_star,
                        simplex_target(y, theta));
    case Generator::sparsemax:
      return difference(fitz_sparsemax(y, theta).y_star,
                        simplex_target(y, theta));
    case Generator::logistic:
      return difference(fitz_logistic(y, theta).y_star,
                        simplex_target(y, theta));
  }
  return {};
}

LossEvaluation evaluate(const LossSpec& spec, std::span<const double> y,
                        std::span<const double> theta,
                        const numeric::BisectionConfig& cfg) {
  LossEvaluation out;
  const Generator g = spec.generator;
  out.link = link(g, theta);

  if (spec.family == Family::fenchel_young) {
    out.value = fy_value(g, y, theta);
    out.gradient = fy_grad(g, y, theta);
    return out;
  }

  if (g == Generator::squared) {
    FitzResult r = fitz_squared(y, theta);
    out.value = r.value;
    out.gradient = difference(r.y_star, y);
    out.y_star = std::move(r.y_star);
    return out;
  }

  const ProbVector target = simplex_target(y, theta);
  SimplexFitzResult r = [&]() -> SimplexFitzResult {
    if (g == Generator::logistic) {
      FitzSolveResult solve = fitz_logistic_solve(target, theta, cfg);
      SimplexFitzResult res{fitz_logistic_value(target, theta, solve),
                            solve.y_star};
      out.solve = std::move(solve);
      return res;
    }
    if (g == Generator::sparsemax) return fitz_sparsemax(target, theta);
    return fitz_perceptron(target, theta);
  }();
  out.value = r.value;
  out.gradient = difference(r.y_star, target);
  out.y_star = r.y_star.values();
  return out;
}

double loss_value(const LossSpec& spec, std::span<const double> y,
                  std::span<const double> theta) {
  return spec.family == Family::fenchel_young
             ? fy_value(spec.generator, y, theta)
             : fitz_value(spec.generator, y, theta);
}

std::vector<double> loss_grad(const LossSpec& spec, std::span<const double> y,
                              std::span<const double> theta) {
  return spec.family == Family::fenchel_young
             ? fy_grad(spec.generator, y, theta)
             : fitz_grad(spec.generator, y, theta);
}

}  // namespace fitzloss
