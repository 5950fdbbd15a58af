#include <cmath>
#include <functional>
#include <sstream>

#include "fitzloss/cli.hpp"
#include "fitzloss/errors.hpp"
#include "fitzloss/numeric.hpp"
#include "fitzloss/oracle.hpp"
#include "fitzloss/random.hpp"
#include "fitzloss/sampling.hpp"
#include "fitzloss/simplex.hpp"

namespace fitzloss::cli {

namespace {

using Vec = std::vector<double>;

constexpr Generator kGenerators[] = {Generator::squared, Generator::perceptron,
                                     Generator::sparsemax, Generator::logistic};
constexpr Generator kSimplexGenerators[] = {
    Generator::perceptron, Generator::sparsemax, Generator::logistic};

std::string show(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Records how far each check lands past its tolerance. `excess` <= 0 passes.
class Tally {
 public:
  explicit Tally(SuiteResult& r) : r_(r) {}

  void check(double excess, const std::function<std::string()>& describe) {
    ++r_.checks;
    if (std::isnan(excess)) excess = INFINITY;
    if (excess > 0.0) {
      ++r_.failures;
      if (excess > worst_excess_) {
        worst_excess_ = excess;
        r_.counterexample = describe();
      }
    }
  }

  /// Error magnitude reported as "worst"; independent of pass/fail.
  void observe(double magnitude) {
    if (std::isnan(magnitude)) magnitude = INFINITY;
    r_.worst = std::max(r_.worst, magnitude);
  }

  void error(const std::string& what) {
    ++r_.checks;
    ++r_.failures;
    r_.worst = INFINITY;
    if (worst_excess_ < INFINITY) {
      worst_excess_ = INFINITY;
      r_.counterexample = what;
    }
  }

 private:
  SuiteResult& r_;
  double worst_excess_ = 0.0;
};

std::size_t pick_k(Rng& rng, const CheckOptions& opts) {
  return opts.k >= 2 ? opts.k : 2 + static_cast<std::size_t>(rng.below(9));
}

std::string describe(Generator g, const Vec& y, const Vec& theta,
                     const std::string& detail) {
  return "generator=" + std::string(generator_name(g)) + " y=" + show(y) +
         " theta=" + show(theta) + " " + detail;
}

std::string describe(const LossSpec& s, const Vec& y, const Vec& theta,
                     const std::string& detail) {
  return "loss=" + s.name() + " y=" + show(y) + " theta=" + show(theta) + " " +
         detail;
}

// Runs `body` per trial; any library error becomes a failed check.
template <class Body>
void trials(const CheckOptions& opts, Rng& rng, Tally& tally, SuiteResult& r,
            Body body) {
  for (std::size_t t = 0; t < opts.trials; ++t) {
    ++r.trials;
    Vec y;
    Vec theta;
    try {
      body(rng, y, theta);
    } catch (const Error& ex) {
      tally.error("y=" + show(y) + " theta=" + show(theta) + " error: " +
                  ex.what());
    }
  }
}

// 0 <= Fitzpatrick <= Fenchel-Young for every generator.
void suite_sandwich(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    y = sampling::simplex_with_zeros(g, k);
    theta = sampling::scores(g, k);
    for (Generator gen : kGenerators) {
      const double fy = fy_value(gen, y, theta);
      const double fz = fitz_value(gen, y, theta);
      const double excess = std::max(-fz, fz - fy);
      tally.observe(std::max(excess, 0.0));
      tally.check(excess - 1e-9, [&] {
        return describe(gen, y, theta,
                        "fy=" + std::to_string(fy) + " fitz=" + std::to_string(fz));
      });
    }
  });
}

// Squared: Fitzpatrick = FY / 2. Perceptron: equal. Sparsemax: the
// maximizer form equals the conjugate form.
void suite_identities(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    y = sampling::normal_vector(g, k, 1.0);
    theta = sampling::scores(g, k);
    const double sq = std::abs(fitz_squared(y, theta).value -
                               0.5 * fy_value(Generator::squared, y, theta));
    tally.observe(sq);
    tally.check(sq - 1e-12, [&] {
      return describe(Generator::squared, y, theta, "diff=" + std::to_string(sq));
    });

    y = sampling::simplex_with_zeros(g, k);
    const double pc = std::abs(fitz_perceptron(y, theta).value -
                               fy_value(Generator::perceptron, y, theta));
    tally.observe(pc);
    tally.check(pc - 1e-12, [&] {
      return describe(Generator::perceptron, y, theta, "diff=" + std::to_string(pc));
    });

    const double sp = std::abs(fitz_sparsemax(y, theta).value -
                               fitz_sparsemax_conjugate_form(y, theta));
    tally.observe(sp);
    tally.check(sp - 1e-10, [&] {
      return describe(Generator::sparsemax, y, theta, "diff=" + std::to_string(sp));
    });
  });
}

// Both losses vanish when the target is the link's own output.
void suite_link_zero(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    theta = sampling::scores(g, k);
    for (Generator gen : kGenerators) {
      y = link(gen, theta);
      const double fy = fy_value(gen, y, theta);
      const double fz = fitz_value(gen, y, theta);
      const double worst = std::max(std::abs(fy), std::abs(fz));
      tally.observe(worst);
      tally.check(worst - 1e-9, [&] {
        return describe(gen, y, theta,
                        "fy=" + std::to_string(fy) + " fitz=" + std::to_string(fz));
      });
    }
  });
}

// Central finite differences in theta against the analytic gradient.
void suite_gradients(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    for (const LossSpec& spec : all_loss_specs()) {
      y = spec.generator == Generator::squared
              ? sampling::normal_vector(g, k, 1.0)
              : sampling::interior_simplex(g, k);
      do {
        theta = sampling::scores(g, k);
      } while (spec.generator == Generator::perceptron &&
               sampling::top_gap(theta) < 1e-3);
      const Vec grad = loss_grad(spec, y, theta);
      const Vec fd = numeric::finite_diff_grad(
          [&](std::span<const double> t) { return loss_value(spec, y, t); },
          theta, 1e-6);
      Vec diff(k);
      for (std::size_t i = 0; i < k; ++i) diff[i] = fd[i] - grad[i];
      const double rel = max_abs(diff) / std::max(max_abs(grad), 1e-6);
      tally.observe(rel);
      tally.check(rel - 1e-4, [&] {
        return describe(spec, y, theta, "relative_error=" + std::to_string(rel));
      });
    }
  });
}

// Midpoint-style convexity in theta.
void suite_convexity(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    for (const LossSpec& spec : all_loss_specs()) {
      y = spec.generator == Generator::squared
              ? sampling::normal_vector(g, k, 1.0)
              : sampling::simplex_with_zeros(g, k);
      theta = sampling::scores(g, k);
      const Vec other = sampling::scores(g, k);
      const double t = g.uniform();
      Vec mid(k);
      for (std::size_t i = 0; i < k; ++i) {
        mid[i] = t * theta[i] + (1.0 - t) * other[i];
      }
      const double a = loss_value(spec, y, theta);
      const double b = loss_value(spec, y, other);
      const double m = loss_value(spec, y, mid);
      const double excess = m - (t * a + (1.0 - t) * b);
      tally.observe(std::max(excess, 0.0));
      tally.check(excess - 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b))),
                  [&] {
                    return describe(spec, y, theta,
                                    "other=" + show(other) +
                                        " t=" + std::to_string(t) +
                                        " excess=" + std::to_string(excess));
                  });
    }
  });
}

// Simplex-restricted losses ignore constant shifts of theta; the logistic
// root moves with the shift.
void suite_shift(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    y = sampling::simplex_with_zeros(g, k);
    theta = sampling::scores(g, k);
    const double c = g.uniform(-10.0, 10.0);
    Vec shifted = theta;
    for (auto& v : shifted) v += c;
    for (Generator gen : kSimplexGenerators) {
      for (Family fam : {Family::fenchel_young, Family::fitzpatrick}) {
        const LossSpec spec{gen, fam};
        const double a = loss_value(spec, y, theta);
        const double b = loss_value(spec, y, shifted);
        const double diff = std::abs(a - b);
        tally.observe(diff);
        tally.check(diff - 1e-9, [&] {
          return describe(spec, y, theta,
                          "shift=" + std::to_string(c) + " diff=" + std::to_string(diff));
        });
      }
    }
    const double l0 = fitz_logistic_solve(y, theta).lambda_star;
    const double l1 = fitz_logistic_solve(y, shifted).lambda_star;
    const double diff = std::abs(l1 - l0 - c);
    tally.observe(diff);
    tally.check(diff - 1e-8, [&] {
      return describe(Generator::logistic, y, theta,
                      "shift=" + std::to_string(c) + " root_diff=" + std::to_string(diff));
    });
  });
}

// Root residual, bracket membership and normalization of the logistic
// maximizer.
void suite_solver(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    y = sampling::simplex_with_zeros(g, k);
    theta = sampling::scores(g, k);
    const auto s = fitz_logistic_solve(y, theta);
    const auto [lo, hi] = fitz_logistic_bracket(y, theta);
    double sum = 0.0;
    double min_entry = 0.0;
    for (double v : s.y_star) {
      sum += v;
      min_entry = std::min(min_entry, v);
    }
    const double outside = std::max(lo - s.lambda_star, s.lambda_star - hi);
    tally.observe(std::abs(s.residual));
    tally.check(std::abs(s.residual) - 1e-10, [&] {
      return describe(Generator::logistic, y, theta,
                      "residual=" + std::to_string(s.residual));
    });
    tally.check(outside, [&] {
      return describe(Generator::logistic, y, theta,
                      "lambda=" + std::to_string(s.lambda_star) + " bracket=[" +
                          std::to_string(lo) + "," + std::to_string(hi) + "]");
    });
    tally.check(std::abs(sum - 1.0) - 1e-8, [&] {
      return describe(Generator::logistic, y, theta, "sum=" + std::to_string(sum));
    });
    tally.check(-min_entry, [&] {
      return describe(Generator::logistic, y, theta, "negative entry in y*");
    });
  });
}

// Closed forms against the exhaustive-grid construction for k in {2, 3}.
void suite_grid(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  if (opts.k != 0 && (opts.k < 2 || opts.k > 3)) {
    throw DomainError("grid suite supports k = 2 or 3");
  }
  oracle::GridConfig grid;
  grid.resolution = opts.resolution;
  const double tol = 5.0 / opts.resolution;
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = opts.k != 0 ? opts.k : 2 + g.below(2);
    y = sampling::simplex_with_zeros(g, k);
    theta = sampling::box_scores(g, k, 2.5);
    const struct {
      Generator gen;
      oracle::Potential pot;
    } pairs[] = {{Generator::sparsemax, oracle::Potential::squared},
                 {Generator::logistic, oracle::Potential::negentropy}};
    for (const auto& p : pairs) {
      const double closed = fitz_value(p.gen, y, theta);
      const double by_grid = oracle::fitz_value_by_grid(p.pot, y, theta, grid);
      const double diff = std::abs(closed - by_grid);
      tally.observe(diff);
      tally.check(diff - tol, [&] {
        return describe(p.gen, y, theta,
                        "closed=" + std::to_string(closed) +
                            " grid=" + std::to_string(by_grid));
      });
    }
  });
}

// Quadratic lower bound through the Hessian at the maximizer; tight for the
// unconstrained squared potential.
void suite_lower_bound(const CheckOptions& opts, Rng& rng, SuiteResult& r) {
  Tally tally(r);
  trials(opts, rng, tally, r, [&](Rng& g, Vec& y, Vec& theta) {
    const std::size_t k = pick_k(g, opts);
    y = sampling::simplex_with_zeros(g, k);
    theta = sampling::scores(g, k);

    const auto sp = fitz_sparsemax(y, theta);
    const double q_sp =
        oracle::lower_bound_quadratic(oracle::Potential::squared, y, sp.y_star);
    tally.observe(std::max(q_sp - sp.value, 0.0));
    tally.check(q_sp - sp.value - 1e-8, [&] {
      return describe(Generator::sparsemax, y, theta,
                      "quadratic=" + std::to_string(q_sp) + " loss=" + std::to_string(sp.value));
    });

    const auto lg = fitz_logistic(y, theta);
    const double q_lg = oracle::lower_bound_quadratic(
        oracle::Potential::negentropy, y, lg.y_star);
    tally.observe(std::max(q_lg - lg.value, 0.0));
    tally.check(q_lg - lg.value - 1e-8, [&] {
      return describe(Generator::logistic, y, theta,
                      "quadratic=" + std::to_string(q_lg) + " loss=" + std::to_string(lg.value));
    });

    y = sampling::normal_vector(g, k, 1.0);
    const auto sq = fitz_squared(y, theta);
    const double q_sq =
        oracle::lower_bound_quadratic(oracle::Potential::squared, y, sq.y_star);
    const double gap = std::abs(q_sq - sq.value);
    tally.observe(gap);
    tally.check(gap - 1e-12, [&] {
      return describe(Generator::squared, y, theta,
                      "quadratic=" + std::to_string(q_sq) + " loss=" + std::to_string(sq.value));
    });

    const auto st = oracle::separable_stationary_fitz(oracle::Potential::squared, y, theta);
    const double gap2 = std::abs(st.value_inner - sq.value);
    tally.observe(gap2);
    tally.check(gap2 - 1e-9, [&] {
      return describe(Generator::squared, y, theta,
                      "stationary=" + std::to_string(st.value_inner) +
                          " loss=" + std::to_string(sq.value));
    });
  });
}

using SuiteFn = void (*)(const CheckOptions&, Rng&, SuiteResult&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"sandwich", suite_sandwich},       {"identities", suite_identities},
      {"link-zero", suite_link_zero},     {"gradients", suite_gradients},
      {"convexity", suite_convexity},     {"shift", suite_shift},
      {"solver", suite_solver},           {"grid", suite_grid},
      {"lower-bound", suite_lower_bound},
  };
  return suites;
}

}  // namespace

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

SuiteResult run_suite(const std::string& name, const CheckOptions& opts) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    SuiteResult r;
    r.name = name;
    Rng rng(opts.seed ^ fnv1a(name));
    fn(opts, rng, r);
    return r;
  }
  throw DomainError("unknown suite '" + name + "'");
}

}  // namespace fitzloss::cli
