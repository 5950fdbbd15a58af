#include "fitzloss/train.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>

namespace fitzloss::train {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace

// ---------------------------------------------------------------------------

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), v_(std::move(values)) {
  if (v_.size() != rows * cols) {
    throw DimensionMismatchError("WeightMatrix: expected " +
                                 std::to_string(rows * cols) + " values");
  }
}

double WeightMatrix::squared_norm() const noexcept { return dot(v_, v_); }

std::vector<double> WeightMatrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw DimensionMismatchError("WeightMatrix::apply: x has " +
                                 std::to_string(x.size()) + " entries, expected " +
                                 std::to_string(cols_));
  }
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    out[r] = dot(std::span<const double>(v_).subspan(r * cols_, cols_), x);
  }
  return out;
}

// ---------------------------------------------------------------------------

ObjectiveValue objective(const WeightMatrix& w, const data::Dataset& data,
                         std::span<const std::size_t> rows,
                         const TrainConfig& cfg) {
  const std::size_t k = data.k;
  const std::size_t d = data.d;
  if (w.rows() != k || w.cols() != d) {
    throw DimensionMismatchError("objective: W is " + std::to_string(w.rows()) +
                                 "x" + std::to_string(w.cols()) +
                                 ", data needs " + std::to_string(k) + "x" +
                                 std::to_string(d));
  }

  // Per-sample values and score gradients, then a reduction in row order.
  const std::size_t n = rows.size();
  std::vector<double> values(n);
  std::vector<double> score_grads(n * k);
  std::vector<std::exception_ptr> errors(n);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      try {
        const std::size_t i = rows[s];
        const std::vector<double> theta = w.apply(data.x(i));
        LossEvaluation ev = evaluate(cfg.loss, data.labels[i], theta, cfg.solver);
        values[s] = ev.value;
        std::copy(ev.gradient.begin(), ev.gradient.end(),
                  score_grads.begin() + static_cast<std::ptrdiff_t>(s * k));
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(cfg.workers, 1)),
                              1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t t = 0; t < workers; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  for (std::size_t s = 0; s < n; ++s) {
    if (!errors[s]) continue;
    try {
      std::rethrow_exception(errors[s]);
    } catch (const std::exception& ex) {
      throw Error("objective: sample " + std::to_string(rows[s]) + ": " +
                  ex.what());
    }
  }

  ObjectiveValue out;
  out.grad = WeightMatrix(k, d);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    total += values[s];
    const auto x = data.x(rows[s]);
    for (std::size_t r = 0; r < k; ++r) {
      const double g = score_grads[s * k + r];
      if (g == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) out.grad(r, c) += g * x[c];
    }
  }
  total += 0.5 * cfg.lambda * w.squared_norm();
  const auto wf = w.flat();
  auto gf = out.grad.flat();
  for (std::size_t j = 0; j < wf.size(); ++j) gf[j] += cfg.lambda * wf[j];
  out.value = total;
  return out;
}

// ---------------------------------------------------------------------------
// L-BFGS

namespace {

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  ///< directional derivative g(x + alpha d) . d
  std::vector<double> x;
  std::vector<double> g;
};

class LineSearch {
 public:
  LineSearch(const Objective& fg, const LbfgsOptions& opts, int& evaluations)
      : fg_(fg), opts_(opts), evaluations_(evaluations) {}

  /// Strong-Wolfe search along d from (x, f, g). Returns the accepted probe,
  /// or nullopt when no point with sufficient decrease was found.
  std::optional<Probe> run(const std::vector<double>& x, double f,
                           const std::vector<double>& g,
                           const std::vector<double>& d, double alpha0) {
    x0_ = &x;
    d_ = &d;
    f0_ = f;
    slope0_ = dot(g, d);

    Probe prev{0.0, f, slope0_, x, g};
    double alpha = alpha0;
    for (int i = 0; i < opts_.max_line_search; ++i) {
      Probe cur = probe(alpha);
      if (!armijo(cur) || (i > 0 && higher(cur, prev))) {
        return zoom(std::move(prev), std::move(cur));
      }
      if (std::abs(cur.slope) <= -opts_.c2 * slope0_) return cur;
      if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev));
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return prev.alpha > 0.0 ? std::optional<Probe>(std::move(prev))
                            : std::nullopt;
  }

 private:
  Probe probe(double alpha) {
    Probe p;
    p.alpha = alpha;
    p.x.resize(x0_->size());
    p.g.resize(x0_->size());
    for (std::size_t j = 0; j < p.x.size(); ++j) {
      p.x[j] = (*x0_)[j] + alpha * (*d_)[j];
    }
    p.f = fg_(p.x, p.g);
    ++evaluations_;
    p.slope = dot(p.g, *d_);
    if (!std::isfinite(p.f) || !std::isfinite(p.slope)) {
      p.f = std::numeric_limits<double>::infinity();
      p.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return p;
  }

  // Sufficient decrease. Near a minimizer the required decrease can drop
  // below the resolution of f, in which case not increasing f is enough.
  bool armijo(const Probe& p) const {
    const double required = opts_.c1 * p.alpha * slope0_;
    if (p.f <= f0_ + required) return true;
    return p.f <= f0_ && -required <= noise();
  }

  // a.f above b.f by more than rounding; inside the noise band the slope
  // tests in run() and zoom() decide instead.
  bool higher(const Probe& a, const Probe& b) const {
    return a.f - b.f > noise();
  }

  double noise() const {
    return 8.0 * std::numeric_limits<double>::epsilon() *
           std::max(1.0, std::abs(f0_));
  }

  static double interpolate(const Probe& a, const Probe& b) {
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    const double width = hi - lo;
    const double mid = lo + 0.5 * width;
    if (!std::isfinite(a.f) || !std::isfinite(b.f) ||
        !std::isfinite(a.slope) || !std::isfinite(b.slope)) {
      return mid;
    }
    // Cubic through both values and slopes.
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc < 0.0) return mid;
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double alpha = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) /
                                       (b.slope - a.slope + 2.0 * d2);
    if (!std::isfinite(alpha)) return mid;
    return std::clamp(alpha, lo + 0.1 * width, hi - 0.1 * width);
  }

  std::optional<Probe> zoom(Probe lo, Probe hi) {
    for (int j = 0; j < opts_.max_line_search; ++j) {
      if (std::abs(hi.alpha - lo.alpha) <=
          1e-16 * std::max(1.0, std::abs(lo.alpha))) {
        break;
      }
      Probe cur = probe(interpolate(lo, hi));
      if (!armijo(cur) || higher(cur, lo)) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -opts_.c2 * slope0_) return cur;
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = std::move(lo);
      lo = std::move(cur);
    }
    // lo always satisfies sufficient decrease; accept it if it moved.
    if (lo.alpha > 0.0 && lo.f <= f0_) return lo;
    return std::nullopt;
  }

  const Objective& fg_;
  const LbfgsOptions& opts_;
  int& evaluations_;
  const std::vector<double>* x0_ = nullptr;
  const std::vector<double>* d_ = nullptr;
  double f0_ = 0.0;
  double slope0_ = 0.0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& fg, std::vector<double> x0,
                           const LbfgsOptions& opts) {
  if (opts.memory < 1 || opts.max_iter < 0 || !(opts.grad_tol >= 0.0)) {
    throw DomainError("minimize_lbfgs: invalid options");
  }
  LbfgsResult res;
  res.x = std::move(x0);
  const std::size_t n = res.x.size();
  std::vector<double> g(n);
  double f = fg(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(f) || !all_finite(g)) {
    throw OptimizationError("minimize_lbfgs: non-finite objective at start",
                            res.x);
  }
  res.trace.push_back(f);

  const double g0 = norm(g);
  if (g0 == 0.0) {
    res.converged = true;
    return res;
  }

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n);
  std::vector<double> alpha_tmp;
  LineSearch search(fg, opts, res.evaluations);

  res.relative_grad_norm = 1.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (res.relative_grad_norm <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion: d = -H g.
    for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
    const std::size_t m = s_hist.size();
    alpha_tmp.assign(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
      alpha_tmp[i] = rho_hist[i] * dot(s_hist[i], d);
      for (std::size_t j = 0; j < n; ++j) d[j] -= alpha_tmp[i] * y_hist[i][j];
    }
    if (m > 0) {
      const double gamma =
          dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], d);
      for (std::size_t j = 0; j < n; ++j) {
        d[j] += (alpha_tmp[i] - beta) * s_hist[i][j];
      }
    }
    if (!(dot(d, g) < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
    }

    const double alpha0 = s_hist.empty() ? 1.0 / norm(g) : 1.0;
    std::optional<Probe> step = search.run(res.x, f, g, d, alpha0);
    if (!step && !s_hist.empty()) {
      // Retry once along steepest descent with fresh memory.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
      step = search.run(res.x, f, g, d, 1.0 / norm(g));
    }
    if (!step) {
      throw OptimizationError(
          "minimize_lbfgs: line search failed at iteration " +
              std::to_string(it) + " (relative gradient norm " +
              std::to_string(res.relative_grad_norm) + ")",
          res.x);
    }

    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = step->x[j] - res.x[j];
      y[j] = step->g[j] - g[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > static_cast<std::size_t>(opts.memory)) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    res.x = std::move(step->x);
    g = std::move(step->g);
    f = step->f;
    res.trace.push_back(f);
    res.iterations = it + 1;
    res.relative_grad_norm = norm(g) / g0;
  }
  if (res.relative_grad_norm <= opts.grad_tol) res.converged = true;
  return res;
}

TrainResult lbfgs_minimize(const data::Dataset& data,
                           std::span<const std::size_t> rows,
                           const TrainConfig& cfg) {
  if (!(cfg.lambda > 0.0) || cfg.lbfgs_memory < 1) {
    throw DomainError("lbfgs_minimize: need lambda > 0 and lbfgs_memory >= 1");
  }
  const std::size_t k = data.k;
  const std::size_t d = data.d;
  Objective fg = [&](std::span<const double> x, std::span<double> grad) {
    const WeightMatrix w(k, d, std::vector<double>(x.begin(), x.end()));
    ObjectiveValue ov = objective(w, data, rows, cfg);
    std::copy(ov.grad.flat().begin(), ov.grad.flat().end(), grad.begin());
    return ov.value;
  };
  LbfgsOptions opts;
  opts.memory = cfg.lbfgs_memory;
  opts.grad_tol = cfg.grad_tol;
  opts.max_iter = cfg.max_iter;

  LbfgsResult r = minimize_lbfgs(fg, std::vector<double>(k * d, 0.0), opts);
  TrainResult out;
  out.weights = WeightMatrix(k, d, std::move(r.x));
  out.trace = std::move(r.trace);
  out.iterations = r.iterations;
  out.relative_grad_norm = r.relative_grad_norm;
  out.converged = r.converged;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> predict(const WeightMatrix& w, std::span<const double> x,
                            const LossSpec& loss) {
  return link(loss.generator, w.apply(x));
}

double mse(std::span<const std::vector<double>> predictions,
           std::span<const std::vector<double>> targets) {
  if (predictions.size() != targets.size()) {
    throw DimensionMismatchError("mse: " + std::to_string(predictions.size()) +
                                 " predictions vs " +
                                 std::to_string(targets.size()) + " targets");
  }
  if (predictions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != targets[i].size()) {
      throw DimensionMismatchError("mse: dimension mismatch at row " +
                                   std::to_string(i));
    }
    for (std::size_t j = 0; j < targets[i].size(); ++j) {
      const double e = predictions[i][j] - targets[i][j];
      total += e * e;
    }
  }
  return total / static_cast<double>(predictions.size());
}

double split_mse(const WeightMatrix& w, const data::Dataset& data,
                 std::span<const std::size_t> rows, const LossSpec& loss) {
  std::vector<std::vector<double>> preds;
  std::vector<std::vector<double>> targets;
  preds.reserve(rows.size());
  targets.reserve(rows.size());
  for (std::size_t i : rows) {
    preds.push_back(predict(w, data.x(i), loss));
    targets.push_back(data.labels[i].values());
  }
  return mse(preds, targets);
}

}  // namespace fitzloss::train
