#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "fitzloss/cli.hpp"
#include "fitzloss/errors.hpp"
#include "fitzloss/simplex.hpp"
#include "json.hpp"

namespace fitzloss::cli {

namespace {

using nlohmann::json;

std::string format12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool try_parse_loss(const std::string& name, LossSpec& spec, std::ostream& err) {
  try {
    spec = LossSpec::parse(name);
    return true;
  } catch (const DomainError& ex) {
    err << "error: " << ex.what() << '\n';
    return false;
  }
}

const DatasetEntry& find_entry(const std::vector<DatasetEntry>& entries,
                               const std::string& name) {
  if (name.empty()) {
    if (entries.size() == 1) return entries.front();
    throw SchemaError("manifest lists several datasets; pass --dataset");
  }
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw SchemaError("dataset '" + name + "' not found in manifest");
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  LossSpec spec;
  if (!try_parse_loss(opts.loss, spec, err)) return kUsage;
  std::vector<double> y;
  std::vector<double> theta;
  try {
    y = parse_vector(opts.y);
    theta = parse_vector(opts.theta);
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }
  try {
    const ScoreVector th(theta);
    const LossEvaluation ev = evaluate(spec, y, th);
    json rec;
    rec["loss"] = spec.name();
    rec["value"] = ev.value;
    rec["gradient"] = ev.gradient;
    rec["link"] = ev.link;
    rec["y_star"] = ev.y_star ? json(*ev.y_star) : json(nullptr);
    if (ev.solve) {
      rec["lambda_star"] = ev.solve->lambda_star;
      rec["residual"] = ev.solve->residual;
      rec["iterations"] = ev.solve->iterations;
      rec["bracket"] = {ev.solve->bracket.first, ev.solve->bracket.second};
    }
    out << rec.dump() << '\n';
    return kSuccess;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kFailure;
  }
}

// ---------------------------------------------------------------------------

int cmd_curve(const CurveOptions& opts, std::ostream& out, std::ostream& err) {
  Generator g;
  try {
    g = parse_generator(opts.generator);
  } catch (const DomainError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }
  if (opts.k < 2 || opts.steps < 2 || !(opts.s_lo < opts.s_hi) ||
      !std::isfinite(opts.s_lo) || !std::isfinite(opts.s_hi)) {
    err << "error: need k >= 2, steps >= 2 and a finite range lo < hi\n";
    return kUsage;
  }
  std::ofstream file(opts.out);
  if (!file) {
    err << "error: cannot write " << opts.out.string() << '\n';
    return kFailure;
  }
  std::vector<double> y(opts.k, 0.0);
  y[0] = 1.0;
  std::vector<double> theta(opts.k, 0.0);
  std::size_t violations = 0;
  file << "s,fy_value,fitz_value\n";
  for (std::size_t i = 0; i < opts.steps; ++i) {
    const double s =
        i + 1 == opts.steps
            ? opts.s_hi
            : opts.s_lo + (opts.s_hi - opts.s_lo) * static_cast<double>(i) /
                              static_cast<double>(opts.steps - 1);
    theta[0] = s;
    double fy = 0.0;
    double fz = 0.0;
    try {
      fy = fy_value(g, y, theta);
      fz = fitz_value(g, y, theta);
    } catch (const Error& ex) {
      err << "error: s=" << format12(s) << ": " << ex.what() << '\n';
      return kFailure;
    }
    if (fz < 0.0 || fz > fy + 1e-9) {
      ++violations;
      err << "violation: s=" << format12(s) << " fy=" << format12(fy)
          << " fitz=" << format12(fz) << '\n';
    }
    file << format12(s) << ',' << format12(fy) << ',' << format12(fz) << '\n';
  }
  file.close();
  if (!file) {
    err << "error: failed writing " << opts.out.string() << '\n';
    return kFailure;
  }
  out << "wrote " << opts.steps << " rows to " << opts.out.string() << '\n';
  return violations == 0 ? kSuccess : kFailure;
}

// ---------------------------------------------------------------------------

int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<std::string> suites;
  if (opts.suite == "all") {
    suites = suite_names();
  } else {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), opts.suite) == names.end()) {
      err << "error: unknown suite '" << opts.suite << "'\n";
      return kUsage;
    }
    suites.push_back(opts.suite);
  }
  if (opts.k == 1 || opts.resolution < 1) {
    err << "error: need k >= 2 and resolution >= 1\n";
    return kUsage;
  }
  bool ok = true;
  for (const auto& name : suites) {
    SuiteResult r;
    try {
      r = run_suite(name, opts);
    } catch (const DomainError& ex) {
      err << "error: " << ex.what() << '\n';
      return kUsage;
    }
    out << name << ": trials=" << r.trials << " checks=" << r.checks
        << " failures=" << r.failures << " worst=" << format12(r.worst)
        << (r.failures == 0 ? " PASS" : " FAIL") << '\n';
    if (r.failures > 0) {
      ok = false;
      out << "  counterexample: " << r.counterexample << '\n';
    }
  }
  return ok ? kSuccess : kFailure;
}

// ---------------------------------------------------------------------------

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  LossSpec spec;
  if (!try_parse_loss(opts.loss, spec, err)) return kUsage;
  if (!(opts.lambda > 0.0) || !std::isfinite(opts.lambda) ||
      opts.max_iter < 1 || opts.memory < 1 || opts.workers < 1) {
    err << "error: need lambda > 0, max-iter >= 1, memory >= 1, workers >= 1\n";
    return kUsage;
  }
  data::Dataset ds;
  try {
    const auto entries = load_manifest(opts.manifest);
    ds = load_dataset(find_entry(entries, opts.dataset), opts.seed);
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const Error& ex) {
    err << "error: loading dataset: " << ex.what() << '\n';
    return kFailure;
  }
  train::TrainConfig cfg;
  cfg.loss = spec;
  cfg.lambda = opts.lambda;
  cfg.lbfgs_memory = opts.memory;
  cfg.grad_tol = opts.grad_tol;
  cfg.max_iter = opts.max_iter;
  cfg.seed = opts.seed;
  cfg.workers = opts.workers;
  try {
    const train::TrainResult res =
        train::lbfgs_minimize(ds, ds.splits.train, cfg);
    if (!opts.model_out.empty()) {
      write_model(opts.model_out, {res.weights, spec, opts.lambda, opts.seed});
    }
    json rec;
    rec["dataset"] = ds.name;
    rec["loss"] = spec.name();
    rec["lambda"] = opts.lambda;
    rec["seed"] = opts.seed;
    rec["iterations"] = res.iterations;
    rec["converged"] = res.converged;
    rec["relative_grad_norm"] = res.relative_grad_norm;
    rec["objective"] = res.trace.empty() ? 0.0 : res.trace.back();
    rec["train_mse"] = train::split_mse(res.weights, ds, ds.splits.train, spec);
    rec["dev_mse"] = train::split_mse(res.weights, ds, ds.splits.dev, spec);
    rec["test_mse"] = train::split_mse(res.weights, ds, ds.splits.test, spec);
    out << rec.dump() << '\n';
    return kSuccess;
  } catch (const Error& ex) {
    err << "error: training " << spec.name() << " on " << ds.name << ": "
        << ex.what() << '\n';
    return kFailure;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Cell {
  std::size_t dataset = 0;
  std::size_t loss = 0;
  std::size_t lambda = 0;
};

struct CellOutcome {
  bool ok = false;
  std::string error;
  train::WeightMatrix weights;
  double dev_mse = 0.0;
  double test_mse = 0.0;
  int iterations = 0;
  bool converged = false;
};

}  // namespace

int cmd_benchmark(const BenchmarkOptions& opts, std::ostream& out,
                  std::ostream& err) {
  std::vector<LossSpec> losses;
  for (const auto& name : opts.losses) {
    LossSpec spec;
    if (!try_parse_loss(name, spec, err)) return kUsage;
    losses.push_back(spec);
  }
  std::vector<double> grid = opts.lambda_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (losses.empty() || grid.empty() || opts.workers < 1 ||
      std::any_of(grid.begin(), grid.end(),
                  [](double l) { return !(l > 0.0) || !std::isfinite(l); })) {
    err << "error: need at least one loss, a nonempty grid of finite "
           "lambda > 0, and workers >= 1\n";
    return kUsage;
  }

  std::vector<DatasetEntry> entries;
  try {
    entries = load_manifest(opts.manifest);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }
  if (entries.empty()) {
    err << "error: manifest lists no datasets\n";
    return kUsage;
  }

  json failures = json::array();
  std::vector<std::optional<data::Dataset>> datasets(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      datasets[i] = load_dataset(entries[i], opts.seed);
    } catch (const Error& ex) {
      failures.push_back({{"dataset", entries[i].name},
                          {"stage", "load"},
                          {"error", ex.what()}});
      err << "warning: dataset " << entries[i].name << ": " << ex.what()
          << '\n';
    }
  }

  std::vector<Cell> cells;
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    if (!datasets[di]) continue;
    for (std::size_t li = 0; li < losses.size(); ++li) {
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        cells.push_back({di, li, gi});
      }
    }
  }
  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const Cell& cell = cells[c];
      const data::Dataset& ds = *datasets[cell.dataset];
      train::TrainConfig cfg;
      cfg.loss = losses[cell.loss];
      cfg.lambda = grid[cell.lambda];
      cfg.lbfgs_memory = opts.memory;
      cfg.grad_tol = opts.grad_tol;
      cfg.max_iter = opts.max_iter;
      cfg.seed = opts.seed;
      CellOutcome& o = outcomes[c];
      try {
        const auto res = train::lbfgs_minimize(ds, ds.splits.train, cfg);
        o.weights = res.weights;
        o.iterations = res.iterations;
        o.converged = res.converged;
        o.dev_mse = train::split_mse(res.weights, ds, ds.splits.dev, cfg.loss);
        o.test_mse =
            train::split_mse(res.weights, ds, ds.splits.test, cfg.loss);
        o.ok = true;
      } catch (const Error& ex) {
        o.error = ex.what();
      }
    }
  };
  {
    const std::size_t n_threads = std::min<std::size_t>(
        static_cast<std::size_t>(opts.workers), std::max<std::size_t>(cells.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  // Cells are keyed by (dataset, loss, lambda index), so assembly below does
  // not depend on the order in which workers finished.
  std::map<std::tuple<std::size_t, std::size_t>, std::size_t> best;
  json results = json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    if (!outcomes[c].ok) {
      failures.push_back({{"dataset", entries[cell.dataset].name},
                          {"loss", losses[cell.loss].name()},
                          {"lambda", grid[cell.lambda]},
                          {"stage", "train"},
                          {"error", outcomes[c].error}});
      continue;
    }
    const auto key = std::make_tuple(cell.dataset, cell.loss);
    const auto it = best.find(key);
    // Grid is ascending and the comparison strict, so ties keep the
    // smaller lambda.
    if (it == best.end() || outcomes[c].dev_mse < outcomes[it->second].dev_mse) {
      best[key] = c;
    }
  }

  std::vector<std::vector<std::optional<double>>> table(
      entries.size(), std::vector<std::optional<double>>(losses.size()));
  for (const auto& [key, c] : best) {
    const auto [di, li] = key;
    json dev_by_lambda = json::array();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const std::size_t idx = c - cells[c].lambda + gi;
      dev_by_lambda.push_back(outcomes[idx].ok ? json(outcomes[idx].dev_mse)
                                               : json(nullptr));
    }
    const CellOutcome& o = outcomes[c];
    results.push_back({{"dataset", entries[di].name},
                       {"loss", losses[li].name()},
                       {"best_lambda", grid[cells[c].lambda]},
                       {"dev_mse", o.dev_mse},
                       {"test_mse", o.test_mse},
                       {"iterations", o.iterations},
                       {"converged", o.converged},
                       {"dev_mse_by_lambda", dev_by_lambda}});
    table[di][li] = o.test_mse;
  }

  // A loss and its Fitzpatrick sibling share the link, so at equal W their
  // predictions must coincide.
  json sanity = json::array();
  for (const auto& [key, c] : best) {
    const auto [di, li] = key;
    if (losses[li].family != Family::fenchel_young) continue;
    const LossSpec sibling{losses[li].generator, Family::fitzpatrick};
    const data::Dataset& ds = *datasets[di];
    double diff = 0.0;
    for (std::size_t row : ds.splits.test) {
      const auto a = train::predict(outcomes[c].weights, ds.x(row), losses[li]);
      const auto b = train::predict(outcomes[c].weights, ds.x(row), sibling);
      for (std::size_t j = 0; j < a.size(); ++j) {
        diff = std::max(diff, std::abs(a[j] - b[j]));
      }
    }
    sanity.push_back({{"dataset", entries[di].name},
                      {"loss", losses[li].name()},
                      {"sibling", sibling.name()},
                      {"max_abs_prediction_difference", diff}});
  }

  json report;
  report["schema_version"] = 1;
  report["environment"] = {
      {"seed", opts.seed},
      {"timestamp", opts.timestamp.empty() ? utc_now() : opts.timestamp},
      {"losses", opts.losses},
      {"lambda_grid", grid},
      {"workers", opts.workers},
      {"compiler", __VERSION__},
      {"tolerances",
       {{"grad_tol", opts.grad_tol},
        {"max_iter", opts.max_iter},
        {"lbfgs_memory", opts.memory},
        {"bisection_abs_tol", numeric::BisectionConfig{}.abs_tol},
        {"bisection_residual_tol", numeric::BisectionConfig{}.residual_tol},
        {"simplex_sum_tol", kSimplexSumTolerance}}}};
  json ds_info = json::array();
  for (const auto& d : datasets) {
    if (!d) continue;
    ds_info.push_back({{"name", d->name},
                       {"k", d->k},
                       {"d", d->d},
                       {"train", d->splits.train.size()},
                       {"dev", d->splits.dev.size()},
                       {"test", d->splits.test.size()}});
  }
  report["datasets"] = ds_info;
  report["results"] = results;
  report["sanity"] = sanity;
  report["failures"] = failures;

  std::filesystem::path json_path = opts.out;
  json_path += ".json";
  std::filesystem::path csv_path = opts.out;
  csv_path += ".csv";
  {
    std::ofstream f(json_path);
    f << report.dump(2) << '\n';
    if (!f) {
      err << "error: cannot write " << json_path.string() << '\n';
      return kFailure;
    }
  }
  {
    std::ofstream f(csv_path);
    f << "dataset";
    for (const auto& l : losses) f << ',' << l.name();
    f << '\n';
    for (std::size_t di = 0; di < entries.size(); ++di) {
      f << entries[di].name;
      for (const auto& v : table[di]) {
        f << ',';
        if (v) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3f", *v);
          f << buf;
        } else {
          f << "NA";
        }
      }
      f << '\n';
    }
    if (!f) {
      err << "error: cannot write " << csv_path.string() << '\n';
      return kFailure;
    }
  }
  out << "wrote " << json_path.string() << " and " << csv_path.string()
      << " (" << results.size() << " results, " << failures.size()
      << " failures)\n";
  return failures.empty() ? kSuccess : kFailure;
}

}  // namespace fitzloss::cli
