#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fitzloss/data.hpp"
#include "fitzloss/losses.hpp"
#include "fitzloss/train.hpp"

namespace fitzloss::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

// ---------------------------------------------------------------------------
// Manifest
//
// {
//   "datasets": [
//     {"name": "yeast", "format": "svmlight_multilabel", "k": 14, "d": 103,
//      "train": "yeast_train.svm", "dev": "yeast_dev.svm",
//      "test": "yeast_test.svm"},
//     {"name": "toy", "synthetic": {"seed": 1, "n": 500, "d": 20, "k": 5,
//                                   "noise": 0.1}}
//   ]
// }
//
// Relative paths resolve against the manifest's directory. "dev" is optional;
// without it a seeded 75/25 split of train is used.

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t n = 500;
  std::size_t d = 20;
  std::size_t k = 5;
  double noise = 0.1;
};

struct DatasetEntry {
  std::string name;
  data::Format format = data::Format::svmlight_multilabel;
  std::size_t k = 0;
  std::size_t d = 0;
  std::filesystem::path train;
  std::optional<std::filesystem::path> dev;
  std::filesystem::path test;
  std::size_t max_dense_bytes = std::size_t{1} << 31;
  std::optional<SyntheticSpec> synthetic;
};

std::vector<DatasetEntry> load_manifest(const std::filesystem::path& path);

/// Reads, splits and preprocesses (or generates) one manifest entry.
data::Dataset load_dataset(const DatasetEntry& entry, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model file: a header line "k d loss lambda seed", then k rows of d
// space-separated reals.

struct ModelFile {
  train::WeightMatrix weights;
  LossSpec loss;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

void write_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model(const std::filesystem::path& path);

/// Parses "1,0.5,-2" into numbers; throws ParseError.
std::vector<double> parse_vector(const std::string& text);

// ---------------------------------------------------------------------------
// Commands. Each writes human/machine output to `out`, diagnostics to `err`
// and returns an ExitCode.

struct EvalOptions {
  std::string loss;
  std::string y;
  std::string theta;
};
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

struct CurveOptions {
  std::string generator = "logistic";
  std::size_t k = 2;
  double s_lo = -5.0;
  double s_hi = 5.0;
  std::size_t steps = 201;
  std::filesystem::path out;
};
int cmd_curve(const CurveOptions& opts, std::ostream& out, std::ostream& err);

struct CheckOptions {
  std::string suite = "all";
  std::uint64_t seed = 0;
  std::size_t trials = 1000;
  std::size_t k = 0;  ///< 0 uses each suite's default dimensions
  int resolution = 400;
};
int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::filesystem::path manifest;
  std::string dataset;
  std::string loss = "logistic";
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path model_out;
  int max_iter = 500;
  double grad_tol = 1e-6;
  int memory = 10;
  int workers = 1;
};
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);

struct BenchmarkOptions {
  std::filesystem::path manifest;
  std::vector<std::string> losses{"sparsemax", "fitzpatrick-sparsemax",
                                  "logistic", "fitzpatrick-logistic"};
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0,
                                  1e1,  1e2,  1e3,  1e4};
  /// Writes <out>.json and <out>.csv.
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_iter = 500;
  double grad_tol = 1e-6;
  int memory = 10;
  /// Recorded in the report; the current UTC time when empty.
  std::string timestamp;
};
int cmd_benchmark(const BenchmarkOptions& opts, std::ostream& out,
                  std::ostream& err);

// ---------------------------------------------------------------------------
// Property suites behind cmd_check.

struct SuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst = 0.0;  ///< largest violation (or error) observed
  std::string counterexample;
};

std::vector<std::string> suite_names();

/// Throws DomainError for unknown suite names.
SuiteResult run_suite(const std::string& name, const CheckOptions& opts);

}  // namespace fitzloss::cli
