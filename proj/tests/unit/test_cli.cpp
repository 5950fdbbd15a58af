#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fitzloss/cli.hpp"
#include "fitzloss/errors.hpp"
#include "json.hpp"

using namespace fitzloss;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = FITZLOSS_TEST_DATA;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("fitzloss_cli_" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

template <class Opts, class Fn>
Run run(Fn fn, const Opts& opts) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = fn(opts, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_manifest(const std::string& name, const json& doc) {
  const fs::path p = temp_path(name);
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("eval prints one JSON record") {
  cli::EvalOptions o{"fitzpatrick-sparsemax", "1,0", "0,0"};
  auto r = run(cli::cmd_eval, o);
  REQUIRE(r.code == cli::kSuccess);
  const json rec = json::parse(r.out);
  CHECK(std::abs(rec["value"].get<double>() - 0.125) <= 1e-12);
  CHECK(rec["y_star"][0].get<double>() == doctest::Approx(0.75));
  CHECK(rec["gradient"][1].get<double>() == doctest::Approx(0.25));
  CHECK(rec["link"][0].get<double>() == doctest::Approx(0.5));

  o = {"fitzpatrick-squared", "1,0", "1,0"};
  r = run(cli::cmd_eval, o);
  CHECK(json::parse(r.out)["value"].get<double>() == 0.0);

  o = {"logistic", "0.2689414213699951,0.7310585786300049", "0,1"};
  r = run(cli::cmd_eval, o);
  CHECK(std::abs(json::parse(r.out)["value"].get<double>()) <= 1e-12);

  o = {"fitzpatrick-logistic", "1,0", "0,0"};
  r = run(cli::cmd_eval, o);
  const json lg = json::parse(r.out);
  CHECK(std::abs(lg["lambda_star"].get<double>() - 1.524124324657529326) <= 1e-10);
  CHECK(std::abs(lg["residual"].get<double>()) <= 1e-10);
  CHECK(lg["y_star"].size() == 2);
}

TEST_CASE("eval exit codes") {
  CHECK(run(cli::cmd_eval, cli::EvalOptions{"hinge", "1,0", "0,0"}).code == cli::kUsage);
  CHECK(run(cli::cmd_eval, cli::EvalOptions{"logistic", "1,x", "0,0"}).code == cli::kUsage);
  CHECK(run(cli::cmd_eval, cli::EvalOptions{"logistic", "0.5,0.6", "0,0"}).code ==
        cli::kFailure);
  CHECK(run(cli::cmd_eval, cli::EvalOptions{"logistic", "1,0,0", "0,0"}).code ==
        cli::kFailure);
}

TEST_CASE("curve writes the sandwich as CSV") {
  cli::CurveOptions o;
  o.generator = "sparsemax";
  o.out = temp_path("curve.csv");
  auto r = run(cli::cmd_curve, o);
  REQUIRE(r.code == cli::kSuccess);
  const std::string text = slurp(o.out);
  CHECK(text.back() == '\n');
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "s,fy_value,fitz_value");
  int rows = 0;
  while (std::getline(in, line)) {
    double s, fy, fz;
    char c1, c2;
    std::istringstream ls(line);
    ls >> s >> c1 >> fy >> c2 >> fz;
    CHECK(fz >= 0.0);
    CHECK(fz <= fy + 1e-9);
    if (s >= 1.0) {
      CHECK(fy == 0.0);
      CHECK(fz == 0.0);
    }
    ++rows;
  }
  CHECK(rows == 201);

  o.generator = "logistic";
  o.s_lo = -1.0;
  o.s_hi = 1.0;
  o.steps = 3;
  REQUIRE(run(cli::cmd_curve, o).code == cli::kSuccess);
  const std::string logistic = slurp(o.out);
  CHECK(logistic.find("\n0,0.69314718056,0.278464542761\n") != std::string::npos);

  o.steps = 1;
  CHECK(run(cli::cmd_curve, o).code == cli::kUsage);
  o.steps = 5;
  o.generator = "hinge";
  CHECK(run(cli::cmd_curve, o).code == cli::kUsage);
  o.generator = "squared";
  o.out = "/nonexistent-dir/curve.csv";
  CHECK(run(cli::cmd_curve, o).code == cli::kFailure);
}

TEST_CASE("check suites pass and are deterministic") {
  for (const auto& name : cli::suite_names()) {
    cli::CheckOptions o;
    o.suite = name;
    o.seed = 3;
    o.trials = name == "grid" ? 3 : 50;
    o.resolution = 100;
    const auto a = run(cli::cmd_check, o);
    CHECK_MESSAGE(a.code == cli::kSuccess, a.out);
    CHECK(a.out == run(cli::cmd_check, o).out);
  }
  cli::CheckOptions bad;
  bad.suite = "prop-nine";
  CHECK(run(cli::cmd_check, bad).code == cli::kUsage);
  bad.suite = "grid";
  bad.k = 5;
  CHECK(run(cli::cmd_check, bad).code == cli::kUsage);
}

TEST_CASE("manifest loading") {
  const auto entries = cli::load_manifest(kData / "manifest.json");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].train == kData / "tiny_train.svm");
  CHECK_FALSE(entries[0].dev);
  REQUIRE(entries[1].synthetic);
  CHECK(entries[1].synthetic->n == 200);

  CHECK_THROWS_AS(cli::load_manifest(write_manifest("bad.json", json{{"x", 1}})),
                  SchemaError);
  CHECK_THROWS_AS(
      cli::load_manifest(write_manifest("noname.json",
                                        json{{"datasets", json::array({json{{"k", 2}}})}})),
      SchemaError);
}

TEST_CASE("model files round-trip") {
  cli::ModelFile m{train::WeightMatrix(2, 3, {0.1, -2.5, 1e-17, 3.0, 1.0 / 3, -0.0}),
                   LossSpec::parse("fitzpatrick-sparsemax"), 0.01, 42};
  const fs::path p = temp_path("model.txt");
  cli::write_model(p, m);
  const auto back = cli::read_model(p);
  CHECK(back.weights == m.weights);
  CHECK(back.loss == m.loss);
  CHECK(back.lambda == m.lambda);
  CHECK(back.seed == 42);
  std::istringstream first(slurp(p));
  std::string header;
  std::getline(first, header);
  CHECK(header == "2 3 fitzpatrick-sparsemax 0.01 42");

  std::ofstream(p) << "2 3 logistic 1 0\n1 2 3\n4 5\n";
  CHECK_THROWS_AS(cli::read_model(p), ParseError);
}

TEST_CASE("train on a realizable synthetic dataset") {
  const fs::path manifest = write_manifest(
      "realizable.json",
      json{{"datasets",
            json::array({json{{"name", "clean"},
                              {"synthetic",
                               {{"seed", 2}, {"n", 300}, {"d", 5}, {"k", 3}, {"noise", 0.0}}}}})}});
  cli::TrainOptions o;
  o.manifest = manifest;
  o.loss = "logistic";
  o.lambda = 1e-4;
  o.grad_tol = 1e-10;
  o.max_iter = 2000;
  o.model_out = temp_path("clean_a.txt");
  const auto a = run(cli::cmd_train, o);
  REQUIRE_MESSAGE(a.code == cli::kSuccess, a.err);
  const json rec = json::parse(a.out);
  CHECK(rec["test_mse"].get<double>() < 1e-3);
  CHECK(rec["train_mse"].get<double>() >= 0.0);

  o.model_out = temp_path("clean_b.txt");
  REQUIRE(run(cli::cmd_train, o).code == cli::kSuccess);
  CHECK(slurp(temp_path("clean_a.txt")) == slurp(temp_path("clean_b.txt")));

  o.lambda = 1e9;
  o.model_out = temp_path("clean_c.txt");
  REQUIRE(run(cli::cmd_train, o).code == cli::kSuccess);
  CHECK(std::sqrt(cli::read_model(o.model_out).weights.squared_norm()) < 1e-3);

  o.dataset = "missing";
  CHECK(run(cli::cmd_train, o).code == cli::kFailure);
  o.dataset.clear();
  o.lambda = -1.0;
  CHECK(run(cli::cmd_train, o).code == cli::kUsage);
}

TEST_CASE("train on svmlight files through the manifest") {
  cli::TrainOptions o;
  o.manifest = kData / "manifest.json";
  o.dataset = "tiny";
  o.loss = "fitzpatrick-sparsemax";
  o.lambda = 1.0;
  const auto r = run(cli::cmd_train, o);
  REQUIRE_MESSAGE(r.code == cli::kSuccess, r.err);
  const json rec = json::parse(r.out);
  CHECK(rec["dataset"] == "tiny");
  CHECK(rec["dev_mse"].get<double>() >= 0.0);
}

TEST_CASE("benchmark") {
  cli::BenchmarkOptions o;
  o.manifest = kData / "manifest.json";
  o.losses = {"logistic", "fitzpatrick-logistic"};
  o.lambda_grid = {0.1};
  o.out = temp_path("bench_single");
  o.timestamp = "fixed";
  auto r = run(cli::cmd_benchmark, o);
  REQUIRE_MESSAGE(r.code == cli::kSuccess, r.err);
  json rep = json::parse(slurp(temp_path("bench_single.json")));
  CHECK(rep["schema_version"] == 1);
  CHECK(rep["environment"]["timestamp"] == "fixed");
  REQUIRE(rep["results"].size() == 4);
  for (const auto& row : rep["results"]) CHECK(row["best_lambda"].get<double>() == 0.1);
  REQUIRE(rep["sanity"].size() == 2);
  for (const auto& row : rep["sanity"]) {
    CHECK(row["max_abs_prediction_difference"].get<double>() == 0.0);
  }
  const std::string csv = slurp(temp_path("bench_single.csv"));
  CHECK(csv.rfind("dataset,logistic,fitzpatrick-logistic\n", 0) == 0);

  SUBCASE("selection is order independent and workers do not change results") {
    o.lambda_grid = {10.0, 0.01, 1.0};
    o.out = temp_path("bench_w1");
    REQUIRE(run(cli::cmd_benchmark, o).code == cli::kSuccess);
    o.lambda_grid = {1.0, 10.0, 0.01};
    o.workers = 3;
    o.out = temp_path("bench_w3");
    REQUIRE(run(cli::cmd_benchmark, o).code == cli::kSuccess);
    json a = json::parse(slurp(temp_path("bench_w1.json")));
    json b = json::parse(slurp(temp_path("bench_w3.json")));
    CHECK(a["results"] == b["results"]);
    for (const auto& row : a["results"]) {
      const double best = row["best_lambda"].get<double>();
      const auto& dev = row["dev_mse_by_lambda"];
      double min_dev = INFINITY;
      for (const auto& v : dev) min_dev = std::min(min_dev, v.get<double>());
      CHECK(row["dev_mse"].get<double>() == min_dev);
      CHECK((best == 0.01 || best == 1.0 || best == 10.0));
    }
  }

  SUBCASE("a broken dataset is recorded without stopping the rest") {
    const fs::path m = write_manifest(
        "broken.json",
        json{{"datasets",
              json::array({json{{"name", "gone"},
                                {"train", (kData / "missing.svm").string()},
                                {"test", (kData / "missing.svm").string()}},
                           json{{"name", "ok"},
                                {"synthetic",
                                 {{"seed", 1}, {"n", 50}, {"d", 3}, {"k", 3}, {"noise", 0.1}}}}})}});
    o.manifest = m;
    o.out = temp_path("bench_broken");
    r = run(cli::cmd_benchmark, o);
    CHECK(r.code == cli::kFailure);
    rep = json::parse(slurp(temp_path("bench_broken.json")));
    CHECK(rep["failures"].size() == 1);
    CHECK(rep["failures"][0]["dataset"] == "gone");
    CHECK(rep["results"].size() == 2);
    CHECK(slurp(temp_path("bench_broken.csv")).find("gone,NA,NA\n") != std::string::npos);
  }

  SUBCASE("usage errors") {
    o.lambda_grid = {};
    CHECK(run(cli::cmd_benchmark, o).code == cli::kUsage);
    o.lambda_grid = {1.0};
    o.losses = {"bogus"};
    CHECK(run(cli::cmd_benchmark, o).code == cli::kUsage);
  }
}
