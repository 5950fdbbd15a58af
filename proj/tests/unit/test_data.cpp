#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fitzloss/data.hpp"
#include "fitzloss/errors.hpp"
#include "fitzloss/simplex.hpp"

using namespace fitzloss;
namespace fs = std::filesystem;

namespace {

const fs::path kData = FITZLOSS_TEST_DATA;

fs::path write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("fitzloss_test_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("svmlight multilabel line format") {
  const auto p = write_temp("one.svm", "0,2 1:0.5 3:-1\n 2:4\n");
  data::LoadOptions opts;
  opts.k = 3;
  opts.d = 3;
  const auto rows = data::read_svmlight_multilabel(p, opts);
  REQUIRE(rows.n == 2);
  CHECK(rows.label_sets[0] == std::vector<std::size_t>{0, 2});
  CHECK(rows.label_sets[1].empty());

  const auto raw = data::densify(rows, opts.max_dense_bytes);
  CHECK(raw.features[0] == 0.5);
  CHECK(raw.features[1] == 0.0);
  CHECK(raw.features[2] == -1.0);
  CHECK(raw.labels[0] == 1.0);
  CHECK(raw.labels[1] == 0.0);
  CHECK(raw.labels[2] == 1.0);
}

TEST_CASE("svmlight errors") {
  SUBCASE("duplicate feature index names the line") {
    try {
      data::read_svmlight_multilabel(kData / "duplicate.svm");
      FAIL("expected ParseError");
    } catch (const ParseError& ex) {
      CHECK(ex.line() == 2);
    }
  }
  SUBCASE("index out of declared range") {
    const auto p = write_temp("range.svm", "0 7:1\n");
    data::LoadOptions opts;
    opts.d = 3;
    CHECK_THROWS_AS(data::read_svmlight_multilabel(p, opts), SchemaError);
    opts.d = 0;
    opts.k = 1;
    const auto q = write_temp("labels.svm", "4 1:1\n");
    CHECK_THROWS_AS(data::read_svmlight_multilabel(q, opts), SchemaError);
  }
  SUBCASE("malformed tokens") {
    CHECK_THROWS_AS(data::read_svmlight_multilabel(write_temp("bad.svm", "0 1-2\n")),
                    ParseError);
    CHECK_THROWS_AS(data::read_svmlight_multilabel(write_temp("zero.svm", "0 0:1\n")),
                    ParseError);
  }
  SUBCASE("memory cap") {
    const auto rows = data::read_svmlight_multilabel(kData / "tiny_train.svm");
    CHECK_THROWS_AS(data::densify(rows, 64), SchemaError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(data::read_svmlight_multilabel(kData / "nope.svm"), Error);
  }
}

TEST_CASE("csv reader matches columns by name") {
  const auto raw = data::load_multilabel(kData / "tiny.csv", data::Format::csv);
  REQUIRE(raw.n == 4);
  CHECK(raw.k == 3);
  CHECK(raw.d == 2);
  CHECK(raw.features[0] == 0.5);  // x1 of row 0
  CHECK(raw.features[1] == 1.5);  // x2 of row 0
  CHECK(raw.labels[3 * 3 + 0] == 2.0);
  CHECK_THROWS_AS(data::load_multilabel(write_temp("nohead.csv", "1,2\n3,4\n"),
                                        data::Format::csv),
                  Error);
}

TEST_CASE("preprocess") {
  data::RawDataset raw;
  raw.name = "hand";
  raw.n = 4;
  raw.d = 2;
  raw.k = 3;
  raw.features = {1.0, 5.0, 3.0, 5.0, 100.0, 5.0, 2.0, 5.0};
  raw.labels = {1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 1};
  raw.splits.train = {0, 1, 2};
  raw.splits.test = {3};
  const data::Dataset ds = data::preprocess(raw);

  // Sample 2 has no labels and is dropped everywhere.
  REQUIRE(ds.n == 3);
  CHECK(ds.splits.train.size() == 2);
  CHECK(ds.splits.test.size() == 1);
  CHECK(ds.labels[0].values() == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(ds.labels[1].values() == std::vector<double>{0.0, 1.0, 0.0});

  // Feature 0 standardized with train mean 2 and sd 1; feature 1 is constant
  // and only centered.
  CHECK(ds.x(0)[0] == doctest::Approx(-1.0));
  CHECK(ds.x(1)[0] == doctest::Approx(1.0));
  CHECK(ds.x(2)[0] == doctest::Approx(0.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(ds.x(i)[1] == 0.0);

  raw.labels = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0};
  CHECK_THROWS_AS(data::preprocess(raw), Error);
}

TEST_CASE("loaded benchmark-style data is standardized and idempotent") {
  data::LoadOptions opts;
  opts.k = 4;
  opts.d = 6;
  const auto train = data::load_multilabel(kData / "tiny_train.svm",
                                           data::Format::svmlight_multilabel, opts);
  const auto test = data::load_multilabel(kData / "tiny_test.svm",
                                          data::Format::svmlight_multilabel, opts);
  const auto raw = data::assemble_splits("tiny", train, nullptr, test, 3);
  CHECK(raw.splits.train.size() + raw.splits.dev.size() == train.n);
  CHECK(raw.splits.dev.size() == train.n / 4);
  CHECK(raw.splits.test.size() == test.n);
  CHECK(data::assemble_splits("tiny", train, nullptr, test, 3).splits.dev ==
        raw.splits.dev);

  const data::Dataset ds = data::preprocess(raw);
  for (const auto& y : ds.labels) CHECK_NOTHROW(ProbVector(y.values()));
  for (std::size_t j = 0; j < ds.d; ++j) {
    double mean = 0.0;
    for (std::size_t i : ds.splits.train) mean += ds.x(i)[j];
    mean /= ds.splits.train.size();
    double var = 0.0;
    for (std::size_t i : ds.splits.train) var += std::pow(ds.x(i)[j] - mean, 2);
    var /= ds.splits.train.size();
    CHECK(std::abs(mean) < 1e-9);
    if (var > 0.0) CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }

  const data::Dataset again = data::preprocess(data::to_raw(ds));
  REQUIRE(again.n == ds.n);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    CHECK(std::abs(again.features[i] - ds.features[i]) < 1e-9);
  }
  for (std::size_t i = 0; i < ds.n; ++i) {
    CHECK(again.labels[i].values() == ds.labels[i].values());
  }
}

TEST_CASE("synth_generate") {
  const auto a = data::synth_generate(4, 100, 3, 4, 0.0);
  const auto b = data::synth_generate(4, 100, 3, 4, 0.0);
  CHECK(a.features == b.features);
  for (std::size_t i = 0; i < a.n; ++i) CHECK(a.labels[i].values() == b.labels[i].values());
  CHECK(a.splits.train.size() == 60);
  CHECK(a.splits.dev.size() == 20);
  CHECK(a.splits.test.size() == 20);
  for (const auto& y : a.labels) {
    for (double v : y) CHECK(v > 0.0);
  }
  CHECK(data::synth_generate(5, 100, 3, 4, 0.0).features != a.features);

  SUBCASE("large margins push k = 2 labels to vertices") {
    const auto ds = data::synth_generate(9, 2000, 4, 2, 0.0);
    std::vector<double> top;
    for (const auto& y : ds.labels) top.push_back(std::max(y[0], y[1]));
    std::sort(top.begin(), top.end());
    for (std::size_t i = top.size() * 9 / 10; i < top.size(); ++i) {
      CHECK(top[i] > 0.99);
    }
  }

  CHECK_THROWS_AS(data::synth_generate(1, 9, 3, 4, 0.0), DomainError);
  CHECK_THROWS_AS(data::synth_generate(1, 10, 0, 4, 0.0), DomainError);
  CHECK_THROWS_AS(data::synth_generate(1, 10, 3, 1, 0.0), DomainError);
}
