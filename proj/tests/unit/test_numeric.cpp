#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fitzloss/errors.hpp"
#include "fitzloss/numeric.hpp"
#include "fitzloss/random.hpp"

using namespace fitzloss;
using numeric::bisect;
using numeric::lambert_w;
using numeric::lambert_w_exp;
using numeric::log_sum_exp;

TEST_CASE("lambert_w special values") {
  CHECK(lambert_w(0.0) == 0.0);
  CHECK(lambert_w(std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  // Omega constant, from bisecting w e^w = 1 on [0, 1].
  CHECK(lambert_w(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-15));
}

TEST_CASE("lambert_w residual is at machine level on z in [0, 1e6]") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double z = std::pow(10.0, rng.uniform(-12.0, 6.0));
    const double w = lambert_w(z);
    CHECK(w >= 0.0);
    CHECK(std::abs(w * std::exp(w) - z) <= 1e-13 * std::max(1.0, z));
  }
}

TEST_CASE("lambert_w is monotone on a sorted grid") {
  Rng rng(11);
  std::vector<double> z(5000);
  for (auto& v : z) v = std::pow(10.0, rng.uniform(-20.0, 300.0));
  std::sort(z.begin(), z.end());
  double prev = 0.0;
  for (double v : z) {
    const double w = lambert_w(v);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("lambert_w rejects negative and non-finite arguments") {
  CHECK_THROWS_AS(lambert_w(-1e-300), DomainError);
  CHECK_THROWS_AS(lambert_w(INFINITY), DomainError);
  CHECK_THROWS_AS(lambert_w(NAN), DomainError);
  CHECK_THROWS_AS(lambert_w_exp(NAN), DomainError);
}

TEST_CASE("lambert_w_exp") {
  CHECK(lambert_w_exp(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambert_w_exp(0.0) == doctest::Approx(lambert_w(1.0)).epsilon(1e-15));

  // w + log w = 1000, solved independently by bisection on [1, 1000].
  double lo = 1.0;
  double hi = 1000.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + std::log(mid) < 1000.0 ? lo : hi) = mid;
  }
  CHECK(lambert_w_exp(1000.0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-14));

  SUBCASE("agrees with lambert_w where e^x is representable") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform(-700.0, 700.0);
      const double a = lambert_w_exp(x);
      const double b = lambert_w(std::exp(x));
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
    }
  }

  SUBCASE("log-domain residual for huge and tiny x") {
    for (double x : {701.0, 1e4, 1e8, 1e15}) {
      const double w = lambert_w_exp(x);
      CHECK(std::abs(w + std::log(w) - x) <= 1e-13 * x);
    }
    CHECK(lambert_w_exp(-800.0) == doctest::Approx(std::exp(-800.0)));
  }
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> zero{0.0, 0.0};
  CHECK(log_sum_exp(zero) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> single{-3.25};
  CHECK(log_sum_exp(single) == -3.25);
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), DomainError);

  SUBCASE("shift identity") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const std::size_t k = 1 + rng.below(10);
      std::vector<double> theta(k);
      for (auto& t : theta) t = 3.0 * rng.normal();
      const double c = rng.uniform(-1e3, 1e3);
      std::vector<double> shifted = theta;
      for (auto& t : shifted) t += c;
      CHECK(std::abs(log_sum_exp(shifted) - log_sum_exp(theta) - c) <=
            1e-12 * std::max(1.0, std::abs(c)));
    }
  }
}

TEST_CASE("bisect") {
  const auto linear = bisect([](double x) { return 1.0 - x; }, 0.0, 2.0);
  CHECK(linear.root == doctest::Approx(1.0).epsilon(1e-12));

  const auto sqrt2 = bisect([](double x) { return 2.0 - x * x; }, 0.0, 2.0);
  // Newton on x^2 = 2 from x = 1.
  double x = 1.0;
  for (int i = 0; i < 8; ++i) x = 0.5 * (x + 2.0 / x);
  CHECK(std::abs(sqrt2.root - x) <= 1e-12);
  CHECK(std::abs(sqrt2.residual) <= 1e-10);

  const auto zero = bisect([](double t) { return 1.0 - std::exp(t); }, -1.0, 1.0);
  CHECK(std::abs(zero.root) <= 1e-12);

  SUBCASE("expands a bracket that misses the root") {
    const auto r = bisect([](double t) { return 10.0 - t; }, 0.0, 1.0);
    CHECK(r.root == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.lo <= 10.0);
    CHECK(r.hi >= 10.0);
  }

  SUBCASE("residual within tolerance for a family of monotone functions") {
    for (double a : {0.1, 1.0, 3.0, 20.0}) {
      for (double b : {-5.0, 0.0, 2.5}) {
        const auto f = [&](double t) { return b - std::sinh(a * t) - t; };
        const auto r = bisect(f, -10.0, 10.0);
        CHECK(std::abs(r.residual) <= 1e-10);
        CHECK(std::abs(f(r.root)) == doctest::Approx(std::abs(r.residual)));
      }
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(bisect([](double) { return 1.0; }, 0.0, 1.0), NoRootError);
    CHECK_THROWS_AS(bisect([](double t) { return -t; }, 1.0, 0.0), DomainError);
    numeric::BisectionConfig bad;
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(bisect([](double t) { return -t; }, -1.0, 1.0, bad),
                    DomainError);
    // A jump discontinuity has no point with a small residual.
    numeric::BisectionConfig few;
    few.max_iter = 5;
    CHECK_THROWS_AS(
        bisect([](double t) { return t < 0.3 ? 1.0 : -1.0; }, 0.0, 1.0, few),
        ConvergenceError);
  }
}

TEST_CASE("finite_diff_grad") {
  const std::vector<double> theta{1.0, 2.0};
  const auto half_sq = [](std::span<const double> t) {
    return 0.5 * (t[0] * t[0] + t[1] * t[1]);
  };
  const auto g = numeric::finite_diff_grad(half_sq, theta, 1e-6);
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-8));

  const std::vector<double> c{3.0, -1.5, 0.25};
  const auto lin = [&](std::span<const double> t) {
    return c[0] * t[0] + c[1] * t[1] + c[2] * t[2];
  };
  const auto gl = numeric::finite_diff_grad(lin, std::vector<double>{7.0, -2.0, 0.1});
  for (int i = 0; i < 3; ++i) CHECK(gl[i] == doctest::Approx(c[i]).epsilon(1e-8));

  const auto gs = numeric::finite_diff_grad(
      [](std::span<const double> t) { return log_sum_exp(t); },
      std::vector<double>{0.0, 0.0});
  CHECK(gs[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(gs[1] == doctest::Approx(0.5).epsilon(1e-8));

  CHECK_THROWS_AS(numeric::finite_diff_grad(
                      [](std::span<const double> t) {
                        return t[1] > 0.0 ? NAN : 0.0;
                      },
                      std::vector<double>{0.0, 0.0}),
                  EvaluationError);
}
