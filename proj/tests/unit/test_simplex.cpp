#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fitzloss/errors.hpp"
#include "fitzloss/random.hpp"
#include "fitzloss/sampling.hpp"
#include "fitzloss/simplex.hpp"

using namespace fitzloss;
using Vec = std::vector<double>;

namespace {

void check_vec(const ProbVector& got, const Vec& want, double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(std::abs(got[i] - want[i]) <= tol);
  }
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Brute-force nearest simplex point on a barycentric grid with step 1/res.
double grid_min_distance(const Vec& z, int res) {
  const std::size_t k = z.size();
  double best = INFINITY;
  std::vector<int> n(k, 0);
  // Enumerate compositions of res into k parts.
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == k) {
      n[i] = left;
      Vec p(k);
      for (std::size_t j = 0; j < k; ++j) p[j] = static_cast<double>(n[j]) / res;
      best = std::min(best, sq_dist(p, z));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      n[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, res);
  return best;
}

}  // namespace

TEST_CASE("ProbVector validation and snapping") {
  const ProbVector p({0.25, 0.75});
  CHECK(p.size() == 2);
  CHECK(p.support_size() == 2);

  const ProbVector snapped({1.0 + 5e-13, -5e-13});
  CHECK(snapped[1] == 0.0);
  CHECK(snapped.support_size() == 1);

  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), InfeasibleTargetError);
  CHECK_THROWS_AS(ProbVector({1.1, -0.1}), InfeasibleTargetError);
  CHECK_THROWS_AS(ProbVector({NAN, 1.0}), InfeasibleTargetError);
  CHECK_THROWS_AS(ScoreVector({}), DomainError);
  CHECK_THROWS_AS(ScoreVector({0.0, INFINITY}), DomainError);
  CHECK(on_simplex(Vec{0.5, 0.5}));
  CHECK_FALSE(on_simplex(Vec{0.5, 0.4}));
}

TEST_CASE("project_simplex examples") {
  check_vec(project_simplex(Vec{0.6, 0.4}), {0.6, 0.4});
  check_vec(project_simplex(Vec{2.0, 0.0}), {1.0, 0.0});
  check_vec(project_simplex(Vec{0.5, 0.0}), {0.75, 0.25});
  check_vec(project_simplex(Vec{0.0, 0.0, 0.0}), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  // A single-element support is returned as an exact vertex.
  const ProbVector v = project_simplex(Vec{1.0, 0.0});
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
}

TEST_CASE("project_simplex is no farther than any grid point") {
  Rng rng(21);
  for (int t = 0; t < 400; ++t) {
    const std::size_t k = 2 + rng.below(3);
    const Vec z = sampling::normal_vector(rng, k, 1.0);
    const ProbVector p = project_simplex(z);
    CHECK(on_simplex(p));
    const double d = sq_dist(p, z);
    CHECK(d <= grid_min_distance(z, 100) + 1e-12);
  }
}

TEST_CASE("project_simplex on many random inputs") {
  Rng rng(22);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = 1 + rng.below(8);
    const Vec z = sampling::normal_vector(rng, k, 2.0);
    const ProbVector p = project_simplex(z);
    CHECK(on_simplex(p));
    // KKT: p_i = max(z_i - tau, 0) with a common tau.
    double tau = NAN;
    for (std::size_t i = 0; i < k; ++i) {
      if (p[i] > 0.0) {
        if (std::isnan(tau)) tau = z[i] - p[i];
        CHECK(std::abs(z[i] - p[i] - tau) <= 1e-12);
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (p[i] == 0.0) CHECK(z[i] <= tau + 1e-12);
    }
    // Shift equivariance.
    const double c = rng.uniform(-10.0, 10.0);
    Vec shifted = z;
    for (auto& v : shifted) v += c;
    const ProbVector q = project_simplex(shifted);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("softargmax") {
  check_vec(softargmax(Vec{0.0, 0.0}), {0.5, 0.5});
  check_vec(softargmax(Vec{std::log(1.0), std::log(3.0)}), {0.25, 0.75});
  check_vec(softargmax(Vec{1000.0, 1000.0}), {0.5, 0.5});

  Rng rng(23);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + rng.below(10);
    const Vec theta = sampling::scores(rng, k);
    const ProbVector p = softargmax(theta);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (double v : p) CHECK(v > 0.0);
    Vec shifted = theta;
    for (auto& v : shifted) v += 37.5;
    const ProbVector q = softargmax(shifted);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("argmax_vertex") {
  check_vec(argmax_vertex(Vec{3.0, 1.0, 2.0}), {1.0, 0.0, 0.0});
  check_vec(argmax_vertex(Vec{1.0, 1.0}), {1.0, 0.0});
  check_vec(argmax_vertex(Vec{-5.0, -1.0}), {0.0, 1.0});
}

TEST_CASE("links preserve the order of the scores") {
  Rng rng(24);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t k = 2 + rng.below(8);
    const Vec theta = sampling::scores(rng, k);
    const ProbVector a = project_simplex(theta);
    const ProbVector b = softargmax(theta);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (theta[i] > theta[j]) {
          CHECK(a[i] >= a[j]);
          CHECK(b[i] >= b[j]);
        }
      }
    }
  }
}
