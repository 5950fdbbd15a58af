#pragma once

// Random inputs for property checks: scores, simplex points with and
// without zero entries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fitzloss/random.hpp"

namespace fitzloss::sampling {

inline std::vector<double> normal_vector(Rng& rng, std::size_t k,
                                         double scale) {
  std::vector<double> v(k);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

/// Scores with a random spread in [0.1, 5].
inline std::vector<double> scores(Rng& rng, std::size_t k) {
  const double scale = rng.uniform(0.1, 5.0);
  return normal_vector(rng, k, scale);
}

/// Scores uniform in [-half_width, half_width]^k. The grid oracle loses about
/// spread(theta) / (2 * resolution) at the simplex boundary, so its fixed
/// tolerance needs bounded scores.
inline std::vector<double> box_scores(Rng& rng, std::size_t k,
                                      double half_width) {
  std::vector<double> v(k);
  for (auto& x : v) x = rng.uniform(-half_width, half_width);
  return v;
}

/// Simplex point with every entry at least `floor` / k (before
/// normalization), drawn from a flat Dirichlet.
inline std::vector<double> interior_simplex(Rng& rng, std::size_t k,
                                            double floor = 0.05) {
  std::vector<double> v(k);
  double sum = 0.0;
  for (auto& x : v) {
    x = -std::log(1.0 - rng.uniform()) + floor;
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

/// Simplex point that is a vertex 10% of the time and otherwise has each
/// entry zeroed with probability 0.3 (keeping at least one nonzero).
inline std::vector<double> simplex_with_zeros(Rng& rng, std::size_t k) {
  std::vector<double> v(k, 0.0);
  if (rng.uniform() < 0.1) {
    v[rng.below(k)] = 1.0;
    return v;
  }
  double sum = 0.0;
  for (auto& x : v) {
    x = rng.uniform() < 0.3 ? 0.0 : -std::log(1.0 - rng.uniform());
    sum += x;
  }
  if (sum == 0.0) {
    v[rng.below(k)] = 1.0;
    return v;
  }
  for (auto& x : v) x /= sum;
  return v;
}

/// Gap between the largest and second largest entry.
inline double top_gap(const std::vector<double>& theta) {
  std::vector<double> s = theta;
  std::sort(s.begin(), s.end(), std::greater<>());
  return s.size() < 2 ? INFINITY : s[0] - s[1];
}

}  // namespace fitzloss::sampling
