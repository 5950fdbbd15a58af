#pragma once

// Slow reference computations used to cross-check the closed forms in
// losses.hpp. Nothing here shares code paths with the closed forms beyond
// the simplex projection used to define sparsemax.

#include <span>
#include <vector>

#include "fitzloss/simplex.hpp"

namespace fitzloss::oracle {

/// Smooth part Psi of Omega = Psi + indicator(C).
enum class Potential {
  squared,     ///< 0.5 ||y||^2
  negentropy,  ///< sum y_i log y_i - alpha sum y_i, on the nonnegative orthant
};

struct NegentropySpec {
  double alpha = 0.0;
};

struct GridConfig {
  int resolution = 400;  ///< grid points per simplex edge
  int k_max = 3;
};

/// Psi(y). Throws DomainError on negative entries for negentropy.
double potential(Potential p, std::span<const double> y,
                 const NegentropySpec& neg = {});

/// D_Psi(y, y'). For negentropy this is
///   sum y_i log(y_i / y'_i) - sum (y_i - y'_i)
/// and +infinity whenever y' has a zero entry.
double bregman(Potential p, std::span<const double> y,
               std::span<const double> y_prime, const NegentropySpec& neg = {});

struct GridMaximum {
  double value = 0.0;
  ProbVector argmax = ProbVector::unchecked({});
};

/// sup over y' in the simplex of <y', theta> - Psi(y') - D_Psi(y, y'),
/// by exhaustive search over the strictly interior barycentric grid
///   y'_j = (n_j + 1/2) / (resolution + k/2),  sum n_j = resolution.
/// Ties resolve to the lexicographically smallest grid point.
GridMaximum shifted_conjugate_grid(Potential p, std::span<const double> y,
                                   std::span<const double> theta,
                                   const GridConfig& cfg = {});

/// Psi(y) + shifted_conjugate_grid(...) - <y, theta>.
double fitz_value_by_grid(Potential p, std::span<const double> y,
                          std::span<const double> theta,
                          const GridConfig& cfg = {});

/// <y - y*, Hess Psi(y*) (y - y*)>. Throws DomainError for negentropy when
/// y*_i == 0 but y_i != 0.
double lower_bound_quadratic(Potential p, std::span<const double> y,
                             std::span<const double> y_star);

struct StationaryFitz {
  std::vector<double> y_star;
  double value_inner = 0.0;      ///< <y* - y, theta - grad Psi(y*)>
  double value_quadratic = 0.0;  ///< <y* - y, Hess Psi(y*) (y* - y)>
};

/// Unconstrained Fitzpatrick loss of a separable twice-differentiable Psi:
/// solves Hess Psi(y')(y' - y) = theta - grad Psi(y') coordinate-wise by
/// bisection.
StationaryFitz separable_stationary_fitz(Potential p,
                                         std::span<const double> y,
                                         std::span<const double> theta,
                                         const NegentropySpec& neg = {});

}  // namespace fitzloss::oracle
