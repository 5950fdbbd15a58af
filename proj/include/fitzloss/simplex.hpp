#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fitzloss {

/// Entries below this magnitude are snapped to exactly zero when a
/// ProbVector is validated, so "y_i == 0" is a crisp test downstream.
inline constexpr double kSnapTolerance = 1e-12;
/// Allowed deviation of the entry sum from 1.
inline constexpr double kSimplexSumTolerance = 1e-9;

/// A point of the probability simplex.
class ProbVector {
 public:
  /// Validates and snaps. Throws InfeasibleTargetError when an entry is
  /// negative (beyond the snap tolerance), non-finite, or the sum is off.
  explicit ProbVector(std::vector<double> entries);

  /// Wraps link outputs the library has already produced on the simplex.
  static ProbVector unchecked(std::vector<double> entries);

  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& values() const noexcept { return v_; }
  operator std::span<const double>() const noexcept { return v_; }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  /// Number of nonzero entries.
  std::size_t support_size() const noexcept;

 private:
  struct Unchecked {};
  ProbVector(std::vector<double> entries, Unchecked) : v_(std::move(entries)) {}
  std::vector<double> v_;
};

/// An unconstrained dual point with finite entries.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> entries);

  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& values() const noexcept { return v_; }
  operator std::span<const double>() const noexcept { return v_; }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

 private:
  std::vector<double> v_;
};

/// True when y is in the simplex within the library tolerances.
bool on_simplex(std::span<const double> y) noexcept;

/// Euclidean projection onto the simplex by sort-and-threshold.
ProbVector project_simplex(std::span<const double> z);

/// exp(theta) / sum(exp(theta)), shifted by log-sum-exp.
ProbVector softargmax(std::span<const double> theta);

/// Vertex e_i for the smallest i attaining max(theta).
ProbVector argmax_vertex(std::span<const double> theta);

}  // namespace fitzloss
