#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fitzloss/numeric.hpp"
#include "fitzloss/simplex.hpp"

namespace fitzloss {

/// Generator Omega. `squared` lives on all of R^k; the rest are restricted
/// to the probability simplex.
enum class Generator { squared, perceptron, sparsemax, logistic };

enum class Family { fenchel_young, fitzpatrick };

struct LossSpec {
  Generator generator = Generator::logistic;
  Family family = Family::fenchel_young;

  /// Names are the generator ("logistic") optionally prefixed with
  /// "fitzpatrick-". Throws DomainError on unknown names.
  static LossSpec parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

std::string_view generator_name(Generator g);
Generator parse_generator(std::string_view name);

/// The eight (generator, family) combinations in a fixed order.
std::vector<LossSpec> all_loss_specs();

/// Link theta -> y_hat: identity, argmax vertex, simplex projection or
/// softargmax depending on the generator.
std::vector<double> link(Generator g, std::span<const double> theta);

// ---------------------------------------------------------------------------
// Fenchel-Young family: Omega(y) + Omega*(theta) - <y, theta>.

double fy_value(Generator g, std::span<const double> y,
                std::span<const double> theta);

/// link(theta) - y.
std::vector<double> fy_grad(Generator g, std::span<const double> y,
                            std::span<const double> theta);

/// Omega*(theta) for Omega = 0.5 ||.||^2 restricted to the simplex.
double sparsemax_conjugate(std::span<const double> theta);

// ---------------------------------------------------------------------------
// Fitzpatrick family.

struct FitzResult {
  double value = 0.0;
  std::vector<double> y_star;
};

struct SimplexFitzResult {
  double value = 0.0;
  ProbVector y_star;
};

/// 1/4 ||y - theta||^2 with maximizer (y + theta) / 2.
FitzResult fitz_squared(std::span<const double> y,
                        std::span<const double> theta);

/// Coincides with the perceptron loss; maximizer is argmax_vertex(theta).
SimplexFitzResult fitz_perceptron(std::span<const double> y,
                                  std::span<const double> theta);

/// y* = P((y + theta) / 2), value <y* - y, theta - y*>.
SimplexFitzResult fitz_sparsemax(std::span<const double> y,
                                 std::span<const double> theta);

/// Same loss through 2 Omega*((y + theta) / 2) - <y, theta>.
double fitz_sparsemax_conjugate_form(std::span<const double> y,
                                     std::span<const double> theta);

struct FitzSolveResult {
  double lambda_star = 0.0;
  ProbVector y_star = ProbVector::unchecked({});
  /// log y*_i computed from the root without exponentiating.
  std::vector<double> log_y_star;
  double residual = 0.0;
  int iterations = 0;
  std::pair<double, double> bracket{0.0, 0.0};
};

/// Closed-form bracket [lo, hi] on lambda* for the logistic maximizer.
std::pair<double, double> fitz_logistic_bracket(std::span<const double> y,
                                                std::span<const double> theta);

/// Solves
///   e^{-l} sum_{y_i = 0} e^{theta_i} + sum_{y_i > 0} y_i / W(y_i e^{l - theta_i}) = 1
/// for l by bisection on the bracket above, and assembles y*.
FitzSolveResult fitz_logistic_solve(std::span<const double> y,
                                    std::span<const double> theta,
                                    const numeric::BisectionConfig& cfg = {});

/// Loss value assembled from an existing solve.
double fitz_logistic_value(std::span<const double> y,
                           std::span<const double> theta,
                           const FitzSolveResult& solve);

SimplexFitzResult fitz_logistic(std::span<const double> y,
                                std::span<const double> theta,
                                const numeric::BisectionConfig& cfg = {});

double fitz_value(Generator g, std::span<const double> y,
                  std::span<const double> theta);

/// y*(y, theta) - y.
std::vector<double> fitz_grad(Generator g, std::span<const double> y,
                              std::span<const double> theta);

// ---------------------------------------------------------------------------
// Uniform interface.

struct LossEvaluation {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> link;
  /// Fitzpatrick maximizer; empty for the Fenchel-Young family.
  std::optional<std::vector<double>> y_star;
  /// Root-solve details; set for fitzpatrick-logistic only.
  std::optional<FitzSolveResult> solve;
};

LossEvaluation evaluate(const LossSpec& spec, std::span<const double> y,
                        std::span<const double> theta,
                        const numeric::BisectionConfig& cfg = {});

double loss_value(const LossSpec& spec, std::span<const double> y,
                  std::span<const double> theta);

std::vector<double> loss_grad(const LossSpec& spec, std::span<const double> y,
                              std::span<const double> theta);

}  // namespace fitzloss
