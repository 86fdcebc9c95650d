#pragma once

#include <string>
#include <vector>

#include "ndflow/error.hpp"
#include "ndflow/mixture.hpp"

namespace ndflow {

/// Integral of N(x; mu1, 1/lam1) * N(x; mu2, 1/lam2) over the real line,
/// which equals N(mu1 - mu2; 0, 1/lam1 + 1/lam2).
/// Throws ErrorKind::InvalidInput for non-positive precisions.
double gaussian_inner_product(double mu1, double lam1, double mu2, double lam2);

/// Closed-form 0.5 * integral (q - p)^2, clamped at zero.
double l2_divergence(const GaussianMixture& q, const GaussianMixture& p);

struct L2Gradients {
  std::vector<double> d_means;
  std::vector<double> d_precisions;
};

/// Partial derivatives of l2_divergence(q, p) with respect to the means and
/// precisions of q. Mixture weights are held fixed.
L2Gradients l2_gradients(const GaussianMixture& q, const GaussianMixture& p);

struct OptimConfig {
  std::size_t max_iterations = 2000;
  double grad_norm_tolerance = 1e-7;  // infinity norm, (mean, sqrt-precision) coordinates
  double initial_step = 0.1;
  double backtracking_factor = 0.5;
  double armijo_slope = 1e-4;

  void validate() const;
};

enum class MatchStop { GradientTolerance, MaxIterations, LineSearchStalled };

struct MatchResult {
  GaussianMixture initial;
  std::vector<double> optimized_means;
  std::vector<double> optimized_precisions;
  /// Divergence at the start followed by one entry per accepted step.
  std::vector<double> divergence_trace;
  MatchStop stop = MatchStop::GradientTolerance;

  std::size_t accepted_steps() const noexcept {
    return divergence_trace.empty() ? 0 : divergence_trace.size() - 1;
  }
  /// The initial mixture's weights with the optimised means and precisions.
  GaussianMixture matched() const {
    return initial.with_parameters(optimized_means, optimized_precisions);
  }
};

/// Raised when the divergence stops being finite mid-optimisation.
class MatchDivergenceError : public Error {
 public:
  MatchDivergenceError(const std::string& what, std::vector<double> trace)
      : Error(ErrorKind::Numerical, what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Moves the means and precisions of `q` (weights fixed) to minimise the L2
/// divergence to `p`, by gradient descent with Armijo backtracking in
/// (mean, l) coordinates where precision = l^2.
MatchResult match_mixtures(const GaussianMixture& q, const GaussianMixture& p,
                           const OptimConfig& cfg = {});

}  // namespace ndflow
