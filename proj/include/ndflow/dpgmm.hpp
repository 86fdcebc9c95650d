#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ndflow/histogram.hpp"
#include "ndflow/mixture.hpp"

namespace ndflow {

/// Hyperparameters of the truncated stick-breaking Dirichlet-process mixture.
///
/// Each component carries a Normal-Gamma prior: precision ~ Gamma(shape,
/// rate), mean | precision ~ N(prior_mean, 1 / (strength * precision)).
/// Unset prior fields are filled from the histogram being fitted: the mean
/// defaults to the histogram mean and the rate to the histogram variance, so
/// the prior predictive sits on the data's scale.
struct DpgmmConfig {
  double concentration = 2.0;
  std::size_t truncation = 32;
  std::optional<double> prior_mean;
  double prior_mean_strength = 1.0;
  double prior_shape = 1.0;
  std::optional<double> prior_rate;
  std::size_t max_iterations = 500;
  double elbo_rel_tolerance = 1e-7;
  double prune_threshold = 1e-3;
  std::uint64_t seed = 0;

  /// Throws ErrorKind::InvalidInput on out-of-range fields.
  void validate() const;
};

struct DpgmmFit {
  GaussianMixture mixture;  // pruned and renormalised
  std::vector<double> elbo_trace;  // after every coordinate-ascent step
  std::size_t iterations = 0;
  std::size_t merges_accepted = 0;
  bool converged = false;
};

/// Variational fit treating each bin weight as a fractional observation
/// count. The ELBO trace is non-decreasing up to floating-point slack.
///
/// Throws ErrorKind::InvalidInput for histograms with fewer than two
/// distinct centres, ErrorKind::Numerical for a non-finite ELBO, and
/// ErrorKind::FitFailure if pruning leaves nothing.
DpgmmFit fit_dpgmm_detailed(const Histogram& h, const DpgmmConfig& cfg = {});

inline GaussianMixture fit_dpgmm(const Histogram& h,
                                 const DpgmmConfig& cfg = {}) {
  return fit_dpgmm_detailed(h, cfg).mixture;
}

/// Drops components lighter than `threshold` and renormalises the rest,
/// preserving their order.
GaussianMixture prune(const GaussianMixture& g, double threshold);

}  // namespace ndflow
