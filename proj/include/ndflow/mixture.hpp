#pragma once

#include <random>
#include <span>
#include <vector>

#include "ndflow/histogram.hpp"

namespace ndflow {

/// 1-D Gaussian mixture sum_k w_k N(x; mean_k, 1/precision_k).
///
/// Weights are positive and sum to one, precisions are positive, and all
/// three arrays share a length K >= 1. Weights are stored as given; the
/// constructor rejects sums further than 1e-9 from one.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<double> means,
                  std::vector<double> precisions);

  static GaussianMixture single(double mean, double precision) {
    return GaussianMixture({1.0}, {mean}, {precision});
  }

  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& precisions() const noexcept { return precisions_; }

  Moments moments() const noexcept;

  /// Same weights, replaced means and precisions.
  GaussianMixture with_parameters(std::vector<double> means,
                                  std::vector<double> precisions) const;

  friend bool operator==(const GaussianMixture&,
                         const GaussianMixture&) = default;

 private:
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> precisions_;
};

/// log N(x; mean, 1/precision).
double log_normal_pdf(double x, double mean, double precision) noexcept;

double mixture_pdf(const GaussianMixture& g, double x) noexcept;
double mixture_log_pdf(const GaussianMixture& g, double x) noexcept;
double mixture_cdf(const GaussianMixture& g, double x) noexcept;

/// Posterior component probabilities w_k q_k(x) / q(x), evaluated in the log
/// domain. Throws ErrorKind::Numerical only if every component underflows.
std::vector<double> responsibilities(const GaussianMixture& g, double x);

/// Writes responsibilities into `out` (size K); returns false instead of
/// throwing when every log-density is -inf.
bool responsibilities_into(const GaussianMixture& g, double x,
                           std::span<double> out) noexcept;

/// Pushforward of the mixture under x -> scale * x + offset.
GaussianMixture apply_affine(const AffineMap& m, const GaussianMixture& g);

std::vector<double> sample(const GaussianMixture& g, std::size_t n,
                           std::mt19937_64& rng,
                           std::vector<std::size_t>* labels = nullptr);

}  // namespace ndflow
