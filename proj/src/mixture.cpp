#include "ndflow/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ndflow/error.hpp"

namespace ndflow {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
}

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<double> means,
                                 std::vector<double> precisions)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      precisions_(std::move(precisions)) {
  if (weights_.empty()) throw invalid_input("mixture has no components");
  if (weights_.size() != means_.size() || weights_.size() != precisions_.size())
    throw invalid_input("mixture parameter arrays differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!std::isfinite(weights_[k]) || !(weights_[k] > 0.0))
      throw invalid_input("mixture weights must be positive");
    if (!std::isfinite(means_[k])) throw invalid_input("non-finite mixture mean");
    if (!std::isfinite(precisions_[k]) || !(precisions_[k] > 0.0))
      throw invalid_input("mixture precisions must be positive");
    total += weights_[k];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw invalid_input("mixture weights must sum to one");
}

Moments GaussianMixture::moments() const noexcept {
  double mean = 0.0;
  for (std::size_t k = 0; k < size(); ++k) mean += weights_[k] * means_[k];
  double var = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const double d = means_[k] - mean;
    var += weights_[k] * (1.0 / precisions_[k] + d * d);
  }
  return {mean, var};
}

GaussianMixture GaussianMixture::with_parameters(
    std::vector<double> means, std::vector<double> precisions) const {
  return GaussianMixture(weights_, std::move(means), std::move(precisions));
}

double log_normal_pdf(double x, double mean, double precision) noexcept {
  const double d = x - mean;
  return 0.5 * std::log(precision) - kLogSqrt2Pi - 0.5 * precision * d * d;
}

double mixture_log_pdf(const GaussianMixture& g, double x) noexcept {
  auto term = [&](std::size_t k) {
    return std::log(g.weights()[k]) +
           log_normal_pdf(x, g.means()[k], g.precisions()[k]);
  };
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) top = std::max(top, term(k));
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) acc += std::exp(term(k) - top);
  return top + std::log(acc);
}

double mixture_pdf(const GaussianMixture& g, double x) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    acc += g.weights()[k] *
           std::exp(log_normal_pdf(x, g.means()[k], g.precisions()[k]));
  return acc;
}

double mixture_cdf(const GaussianMixture& g, double x) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double z = (x - g.means()[k]) * std::sqrt(g.precisions()[k]);
    acc += g.weights()[k] * 0.5 * std::erfc(-z / std::numbers::sqrt2);
  }
  return acc;
}

bool responsibilities_into(const GaussianMixture& g, double x,
                           std::span<double> out) noexcept {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k] = std::log(g.weights()[k]) +
             log_normal_pdf(x, g.means()[k], g.precisions()[k]);
    top = std::max(top, out[k]);
  }
  if (!std::isfinite(top)) return false;
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k] = std::exp(out[k] - top);
    acc += out[k];
  }
  for (std::size_t k = 0; k < g.size(); ++k) out[k] /= acc;
  return true;
}

std::vector<double> responsibilities(const GaussianMixture& g, double x) {
  std::vector<double> r(g.size());
  if (!responsibilities_into(g, x, r))
    throw Error(ErrorKind::Numerical,
                "every mixture component underflows at the query point");
  return r;
}

GaussianMixture apply_affine(const AffineMap& m, const GaussianMixture& g) {
  std::vector<double> means(g.size()), precisions(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    means[k] = m(g.means()[k]);
    precisions[k] = g.precisions()[k] / (m.scale * m.scale);
  }
  return g.with_parameters(std::move(means), std::move(precisions));
}

std::vector<double> sample(const GaussianMixture& g, std::size_t n,
                           std::mt19937_64& rng,
                           std::vector<std::size_t>* labels) {
  std::discrete_distribution<std::size_t> pick(g.weights().begin(),
                                               g.weights().end());
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(n);
  if (labels) labels->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    out[i] = g.means()[k] + unit(rng) / std::sqrt(g.precisions()[k]);
    if (labels) (*labels)[i] = k;
  }
  return out;
}

}  // namespace ndflow
