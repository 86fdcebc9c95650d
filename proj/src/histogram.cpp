#include "ndflow/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ndflow/error.hpp"

namespace ndflow {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::DegenerateMoments: return "degenerate-moments";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Histogram::Histogram(std::vector<double> centers, std::vector<double> weights)
    : centers_(std::move(centers)), weights_(std::move(weights)) {
  if (centers_.empty()) throw invalid_input("histogram has no bins");
  if (centers_.size() != weights_.size())
    throw invalid_input("histogram centres and weights differ in length");
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if (!std::isfinite(centers_[i]))
      throw invalid_input("non-finite histogram centre");
    if (i > 0 && !(centers_[i] > centers_[i - 1]))
      throw invalid_input("histogram centres must be strictly increasing");
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0)
      throw invalid_input("histogram weights must be finite and non-negative");
    total_ += weights_[i];
  }
  if (!(total_ > 0.0)) throw invalid_input("histogram has zero total weight");
}

namespace {

void check_value_weights(std::span<const double> values,
                         std::span<const double> weights) {
  if (values.empty()) throw invalid_input("no values to bin");
  if (!weights.empty() && weights.size() != values.size())
    throw invalid_input("values and weights differ in length");
}

}  // namespace

Histogram Histogram::from_integer_values(std::span<const double> values,
                                         std::span<const double> weights) {
  check_value_weights(values, weights);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (!std::isfinite(*lo_it) || !std::isfinite(*hi_it))
    throw invalid_input("non-finite value");
  const double lo = std::floor(*lo_it);
  const auto bins = static_cast<std::size_t>(std::ceil(*hi_it) - lo) + 1;
  std::vector<double> centers(bins), counts(bins, 0.0);
  for (std::size_t i = 0; i < bins; ++i) centers[i] = lo + static_cast<double>(i);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto idx = static_cast<std::size_t>(std::lround(values[i] - lo));
    counts[std::min(idx, bins - 1)] += weights.empty() ? 1.0 : weights[i];
  }
  return Histogram(std::move(centers), std::move(counts));
}

Histogram Histogram::from_values(std::span<const double> values, double lo,
                                 double hi, std::size_t bins,
                                 std::span<const double> weights) {
  check_value_weights(values, weights);
  if (bins == 0 || !(hi > lo)) throw invalid_input("invalid binning range");
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> centers(bins), counts(bins, 0.0);
  for (std::size_t i = 0; i < bins; ++i)
    centers[i] = lo + (static_cast<double>(i) + 0.5) * width;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double pos = std::floor((values[i] - lo) / width);
    const auto idx = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    counts[idx] += weights.empty() ? 1.0 : weights[i];
  }
  return Histogram(std::move(centers), std::move(counts));
}

double Histogram::min_spacing() const noexcept {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < centers_.size(); ++i)
    gap = std::min(gap, centers_[i] - centers_[i - 1]);
  return centers_.size() < 2 ? 0.0 : gap;
}

AffineMap AffineMap::make(double scale, double offset) {
  if (!std::isfinite(scale) || !(scale > 0.0) || !std::isfinite(offset))
    throw invalid_input("affine map needs a finite positive scale");
  return {scale, offset};
}

Moments compute_moments(const Histogram& h) {
  const auto& x = h.centers();
  const auto& w = h.weights();
  const double total = h.total_weight();
  if (!(total > 0.0)) throw invalid_input("zero total weight");
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * x[i];
  mean /= total;
  // Two-pass central moment.
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    var += w[i] * d * d;
  }
  return {mean, std::max(0.0, var / total)};
}

AffineMap affine_match(const Moments& src, const Moments& tgt) {
  if (!(src.variance > 0.0) || !(tgt.variance > 0.0) ||
      !std::isfinite(src.variance) || !std::isfinite(tgt.variance))
    throw Error(ErrorKind::DegenerateMoments,
                "affine matching needs positive finite variances");
  const double scale = std::sqrt(tgt.variance / src.variance);
  return {scale, tgt.mean - scale * src.mean};
}

std::pair<Histogram, AffineMap> standardize(const Histogram& h) {
  const AffineMap m = affine_match(compute_moments(h), {0.0, 1.0});
  return {apply_affine(m, h), m};
}

std::vector<double> apply_affine(const AffineMap& m,
                                 std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&m](double x) { return m(x); });
  return out;
}

Histogram apply_affine(const AffineMap& m, const Histogram& h) {
  return Histogram(apply_affine(m, h.centers()), h.weights());
}

}  // namespace ndflow
