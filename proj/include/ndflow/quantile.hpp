#pragma once

#include <span>
#include <vector>

#include "ndflow/histogram.hpp"

namespace ndflow {

/// Weighted empirical CDF with linear interpolation.
///
/// Each point with weight w_i sits at plotting position
/// (W_{<i} + w_i / 2) / W, where W_{<i} is the weight of the points sorted
/// before it and W the total. Quantiles interpolate linearly between
/// positions and clamp to the extreme values outside them. With equal
/// weights this is the midpoint (Hazen) rule, so [1, 2, 3] has median 2.
/// Zero-weight points are ignored.
class WeightedCdf {
 public:
  /// Throws ErrorKind::InvalidInput on length mismatch, negative or
  /// non-finite weights, or zero total weight.
  WeightedCdf(std::span<const double> values, std::span<const double> weights);
  explicit WeightedCdf(const Histogram& h);

  /// p is clamped to [0, 1].
  double quantile(double p) const noexcept;
  std::vector<double> quantiles(std::span<const double> ps) const;

  std::size_t support_size() const noexcept { return values_.size(); }

 private:
  void build(std::vector<std::pair<double, double>> points);

  std::vector<double> values_;
  std::vector<double> positions_;
};

}  // namespace ndflow
