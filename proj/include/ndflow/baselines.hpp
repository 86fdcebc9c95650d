#pragma once

#include <array>
#include <span>
#include <vector>

#include "ndflow/histogram.hpp"

namespace ndflow {

/// Probability levels of the 11 standard landmarks: the 1st percentile, the
/// deciles 10..90, and the 99th percentile.
inline constexpr std::array<double, 11> kLandmarkLevels = {
    0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99};

/// Eleven non-decreasing intensity landmarks.
class LandmarkSet {
 public:
  explicit LandmarkSet(std::array<double, 11> values);
  /// Throws ErrorKind::InvalidInput unless exactly 11 non-decreasing values.
  static LandmarkSet from_vector(std::span<const double> values);

  const std::array<double, 11>& values() const noexcept { return values_; }
  bool strictly_increasing() const noexcept;

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::array<double, 11> values_;
};

/// Piecewise-linear map through (knots_in[i], knots_out[i]) that continues
/// the first and last segment slopes outside the knot range.
class PiecewiseLinearMap {
 public:
  /// Throws ErrorKind::InvalidInput unless lengths match and are >= 2,
  /// knots_in is strictly increasing and knots_out non-decreasing.
  PiecewiseLinearMap(std::vector<double> knots_in, std::vector<double> knots_out);

  const std::vector<double>& knots_in() const noexcept { return in_; }
  const std::vector<double>& knots_out() const noexcept { return out_; }

  double operator()(double x) const noexcept;

  /// right_slope / left_slope at each interior knot.
  std::vector<double> slope_ratios() const;

 private:
  std::vector<double> in_;
  std::vector<double> out_;
};

/// Weighted quantiles of `h` at kLandmarkLevels. Throws ErrorKind::InvalidInput
/// if fewer than two centres carry weight.
LandmarkSet extract_landmarks(const Histogram& h);

/// Element-wise mean. Throws ErrorKind::InvalidInput on empty input.
LandmarkSet average_landmarks(std::span<const LandmarkSet> sets);

/// Throws ErrorKind::InvalidInput if `src` has tied landmarks.
PiecewiseLinearMap build_piecewise(const LandmarkSet& src, const LandmarkSet& tgt);

std::vector<double> apply_piecewise(const PiecewiseLinearMap& m,
                                    std::span<const double> values);

/// Maps the centres of `h` through `m`, keeping the weights. Requires `m`
/// to be strictly increasing over the centres.
Histogram apply_piecewise(const PiecewiseLinearMap& m, const Histogram& h);

}  // namespace ndflow
