#pragma once

#include <span>
#include <utility>
#include <vector>

namespace ndflow {

/// Weighted 1-D histogram stored as (bin centre, weight) pairs.
///
/// Centres are strictly increasing, weights are non-negative and sum to a
/// positive total. Weights need not be integers, so probability-weighted
/// counts are accepted.
class Histogram {
 public:
  /// Validates and takes ownership. Throws ErrorKind::InvalidInput.
  Histogram(std::vector<double> centers, std::vector<double> weights);

  /// Bins `values` onto the integer grid [floor(min), ceil(max)], which is
  /// the canonical path for integer-valued intensities.
  static Histogram from_integer_values(std::span<const double> values,
                                       std::span<const double> weights = {});

  /// Bins `values` onto `bins` equal-width bins spanning [lo, hi]. Values
  /// outside the range are clamped into the boundary bins.
  static Histogram from_values(std::span<const double> values, double lo,
                               double hi, std::size_t bins,
                               std::span<const double> weights = {});

  const std::vector<double>& centers() const noexcept { return centers_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return centers_.size(); }
  double total_weight() const noexcept { return total_; }

  /// Smallest gap between adjacent centres; 0 for a single bin.
  double min_spacing() const noexcept;

 private:
  std::vector<double> centers_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Orientation-preserving affine map x -> scale * x + offset.
struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;

  /// Throws ErrorKind::InvalidInput unless scale is finite and positive.
  static AffineMap make(double scale, double offset);
  static AffineMap identity() { return {}; }

  double operator()(double x) const noexcept { return scale * x + offset; }

  /// (*this)(inner(x)).
  AffineMap compose(const AffineMap& inner) const noexcept {
    return {scale * inner.scale, scale * inner.offset + offset};
  }
  AffineMap inverse() const noexcept { return {1.0 / scale, -offset / scale}; }
};

Moments compute_moments(const Histogram& h);

/// Map taking a density with moments `src` onto one with moments `tgt`.
/// Throws ErrorKind::DegenerateMoments if either variance is not positive.
AffineMap affine_match(const Moments& src, const Moments& tgt);

/// Rescales to zero mean and unit variance; returns the new histogram and
/// the map applied to its centres.
std::pair<Histogram, AffineMap> standardize(const Histogram& h);

std::vector<double> apply_affine(const AffineMap& m,
                                 std::span<const double> values);

/// Applies `m` to the centres of `h`, keeping the weights.
Histogram apply_affine(const AffineMap& m, const Histogram& h);

}  // namespace ndflow
