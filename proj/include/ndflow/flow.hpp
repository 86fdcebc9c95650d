#pragma once

#include <span>
#include <vector>

#include "ndflow/l2match.hpp"
#include "ndflow/mixture.hpp"

namespace ndflow {

/// Linear interpolation of component parameters between a start mixture and
/// its matched end point, at fixed weights. Rates are constant in t.
class ParameterPath {
 public:
  /// Throws ErrorKind::InvalidInput on length mismatch, non-positive
  /// precisions at either endpoint, or weights not summing to one.
  ParameterPath(std::vector<double> weights, std::vector<double> means_start,
                std::vector<double> means_end,
                std::vector<double> precisions_start,
                std::vector<double> precisions_end);

  static ParameterPath from_match(const MatchResult& m);
  static ParameterPath between(const GaussianMixture& start,
                               const GaussianMixture& end);

  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double mean(std::size_t k, double t) const noexcept {
    return means_start_[k] + t * mean_rate_[k];
  }
  double precision(std::size_t k, double t) const noexcept {
    return precisions_start_[k] + t * precision_rate_[k];
  }
  double mean_rate(std::size_t k) const noexcept { return mean_rate_[k]; }
  double precision_rate(std::size_t k) const noexcept { return precision_rate_[k]; }

  GaussianMixture at(double t) const;

 private:
  std::vector<double> weights_;
  std::vector<double> means_start_, mean_rate_;
  std::vector<double> precisions_start_, precision_rate_;
};

/// Monotone map sampled on a strictly increasing mesh, applied by linear
/// interpolation and boundary-slope extrapolation.
class TransformTable {
 public:
  /// Throws ErrorKind::InvalidInput unless both columns have equal length
  /// >= 2 and are strictly increasing.
  TransformTable(std::vector<double> mesh, std::vector<double> mapped);

  static TransformTable identity(double lo, double hi, std::size_t points);

  const std::vector<double>& mesh() const noexcept { return mesh_; }
  const std::vector<double>& mapped() const noexcept { return mapped_; }
  std::size_t size() const noexcept { return mesh_.size(); }

  double operator()(double x) const noexcept;

 private:
  std::vector<double> mesh_;
  std::vector<double> mapped_;
};

/// Velocity of component k's samples at time t and position x.
double component_velocity(const ParameterPath& path, std::size_t k, double t,
                          double x);

/// Responsibility-weighted combination of the component velocities. Where
/// every component density underflows, falls back to the component nearest
/// in Mahalanobis distance.
double mixture_velocity(const ParameterPath& path, double t, double x);

/// Advances every point of a uniform mesh over [mesh_min, mesh_max] from
/// t = 0 to t = 1 with fixed-step classic RK4. Throws ErrorKind::Numerical
/// if the result is not strictly increasing (more steps are needed).
TransformTable integrate_flow(const ParameterPath& path, double mesh_min,
                              double mesh_max, std::size_t mesh_points = 200,
                              std::size_t rk4_steps = 32);

std::vector<double> apply_transform(const TransformTable& tbl,
                                    std::span<const double> values);

/// Inverse table on a uniform mesh spanning the mapped range.
TransformTable invert_transform(const TransformTable& tbl);

struct MeshRange {
  double lo;
  double hi;
};

/// [min, max] of the data widened by `margin_sd` standard deviations of the
/// mixture on each side.
MeshRange default_mesh_range(double data_min, double data_max,
                             const GaussianMixture& source,
                             double margin_sd = 3.0);

}  // namespace ndflow
