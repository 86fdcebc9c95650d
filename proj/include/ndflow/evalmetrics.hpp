#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ndflow/histogram.hpp"

namespace ndflow {

struct Discrepancy {
  double mae = 0.0;
  double rmse = 0.0;
};

/// Bin-wise MAE and RMSE between two histograms after normalising each to
/// unit mass and linearly rebinning both onto a common grid. The grid spans
/// the union of the two ranges with the finer of the two bin widths; bins
/// outside one histogram's support count as zero there.
Discrepancy histogram_discrepancy(const Histogram& a, const Histogram& b);

/// Linear (cloud-in-cell) rebinning of `h` onto the grid lo + j * width,
/// j = 0..bins-1. Mass is preserved.
std::vector<double> rebin_linear(const Histogram& h, double lo, double width,
                                 std::size_t bins);

/// Weighted quartiles of one tissue class.
struct TissueStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Quartiles from the interpolated weighted empirical CDF (see WeightedCdf).
/// Throws ErrorKind::InvalidInput for zero total weight or length mismatch.
TissueStats weighted_quartiles(std::span<const double> values,
                               std::span<const double> weights);

/// n pairs (quantile_a(p_i), quantile_b(p_i)) at p_i = i / (n + 1).
/// Throws ErrorKind::InvalidInput for n < 2 or single-centre histograms.
std::vector<std::pair<double, double>> qq_points(const Histogram& a,
                                                 const Histogram& b,
                                                 std::size_t n);

struct BrownForsythe {
  double statistic = 0.0;  // F on absolute deviations from group medians
  double p_value = 1.0;
};

/// Brown-Forsythe test for equal spread.
///
/// For two groups the p-value is one-tailed for the alternative that the
/// first group is more spread out than the second (Student t on the
/// absolute deviations, t^2 = F). For more groups it is the usual upper-tail
/// F p-value. Throws ErrorKind::InvalidInput for fewer than two groups or a
/// group with fewer than two values, and ErrorKind::DegenerateMoments if the
/// within-group deviation spread is zero.
BrownForsythe brown_forsythe(std::span<const std::vector<double>> groups);

}  // namespace ndflow
