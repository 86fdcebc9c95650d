#include "ndflow/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "ndflow/error.hpp"
#include "ndflow/quantile.hpp"

namespace ndflow {

std::vector<double> rebin_linear(const Histogram& h, double lo, double width,
                                 std::size_t bins) {
  std::vector<double> out(bins, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    double pos = (h.centers()[i] - lo) / width;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) pos = nearest;  // centre on a grid node
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    const auto j = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(j);
    out[j] += (1.0 - frac) * h.weights()[i];
    if (frac > 0.0) out[j + 1] += frac * h.weights()[i];
  }
  return out;
}

Discrepancy histogram_discrepancy(const Histogram& a, const Histogram& b) {
  const double lo = std::min(a.centers().front(), b.centers().front());
  const double hi = std::max(a.centers().back(), b.centers().back());
  double width = 0.0;
  for (double w : {a.min_spacing(), b.min_spacing()})
    if (w > 0.0) width = width > 0.0 ? std::min(width, w) : w;
  if (!(width > 0.0)) width = hi > lo ? hi - lo : 1.0;
  const auto bins = static_cast<std::size_t>(std::round((hi - lo) / width)) + 1;

  auto ga = rebin_linear(a, lo, width, bins);
  auto gb = rebin_linear(b, lo, width, bins);
  const double ta = a.total_weight(), tb = b.total_weight();
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t j = 0; j < bins; ++j) {
    const double d = ga[j] / ta - gb[j] / tb;
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const auto n = static_cast<double>(bins);
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

TissueStats weighted_quartiles(std::span<const double> values,
                               std::span<const double> weights) {
  const WeightedCdf cdf(values, weights);
  return {cdf.quantile(0.25), cdf.quantile(0.5), cdf.quantile(0.75)};
}

std::vector<std::pair<double, double>> qq_points(const Histogram& a,
                                                 const Histogram& b,
                                                 std::size_t n) {
  if (n < 2) throw invalid_input("Q-Q plot needs at least two points");
  const WeightedCdf ca(a), cb(b);
  if (ca.support_size() < 2 || cb.support_size() < 2)
    throw invalid_input("Q-Q plot needs histograms with at least two weighted centres");
  std::vector<std::pair<double, double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    out[i] = {ca.quantile(p), cb.quantile(p)};
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BrownForsythe brown_forsythe(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw invalid_input("Brown-Forsythe needs at least two groups");
  const std::size_t k = groups.size();
  std::vector<std::vector<double>> dev(k);
  std::vector<double> group_mean(k);
  std::size_t total = 0;
  double grand = 0.0;
  for (std::size_t g = 0; g < k; ++g) {
    if (groups[g].size() < 2)
      throw invalid_input("Brown-Forsythe needs at least two values per group");
    const double med = median_of(groups[g]);
    for (double x : groups[g]) dev[g].push_back(std::abs(x - med));
    group_mean[g] = std::accumulate(dev[g].begin(), dev[g].end(), 0.0) /
                    static_cast<double>(dev[g].size());
    grand += std::accumulate(dev[g].begin(), dev[g].end(), 0.0);
    total += dev[g].size();
  }
  grand /= static_cast<double>(total);

  double between = 0.0, within = 0.0;
  for (std::size_t g = 0; g < k; ++g) {
    const double d = group_mean[g] - grand;
    between += static_cast<double>(dev[g].size()) * d * d;
    for (double z : dev[g]) within += (z - group_mean[g]) * (z - group_mean[g]);
  }
  if (!(within > 0.0))
    throw Error(ErrorKind::DegenerateMoments,
                "Brown-Forsythe statistic undefined: no within-group spread");

  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(total - k);
  BrownForsythe out;
  out.statistic = (between / df1) / (within / df2);
  if (k == 2) {
    const double pooled = within / df2;
    const double se = std::sqrt(pooled * (1.0 / static_cast<double>(dev[0].size()) +
                                          1.0 / static_cast<double>(dev[1].size())));
    const double t = (group_mean[0] - group_mean[1]) / se;
    out.p_value = boost::math::cdf(
        boost::math::complement(boost::math::students_t(df2), t));
  } else {
    out.p_value = boost::math::cdf(
        boost::math::complement(boost::math::fisher_f(df1, df2), out.statistic));
  }
  return out;
}

}  // namespace ndflow
