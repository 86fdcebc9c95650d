#include "ndflow/quantile.hpp"

#include <algorithm>
#include <cmath>

#include "ndflow/error.hpp"

namespace ndflow {

WeightedCdf::WeightedCdf(std::span<const double> values,
                         std::span<const double> weights) {
  if (values.size() != weights.size())
    throw invalid_input("values and weights differ in length");
  std::vector<std::pair<double, double>> points;
  points.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw invalid_input("non-finite value");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw invalid_input("weights must be finite and non-negative");
    if (weights[i] > 0.0) points.emplace_back(values[i], weights[i]);
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  build(std::move(points));
}

WeightedCdf::WeightedCdf(const Histogram& h) {
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.weights()[i] > 0.0) points.emplace_back(h.centers()[i], h.weights()[i]);
  build(std::move(points));
}

void WeightedCdf::build(std::vector<std::pair<double, double>> points) {
  double total = 0.0;
  for (const auto& [v, w] : points) total += w;
  if (!(total > 0.0)) throw invalid_input("zero total weight");
  values_.reserve(points.size());
  positions_.reserve(points.size());
  double below = 0.0;
  for (const auto& [v, w] : points) {
    values_.push_back(v);
    positions_.push_back((below + 0.5 * w) / total);
    below += w;
  }
}

double WeightedCdf::quantile(double p) const noexcept {
  p = std::clamp(p, 0.0, 1.0);
  if (p <= positions_.front()) return values_.front();
  if (p >= positions_.back()) return values_.back();
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(positions_.begin(), positions_.end(), p) - positions_.begin());
  const std::size_t lo = hi - 1;
  const double t = (p - positions_[lo]) / (positions_[hi] - positions_[lo]);
  return (1.0 - t) * values_[lo] + t * values_[hi];
}

std::vector<double> WeightedCdf::quantiles(std::span<const double> ps) const {
  std::vector<double> out(ps.size());
  std::transform(ps.begin(), ps.end(), out.begin(),
                 [this](double p) { return quantile(p); });
  return out;
}

}  // namespace ndflow
