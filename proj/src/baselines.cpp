#include "ndflow/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "ndflow/error.hpp"
#include "ndflow/quantile.hpp"

namespace ndflow {

LandmarkSet::LandmarkSet(std::array<double, 11> values) : values_(values) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw invalid_input("non-finite landmark");
    if (i > 0 && values_[i] < values_[i - 1])
      throw invalid_input("landmarks must be non-decreasing");
  }
}

LandmarkSet LandmarkSet::from_vector(std::span<const double> values) {
  if (values.size() != 11) throw invalid_input("a landmark set has exactly 11 entries");
  std::array<double, 11> a{};
  std::copy(values.begin(), values.end(), a.begin());
  return LandmarkSet(a);
}

bool LandmarkSet::strictly_increasing() const noexcept {
  return std::adjacent_find(values_.begin(), values_.end(),
                            [](double a, double b) { return !(b > a); }) ==
         values_.end();
}

PiecewiseLinearMap::PiecewiseLinearMap(std::vector<double> knots_in,
                                       std::vector<double> knots_out)
    : in_(std::move(knots_in)), out_(std::move(knots_out)) {
  if (in_.size() < 2 || in_.size() != out_.size())
    throw invalid_input("piecewise map needs two equal knot lists of length >= 2");
  for (std::size_t i = 0; i < in_.size(); ++i) {
    if (!std::isfinite(in_[i]) || !std::isfinite(out_[i]))
      throw invalid_input("non-finite knot");
    if (i > 0 && !(in_[i] > in_[i - 1]))
      throw invalid_input("input knots must be strictly increasing");
    if (i > 0 && out_[i] < out_[i - 1])
      throw invalid_input("output knots must be non-decreasing");
  }
}

double PiecewiseLinearMap::operator()(double x) const noexcept {
  std::size_t i;
  if (x <= in_.front()) {
    i = 0;
  } else if (x >= in_.back()) {
    i = in_.size() - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(in_.begin(), in_.end(), x) - in_.begin()) - 1;
  }
  const double t = (x - in_[i]) / (in_[i + 1] - in_[i]);
  return (1.0 - t) * out_[i] + t * out_[i + 1];
}

std::vector<double> PiecewiseLinearMap::slope_ratios() const {
  std::vector<double> ratios;
  for (std::size_t i = 1; i + 1 < in_.size(); ++i) {
    const double left = (out_[i] - out_[i - 1]) / (in_[i] - in_[i - 1]);
    const double right = (out_[i + 1] - out_[i]) / (in_[i + 1] - in_[i]);
    ratios.push_back(right / left);
  }
  return ratios;
}

LandmarkSet extract_landmarks(const Histogram& h) {
  const WeightedCdf cdf(h);
  if (cdf.support_size() < 2)
    throw invalid_input("landmarks need at least two weighted centres");
  std::array<double, 11> values{};
  for (std::size_t i = 0; i < kLandmarkLevels.size(); ++i)
    values[i] = cdf.quantile(kLandmarkLevels[i]);
  return LandmarkSet(values);
}

LandmarkSet average_landmarks(std::span<const LandmarkSet> sets) {
  if (sets.empty()) throw invalid_input("no landmark sets to average");
  std::array<double, 11> acc{};
  for (const auto& s : sets)
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s.values()[i];
  for (double& v : acc) v /= static_cast<double>(sets.size());
  // Rounding can break ties by an ulp; restore monotonicity.
  for (std::size_t i = 1; i < acc.size(); ++i) acc[i] = std::max(acc[i], acc[i - 1]);
  return LandmarkSet(acc);
}

PiecewiseLinearMap build_piecewise(const LandmarkSet& src, const LandmarkSet& tgt) {
  if (!src.strictly_increasing())
    throw invalid_input("source landmarks are tied; the piecewise map is degenerate");
  const auto& a = src.values();
  const auto& b = tgt.values();
  return PiecewiseLinearMap({a.begin(), a.end()}, {b.begin(), b.end()});
}

std::vector<double> apply_piecewise(const PiecewiseLinearMap& m,
                                    std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&m](double x) { return m(x); });
  return out;
}

Histogram apply_piecewise(const PiecewiseLinearMap& m, const Histogram& h) {
  return Histogram(apply_piecewise(m, h.centers()), h.weights());
}

}  // namespace ndflow
