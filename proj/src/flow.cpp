#include "ndflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ndflow/error.hpp"

namespace ndflow {

ParameterPath::ParameterPath(std::vector<double> weights,
                             std::vector<double> means_start,
                             std::vector<double> means_end,
                             std::vector<double> precisions_start,
                             std::vector<double> precisions_end)
    : weights_(std::move(weights)), means_start_(std::move(means_start)),
      precisions_start_(std::move(precisions_start)) {
  const std::size_t K = weights_.size();
  if (K == 0 || means_start_.size() != K || means_end.size() != K ||
      precisions_start_.size() != K || precisions_end.size() != K)
    throw invalid_input("parameter path arrays differ in length");
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw invalid_input("path weights must sum to one");
  mean_rate_.resize(K);
  precision_rate_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    // Linear interpolation keeps positivity if both endpoints are positive.
    if (!(precisions_start_[k] > 0.0) || !(precisions_end[k] > 0.0))
      throw invalid_input("path precisions must be positive at both ends");
    mean_rate_[k] = means_end[k] - means_start_[k];
    precision_rate_[k] = precisions_end[k] - precisions_start_[k];
  }
}

ParameterPath ParameterPath::from_match(const MatchResult& m) {
  return ParameterPath(m.initial.weights(), m.initial.means(), m.optimized_means,
                       m.initial.precisions(), m.optimized_precisions);
}

ParameterPath ParameterPath::between(const GaussianMixture& start,
                                     const GaussianMixture& end) {
  if (start.size() != end.size() || start.weights() != end.weights())
    throw invalid_input("path endpoints must share weights");
  return ParameterPath(start.weights(), start.means(), end.means(),
                       start.precisions(), end.precisions());
}

GaussianMixture ParameterPath::at(double t) const {
  std::vector<double> m(size()), l(size());
  for (std::size_t k = 0; k < size(); ++k) {
    m[k] = mean(k, t);
    l[k] = precision(k, t);
  }
  return GaussianMixture(weights_, std::move(m), std::move(l));
}

TransformTable::TransformTable(std::vector<double> mesh, std::vector<double> mapped)
    : mesh_(std::move(mesh)), mapped_(std::move(mapped)) {
  if (mesh_.size() < 2 || mesh_.size() != mapped_.size())
    throw invalid_input("transform table needs two equal columns of length >= 2");
  for (std::size_t i = 0; i < mesh_.size(); ++i) {
    if (!std::isfinite(mesh_[i]) || !std::isfinite(mapped_[i]))
      throw invalid_input("transform table holds a non-finite value");
    if (i > 0 && !(mesh_[i] > mesh_[i - 1] && mapped_[i] > mapped_[i - 1]))
      throw invalid_input("transform table columns must be strictly increasing");
  }
}

namespace {

std::vector<double> uniform_mesh(double lo, double hi, std::size_t points) {
  std::vector<double> mesh(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) mesh[i] = lo + step * static_cast<double>(i);
  mesh.back() = hi;
  return mesh;
}

// Piecewise-linear lookup of y(x) through (xs, ys), extending the boundary
// segments. Exact at the knots.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                   double x) noexcept {
  const std::size_t n = xs.size();
  std::size_t i;
  if (x <= xs.front()) {
    i = 0;
  } else if (x >= xs.back()) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  }
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return (1.0 - t) * ys[i] + t * ys[i + 1];
}

}  // namespace

TransformTable TransformTable::identity(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw invalid_input("invalid mesh specification");
  auto mesh = uniform_mesh(lo, hi, points);
  auto mapped = mesh;
  return TransformTable(std::move(mesh), std::move(mapped));
}

double TransformTable::operator()(double x) const noexcept {
  return interpolate(mesh_, mapped_, x);
}

double component_velocity(const ParameterPath& path, std::size_t k, double t,
                          double x) {
  const double lam = path.precision(k, t);
  return path.mean_rate(k) -
         path.precision_rate(k) / (2.0 * lam) * (x - path.mean(k, t));
}

double mixture_velocity(const ParameterPath& path, double t, double x) {
  const std::size_t K = path.size();
  if (K == 1) return component_velocity(path, 0, t, x);
  // Log-domain responsibilities of the time-t mixture.
  auto log_term = [&](std::size_t k) {
    const double lam = path.precision(k, t);
    const double d = x - path.mean(k, t);
    return std::log(path.weights()[k]) + 0.5 * std::log(lam) - 0.5 * lam * d * d;
  };
  double top = -std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  double nearest_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    top = std::max(top, log_term(k));
    const double d = x - path.mean(k, t);
    const double dist = std::abs(d) * std::sqrt(path.precision(k, t));  // no overflow far out
    if (dist < nearest_dist) {
      nearest_dist = dist;
      nearest = k;
    }
  }
  if (!std::isfinite(top)) return component_velocity(path, nearest, t, x);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double r = std::exp(log_term(k) - top);
    num += r * component_velocity(path, k, t, x);
    den += r;
  }
  return num / den;
}

TransformTable integrate_flow(const ParameterPath& path, double mesh_min,
                              double mesh_max, std::size_t mesh_points,
                              std::size_t rk4_steps) {
  if (mesh_points < 2) throw invalid_input("mesh needs at least two points");
  if (rk4_steps < 1) throw invalid_input("RK4 needs at least one step");
  if (!(mesh_max > mesh_min) || !std::isfinite(mesh_min) || !std::isfinite(mesh_max))
    throw invalid_input("mesh range must be finite with min < max");

  std::vector<double> mesh = uniform_mesh(mesh_min, mesh_max, mesh_points);
  std::vector<double> mapped(mesh_points);
  const double h = 1.0 / static_cast<double>(rk4_steps);
  for (std::size_t i = 0; i < mesh_points; ++i) {
    double x = mesh[i];
    for (std::size_t s = 0; s < rk4_steps; ++s) {
      const double t = static_cast<double>(s) * h;
      const double k1 = mixture_velocity(path, t, x);
      const double k2 = mixture_velocity(path, t + 0.5 * h, x + 0.5 * h * k1);
      const double k3 = mixture_velocity(path, t + 0.5 * h, x + 0.5 * h * k2);
      const double k4 = mixture_velocity(path, t + h, x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!std::isfinite(x))
      throw Error(ErrorKind::Numerical, "flow integration produced a non-finite value");
    mapped[i] = x;
  }
  for (std::size_t i = 1; i < mesh_points; ++i)
    if (!(mapped[i] > mapped[i - 1]))
      throw Error(ErrorKind::Numerical,
                  "integrated flow is not monotone; increase the number of RK4 steps");
  return TransformTable(std::move(mesh), std::move(mapped));
}

std::vector<double> apply_transform(const TransformTable& tbl,
                                    std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&tbl](double x) { return tbl(x); });
  return out;
}

TransformTable invert_transform(const TransformTable& tbl) {
  const auto& fx = tbl.mapped();
  std::vector<double> mesh = uniform_mesh(fx.front(), fx.back(), tbl.size());
  std::vector<double> mapped(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j)
    mapped[j] = interpolate(fx, tbl.mesh(), mesh[j]);
  mapped.front() = tbl.mesh().front();
  mapped.back() = tbl.mesh().back();
  return TransformTable(std::move(mesh), std::move(mapped));
}

MeshRange default_mesh_range(double data_min, double data_max,
                             const GaussianMixture& source, double margin_sd) {
  const double sd = std::sqrt(source.moments().variance);
  return {data_min - margin_sd * sd, data_max + margin_sd * sd};
}

}  // namespace ndflow
