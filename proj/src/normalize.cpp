#include "ndflow/normalize.hpp"

#include <algorithm>

#include "ndflow/error.hpp"

namespace ndflow {

std::vector<double> NdflowTransform::apply(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [this](double x) { return (*this)(x); });
  return out;
}

MatchResult match_standardised(const GaussianMixture& q, const GaussianMixture& p,
                               const OptimConfig& cfg) {
  const Moments m = p.moments();
  const AffineMap to_std = affine_match(m, Moments{0.0, 1.0});
  const AffineMap from_std = to_std.inverse();
  auto run = [&] {
    try {
      return match_mixtures(apply_affine(to_std, q), apply_affine(to_std, p), cfg);
    } catch (const MatchDivergenceError& e) {
      std::vector<double> trace = e.trace();
      for (double& d : trace) d *= to_std.scale;
      throw MatchDivergenceError(e.what(), std::move(trace));
    }
  };
  MatchResult r = run();
  const GaussianMixture matched = apply_affine(from_std, r.matched());
  r.initial = q;
  r.optimized_means = matched.means();
  r.optimized_precisions = matched.precisions();
  // L2 divergence picks up the Jacobian of the change of variables.
  for (double& d : r.divergence_trace) d *= to_std.scale;
  return r;
}

NdflowTransform build_ndflow(const GaussianMixture& source,
                             const GaussianMixture& target, double data_min,
                             double data_max, const FlowSettings& settings) {
  if (!(data_min <= data_max)) throw invalid_input("data range is empty or reversed");
  const AffineMap pre = affine_match(source.moments(), target.moments());
  const GaussianMixture aligned = apply_affine(pre, source);
  MatchResult match = match_standardised(aligned, target, settings.optim);
  const MeshRange range = settings.mesh_range.value_or(
      default_mesh_range(pre(data_min), pre(data_max), aligned, settings.margin_sd));
  TransformTable table =
      integrate_flow(ParameterPath::from_match(match), range.lo, range.hi,
                     settings.mesh_points, settings.rk4_steps);
  return {pre, std::move(match), std::move(table)};
}

}  // namespace ndflow
