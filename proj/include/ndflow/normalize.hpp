#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ndflow/flow.hpp"
#include "ndflow/histogram.hpp"
#include "ndflow/l2match.hpp"
#include "ndflow/mixture.hpp"

namespace ndflow {

struct FlowSettings {
  OptimConfig optim;
  std::size_t mesh_points = 200;
  std::size_t rk4_steps = 32;
  double margin_sd = 3.0;              // mesh padding beyond the data range
  std::optional<MeshRange> mesh_range;  // overrides the data-derived range
};

/// End-to-end intensity map: moment-matching affine step followed by the
/// sampled density flow.
struct NdflowTransform {
  AffineMap pre;
  MatchResult match;
  TransformTable table;

  double operator()(double x) const noexcept { return table(pre(x)); }
  std::vector<double> apply(std::span<const double> values) const;
};

/// match_mixtures carried out in the target's standardised coordinates and
/// mapped back: parameters and trace are reported in the original units.
/// The flow built from the result is unchanged by the round trip, but the
/// descent no longer depends on the intensity scale.
MatchResult match_standardised(const GaussianMixture& q, const GaussianMixture& p,
                               const OptimConfig& cfg = {});

/// Aligns `source` to `target` by moments, matches the aligned mixture to
/// `target`, and integrates the resulting flow over a mesh covering the
/// pre-aligned data range [data_min, data_max].
NdflowTransform build_ndflow(const GaussianMixture& source,
                             const GaussianMixture& target, double data_min,
                             double data_max, const FlowSettings& settings = {});

}  // namespace ndflow
