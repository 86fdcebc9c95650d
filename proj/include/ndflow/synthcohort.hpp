#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ndflow/dpgmm.hpp"
#include "ndflow/evalmetrics.hpp"
#include "ndflow/mixture.hpp"
#include "ndflow/normalize.hpp"

namespace ndflow {

/// Smooth monotone intensity distortion
///   g(x) = scale * (x + sum_j amp_j * width_j * tanh((x - centre_j) / width_j)) + offset.
/// g'(x) = scale * (1 + sum_j amp_j sech^2(...)), so g is strictly increasing
/// whenever the negative amplitudes sum to more than -1.
struct Distortion {
  struct Bump {
    double amplitude = 0.0;
    double centre = 0.0;
    double width = 1.0;
  };
  double scale = 1.0;
  double offset = 0.0;
  std::vector<Bump> bumps;

  static Distortion identity() { return {}; }

  double operator()(double x) const noexcept;
  double derivative(double x) const noexcept;
  /// Inverse by bisection; requires strict monotonicity.
  double inverse(double y) const;
  /// Whether g' > 0 on a dense grid over [lo, hi].
  bool monotone_on(double lo, double hi) const noexcept;
};

struct CohortSpec {
  std::size_t n_centres = 3;
  std::size_t subjects_per_centre = 30;
  GaussianMixture base_mixture = GaussianMixture::single(0.0, 1.0);
  std::vector<Distortion> centre_distortions;  // one per centre
  double subject_jitter = 0.0;
  std::size_t samples_per_subject = 200000;
  bool round_to_integer = true;  // mimic integer-valued scanner intensities
  std::uint64_t seed = 0;

  void validate() const;

  /// Three centres, 30 subjects each, 2e5 samples, a three-tissue
  /// low/mid/high intensity layout and nonlinear centre distortions.
  static CohortSpec default_spec();
};

struct SubjectData {
  std::size_t centre = 0;
  std::size_t subject = 0;
  std::vector<double> values;
  std::vector<std::size_t> labels;  // generating base component per value
};

/// Per-subject parameter jitter followed by the centre distortion.
/// Deterministic for a fixed seed. Throws ErrorKind::InvalidInput if a
/// distortion is not monotone over the realised sample range.
std::vector<SubjectData> generate_cohort(const CohortSpec& spec);

enum class Method { Affine, NdflowCentre, NdflowIndividual, Nyul };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct ExperimentConfig {
  DpgmmConfig dpgmm;
  FlowSettings flow;
  std::size_t reference_grid_points = 400;
  double reference_total_weight = 1e5;  // pseudo-count of averaged densities
  std::size_t discrepancy_bins = 128;
};

/// Everything shared between methods: per-subject fits and standardisation,
/// and the global and centre-wise reference mixtures.
struct PreparedCohort {
  struct Subject {
    std::size_t centre;
    std::size_t subject;
    std::vector<double> values;        // standardised
    std::vector<std::size_t> labels;
    GaussianMixture mixture;           // fitted, then standardised
    Histogram histogram;               // standardised
    AffineMap standardisation;
  };
  std::vector<Subject> subjects;
  std::size_t n_tissues = 0;
  std::size_t n_centres = 0;
  GaussianMixture global_reference = GaussianMixture::single(0.0, 1.0);
  std::vector<GaussianMixture> centre_references;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  ExperimentConfig config;
};

PreparedCohort prepare_cohort(const std::vector<SubjectData>& cohort,
                              std::size_t n_tissues,
                              const ExperimentConfig& cfg = {});

struct MethodReport {
  Method method = Method::Affine;
  /// stats[subject][tissue]
  std::vector<std::vector<TissueStats>> stats;
  /// Across-subject mean and standard deviation per tissue of q1/median/q3.
  std::vector<TissueStats> mean;
  std::vector<TissueStats> sd;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  std::vector<Discrepancy> discrepancy;  // per subject, to the global target
};

/// Applies one normalisation method to every prepared subject.
MethodReport run_normalisation_experiment(const PreparedCohort& cohort, Method method);

/// Normalised values of every subject under `method`.
std::vector<std::vector<double>> normalise_cohort(const PreparedCohort& cohort,
                                                  Method method);

struct ExperimentReport {
  std::vector<MethodReport> methods;
  /// One-tailed Brown-Forsythe p-values for lower spread than affine:
  /// p[method][tissue] = {q1, median, q3}.
  std::map<Method, std::vector<std::array<double, 3>>> lower_spread_p;
};

ExperimentReport run_experiment(const PreparedCohort& cohort,
                                const std::vector<Method>& methods);

}  // namespace ndflow
