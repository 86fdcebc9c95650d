#include "ndflow/synthcohort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ndflow/baselines.hpp"
#include "ndflow/error.hpp"

namespace ndflow {

double Distortion::operator()(double x) const noexcept {
  double y = x;
  for (const Bump& b : bumps)
    y += b.amplitude * b.width * std::tanh((x - b.centre) / b.width);
  return scale * y + offset;
}

double Distortion::derivative(double x) const noexcept {
  double d = 1.0;
  for (const Bump& b : bumps) {
    const double c = std::cosh((x - b.centre) / b.width);
    d += b.amplitude / (c * c);
  }
  return scale * d;
}

bool Distortion::monotone_on(double lo, double hi) const noexcept {
  if (!(scale > 0.0)) return false;
  constexpr int kProbes = 4096;
  for (int i = 0; i <= kProbes; ++i) {
    const double x = lo + (hi - lo) * i / kProbes;
    if (!(derivative(x) > 0.0)) return false;
  }
  return true;
}

double Distortion::inverse(double y) const {
  // g(x) - scale * x is bounded, so the root is bracketed by the affine part
  // widened by the largest possible bump contribution.
  double reach = 0.0;
  for (const Bump& b : bumps) reach += std::abs(b.amplitude) * b.width;
  const double guess = (y - offset) / scale;
  double lo = guess - reach - 1.0, hi = guess + reach + 1.0;
  if (!((*this)(lo) <= y && (*this)(hi) >= y))
    throw Error(ErrorKind::Numerical, "distortion inverse is not bracketed");
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    ((*this)(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void CohortSpec::validate() const {
  if (n_centres < 1 || subjects_per_centre < 1 || samples_per_subject < 1)
    throw invalid_input("cohort counts must be at least 1");
  if (centre_distortions.size() != n_centres)
    throw invalid_input("need exactly one distortion per centre");
  if (!(subject_jitter >= 0.0)) throw invalid_input("subject jitter must be non-negative");
  for (const auto& d : centre_distortions) {
    if (!(d.scale > 0.0)) throw invalid_input("distortion scale must be positive");
    for (const auto& b : d.bumps)
      if (!(b.width > 0.0)) throw invalid_input("distortion bump width must be positive");
  }
}

CohortSpec CohortSpec::default_spec() {
  CohortSpec spec;
  // CSF-, GM- and WM-like tissues on a scanner-like integer scale.
  spec.base_mixture = GaussianMixture({0.2, 0.45, 0.35}, {40.0, 95.0, 135.0},
                                      {1.0 / (12.0 * 12.0), 1.0 / (10.0 * 10.0),
                                       1.0 / (7.0 * 7.0)});
  spec.centre_distortions = {
      Distortion{1.0, 0.0, {{0.25, 110.0, 25.0}}},
      Distortion{1.4, 15.0, {{-0.35, 80.0, 20.0}, {0.3, 140.0, 15.0}}},
      Distortion{0.8, -5.0, {{0.4, 60.0, 30.0}, {-0.3, 125.0, 12.0}}},
  };
  spec.subject_jitter = 0.02;
  spec.seed = 2018;
  return spec;
}

namespace {

std::mt19937_64 subject_rng(std::uint64_t seed, std::size_t centre, std::size_t subject) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(centre), static_cast<std::uint32_t>(subject)};
  return std::mt19937_64(seq);
}

GaussianMixture jitter_mixture(const GaussianMixture& base, double jitter,
                               std::mt19937_64& rng) {
  if (jitter == 0.0) return base;
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> w(base.size()), m(base.size()), l(base.size());
  double total = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double sd = 1.0 / std::sqrt(base.precisions()[k]);
    m[k] = base.means()[k] + jitter * sd * z(rng);
    l[k] = base.precisions()[k] * std::exp(-2.0 * jitter * z(rng));
    w[k] = base.weights()[k] * std::exp(jitter * z(rng));
    total += w[k];
  }
  for (double& x : w) x /= total;
  return GaussianMixture(std::move(w), std::move(m), std::move(l));
}

}  // namespace

std::vector<SubjectData> generate_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<SubjectData> out;
  out.reserve(spec.n_centres * spec.subjects_per_centre);
  for (std::size_t c = 0; c < spec.n_centres; ++c) {
    const Distortion& g = spec.centre_distortions[c];
    for (std::size_t s = 0; s < spec.subjects_per_centre; ++s) {
      auto rng = subject_rng(spec.seed, c, s);
      const GaussianMixture anatomy = jitter_mixture(spec.base_mixture, spec.subject_jitter, rng);
      SubjectData subj{c, s, {}, {}};
      subj.values = sample(anatomy, spec.samples_per_subject, rng, &subj.labels);
      const auto [lo, hi] = std::minmax_element(subj.values.begin(), subj.values.end());
      if (!g.monotone_on(*lo, *hi))
        throw invalid_input("centre distortion is not monotone over the sampled range");
      for (double& v : subj.values) {
        v = g(v);
        if (spec.round_to_integer) v = std::round(v);
      }
      out.push_back(std::move(subj));
    }
  }
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Affine: return "affine";
    case Method::NdflowCentre: return "ndflow_centre";
    case Method::NdflowIndividual: return "ndflow_individual";
    case Method::Nyul: return "nyul";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::Affine, Method::NdflowCentre, Method::NdflowIndividual, Method::Nyul})
    if (to_string(m) == name) return m;
  throw invalid_input("unknown normalisation method '" + name + "'");
}

namespace {

Histogram subject_histogram(const std::vector<double>& values) {
  const bool integral = std::all_of(values.begin(), values.end(),
                                    [](double v) { return v == std::round(v); });
  if (integral) return Histogram::from_integer_values(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return Histogram::from_values(values, *lo, *hi + 1e-9 * (1.0 + std::abs(*hi)), 256);
}

// Average of standardised subject densities on a grid, treated as a
// histogram with a fixed pseudo-count, then fitted like any subject.
GaussianMixture fit_reference(const std::vector<const PreparedCohort::Subject*>& members,
                              double lo, double hi, const ExperimentConfig& cfg) {
  const std::size_t n = cfg.reference_grid_points;
  std::vector<double> centres(n), weights(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    centres[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  for (const auto* s : members)
    for (std::size_t i = 0; i < n; ++i) weights[i] += mixture_pdf(s->mixture, centres[i]);
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w *= cfg.reference_total_weight / total;
  return fit_dpgmm(Histogram(std::move(centres), std::move(weights)), cfg.dpgmm);
}

double sample_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

PreparedCohort prepare_cohort(const std::vector<SubjectData>& cohort,
                              std::size_t n_tissues, const ExperimentConfig& cfg) {
  if (cohort.empty()) throw invalid_input("empty cohort");
  PreparedCohort out;
  out.config = cfg;
  out.n_tissues = n_tissues;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const SubjectData& s : cohort) {
    const Histogram raw = subject_histogram(s.values);
    const GaussianMixture fit = fit_dpgmm(raw, cfg.dpgmm);
    auto [hist, standardise] = standardize(raw);
    PreparedCohort::Subject p{s.centre, s.subject, apply_affine(standardise, s.values),
                              s.labels, apply_affine(standardise, fit), std::move(hist),
                              standardise};
    const auto [mn, mx] = std::minmax_element(p.values.begin(), p.values.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
    out.n_centres = std::max(out.n_centres, s.centre + 1);
    out.subjects.push_back(std::move(p));
  }
  out.grid_lo = lo;
  out.grid_hi = hi;

  std::vector<const PreparedCohort::Subject*> all;
  for (const auto& s : out.subjects) all.push_back(&s);
  out.global_reference = fit_reference(all, lo, hi, cfg);
  for (std::size_t c = 0; c < out.n_centres; ++c) {
    std::vector<const PreparedCohort::Subject*> members;
    for (const auto& s : out.subjects)
      if (s.centre == c) members.push_back(&s);
    if (members.empty()) throw invalid_input("a centre has no subjects");
    out.centre_references.push_back(fit_reference(members, lo, hi, cfg));
  }
  return out;
}

std::vector<std::vector<double>> normalise_cohort(const PreparedCohort& cohort,
                                                  Method method) {
  const auto& subjects = cohort.subjects;
  std::vector<std::vector<double>> out(subjects.size());
  switch (method) {
    case Method::Affine:
      for (std::size_t i = 0; i < subjects.size(); ++i) out[i] = subjects[i].values;
      break;
    case Method::NdflowIndividual:
      for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto& s = subjects[i];
        const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
        const NdflowTransform tf =
            build_ndflow(s.mixture, cohort.global_reference, *mn, *mx, cohort.config.flow);
        out[i] = tf.apply(s.values);
      }
      break;
    case Method::NdflowCentre:
      for (std::size_t c = 0; c < cohort.n_centres; ++c) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (const auto& s : subjects)
          if (s.centre == c)
            for (double v : s.values) mn = std::min(mn, v), mx = std::max(mx, v);
        const NdflowTransform tf = build_ndflow(cohort.centre_references[c],
                                                cohort.global_reference, mn, mx,
                                                cohort.config.flow);
        for (std::size_t i = 0; i < subjects.size(); ++i)
          if (subjects[i].centre == c) out[i] = tf.apply(subjects[i].values);
      }
      break;
    case Method::Nyul: {
      std::vector<LandmarkSet> sets;
      for (const auto& s : subjects) sets.push_back(extract_landmarks(s.histogram));
      const LandmarkSet target = average_landmarks(sets);
      for (std::size_t i = 0; i < subjects.size(); ++i)
        out[i] = apply_piecewise(build_piecewise(sets[i], target), subjects[i].values);
      break;
    }
  }
  return out;
}

MethodReport run_normalisation_experiment(const PreparedCohort& cohort, Method method) {
  const auto normalised = normalise_cohort(cohort, method);
  const std::size_t T = cohort.n_tissues;
  const auto& cfg = cohort.config;

  // Target histogram: the global reference density on the evaluation grid.
  const double width = (cohort.grid_hi - cohort.grid_lo) / static_cast<double>(cfg.discrepancy_bins);
  std::vector<double> centres(cfg.discrepancy_bins), target(cfg.discrepancy_bins);
  for (std::size_t j = 0; j < centres.size(); ++j) {
    centres[j] = cohort.grid_lo + (static_cast<double>(j) + 0.5) * width;
    target[j] = mixture_pdf(cohort.global_reference, centres[j]);
  }
  const Histogram target_hist(centres, target);

  MethodReport rep;
  rep.method = method;
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& labels = cohort.subjects[i].labels;
    std::vector<TissueStats> row(T);
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> vals;
      for (std::size_t n = 0; n < labels.size(); ++n)
        if (labels[n] == t) vals.push_back(normalised[i][n]);
      if (vals.empty()) throw invalid_input("a tissue class has no samples");
      const std::vector<double> ones(vals.size(), 1.0);
      row[t] = weighted_quartiles(vals, ones);
    }
    rep.stats.push_back(std::move(row));
    const Histogram h = Histogram::from_values(normalised[i], cohort.grid_lo,
                                               cohort.grid_hi, cfg.discrepancy_bins);
    rep.discrepancy.push_back(histogram_discrepancy(h, target_hist));
    rep.mean_mae += rep.discrepancy.back().mae;
    rep.mean_rmse += rep.discrepancy.back().rmse;
  }
  const auto n = static_cast<double>(cohort.subjects.size());
  rep.mean_mae /= n;
  rep.mean_rmse /= n;

  for (std::size_t t = 0; t < T; ++t) {
    std::array<std::vector<double>, 3> cols;
    for (const auto& row : rep.stats) {
      cols[0].push_back(row[t].q1);
      cols[1].push_back(row[t].median);
      cols[2].push_back(row[t].q3);
    }
    TissueStats mean, sd;
    double* means[3] = {&mean.q1, &mean.median, &mean.q3};
    double* sds[3] = {&sd.q1, &sd.median, &sd.q3};
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (double x : cols[c]) acc += x;
      *means[c] = acc / n;
      *sds[c] = sample_sd(cols[c]);
    }
    rep.mean.push_back(mean);
    rep.sd.push_back(sd);
  }
  return rep;
}

ExperimentReport run_experiment(const PreparedCohort& cohort,
                                const std::vector<Method>& methods) {
  ExperimentReport out;
  for (Method m : methods) out.methods.push_back(run_normalisation_experiment(cohort, m));
  const auto affine_it = std::find_if(out.methods.begin(), out.methods.end(),
                                      [](const MethodReport& r) { return r.method == Method::Affine; });
  const MethodReport affine = affine_it != out.methods.end()
                                  ? *affine_it
                                  : run_normalisation_experiment(cohort, Method::Affine);
  auto column = [](const MethodReport& r, std::size_t t, int stat) {
    std::vector<double> v;
    for (const auto& row : r.stats)
      v.push_back(stat == 0 ? row[t].q1 : stat == 1 ? row[t].median : row[t].q3);
    return v;
  };
  for (const MethodReport& r : out.methods) {
    if (r.method == Method::Affine) continue;
    std::vector<std::array<double, 3>> per_tissue(cohort.n_tissues);
    for (std::size_t t = 0; t < cohort.n_tissues; ++t)
      for (int stat = 0; stat < 3; ++stat) {
        const std::vector<std::vector<double>> groups = {column(affine, t, stat),
                                                         column(r, t, stat)};
        per_tissue[t][static_cast<std::size_t>(stat)] = brown_forsythe(groups).p_value;
      }
    out.lower_spread_p[r.method] = std::move(per_tissue);
  }
  return out;
}

}  // namespace ndflow
