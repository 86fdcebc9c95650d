#include "ndflow/cli.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <CLI11.hpp>

#include "ndflow/baselines.hpp"
#include "ndflow/error.hpp"
#include "ndflow/flow.hpp"
#include "ndflow/io.hpp"
#include "ndflow/normalize.hpp"
#include "ndflow/synthcohort.hpp"

namespace ndflow {

DpgmmConfig PipelineConfig::dpgmm() const {
  DpgmmConfig c;
  c.concentration = concentration;
  c.truncation = truncation;
  c.prior_mean = prior_mean;
  c.prior_mean_strength = prior_mean_strength;
  c.prior_shape = prior_shape;
  c.prior_rate = prior_rate;
  c.max_iterations = vb_max_iterations;
  c.elbo_rel_tolerance = elbo_rel_tolerance;
  c.prune_threshold = prune_threshold;
  c.seed = seed;
  return c;
}

OptimConfig PipelineConfig::optim() const {
  OptimConfig c;
  c.max_iterations = optim_max_iterations;
  c.grad_norm_tolerance = grad_norm_tolerance;
  c.initial_step = initial_step;
  c.backtracking_factor = backtracking_factor;
  c.armijo_slope = armijo_slope;
  return c;
}

FlowSettings PipelineConfig::flow() const {
  FlowSettings f;
  f.optim = optim();
  f.mesh_points = mesh_points;
  f.rk4_steps = rk4_steps;
  f.margin_sd = margin_sd;
  if (mesh_min && mesh_max) f.mesh_range = MeshRange{*mesh_min, *mesh_max};
  return f;
}

void PipelineConfig::validate() const {
  dpgmm().validate();
  optim().validate();
  if (mesh_points < 2) throw invalid_input("mesh-points must be at least 2");
  if (rk4_steps < 1) throw invalid_input("rk4-steps must be at least 1");
  if (!(margin_sd >= 0.0) || !std::isfinite(margin_sd))
    throw invalid_input("margin-sd must be finite and non-negative");
  if (mesh_min.has_value() != mesh_max.has_value())
    throw invalid_input("mesh-min and mesh-max must be given together");
  if (mesh_min && !(*mesh_min < *mesh_max && std::isfinite(*mesh_min) && std::isfinite(*mesh_max)))
    throw invalid_input("mesh-min must be below mesh-max");
}

namespace {

using io::json;

enum Group : unsigned { kDpgmm = 1, kOptim = 2, kFlow = 4, kAll = 7 };

// One config field: its JSON reader, flag registration and flag-to-config copy.
struct Field {
  std::string key;
  Group group;
  std::function<void(PipelineConfig&, const json&)> from_json;
  std::function<CLI::Option*(CLI::App&, PipelineConfig&, const std::string& flag)> add_flag;
  std::function<void(PipelineConfig& dst, const PipelineConfig& src)> copy;
};

template <class T>
Field make_field(std::string key, Group group, T PipelineConfig::*member, std::string help) {
  Field f;
  f.key = key;
  f.group = group;
  f.copy = [member](PipelineConfig& dst, const PipelineConfig& src) { dst.*member = src.*member; };
  f.from_json = [member, key](PipelineConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) c.*member = std::nullopt;
      else if (v.is_number()) c.*member = v.get<double>();
      else throw invalid_input("config field '" + key + "' must be a number or null");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw invalid_input("config field '" + key + "' must be a number");
      c.*member = v.get<double>();
    } else {
      if (!v.is_number_unsigned())
        throw invalid_input("config field '" + key + "' must be a non-negative integer");
      c.*member = v.get<T>();
    }
  };
  f.add_flag = [member, help](CLI::App& app, PipelineConfig& flags, const std::string& flag) {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      return app.add_option_function<double>(
          flag, [member, &flags](const double& v) { flags.*member = v; }, help);
    } else {
      return app.add_option(flag, flags.*member, help)->capture_default_str();
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  using P = PipelineConfig;
  static const std::vector<Field> all = {
      make_field("concentration", kDpgmm, &P::concentration, "DP concentration"),
      make_field("truncation", kDpgmm, &P::truncation, "stick-breaking truncation level"),
      make_field("prior_mean", kDpgmm, &P::prior_mean,
                 "Normal-Gamma prior mean (default: histogram mean)"),
      make_field("prior_mean_strength", kDpgmm, &P::prior_mean_strength,
                 "Normal-Gamma prior mean pseudo-count"),
      make_field("prior_shape", kDpgmm, &P::prior_shape, "Gamma prior shape"),
      make_field("prior_rate", kDpgmm, &P::prior_rate,
                 "Gamma prior rate (default: histogram variance)"),
      make_field("vb_max_iterations", kDpgmm, &P::vb_max_iterations,
                 "coordinate-ascent iteration cap"),
      make_field("elbo_rel_tolerance", kDpgmm, &P::elbo_rel_tolerance,
                 "relative ELBO change for convergence"),
      make_field("prune_threshold", kDpgmm, &P::prune_threshold,
                 "drop components below this weight"),
      make_field("seed", kDpgmm, &P::seed, "initialisation seed (0 = no jitter)"),
      make_field("optim_max_iterations", kOptim, &P::optim_max_iterations,
                 "gradient-descent iteration cap"),
      make_field("grad_norm_tolerance", kOptim, &P::grad_norm_tolerance,
                 "stop when the gradient infinity norm falls below this"),
      make_field("initial_step", kOptim, &P::initial_step, "first line-search step"),
      make_field("backtracking_factor", kOptim, &P::backtracking_factor,
                 "line-search step shrink factor"),
      make_field("armijo_slope", kOptim, &P::armijo_slope, "sufficient-decrease constant"),
      make_field("mesh_points", kFlow, &P::mesh_points, "transform table mesh size"),
      make_field("rk4_steps", kFlow, &P::rk4_steps, "RK4 steps over t in [0, 1]"),
      make_field("margin_sd", kFlow, &P::margin_sd,
                 "mesh padding in source standard deviations"),
      make_field("mesh_min", kFlow, &P::mesh_min, "mesh lower end (with --mesh-max)"),
      make_field("mesh_max", kFlow, &P::mesh_max, "mesh upper end (with --mesh-min)"),
  };
  return all;
}

std::string kebab(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  const json j = io::read_json(path);
  if (!j.is_object()) throw invalid_input(path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) throw invalid_input(path + ": unknown config field '" + key + "'");
    it->from_json(cfg, value);
  }
}

// Flag values land in `flags`; resolve() layers defaults < config file < flags.
class ConfigOptions {
 public:
  void attach(CLI::App& app, unsigned groups) {
    app.add_option("--config", config_path_,
                   "JSON config file; explicitly given flags take precedence over it");
    for (const Field& f : fields())
      if (f.group & groups) bound_.push_back({&f, f.add_flag(app, flags_, "--" + kebab(f.key))});
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path_.empty()) apply_config_file(cfg, config_path_);
    for (const auto& [field, opt] : bound_)
      if (opt->count() > 0) field->copy(cfg, flags_);
    cfg.validate();
    return cfg;
  }

 private:
  std::string config_path_;
  PipelineConfig flags_;
  std::vector<std::pair<const Field*, CLI::Option*>> bound_;
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") out << text;
  else io::write_text(path, text);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::DegenerateMoments: return 2;
    case ErrorKind::FitFailure:
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Io: return 4;
  }
  return 3;
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

// Unique values with multiplicities.
Histogram histogram_of_samples(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> c, w;
  for (double v : values) {
    if (!c.empty() && c.back() == v) w.back() += 1.0;
    else c.push_back(v), w.push_back(1.0);
  }
  return Histogram(std::move(c), std::move(w));
}

struct TransformArgs {
  std::string match_path, table_path, values_path, output_values, output_table;
  bool invert = false;
};

int cmd_transform(const TransformArgs& a, const PipelineConfig& cfg, std::ostream& out) {
  if (a.match_path.empty() == a.table_path.empty())
    throw invalid_input("transform needs exactly one of --match or --table");
  std::optional<std::vector<double>> values;
  if (!a.values_path.empty()) values = io::read_values(a.values_path);

  std::optional<TransformTable> table;
  if (!a.table_path.empty()) {
    table = io::read_table_csv(a.table_path);
  } else {
    const io::MatchFile mf = io::match_from_json(io::read_json(a.match_path));
    const GaussianMixture& aligned = mf.result.initial;
    MeshRange range{};
    if (cfg.mesh_min) {
      range = {mf.pre(*cfg.mesh_min), mf.pre(*cfg.mesh_max)};
    } else if (values && !a.invert) {
      const auto [mn, mx] = std::minmax_element(values->begin(), values->end());
      range = default_mesh_range(mf.pre(*mn), mf.pre(*mx), aligned, cfg.margin_sd);
    } else {
      const auto [mn, mx] = std::minmax_element(aligned.means().begin(), aligned.means().end());
      range = default_mesh_range(*mn, *mx, aligned, cfg.margin_sd);
    }
    const TransformTable flow = integrate_flow(ParameterPath::from_match(mf.result), range.lo,
                                               range.hi, cfg.mesh_points, cfg.rk4_steps);
    // Fold the affine pre-map into the mesh so the table maps raw values.
    const AffineMap back = mf.pre.inverse();
    table = TransformTable(apply_affine(back, flow.mesh()), flow.mapped());
  }
  // Exact inverse of the piecewise-linear map: swap the columns.
  const TransformTable used = a.invert ? TransformTable(table->mapped(), table->mesh()) : *table;

  if (!a.output_table.empty() || !values) emit(a.output_table, io::table_csv(used), out);
  if (values) emit(a.output_values, io::values_text(apply_transform(used, *values)), out);
  return 0;
}

struct NyulArgs {
  std::vector<std::string> train;
  std::string subject, values_path, output, output_landmarks, output_map;
};

int cmd_nyul(const NyulArgs& a, std::ostream& out) {
  std::vector<LandmarkSet> sets;
  for (const auto& path : a.train) sets.push_back(extract_landmarks(io::read_histogram_csv(path)));
  const LandmarkSet target = average_landmarks(sets);
  if (!a.output_landmarks.empty())
    io::write_text(a.output_landmarks, io::dump_json(io::to_json(target)));
  if (a.values_path.empty()) {
    if (a.output_landmarks.empty()) out << io::dump_json(io::to_json(target));
    return 0;
  }
  const std::vector<double> values = io::read_values(a.values_path);
  const Histogram subject =
      a.subject.empty() ? histogram_of_samples(values) : io::read_histogram_csv(a.subject);
  const PiecewiseLinearMap map = build_piecewise(extract_landmarks(subject), target);
  if (!a.output_map.empty())
    io::write_text(a.output_map, io::table_csv(map.knots_in(), map.knots_out()));
  emit(a.output, io::values_text(apply_piecewise(map, values)), out);
  return 0;
}

struct ExperimentArgs {
  std::string spec_path, output, export_dir;
  std::vector<std::string> methods = {"affine", "ndflow_centre", "ndflow_individual", "nyul"};
};

int cmd_experiment(const ExperimentArgs& a, const PipelineConfig& cfg, std::ostream& out) {
  const CohortSpec spec = a.spec_path.empty() ? CohortSpec::default_spec()
                                              : io::cohort_spec_from_json(io::read_json(a.spec_path));
  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(method_from_string(m));
  ExperimentConfig ecfg;
  ecfg.dpgmm = cfg.dpgmm();
  ecfg.flow = cfg.flow();
  const auto cohort = generate_cohort(spec);
  if (!a.export_dir.empty()) io::export_cohort(a.export_dir, spec, cohort);
  const PreparedCohort prepared = prepare_cohort(cohort, spec.base_mixture.size(), ecfg);
  json report = io::to_json(run_experiment(prepared, methods), prepared);
  report["spec"] = io::to_json(spec);
  emit(a.output, io::dump_json(report), out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric density flows for 1-D intensity normalisation", "ndflow"};
  app.require_subcommand(1);

  std::string input, output, source, target;

  auto* fit = app.add_subcommand("fit", "fit a DPGMM to a histogram CSV; writes mixture JSON");
  ConfigOptions fit_cfg;
  fit->add_option("--input", input, "histogram CSV (center,weight)")->required();
  fit->add_option("--output", output, "mixture JSON (default: stdout)");
  fit_cfg.attach(*fit, kDpgmm);

  auto* match = app.add_subcommand(
      "match", "moment-align then L2-match a source mixture to a target; writes match JSON");
  ConfigOptions match_cfg;
  match->add_option("--source", source, "source mixture JSON")->required();
  match->add_option("--target", target, "target mixture JSON")->required();
  match->add_option("--output", output, "match JSON (default: stdout)");
  match_cfg.attach(*match, kOptim);

  auto* transform = app.add_subcommand(
      "transform", "integrate the density flow of a match; writes an x,fx table and/or values");
  ConfigOptions transform_cfg;
  TransformArgs targs;
  transform->add_option("--match", targs.match_path, "match JSON from `ndflow match`");
  transform->add_option("--table", targs.table_path, "existing x,fx table instead of --match");
  transform->add_option("--values", targs.values_path, "values to transform, one per line");
  transform->add_option("--output-values", targs.output_values,
                        "transformed values (default: stdout)");
  transform->add_option("--output-table", targs.output_table,
                        "x,fx table (default: stdout when no --values)");
  transform->add_flag("--invert", targs.invert, "apply the inverse map");
  transform_cfg.attach(*transform, kFlow);

  auto* nyul = app.add_subcommand(
      "nyul", "train average landmarks and apply the piecewise-linear map to values");
  NyulArgs nargs;
  nyul->add_option("--train", nargs.train, "training histogram CSVs")->required();
  nyul->add_option("--values", nargs.values_path, "values to normalise, one per line");
  nyul->add_option("--subject", nargs.subject,
                   "histogram CSV for the subject's landmarks (default: from --values)");
  nyul->add_option("--output", nargs.output, "normalised values (default: stdout)");
  nyul->add_option("--output-landmarks", nargs.output_landmarks, "target landmark JSON");
  nyul->add_option("--output-map", nargs.output_map, "map knots as x,fx CSV");

  auto* experiment = app.add_subcommand(
      "experiment", "synthetic multi-centre cohort experiment; writes report JSON");
  ConfigOptions experiment_cfg;
  ExperimentArgs eargs;
  experiment->add_option("--spec", eargs.spec_path, "cohort spec JSON (default: built-in cohort)");
  experiment->add_option("--output", eargs.output, "report JSON (default: stdout)");
  experiment->add_option("--export-dir", eargs.export_dir,
                         "also write value,label CSVs and manifest.json here");
  experiment->add_option("--methods", eargs.methods,
                         "subset of affine ndflow_centre ndflow_individual nyul")
      ->capture_default_str();
  experiment_cfg.attach(*experiment, kAll);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, to_string(ErrorKind::InvalidInput), e.what());
    return 2;
  }
  try {
    if (fit->parsed()) {
      const PipelineConfig cfg = fit_cfg.resolve();
      const GaussianMixture g = fit_dpgmm(io::read_histogram_csv(input), cfg.dpgmm());
      emit(output, io::dump_json(io::to_json(g)), out);
    } else if (match->parsed()) {
      const PipelineConfig cfg = match_cfg.resolve();
      const GaussianMixture q = io::mixture_from_json(io::read_json(source));
      const GaussianMixture p = io::mixture_from_json(io::read_json(target));
      const AffineMap pre = affine_match(q.moments(), p.moments());
      io::MatchFile mf{pre, match_standardised(apply_affine(pre, q), p, cfg.optim())};
      emit(output, io::dump_json(io::to_json(mf)), out);
    } else if (transform->parsed()) {
      return cmd_transform(targs, transform_cfg.resolve(), out);
    } else if (nyul->parsed()) {
      return cmd_nyul(nargs, out);
    } else if (experiment->parsed()) {
      return cmd_experiment(eargs, experiment_cfg.resolve(), out);
    }
    return 0;
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    report_error(err, to_string(ErrorKind::InvalidInput), e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error(err, to_string(ErrorKind::Numerical), e.what());
    return 3;
  }
}

}  // namespace ndflow
