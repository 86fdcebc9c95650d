#include "ndflow/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ndflow/error.hpp"

namespace ndflow::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Reads a two-column CSV with the given header. Returns the columns.
std::pair<std::vector<double>, std::vector<double>> parse_two_columns(
    std::istream& in, std::string_view context, std::string_view header) {
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  std::vector<double> a, b;
  while (std::getline(in, line)) {
    ++lineno;
    std::string row = trim(line);
    if (lineno == 1 && row.rfind("\xEF\xBB\xBF", 0) == 0) row.erase(0, 3);  // UTF-8 BOM
    if (row.empty()) continue;
    if (!seen_header) {
      const auto cols = split_commas(row);
      if (cols.size() != 2 || cols[0] + "," + cols[1] != header)
        throw invalid_input(std::string(context) + ": expected header '" +
                            std::string(header) + "'");
      seen_header = true;
      continue;
    }
    const auto cols = split_commas(row);
    const std::string where = std::string(context) + " line " + std::to_string(lineno);
    if (cols.size() != 2) throw invalid_input(where + ": expected two columns");
    a.push_back(parse_double(cols[0], where));
    b.push_back(parse_double(cols[1], where));
  }
  if (!seen_header) throw invalid_input(std::string(context) + ": empty file");
  if (a.empty()) throw invalid_input(std::string(context) + ": no data rows");
  return {std::move(a), std::move(b)};
}

std::vector<double> number_array(const json& j, const char* key) {
  if (!j.contains(key)) throw invalid_input(std::string("missing field '") + key + "'");
  const json& arr = j.at(key);
  if (!arr.is_array()) throw invalid_input(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number())
      throw invalid_input(std::string("field '") + key + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw invalid_input(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

template <class T>
T unsigned_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_unsigned())
    throw invalid_input(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<T>();
}

void require_object(const json& j, std::string_view what) {
  if (!j.is_object()) throw invalid_input(std::string(what) + " must be a JSON object");
}

json stats_json(const TissueStats& s) {
  return {{"q1", s.q1}, {"median", s.median}, {"q3", s.q3}};
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "failed reading '" + path.string() + "'");
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::string_view context) {
  std::string_view t = token;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw invalid_input(std::string(context) + ": cannot parse number '" +
                        std::string(token) + "'");
  if (!std::isfinite(v))
    throw invalid_input(std::string(context) + ": non-finite number");
  return v;
}

json parse_json(const std::string& text, std::string_view context) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw invalid_input(std::string(context) + ": malformed JSON (" + e.what() + ")");
  }
}

json read_json(const fs::path& path) { return parse_json(read_text(path), path.string()); }

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

Histogram parse_histogram_csv(std::istream& in, std::string_view context) {
  auto [c, w] = parse_two_columns(in, context, "center,weight");
  return Histogram(std::move(c), std::move(w));
}

Histogram read_histogram_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_histogram_csv(in, path.string());
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "center,weight\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out += format_double(h.centers()[i]) + "," + format_double(h.weights()[i]) + "\n";
  return out;
}

std::vector<double> parse_values(std::istream& in, std::string_view context) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    out.push_back(parse_double(t, std::string(context) + " line " + std::to_string(lineno)));
  }
  if (out.empty()) throw invalid_input(std::string(context) + ": no values");
  return out;
}

std::vector<double> read_values(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_values(in, path.string());
}

std::string values_text(std::span<const double> values) {
  std::string out;
  for (double v : values) out += format_double(v) + "\n";
  return out;
}

json to_json(const GaussianMixture& g) {
  return {{"weights", g.weights()}, {"means", g.means()}, {"precisions", g.precisions()}};
}

GaussianMixture mixture_from_json(const json& j) {
  require_object(j, "mixture");
  return GaussianMixture(number_array(j, "weights"), number_array(j, "means"),
                         number_array(j, "precisions"));
}

json to_json(const MatchFile& m) {
  const MatchResult& r = m.result;
  const char* stop = r.stop == MatchStop::GradientTolerance ? "gradient-tolerance"
                     : r.stop == MatchStop::MaxIterations   ? "max-iterations"
                                                            : "line-search-stalled";
  return {{"means", r.optimized_means},
          {"precisions", r.optimized_precisions},
          {"trace", r.divergence_trace},
          {"initial", to_json(r.initial)},
          {"affine", {{"scale", m.pre.scale}, {"offset", m.pre.offset}}},
          {"stop", stop}};
}

MatchFile match_from_json(const json& j) {
  require_object(j, "match");
  if (!j.contains("initial"))
    throw invalid_input("match file lacks the 'initial' mixture needed to rebuild the flow");
  MatchFile m{AffineMap::identity(),
              MatchResult{mixture_from_json(j.at("initial")), number_array(j, "means"),
                          number_array(j, "precisions"), number_array(j, "trace"),
                          MatchStop::GradientTolerance}};
  if (j.contains("affine")) {
    const json& a = j.at("affine");
    require_object(a, "affine");
    m.pre = AffineMap::make(number_field(a, "scale"), number_field(a, "offset"));
  }
  if (j.contains("stop")) {
    const std::string s = j.at("stop").is_string() ? j.at("stop").get<std::string>() : "";
    if (s == "max-iterations") m.result.stop = MatchStop::MaxIterations;
    else if (s == "line-search-stalled") m.result.stop = MatchStop::LineSearchStalled;
    else if (s != "gradient-tolerance") throw invalid_input("unknown stop reason '" + s + "'");
  }
  // Validates sizes and positivity of the matched parameters.
  (void)m.result.matched();
  return m;
}

std::string table_csv(std::span<const double> x, std::span<const double> fx) {
  std::string out = "x,fx\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    out += format_double(x[i]) + "," + format_double(fx[i]) + "\n";
  return out;
}

std::string table_csv(const TransformTable& t) { return table_csv(t.mesh(), t.mapped()); }

TransformTable parse_table_csv(std::istream& in, std::string_view context) {
  auto [x, fx] = parse_two_columns(in, context, "x,fx");
  return TransformTable(std::move(x), std::move(fx));
}

TransformTable read_table_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_table_csv(in, path.string());
}

json to_json(const LandmarkSet& l) { return json(l.values()); }

LandmarkSet landmarks_from_json(const json& j) {
  if (!j.is_array()) throw invalid_input("landmarks must be a JSON array");
  std::vector<double> v;
  for (const json& x : j) {
    if (!x.is_number()) throw invalid_input("landmarks must be numbers");
    v.push_back(x.get<double>());
  }
  return LandmarkSet::from_vector(v);
}

json to_json(const PiecewiseLinearMap& m) {
  json arr = json::array();
  for (std::size_t i = 0; i < m.knots_in().size(); ++i)
    arr.push_back({m.knots_in()[i], m.knots_out()[i]});
  return arr;
}

PiecewiseLinearMap piecewise_from_json(const json& j) {
  if (!j.is_array()) throw invalid_input("piecewise map must be a JSON array");
  std::vector<double> in, out;
  for (const json& knot : j) {
    if (!knot.is_array() || knot.size() != 2 || !knot[0].is_number() || !knot[1].is_number())
      throw invalid_input("piecewise map knots must be [in, out] number pairs");
    in.push_back(knot[0].get<double>());
    out.push_back(knot[1].get<double>());
  }
  return PiecewiseLinearMap(std::move(in), std::move(out));
}

std::string qq_csv(std::span<const std::pair<double, double>> points) {
  std::string out = "qa,qb\n";
  for (const auto& [a, b] : points) out += format_double(a) + "," + format_double(b) + "\n";
  return out;
}

json to_json(const CohortSpec& spec) {
  json distortions = json::array();
  for (const Distortion& d : spec.centre_distortions) {
    json bumps = json::array();
    for (const auto& b : d.bumps)
      bumps.push_back({{"amplitude", b.amplitude}, {"centre", b.centre}, {"width", b.width}});
    distortions.push_back({{"scale", d.scale}, {"offset", d.offset}, {"bumps", bumps}});
  }
  return {{"n_centres", spec.n_centres},
          {"subjects_per_centre", spec.subjects_per_centre},
          {"base_mixture", to_json(spec.base_mixture)},
          {"centre_distortions", distortions},
          {"subject_jitter", spec.subject_jitter},
          {"samples_per_subject", spec.samples_per_subject},
          {"round_to_integer", spec.round_to_integer},
          {"seed", spec.seed}};
}

CohortSpec cohort_spec_from_json(const json& j) {
  require_object(j, "cohort spec");
  static const char* known[] = {"n_centres", "subjects_per_centre", "base_mixture",
                                "centre_distortions", "subject_jitter",
                                "samples_per_subject", "round_to_integer", "seed"};
  for (const auto& [key, _] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw invalid_input("unknown cohort spec field '" + key + "'");

  // Unspecified fields fall back to the default cohort.
  CohortSpec spec = CohortSpec::default_spec();
  spec.n_centres = unsigned_field(j, "n_centres", spec.n_centres);
  spec.subjects_per_centre = unsigned_field(j, "subjects_per_centre", spec.subjects_per_centre);
  spec.samples_per_subject = unsigned_field(j, "samples_per_subject", spec.samples_per_subject);
  spec.seed = unsigned_field(j, "seed", spec.seed);
  if (j.contains("subject_jitter")) spec.subject_jitter = number_field(j, "subject_jitter");
  if (j.contains("round_to_integer")) {
    if (!j.at("round_to_integer").is_boolean())
      throw invalid_input("field 'round_to_integer' must be a boolean");
    spec.round_to_integer = j.at("round_to_integer").get<bool>();
  }
  if (j.contains("base_mixture")) spec.base_mixture = mixture_from_json(j.at("base_mixture"));
  if (j.contains("centre_distortions")) {
    const json& arr = j.at("centre_distortions");
    if (!arr.is_array()) throw invalid_input("'centre_distortions' must be an array");
    spec.centre_distortions.clear();
    for (const json& d : arr) {
      require_object(d, "distortion");
      Distortion dist;
      dist.scale = d.contains("scale") ? number_field(d, "scale") : 1.0;
      dist.offset = d.contains("offset") ? number_field(d, "offset") : 0.0;
      if (d.contains("bumps")) {
        if (!d.at("bumps").is_array()) throw invalid_input("'bumps' must be an array");
        for (const json& b : d.at("bumps")) {
          require_object(b, "bump");
          dist.bumps.push_back({number_field(b, "amplitude"), number_field(b, "centre"),
                                number_field(b, "width")});
        }
      }
      spec.centre_distortions.push_back(std::move(dist));
    }
  } else if (spec.n_centres != spec.centre_distortions.size()) {
    spec.centre_distortions.assign(spec.n_centres, Distortion::identity());
  }
  spec.validate();
  return spec;
}

fs::path export_cohort(const fs::path& dir, const CohortSpec& spec,
                       std::span<const SubjectData> cohort) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir.string() + "'");
  json files = json::array();
  for (const SubjectData& s : cohort) {
    const std::string name = "centre" + std::to_string(s.centre) + "_subject" +
                             std::to_string(s.subject) + ".csv";
    std::string text = "value,label\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
      text += format_double(s.values[i]) + "," + std::to_string(s.labels[i]) + "\n";
    write_text(dir / name, text);
    files.push_back({{"centre", s.centre}, {"subject", s.subject}, {"path", name}});
  }
  const fs::path manifest = dir / "manifest.json";
  write_text(manifest, dump_json({{"spec", to_json(spec)}, {"subjects", files}}));
  return manifest;
}

json to_json(const ExperimentReport& rep, const PreparedCohort& cohort) {
  json methods = json::array();
  for (const MethodReport& m : rep.methods) {
    json tissues = json::array();
    const auto p = rep.lower_spread_p.find(m.method);
    for (std::size_t t = 0; t < m.mean.size(); ++t) {
      json entry = {{"tissue", t}, {"mean", stats_json(m.mean[t])}, {"sd", stats_json(m.sd[t])}};
      if (p != rep.lower_spread_p.end())
        entry["lower_spread_p_vs_affine"] = {{"q1", p->second[t][0]},
                                            {"median", p->second[t][1]},
                                            {"q3", p->second[t][2]}};
      tissues.push_back(std::move(entry));
    }
    json subjects = json::array();
    for (std::size_t i = 0; i < m.stats.size(); ++i) {
      json stats = json::array();
      for (const TissueStats& s : m.stats[i]) stats.push_back(stats_json(s));
      subjects.push_back({{"centre", cohort.subjects[i].centre},
                          {"subject", cohort.subjects[i].subject},
                          {"mae", m.discrepancy[i].mae},
                          {"rmse", m.discrepancy[i].rmse},
                          {"tissues", stats}});
    }
    methods.push_back({{"method", to_string(m.method)},
                       {"mean_mae", m.mean_mae},
                       {"mean_rmse", m.mean_rmse},
                       {"tissues", tissues},
                       {"subjects", subjects}});
  }
  return {{"global_reference", to_json(cohort.global_reference)}, {"methods", methods}};
}

}  // namespace ndflow::io
