#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ndflow/baselines.hpp"
#include "ndflow/flow.hpp"
#include "ndflow/histogram.hpp"
#include "ndflow/l2match.hpp"
#include "ndflow/mixture.hpp"
#include "ndflow/synthcohort.hpp"

namespace ndflow::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Whole-file read/write. Failures raise ErrorKind::Io.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
/// Strict parse of a full token; ErrorKind::InvalidInput otherwise.
double parse_double(std::string_view token, std::string_view context);

/// Parses text or a file as JSON; malformed input is InvalidInput.
json parse_json(const std::string& text, std::string_view context);
json read_json(const fs::path& path);
/// Two-space indented, trailing newline.
std::string dump_json(const json& j);

// Histograms: CSV `center,weight`.
Histogram parse_histogram_csv(std::istream& in, std::string_view context);
Histogram read_histogram_csv(const fs::path& path);
std::string histogram_csv(const Histogram& h);

// Value streams: one real per line; blank lines ignored.
std::vector<double> parse_values(std::istream& in, std::string_view context);
std::vector<double> read_values(const fs::path& path);
std::string values_text(std::span<const double> values);

// Mixtures: {"weights", "means", "precisions"}.
json to_json(const GaussianMixture& g);
GaussianMixture mixture_from_json(const json& j);

/// A match as written by the CLI: the specified {"means", "precisions",
/// "trace"} plus what is needed to rebuild the flow without the inputs:
/// the moment-matching pre-map and the starting mixture.
struct MatchFile {
  AffineMap pre;
  MatchResult result;
};
json to_json(const MatchFile& m);
MatchFile match_from_json(const json& j);

// Transform tables and map exports: CSV `x,fx`.
std::string table_csv(std::span<const double> x, std::span<const double> fx);
std::string table_csv(const TransformTable& t);
TransformTable parse_table_csv(std::istream& in, std::string_view context);
TransformTable read_table_csv(const fs::path& path);

// Landmarks: JSON array of 11 numbers. Piecewise maps: array of [in, out].
json to_json(const LandmarkSet& l);
LandmarkSet landmarks_from_json(const json& j);
json to_json(const PiecewiseLinearMap& m);
PiecewiseLinearMap piecewise_from_json(const json& j);

// Q-Q points: CSV `qa,qb`.
std::string qq_csv(std::span<const std::pair<double, double>> points);

// Cohort specification and exports.
json to_json(const CohortSpec& spec);
CohortSpec cohort_spec_from_json(const json& j);
/// One `value,label` CSV per subject plus manifest.json; returns the
/// manifest path.
fs::path export_cohort(const fs::path& dir, const CohortSpec& spec,
                       std::span<const SubjectData> cohort);

json to_json(const ExperimentReport& rep, const PreparedCohort& cohort);

}  // namespace ndflow::io
