#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "strata/curve_analysis.hpp"
#include "strata/estimators.hpp"
#include "strata/matrix_io.hpp"
#include "strata/stats.hpp"

namespace strata {

inline constexpr const char* kToolName = "strata";
inline constexpr const char* kToolVersion = "0.1.0";

enum class CohortRule {
  none,     // a single cohort "all"
  numeric,  // "numeric" / "non-numeric" by token text (needs a vocabulary)
  label,    // one cohort per distinct vocabulary line
};

CohortRule parse_cohort_rule(const std::string& name);
std::string to_string(CohortRule rule);

struct RunConfig {
  std::filesystem::path input;
  std::optional<MatrixFormat> format;
  std::optional<std::filesystem::path> vocab;
  Metric metric = Metric::euclidean();
  std::optional<std::size_t> k_lo;  // unset: default_band(p)
  std::optional<std::size_t> k_hi;
  std::optional<std::size_t> k_max;  // unset: min(p - 1, 2048)
  std::optional<std::size_t> anchor_count;  // unset: every point
  std::uint64_t seed = 0;
  CohortRule cohorts = CohortRule::none;
  std::filesystem::path out_dir = "strata_out";
  unsigned workers = 1;
  RicciWindow ricci_window = RicciWindow::tail;
  double volume_per_point = 1.0;
  bool write_curves = false;
};

/// Band after filling unset ends from default_band(p); checks
/// k_lo < k_hi <= k_max and that the band fits in p - 1 neighbours.
Band resolve_band(const RunConfig& config, std::size_t p, std::size_t k_max);

/// Sorted anchor indices: all of [0, p) or a seeded sample without replacement.
std::vector<std::size_t> choose_anchors(std::size_t p, std::optional<std::size_t> count,
                                        std::uint64_t seed);

struct AnchorRecord {
  PointAnalysis analysis;
  std::optional<std::string> token;
  std::string cohort;
};

struct ParameterSummary {
  std::string parameter;  // "dimension", "scaling" or "ricci"
  CohortSummary summary;
};

struct CohortReport {
  std::string label;
  std::size_t anchors = 0;
  std::vector<ParameterSummary> parameters;
};

struct KsReport {
  std::string cohort_a;
  std::string cohort_b;
  std::string parameter;
  KsResult result;
};

struct AnalysisReport {
  RunConfig config;
  std::size_t p = 0;
  std::size_t dim = 0;
  Band band;
  std::size_t k_max = 0;
  std::vector<AnchorRecord> records;
  std::vector<CohortReport> cohorts;
  std::vector<KsReport> ks_tests;
};

/// Loads the input, estimates every anchor and assembles cohort statistics.
/// Pure apart from reading the input files.
AnalysisReport analyze(const RunConfig& config);

nlohmann::json report_json(const AnalysisReport& report);
nlohmann::json config_json(const RunConfig& config);

/// Per-anchor CSV, one row per record in anchor order.
void write_records_csv(const std::filesystem::path& path, const AnalysisReport& report);

/// analyze(), then writes report.json and anchors.csv into config.out_dir,
/// plus curves/ when config.write_curves is set.
AnalysisReport run_analyze(const RunConfig& config);

struct CurveOutput {
  std::size_t anchor = 0;
  std::optional<std::string> token;
  std::filesystem::path csv;
  GeometryEstimate estimate;
  CurveDiagnostics diagnostics;
};

/// Resolves each entry as a vocabulary token (exact match, first occurrence)
/// or else as a decimal point index. Throws InvalidArgument when neither.
std::vector<std::size_t> resolve_anchors(const std::vector<std::string>& specs,
                                         const std::vector<std::string>* vocab, std::size_t p);

/// Writes <out_dir>/curves/anchor_<i>.csv (k, r, log_r, log_v) per anchor
/// and <out_dir>/curves/diagnostics.json.
std::vector<CurveOutput> run_curve(const RunConfig& config, const std::vector<std::string>& anchors);

/// Writes the curve CSV for one anchor; rows with r = 0 are omitted.
void write_curve_csv(const std::filesystem::path& path, const NeighborRadii& radii,
                     double volume_per_point);

}  // namespace strata
