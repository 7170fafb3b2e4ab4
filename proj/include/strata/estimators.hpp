#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strata/neighbors.hpp"
#include "strata/point_cloud.hpp"

namespace strata {

/// Inclusive range of neighbor ranks [k_lo, k_hi] (1-based).
struct Band {
  std::size_t k_lo = 10;
  std::size_t k_hi = 1000;
};

void validate_band(const Band& band);

/// Default regression band for a cloud of p points: ranks 10 through
/// min(p-1, 1000, p/20), widened to p-1 when that leaves fewer than 3 ranks.
Band default_band(std::size_t p);

/// Log-log volume-versus-radius samples for one anchor. Row i has rank
/// rank[i]; zero radii are dropped, tied radii give repeated log_r.
struct VolumeCurve {
  std::size_t anchor = 0;
  std::vector<std::size_t> rank;
  std::vector<double> log_r;
  std::vector<double> log_v;

  std::size_t size() const { return log_r.size(); }
  /// Half-open row range [first, last) of rows whose rank lies in the band.
  std::pair<std::size_t, std::size_t> rows_in(const Band& band) const;
};

/// log_v = log(volume_per_point * k). The default of 1 leaves the
/// Monte-Carlo volume constant out, which only shifts log K.
VolumeCurve build_curve(const NeighborRadii& radii, double volume_per_point = 1.0);

struct DimensionFit {
  double n_hat = 0;
  double log_k_hat = 0;
  double sigma = 0;  // standard error of the intercept
  double rms_residual = 0;
  std::size_t rows = 0;
};

/// Ordinary least squares of log_v on (1, log_r) over the band rows.
/// Throws DegenerateFit with fewer than 3 rows or fewer than 3 distinct radii.
DimensionFit fit_dimension_scaling(const VolumeCurve& curve, const Band& band);

/// K' = exp(log K + sigma^2 / 2).
double debias_scaling(double log_k_hat, double sigma);

/// Mean over the window rows of 6(n+2)/r^2 * (log K' + n log r - log v).
double estimate_ricci(const VolumeCurve& curve, const Band& window, double n_hat,
                      double k_prime);

/// Which ranks the curvature mean runs over.
enum class RicciWindow {
  band,      // the regression band
  tail,      // from k_hi to the last computed rank
  extended,  // from k_lo to the last computed rank
};

RicciWindow parse_ricci_window(const std::string& name);
std::string to_string(RicciWindow w);

struct EstimatorOptions {
  std::optional<Band> band;  // nullopt: default_band(p)
  RicciWindow ricci_window = RicciWindow::tail;
  double volume_per_point = 1.0;
};

struct GeometryEstimate {
  std::size_t anchor = 0;
  double n_hat = 0;
  double log_k_hat = 0;
  double k_prime = 0;
  double sigma = 0;
  double ric_hat = 0;  // NaN when degenerate
  Band band;
  double rms_residual = 0;
  std::size_t usable_rows = 0;
  std::size_t duplicates = 0;
  bool degenerate = false;
};

Band ricci_window_band(const Band& band, RicciWindow window, std::size_t last_rank);

/// build_curve -> fit_dimension_scaling -> debias_scaling -> estimate_ricci.
/// Anchors with fewer than 3 distinct positive radii in the band come back
/// flagged degenerate with n_hat = 0 and ric_hat = NaN.
GeometryEstimate analyze_point(const NeighborRadii& radii, const Band& band,
                               RicciWindow window = RicciWindow::tail,
                               double volume_per_point = 1.0);

struct PointAnalysis {
  GeometryEstimate estimate;
  std::size_t knees = 0;
  std::size_t gaps = 0;
  int concavity = 0;  // -1 concave down, 0 flat/undetermined, +1 concave up
  double concavity_coefficient = 0;
};

struct CloudAnalysis {
  Band band;
  std::size_t k_max = 0;
  std::vector<PointAnalysis> points;
};

struct CloudOptions {
  EstimatorOptions estimator;
  std::optional<std::size_t> k_max;
  std::vector<std::size_t> anchors;  // empty: every point
  unsigned workers = 1;
  bool diagnostics = true;  // knees / gaps / concavity per anchor
  std::size_t max_segments = 3;
  double knee_threshold = 0.5;
  double min_gap_ratio = 1.5;
};

/// One estimate per anchor, in anchor order; independent of worker count.
CloudAnalysis analyze_cloud(const PointCloud& cloud, const Metric& metric,
                            const CloudOptions& options = {});

}  // namespace strata
