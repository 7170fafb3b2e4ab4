#pragma once

#include <cstddef>
#include <vector>

#include "strata/estimators.hpp"

namespace strata {

struct Knee {
  double log_r = 0;
  double slope_before = 0;
  double slope_after = 0;
};

struct Gap {
  double r_start = 0;
  double r_end = 0;
};

struct Concavity {
  int sign = 0;  // sign of the quadratic coefficient
  double coefficient = 0;
};

struct CurveDiagnostics {
  std::vector<Knee> knees;
  std::vector<Gap> gaps;
  Concavity concavity;
};

struct KneeOptions {
  std::size_t max_segments = 3;
  double knee_threshold = 0.5;
  // Candidate breakpoints are observed log_r values at evenly spaced rows.
  std::size_t grid = 48;
  // Every segment spans at least this fraction of the rows (and >= 2 rows).
  double min_segment_fraction = 0.1;
};

/// Best continuous piecewise-linear fit with up to max_segments pieces and
/// breakpoints on the candidate grid; returns breakpoints whose slope change
/// is at least knee_threshold. Throws DegenerateFit when the curve has fewer
/// than 2*max_segments+2 rows or no spread in log_r.
std::vector<Knee> detect_knees(const VolumeCurve& curve, const KneeOptions& options = {});

/// Consecutive radii r_a < r_b with r_b / r_a >= min_gap_ratio, i.e. radius
/// intervals over which the ball gains no points.
std::vector<Gap> detect_gaps(const VolumeCurve& curve, double min_gap_ratio = 1.5);

/// Least-squares quadratic in log_r over the band rows. Negative means
/// concave down (positive curvature). |coefficient| < 1e-9 reports sign 0.
Concavity concavity_sign(const VolumeCurve& curve, const Band& band);

/// Copy of the curve restricted to ranks in [k_lo, k_hi].
VolumeCurve restrict_curve(const VolumeCurve& curve, const Band& band);

struct DiagnosticOptions {
  KneeOptions knees;
  double min_gap_ratio = 1.5;
  // Knees are fitted on this many rows at geometrically spaced ranks, so
  // every decade of volume weighs the same; 0 uses every row.
  std::size_t knee_rows = 100;
};

/// Rows at ranks closest above k_first * (k_last / k_first)^(j / (count - 1)),
/// duplicates removed. Returns the curve unchanged when it is not longer.
VolumeCurve thin_geometric(const VolumeCurve& curve, std::size_t count);

/// Knees, gaps and concavity over ranks band.k_lo through the last row.
/// Diagnostics that need more rows than the curve has are left empty.
CurveDiagnostics diagnose_curve(const VolumeCurve& curve, const Band& band,
                                const DiagnosticOptions& options = {});

}  // namespace strata
