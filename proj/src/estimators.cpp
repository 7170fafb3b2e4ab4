#include "strata/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strata/curve_analysis.hpp"
#include "strata/error.hpp"

namespace strata {

void validate_band(const Band& band) {
  if (band.k_lo < 1) throw InvalidArgument("band k_lo must be >= 1");
  if (band.k_lo >= band.k_hi)
    throw InvalidArgument("band needs k_lo < k_hi (got " + std::to_string(band.k_lo) +
                          ", " + std::to_string(band.k_hi) + ")");
}

Band default_band(std::size_t p) {
  if (p < 2) throw InvalidArgument("point cloud needs at least 2 points");
  Band band;
  band.k_lo = 10;
  band.k_hi = std::min<std::size_t>({p - 1, 1000, p / 20});
  if (band.k_hi < band.k_lo + 2) band.k_hi = p - 1;
  return band;
}

std::pair<std::size_t, std::size_t> VolumeCurve::rows_in(const Band& band) const {
  const auto lo = std::lower_bound(rank.begin(), rank.end(), band.k_lo);
  const auto hi = std::upper_bound(rank.begin(), rank.end(), band.k_hi);
  const auto first = static_cast<std::size_t>(lo - rank.begin());
  const auto last = static_cast<std::size_t>(hi - rank.begin());
  return {first, std::max(first, last)};
}

VolumeCurve build_curve(const NeighborRadii& radii, double volume_per_point) {
  if (!(volume_per_point > 0) || !std::isfinite(volume_per_point))
    throw InvalidArgument("volume per point must be positive and finite");
  VolumeCurve curve;
  curve.anchor = radii.anchor;
  const double log_m = std::log(volume_per_point);
  for (std::size_t i = 0; i < radii.radii.size(); ++i) {
    const double r = radii.radii[i];
    if (!std::isfinite(r) || r < 0) throw DataError("invalid radius in neighbor list");
    if (r == 0.0) continue;
    const std::size_t k = i + 1;
    curve.rank.push_back(k);
    curve.log_r.push_back(std::log(r));
    curve.log_v.push_back(std::log(static_cast<double>(k)) + log_m);
  }
  if (curve.log_r.empty()) throw DegenerateFit("all radii are zero");
  return curve;
}

DimensionFit fit_dimension_scaling(const VolumeCurve& curve, const Band& band) {
  validate_band(band);
  const auto [first, last] = curve.rows_in(band);
  const std::size_t m = last - first;
  if (m < 3) throw DegenerateFit("fewer than 3 rows in band");

  std::size_t distinct = 1;
  for (std::size_t i = first + 1; i < last; ++i)
    if (curve.log_r[i] != curve.log_r[i - 1]) ++distinct;
  if (distinct < 3) throw DegenerateFit("fewer than 3 distinct radii in band");

  const double md = static_cast<double>(m);
  double xbar = 0, ybar = 0;
  for (std::size_t i = first; i < last; ++i) {
    xbar += curve.log_r[i];
    ybar += curve.log_v[i];
  }
  xbar /= md;
  ybar /= md;
  double sxx = 0, sxy = 0;
  for (std::size_t i = first; i < last; ++i) {
    const double dx = curve.log_r[i] - xbar;
    sxx += dx * dx;
    sxy += dx * (curve.log_v[i] - ybar);
  }
  if (!(sxx > 0)) throw DegenerateFit("no spread in log radius");

  DimensionFit fit;
  fit.rows = m;
  fit.n_hat = sxy / sxx;
  fit.log_k_hat = ybar - fit.n_hat * xbar;
  double ssr = 0;
  for (std::size_t i = first; i < last; ++i) {
    const double e = curve.log_v[i] - (fit.log_k_hat + fit.n_hat * curve.log_r[i]);
    ssr += e * e;
  }
  const double s2 = ssr / (md - 2.0);
  fit.sigma = std::sqrt(s2 * (1.0 / md + xbar * xbar / sxx));
  fit.rms_residual = std::sqrt(ssr / md);
  return fit;
}

double debias_scaling(double log_k_hat, double sigma) {
  if (!(sigma >= 0) || !std::isfinite(sigma))
    throw InvalidArgument("sigma must be finite and >= 0");
  return std::exp(log_k_hat) * std::exp(0.5 * sigma * sigma);
}

double estimate_ricci(const VolumeCurve& curve, const Band& window, double n_hat,
                      double k_prime) {
  if (!std::isfinite(n_hat)) throw InvalidArgument("n_hat must be finite");
  if (!(k_prime > 0)) throw InvalidArgument("K' must be positive");
  const auto [first, last] = curve.rows_in(window);
  if (first == last) throw DegenerateFit("empty curvature window");
  const double log_k = std::log(k_prime);
  double sum = 0;
  for (std::size_t i = first; i < last; ++i) {
    const double log_r = curve.log_r[i];
    const double r2 = std::exp(2.0 * log_r);
    sum += 6.0 * (n_hat + 2.0) / r2 * (log_k + n_hat * log_r - curve.log_v[i]);
  }
  return sum / static_cast<double>(last - first);
}

RicciWindow parse_ricci_window(const std::string& name) {
  if (name == "band") return RicciWindow::band;
  if (name == "tail") return RicciWindow::tail;
  if (name == "extended") return RicciWindow::extended;
  throw InvalidArgument("unknown Ricci window '" + name + "'");
}

std::string to_string(RicciWindow w) {
  switch (w) {
    case RicciWindow::band: return "band";
    case RicciWindow::tail: return "tail";
    case RicciWindow::extended: return "extended";
  }
  return "unknown";
}

Band ricci_window_band(const Band& band, RicciWindow window, std::size_t last_rank) {
  switch (window) {
    case RicciWindow::band: return band;
    case RicciWindow::tail: return {band.k_hi, std::max(band.k_hi, last_rank)};
    case RicciWindow::extended: return {band.k_lo, std::max(band.k_hi, last_rank)};
  }
  return band;
}

namespace {

GeometryEstimate degenerate_estimate(std::size_t anchor, const Band& band,
                                     std::size_t rows, std::size_t duplicates) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  GeometryEstimate e;
  e.anchor = anchor;
  e.n_hat = 0.0;
  e.log_k_hat = nan;
  e.k_prime = nan;
  e.sigma = nan;
  e.ric_hat = nan;
  e.rms_residual = nan;
  e.band = band;
  e.usable_rows = rows;
  e.duplicates = duplicates;
  e.degenerate = true;
  return e;
}

PointAnalysis analyze_one(const NeighborRadii& radii, const Band& band,
                          const CloudOptions& options) {
  PointAnalysis out;
  const auto& est = options.estimator;
  out.estimate = analyze_point(radii, band, est.ricci_window, est.volume_per_point);
  if (!options.diagnostics || radii.duplicate_count() == radii.size()) return out;

  DiagnosticOptions d;
  d.knees.max_segments = options.max_segments;
  d.knees.knee_threshold = options.knee_threshold;
  d.min_gap_ratio = options.min_gap_ratio;
  const CurveDiagnostics diag = diagnose_curve(build_curve(radii, est.volume_per_point), band, d);
  out.knees = diag.knees.size();
  out.gaps = diag.gaps.size();
  out.concavity = diag.concavity.sign;
  out.concavity_coefficient = diag.concavity.coefficient;
  return out;
}

}  // namespace

GeometryEstimate analyze_point(const NeighborRadii& radii, const Band& band,
                               RicciWindow window, double volume_per_point) {
  validate_band(band);
  const std::size_t duplicates = radii.duplicate_count();
  if (duplicates == radii.size()) return degenerate_estimate(radii.anchor, band, 0, duplicates);

  const VolumeCurve curve = build_curve(radii, volume_per_point);
  const auto [first, last] = curve.rows_in(band);
  DimensionFit fit;
  try {
    fit = fit_dimension_scaling(curve, band);
  } catch (const DegenerateFit&) {
    return degenerate_estimate(radii.anchor, band, last - first, duplicates);
  }

  GeometryEstimate e;
  e.anchor = radii.anchor;
  e.n_hat = fit.n_hat;
  e.log_k_hat = fit.log_k_hat;
  e.sigma = fit.sigma;
  e.k_prime = debias_scaling(fit.log_k_hat, fit.sigma);
  e.band = band;
  e.rms_residual = fit.rms_residual;
  e.usable_rows = fit.rows;
  e.duplicates = duplicates;
  const Band win = ricci_window_band(band, window, radii.size());
  try {
    e.ric_hat = estimate_ricci(curve, win, e.n_hat, e.k_prime);
  } catch (const DegenerateFit&) {
    e.ric_hat = std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}

CloudAnalysis analyze_cloud(const PointCloud& cloud, const Metric& metric,
                            const CloudOptions& options) {
  const std::size_t p = cloud.size();
  CloudAnalysis result;
  result.k_max = options.k_max ? resolve_k_max(options.k_max, p)
                               : std::min<std::size_t>(p - 1, 2048);
  result.band = options.estimator.band ? *options.estimator.band : default_band(p);
  // a default band can only be infeasible when p is tiny: every anchor is degenerate
  const bool infeasible = !options.estimator.band && (result.band.k_lo >= result.band.k_hi ||
                                                       result.band.k_hi > result.k_max);
  if (!infeasible) {
    validate_band(result.band);
    if (result.band.k_hi > result.k_max)
      throw InvalidArgument("band k_hi " + std::to_string(result.band.k_hi) +
                            " exceeds k_max " + std::to_string(result.k_max));
  }

  std::vector<std::size_t> anchors = options.anchors;
  if (anchors.empty()) {
    anchors.resize(p);
    for (std::size_t i = 0; i < p; ++i) anchors[i] = i;
  }
  result.points.resize(anchors.size());

  RadiiOptions ro;
  ro.k_max = result.k_max;
  ro.workers = options.workers;
  for_each_sorted_radii(cloud, metric, anchors, ro,
                        [&](std::size_t slot, NeighborRadii&& radii) {
                          if (infeasible)
                            result.points[slot].estimate = degenerate_estimate(
                                radii.anchor, result.band, 0, radii.duplicate_count());
                          else
                            result.points[slot] = analyze_one(radii, result.band, options);
                        });
  return result;
}

}  // namespace strata
