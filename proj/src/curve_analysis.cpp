#include "strata/curve_analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "strata/error.hpp"

namespace strata {

VolumeCurve restrict_curve(const VolumeCurve& curve, const Band& band) {
  const auto [first, last] = curve.rows_in(band);
  VolumeCurve out;
  out.anchor = curve.anchor;
  const auto f = static_cast<std::ptrdiff_t>(first);
  const auto l = static_cast<std::ptrdiff_t>(last);
  out.rank.assign(curve.rank.begin() + f, curve.rank.begin() + l);
  out.log_r.assign(curve.log_r.begin() + f, curve.log_r.begin() + l);
  out.log_v.assign(curve.log_v.begin() + f, curve.log_v.begin() + l);
  return out;
}

namespace {

// Suffix sums over rows i >= s of 1, x, x^2, y, xy (x centred).
struct SuffixSums {
  std::vector<double> n, x, xx, y, xy;

  SuffixSums(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t m = xs.size();
    n.assign(m + 1, 0);
    x = xx = y = xy = n;
    for (std::size_t i = m; i-- > 0;) {
      n[i] = n[i + 1] + 1;
      x[i] = x[i + 1] + xs[i];
      xx[i] = xx[i + 1] + xs[i] * xs[i];
      y[i] = y[i + 1] + ys[i];
      xy[i] = xy[i + 1] + xs[i] * ys[i];
    }
  }
};

struct Candidate {
  double t;           // breakpoint (centred log_r)
  std::size_t start;  // first row with x > t
};

struct PiecewiseFit {
  double sse = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> breaks;  // indices into the candidate list
  Eigen::VectorXd beta;
};

// Continuous piecewise-linear least squares in the hinge basis
// 1, x, (x - t_1)_+, ..., (x - t_s)_+ ; normal equations from suffix sums.
double hinge_fit(const SuffixSums& s, double yy, const std::vector<Candidate>& cand,
                 const std::vector<std::size_t>& breaks, Eigen::VectorXd& beta) {
  const std::size_t q = breaks.size() + 2;
  Eigen::MatrixXd g(q, q);
  Eigen::VectorXd b(q);
  g(0, 0) = s.n[0];
  g(0, 1) = g(1, 0) = s.x[0];
  g(1, 1) = s.xx[0];
  b(0) = s.y[0];
  b(1) = s.xy[0];
  for (std::size_t a = 0; a < breaks.size(); ++a) {
    const Candidate& ca = cand[breaks[a]];
    const std::size_t i = ca.start;
    const double t = ca.t;
    const auto ia = static_cast<Eigen::Index>(a + 2);
    // sum over rows with x > t of 1*(x-t) and x*(x-t)
    g(0, ia) = g(ia, 0) = s.x[i] - t * s.n[i];
    g(1, ia) = g(ia, 1) = s.xx[i] - t * s.x[i];
    b(ia) = s.xy[i] - t * s.y[i];
    for (std::size_t c = a; c < breaks.size(); ++c) {
      const Candidate& cc = cand[breaks[c]];
      const std::size_t j = std::max(i, cc.start);
      const double u = cc.t;
      const auto ic = static_cast<Eigen::Index>(c + 2);
      g(ia, ic) = g(ic, ia) = s.xx[j] - (t + u) * s.x[j] + t * u * s.n[j];
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  beta = ldlt.solve(b);
  if (!beta.allFinite()) return std::numeric_limits<double>::infinity();
  return std::max(0.0, yy - beta.dot(b));
}

void search(const SuffixSums& s, double yy, const std::vector<Candidate>& cand,
            std::size_t depth, std::size_t from, std::size_t prev_start, std::size_t min_rows,
            std::size_t m, std::vector<std::size_t>& breaks, PiecewiseFit& best) {
  if (!breaks.empty()) {
    // last segment must also be long enough
    if (m - cand[breaks.back()].start >= min_rows) {
      Eigen::VectorXd beta;
      const double sse = hinge_fit(s, yy, cand, breaks, beta);
      if (sse < best.sse - 1e-12 * (1.0 + best.sse) ||
          (sse <= best.sse && breaks.size() < best.breaks.size())) {
        best.sse = sse;
        best.breaks = breaks;
        best.beta = beta;
      }
    }
  }
  if (depth == 0) return;
  for (std::size_t c = from; c < cand.size(); ++c) {
    if (cand[c].start - prev_start < min_rows) continue;
    if (m - cand[c].start < min_rows) break;
    breaks.push_back(c);
    search(s, yy, cand, depth - 1, c + 1, cand[c].start, min_rows, m, breaks, best);
    breaks.pop_back();
  }
}

// Moves one breakpoint at a time to any candidate within `reach` positions
// (keeping segments >= min_rows) until no move lowers the error.
void refine(const SuffixSums& s, double yy, const std::vector<Candidate>& cand,
            std::size_t reach, std::size_t min_rows, std::size_t m, PiecewiseFit& best) {
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t a = 0; a < best.breaks.size(); ++a) {
      const std::size_t at = best.breaks[a];
      const std::size_t lo = at > reach ? at - reach : 0;
      const std::size_t hi = std::min(cand.size() - 1, at + reach);
      const std::size_t prev = a ? cand[best.breaks[a - 1]].start : 0;
      const std::size_t next = a + 1 < best.breaks.size() ? cand[best.breaks[a + 1]].start : m;
      for (std::size_t c = lo; c <= hi; ++c) {
        if (c == best.breaks[a]) continue;
        if (cand[c].start < prev + min_rows || next < cand[c].start + min_rows) continue;
        std::vector<std::size_t> trial = best.breaks;
        trial[a] = c;
        Eigen::VectorXd beta;
        const double sse = hinge_fit(s, yy, cand, trial, beta);
        if (sse < best.sse - 1e-12 * (1.0 + best.sse)) {
          best.sse = sse;
          best.breaks = trial;
          best.beta = beta;
          moved = true;
        }
      }
    }
  }
}

}  // namespace

std::vector<Knee> detect_knees(const VolumeCurve& curve, const KneeOptions& options) {
  if (options.max_segments < 1) throw InvalidArgument("max_segments must be >= 1");
  const std::size_t m = curve.size();
  if (m < 2 * options.max_segments + 2)
    throw DegenerateFit("curve too short for knee detection");
  if (options.max_segments == 1) return {};

  double mean = 0;
  for (double v : curve.log_r) mean += v;
  mean /= static_cast<double>(m);
  std::vector<double> xs(m);
  for (std::size_t i = 0; i < m; ++i) xs[i] = curve.log_r[i] - mean;
  if (!(xs.back() > xs.front())) throw DegenerateFit("no spread in log radius");

  double ybar = 0;
  for (double v : curve.log_v) ybar += v;
  ybar /= static_cast<double>(m);
  std::vector<double> ys(m);
  double yy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ys[i] = curve.log_v[i] - ybar;
    yy += ys[i] * ys[i];
  }
  const SuffixSums sums(xs, ys);

  const std::size_t min_rows = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(options.min_segment_fraction * static_cast<double>(m))));

  // candidate breakpoints: observed log_r values at evenly spaced rows
  std::vector<Candidate> cand;
  const std::size_t grid = std::max<std::size_t>(1, options.grid);
  auto add = [&](std::size_t row) {
    const double t = xs[row];
    if (!cand.empty() && cand.back().t == t) return;
    const auto start = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), t) - xs.begin());
    cand.push_back({t, start});
  };
  if (m - 2 <= grid) {
    for (std::size_t i = 1; i + 1 < m; ++i) add(i);
  } else {
    for (std::size_t g = 1; g <= grid; ++g)
      add(static_cast<std::size_t>(std::llround(static_cast<double>(g) *
                                                static_cast<double>(m - 1) /
                                                static_cast<double>(grid + 1))));
  }

  PiecewiseFit best;
  {
    Eigen::VectorXd beta;
    best.sse = hinge_fit(sums, yy, cand, {}, beta);
    best.beta = beta;
  }
  std::vector<std::size_t> breaks;
  search(sums, yy, cand, options.max_segments - 1, 0, 0, min_rows, m, breaks, best);

  // Work on every observed log_r from here on.
  if (m - 2 > grid) {
    std::vector<Candidate> all;
    std::swap(all, cand);
    for (std::size_t i = 1; i + 1 < m; ++i) add(i);
    std::swap(all, cand);
    for (auto& b : best.breaks) {
      const double t = cand[b].t;
      b = static_cast<std::size_t>(
          std::lower_bound(all.begin(), all.end(), t,
                           [](const Candidate& c, double v) { return c.t < v; }) -
          all.begin());
    }
    cand = std::move(all);
  }
  const std::size_t reach = (m - 1) / (grid + 1) + 1;
  for (;;) {
    refine(sums, yy, cand, reach, min_rows, m, best);
    // a sub-threshold break is not a knee but bends the slopes around it:
    // drop the weakest one and refit
    std::size_t weakest = best.breaks.size();
    double smallest = options.knee_threshold;
    for (std::size_t a = 0; a < best.breaks.size(); ++a) {
      const double change = std::abs(best.beta(static_cast<Eigen::Index>(a + 2)));
      if (change < smallest) {
        smallest = change;
        weakest = a;
      }
    }
    if (weakest == best.breaks.size()) break;
    best.breaks.erase(best.breaks.begin() + static_cast<std::ptrdiff_t>(weakest));
    Eigen::VectorXd beta;
    best.sse = hinge_fit(sums, yy, cand, best.breaks, beta);
    best.beta = beta;
  }

  std::vector<Knee> knees;
  double slope = best.beta(1);
  for (std::size_t a = 0; a < best.breaks.size(); ++a) {
    const double change = best.beta(static_cast<Eigen::Index>(a + 2));
    const double after = slope + change;
    if (std::abs(change) >= options.knee_threshold)
      knees.push_back({cand[best.breaks[a]].t + mean, slope, after});
    slope = after;
  }
  return knees;
}

std::vector<Gap> detect_gaps(const VolumeCurve& curve, double min_gap_ratio) {
  if (!(min_gap_ratio > 1)) throw InvalidArgument("min_gap_ratio must be > 1");
  std::vector<Gap> gaps;
  const double log_ratio = std::log(min_gap_ratio);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double a = curve.log_r[i - 1];
    const double b = curve.log_r[i];
    if (b - a >= log_ratio) gaps.push_back({std::exp(a), std::exp(b)});
  }
  return gaps;
}

Concavity concavity_sign(const VolumeCurve& curve, const Band& band) {
  validate_band(band);
  const auto [first, last] = curve.rows_in(band);
  std::size_t distinct = last > first ? 1 : 0;
  for (std::size_t i = first + 1; i < last; ++i)
    if (curve.log_r[i] != curve.log_r[i - 1]) ++distinct;
  if (distinct < 4) throw DegenerateFit("fewer than 4 distinct radii for concavity");

  const auto m = static_cast<Eigen::Index>(last - first);
  double mean = 0;
  for (std::size_t i = first; i < last; ++i) mean += curve.log_r[i];
  mean /= static_cast<double>(m);
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = curve.log_r[first + static_cast<std::size_t>(i)] - mean;
    a(i, 0) = 1.0;
    a(i, 1) = x;
    a(i, 2) = x * x;
    y(i) = curve.log_v[first + static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(y);
  Concavity c;
  c.coefficient = coef(2);
  c.sign = std::abs(c.coefficient) < 1e-9 ? 0 : (c.coefficient > 0 ? 1 : -1);
  return c;
}

VolumeCurve thin_geometric(const VolumeCurve& curve, std::size_t count) {
  if (count < 2 || curve.size() <= count) return curve;
  const double k0 = static_cast<double>(std::max<std::size_t>(1, curve.rank.front()));
  const double k1 = static_cast<double>(curve.rank.back());
  VolumeCurve out;
  out.anchor = curve.anchor;
  std::size_t row = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double target = k0 * std::pow(k1 / k0, static_cast<double>(j) / static_cast<double>(count - 1));
    const auto want = static_cast<std::size_t>(std::llround(target));
    const auto it = std::lower_bound(curve.rank.begin() + static_cast<std::ptrdiff_t>(row), curve.rank.end(), want);
    if (it == curve.rank.end()) break;
    const auto r = static_cast<std::size_t>(it - curve.rank.begin());
    if (!out.rank.empty() && r < row) continue;
    out.rank.push_back(curve.rank[r]);
    out.log_r.push_back(curve.log_r[r]);
    out.log_v.push_back(curve.log_v[r]);
    row = r + 1;
  }
  return out;
}

CurveDiagnostics diagnose_curve(const VolumeCurve& curve, const Band& band,
                                const DiagnosticOptions& options) {
  CurveDiagnostics out;
  if (curve.size() == 0) return out;
  const Band span{band.k_lo, std::max(band.k_hi, curve.rank.back())};
  const VolumeCurve tail = restrict_curve(curve, span);
  try {
    out.knees = detect_knees(options.knee_rows ? thin_geometric(tail, options.knee_rows) : tail,
                             options.knees);
  } catch (const DegenerateFit&) {
  }
  out.gaps = detect_gaps(tail, options.min_gap_ratio);
  try {
    out.concavity = concavity_sign(tail, span);
  } catch (const DegenerateFit&) {
  }
  return out;
}

}  // namespace strata
