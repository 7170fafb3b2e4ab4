#include "strata/validation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "strata/curve_analysis.hpp"
#include "strata/error.hpp"
#include "strata/estimators.hpp"
#include "strata/matrix_io.hpp"
#include "strata/neighbors.hpp"
#include "strata/report.hpp"
#include "strata/stats.hpp"
#include "strata/synthetic.hpp"

namespace strata {

using nlohmann::json;
using std::numbers::pi;

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::skip: return "SKIP";
  }
  return "FAIL";
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "manifold-iqr",    "median-tolerance",  "curvature-sign",  "stratified",
      "disk-boundary", "estimator-oracles", "knn-performance", "real-embeddings"};
  return names;
}

namespace {

constexpr std::size_t kTableSamples = 2000;

struct TableCase {
  std::string name;
  ManifoldKind kind;
  Metric metric;
  double radius;
  double reference_median_dim;  // reference median, NaN when not compared
  bool check_ricci;
};

const std::vector<TableCase>& table_cases() {
  const double none = std::numeric_limits<double>::quiet_NaN();
  static const std::vector<TableCase> cases = {
      {"circle-arclength", ManifoldKind::circle, Metric::circle_arclength(1.0), 1.0, 0.978, true},
      {"circle-euclidean", ManifoldKind::circle, Metric::euclidean(), 1.0, 0.964, true},
      {"sphere-arclength", ManifoldKind::sphere, Metric::sphere_greatcircle(1.0), 1.0, 1.97, true},
      {"sphere-euclidean", ManifoldKind::sphere, Metric::euclidean(), 1.0, 1.90, false},
      {"disk", ManifoldKind::disk, Metric::euclidean(), 0.5, none, false},
  };
  return cases;
}

struct CaseResult {
  TrueParameters truth;
  Quartiles dim, scaling, ricci;
  std::size_t anchors = 0;
  std::size_t degenerate = 0;
  double concave_down = 0;  // fraction of anchors with sign -1
};

json quartiles_json(const Quartiles& q) { return {q.q1, q.q2, q.q3}; }

bool contains(const Quartiles& q, double v) { return q.q1 <= v && v <= q.q3; }

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

class Context {
 public:
  explicit Context(const ValidationOptions& o) : opt_(o) {}

  const std::vector<CaseResult>& table() {
    if (!table_) table_ = run_table();
    return *table_;
  }
  unsigned workers() const { return opt_.workers == 0 ? default_workers() : opt_.workers; }
  const ValidationOptions& options() const { return opt_; }

 private:
  std::vector<CaseResult> run_table() const {
    std::vector<CaseResult> out;
    const auto& cases = table_cases();
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& c = cases[i];
      ManifoldSpec spec;
      spec.kind = c.kind;
      spec.metric = c.metric;
      spec.radius = c.radius;
      spec.sample_count = kTableSamples;
      spec.seed = opt_.seed * 1000 + i;
      const PointCloud cloud = sample(spec);
      CloudOptions co;
      co.estimator.volume_per_point =
          total_volume(c.kind, c.radius) / static_cast<double>(kTableSamples - 1);
      co.workers = workers();
      const CloudAnalysis ca = analyze_cloud(cloud, c.metric, co);

      CaseResult r;
      r.truth = true_parameters(c.kind, c.metric, c.radius);
      std::vector<double> n, k, ric;
      std::size_t down = 0;
      for (const auto& p : ca.points) {
        if (p.concavity < 0) ++down;
        if (p.estimate.degenerate) {
          ++r.degenerate;
          continue;
        }
        n.push_back(p.estimate.n_hat);
        k.push_back(p.estimate.k_prime);
        ric.push_back(p.estimate.ric_hat);
      }
      r.anchors = ca.points.size();
      r.dim = quartiles(n);
      r.scaling = quartiles(k);
      r.ricci = quartiles(ric);
      r.concave_down = static_cast<double>(down) / static_cast<double>(r.anchors);
      out.push_back(r);
    }
    return out;
  }

  ValidationOptions opt_;
  std::optional<std::vector<CaseResult>> table_;
};

CheckResult check_manifold_iqr(Context& ctx) {
  CheckResult r;
  const auto& res = ctx.table();
  const auto& cases = table_cases();
  bool ok = true;
  std::vector<std::string> misses;
  json details = json::object();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = res[i];
    const bool dim_ok = contains(c.dim, c.truth.dimension);
    const bool k_ok = contains(c.scaling, c.truth.scaling);
    const bool ric_ok = !cases[i].check_ricci || contains(c.ricci, c.truth.ricci);
    if (!dim_ok) misses.push_back(cases[i].name + " dimension");
    if (!k_ok) misses.push_back(cases[i].name + " scaling");
    if (!ric_ok) misses.push_back(cases[i].name + " ricci");
    ok = ok && dim_ok && k_ok && ric_ok && c.anchors >= 500;
    details[cases[i].name] = {{"anchors", c.anchors},
                              {"degenerate", c.degenerate},
                              {"dimension", quartiles_json(c.dim)},
                              {"scaling", quartiles_json(c.scaling)},
                              {"ricci", quartiles_json(c.ricci)},
                              {"true", {c.truth.dimension, c.truth.scaling, c.truth.ricci}}};
  }
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  if (ok) {
    r.summary = "IQR contains truth in all 13 parameter checks over 5 spaces";
  } else {
    r.summary = "IQR misses:";
    for (const auto& m : misses) r.summary += " " + m + ";";
  }
  r.details = details;
  return r;
}

CheckResult check_medians(Context& ctx) {
  CheckResult r;
  const auto& res = ctx.table();
  const auto& cases = table_cases();
  bool ok = true;
  std::ostringstream s;
  json details = json::object();
  for (std::size_t i = 0; i < 4; ++i) {
    const double med = res[i].dim.q2;
    const bool truth_ok = std::abs(med - res[i].truth.dimension) <= 0.15;
    const bool ref_ok = std::abs(med - cases[i].reference_median_dim) <= 0.15;
    ok = ok && truth_ok && ref_ok;
    s << cases[i].name << " n=" << fmt(med) << (truth_ok && ref_ok ? "" : " (out)") << "; ";
    details[cases[i].name] = {{"median_dimension", med},
                              {"reference_median", cases[i].reference_median_dim},
                              {"within_truth", truth_ok},
                              {"within_reference", ref_ok}};
  }
  const double ric = res[2].ricci.q2;
  const bool ric_ok = ric >= 1.5 && ric <= 2.5;
  ok = ok && ric_ok;
  s << "sphere-arclength Ricci median " << fmt(ric) << (ric_ok ? " in" : " outside") << " [1.5, 2.5]";
  details["sphere-arclength"]["median_ricci"] = ric;
  details["sphere-arclength"]["ricci_in_range"] = ric_ok;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.summary = s.str();
  r.details = details;
  return r;
}

CheckResult check_curvature_sign(Context& ctx) {
  CheckResult r;
  const auto& res = ctx.table();
  const double down = res[2].concave_down;
  const double circle_ric = res[1].ricci.q2;
  const bool ok = down >= 0.9 && circle_ric < 0;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.summary = "sphere-arclength concave down " + fmt(100 * down) + "% (need >= 90%); circle-euclidean median Ricci " +
              fmt(circle_ric) + " (need < 0)";
  r.details = {{"sphere_arclength_concave_down_fraction", down},
               {"circle_euclidean_median_ricci", circle_ric}};
  return r;
}

double norm3(std::span<const double> x, const std::vector<double>& c) {
  double s = 0;
  for (std::size_t i = 0; i < 3; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  return std::sqrt(s);
}

CheckResult check_stratified(Context& ctx) {
  constexpr double kMargin = 0.15;
  constexpr double kJointRadius = 0.2;
  CheckResult r;
  ManifoldSpec spec;
  spec.kind = ManifoldKind::stratified;
  spec.sample_count = 12000;
  spec.circle_weight = 1;
  spec.disk_weight = 2;
  spec.ball_weight = 3;
  spec.seed = ctx.options().seed * 1000 + 100;
  const PointCloud cloud = sample(spec);
  CloudOptions co;
  co.estimator.band = Band{10, 200};
  co.workers = ctx.workers();
  const CloudAnalysis ca = analyze_cloud(cloud, Metric::euclidean(), co);

  const auto joint = stratified_joint();
  const auto ball = stratified_ball_center();
  const auto& labels = cloud.labels();
  struct Tally {
    std::size_t interior = 0, within = 0;
    std::vector<double> n;
  };
  std::array<Tally, 3> t;  // circle, disk, ball
  std::size_t near = 0, near_knee = 0;
  for (const auto& p : ca.points) {
    const std::size_t a = p.estimate.anchor;
    const auto x = cloud.row(a);
    const double dj = norm3(x, joint);
    if (dj <= kJointRadius) {
      ++near;
      if (p.knees > 0) ++near_knee;
    }
    int s = -1;
    if (labels[a] == kCircleStratum && dj >= kMargin) s = 0;
    if (labels[a] == kDiskStratum && dj >= kMargin && norm3(x, ball) >= kStratifiedBallRadius + kMargin) s = 1;
    if (labels[a] == kBallStratum && std::abs(x[2]) >= kMargin &&
        norm3(x, ball) <= kStratifiedBallRadius - kMargin)
      s = 2;
    if (s < 0) continue;
    auto& tl = t[static_cast<std::size_t>(s)];
    ++tl.interior;
    tl.n.push_back(p.estimate.n_hat);
    if (!p.estimate.degenerate && std::abs(p.estimate.n_hat - (s + 1)) <= 0.5) ++tl.within;
  }
  bool ok = true;
  std::ostringstream s;
  json details = json::object();
  const char* names[3] = {"circle", "disk", "ball"};
  for (std::size_t i = 0; i < 3; ++i) {
    const double f = t[i].interior ? static_cast<double>(t[i].within) / static_cast<double>(t[i].interior) : 0.0;
    ok = ok && t[i].interior > 0 && f >= 0.8;
    s << names[i] << " " << fmt(100 * f) << "% of " << t[i].interior << "; ";
    details[names[i]] = {{"interior_anchors", t[i].interior},
                         {"within_half", f},
                         {"median_dimension", t[i].n.empty() ? 0.0 : quantile(t[i].n, 0.5)}};
  }
  const double kf = near ? static_cast<double>(near_knee) / static_cast<double>(near) : 0.0;
  ok = ok && near > 0 && kf >= 0.5;
  s << "knees near joint " << fmt(100 * kf) << "% of " << near;
  details["joint"] = {{"anchors", near}, {"knee_fraction", kf}};
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.summary = s.str();
  r.details = details;
  return r;
}

CheckResult check_disk_boundary(Context& ctx) {
  constexpr double kRadius = 0.5;
  constexpr double kWidth = 0.05;
  constexpr std::size_t kSamples = 10000;
  CheckResult r;
  ManifoldSpec spec;
  spec.kind = ManifoldKind::disk;
  spec.radius = kRadius;
  spec.sample_count = kSamples;
  spec.seed = ctx.options().seed * 1000 + 200;
  const PointCloud cloud = sample(spec);
  CloudOptions co;
  co.estimator.volume_per_point = total_volume(ManifoldKind::disk, kRadius) / static_cast<double>(kSamples - 1);
  const Band band = default_band(kSamples);
  co.k_max = band.k_hi;
  co.diagnostics = false;
  co.workers = ctx.workers();
  const CloudAnalysis ca = analyze_cloud(cloud, Metric::euclidean(), co);

  const auto buckets = static_cast<std::size_t>(std::llround(kRadius / kWidth));
  std::vector<std::vector<double>> k(buckets);
  for (const auto& p : ca.points) {
    if (p.estimate.degenerate) continue;
    const auto x = cloud.row(p.estimate.anchor);
    const double depth = kRadius - std::hypot(x[0], x[1]);
    const auto b = std::min(buckets - 1, static_cast<std::size_t>(std::max(0.0, depth) / kWidth));
    k[b].push_back(p.estimate.k_prime);
  }
  json med = json::array();
  std::vector<double> medians(buckets, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < buckets; ++b) {
    if (!k[b].empty()) medians[b] = quantile(k[b], 0.5);
    med.push_back({{"depth_from", kWidth * static_cast<double>(b)},
                   {"depth_to", kWidth * static_cast<double>(b + 1)},
                   {"count", k[b].size()},
                   {"median_scaling", k[b].empty() ? json(nullptr) : json(medians[b])}});
  }
  std::size_t deepest = buckets;
  while (deepest > 0 && k[deepest - 1].empty()) --deepest;
  const double interior = deepest ? medians[deepest - 1] : std::numeric_limits<double>::quiet_NaN();
  const double boundary = medians[0];
  const bool ok = std::abs(interior - pi) <= 0.2 * pi && boundary < pi / 2;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.summary = "interior bucket median " + fmt(interior) + " (pi +- 20%), boundary bucket median " + fmt(boundary) +
              " (need < pi/2)";
  r.details = {{"buckets", med}, {"interior_median", interior}, {"boundary_median", boundary}};
  return r;
}

VolumeCurve make_curve(const std::vector<double>& x, const std::vector<double>& y) {
  VolumeCurve c;
  c.log_r = x;
  c.log_v = y;
  c.rank.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.rank[i] = i + 1;
  return c;
}

CheckResult check_oracles(Context& ctx) {
  CheckResult r;
  std::mt19937_64 rng(ctx.options().seed * 1000 + 300);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_fit = 0, worst_eq5 = 0, worst_n = 0, worst_k = 0, worst_ric = 0;

  for (int trial = 0; trial < 100; ++trial) {
    // noisy random curve: fit and curvature mean against closed forms
    const auto m = static_cast<std::size_t>(20 + u(rng) * 280);
    std::vector<double> x(m), y(m);
    double xv = -6 + u(rng);
    const double slope = 0.5 + 4 * u(rng), icpt = 3 * g(rng);
    for (std::size_t i = 0; i < m; ++i) {
      xv += 0.02 * u(rng) + 1e-6;
      x[i] = xv;
      y[i] = icpt + slope * xv + 0.05 * g(rng);
    }
    const VolumeCurve c = make_curve(x, y);
    const DimensionFit fit = fit_dimension_scaling(c, {1, m});
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += static_cast<long double>(x[i]) * x[i];
      sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double mm = static_cast<long double>(m);
    const long double det = mm * sxx - sx * sx;
    const long double b = (mm * sxy - sx * sy) / det;
    const long double a = (sy - b * sx) / mm;
    long double ssr = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const long double e = y[i] - a - b * x[i];
      ssr += e * e;
    }
    const long double sig = std::sqrt(ssr / (mm - 2) * sxx / det);
    worst_fit = std::max({worst_fit, std::abs(fit.n_hat - static_cast<double>(b)),
                          std::abs(fit.log_k_hat - static_cast<double>(a)),
                          std::abs(fit.sigma - static_cast<double>(sig))});

    const std::size_t lo = 1 + static_cast<std::size_t>(u(rng) * static_cast<double>(m / 2));
    const std::size_t hi = std::min(m, lo + 2 + static_cast<std::size_t>(u(rng) * static_cast<double>(m / 2)));
    const double kp = std::exp(fit.log_k_hat + fit.sigma * fit.sigma / 2);
    const double got = estimate_ricci(c, {lo, hi}, fit.n_hat, kp);
    double sum = 0, scale = 0;
    for (std::size_t i = lo - 1; i < hi; ++i) {
      const double term =
          6.0 * (fit.n_hat + 2.0) / std::exp(2.0 * x[i]) * (std::log(kp) + fit.n_hat * x[i] - y[i]);
      sum += term;
      scale += std::abs(term);
    }
    const double cnt = static_cast<double>(hi - lo + 1);
    worst_eq5 = std::max(worst_eq5, std::abs(got - sum / cnt) / std::max(1.0, scale / cnt));

    // noiseless power law: exact recovery of n and K
    const double n_true = 0.5 + 4.5 * u(rng), k_true = 0.5 + 9.5 * u(rng);
    std::vector<double> px(200), py(200);
    for (std::size_t i = 0; i < 200; ++i) {
      px[i] = std::log(1e-3) + (std::log(0.5) - std::log(1e-3)) * static_cast<double>(i) / 199.0;
      py[i] = std::log(k_true) + n_true * px[i];
    }
    const DimensionFit pf = fit_dimension_scaling(make_curve(px, py), {1, 200});
    worst_n = std::max(worst_n, std::abs(pf.n_hat - n_true));
    worst_k = std::max(worst_k, std::abs(debias_scaling(pf.log_k_hat, pf.sigma) - k_true) / k_true);

    // curved volume law up to r = R/2 with R = |Ric|^(-1/2); fit on r <= R/45
    const double ric = (u(rng) < 0.5 ? -1 : 1) * (0.5 + 2.5 * u(rng));
    const double R = 1 / std::sqrt(std::abs(ric));
    std::vector<double> qx(400), qy(400);
    for (std::size_t i = 0; i < 400; ++i) {
      const double rr = R * std::exp(std::log(1e-3) + (std::log(0.5) - std::log(1e-3)) * static_cast<double>(i) / 399.0);
      qx[i] = std::log(rr);
      qy[i] = std::log(k_true) + n_true * qx[i] - ric * rr * rr / (6 * (n_true + 2));
    }
    const VolumeCurve qc = make_curve(qx, qy);
    const DimensionFit qf = fit_dimension_scaling(qc, {1, 200});
    // window: rows with r >= R/10, where the curvature term dominates the fit error
    const auto first = static_cast<std::size_t>(
        std::ceil(399.0 * std::log(100.0) / (std::log(0.5) - std::log(1e-3)))) + 1;
    const double got_ric =
        estimate_ricci(qc, {first, 400}, qf.n_hat, debias_scaling(qf.log_k_hat, qf.sigma));
    worst_ric = std::max(worst_ric, std::abs(got_ric - ric) / std::abs(ric));
  }
  const bool ok = worst_fit <= 1e-10 && worst_eq5 <= 1e-12 && worst_n <= 1e-9 && worst_k <= 1e-9 &&
                  worst_ric <= 0.05;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  std::ostringstream s;
  s.precision(2);
  s << "fit " << worst_fit << " (1e-10), curvature mean " << worst_eq5 << " (1e-12), power law n " << worst_n
    << " K " << worst_k << " (1e-9), Ricci rel " << worst_ric << " (0.05)";
  r.summary = s.str();
  r.details = {{"fit_max_abs_error", worst_fit},
               {"ricci_mean_max_rel_error", worst_eq5},
               {"power_law_n_error", worst_n},
               {"power_law_k_rel_error", worst_k},
               {"curved_ricci_rel_error", worst_ric}};
  return r;
}

CheckResult check_performance(Context& ctx) {
  constexpr std::size_t kP = 20000, kD = 512, kK = 1024, kOracle = 500;
  CheckResult r;
  std::mt19937_64 rng(ctx.options().seed * 1000 + 400);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(kP * kD);
  for (double& v : xs) v = u(rng);
  const PointCloud cloud(std::move(xs), kD);

  RadiiOptions ro;
  ro.k_max = kK;
  ro.workers = ctx.workers();
  const auto t0 = std::chrono::steady_clock::now();
  const auto all = all_sorted_radii(cloud, Metric::euclidean(), ro);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double worst = 0;
  std::size_t index_mismatch = 0;
  std::vector<std::pair<double, std::size_t>> d(kP - 1);
  for (std::size_t a : choose_anchors(kP, kOracle, ctx.options().seed)) {
    const auto xa = cloud.row(a);
    std::size_t w = 0;
    for (std::size_t j = 0; j < kP; ++j) {
      if (j == a) continue;
      const auto xj = cloud.row(j);
      double s = 0;
      for (std::size_t t = 0; t < kD; ++t) s += (xa[t] - xj[t]) * (xa[t] - xj[t]);
      d[w++] = {std::sqrt(s), j};
    }
    std::partial_sort(d.begin(), d.begin() + kK, d.end());
    const auto& got = all[a];
    if (got.size() != kK) {
      worst = std::numeric_limits<double>::infinity();
      continue;
    }
    for (std::size_t i = 0; i < kK; ++i) {
      worst = std::max(worst, std::abs(got.radii[i] - d[i].first));
      if (got.neighbors[i] != d[i].second) ++index_mismatch;
    }
  }
  const bool ok = secs < 120.0 && worst <= 1e-9;
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  std::ostringstream s;
  s.precision(3);
  s << "p=20000 D=512 k=1024 in " << secs << " s on " << ro.workers << " worker(s) (need < 120 s); max |radius - oracle| "
    << worst << " over 500 anchors (need <= 1e-9)";
  r.summary = s.str();
  r.details = {{"seconds", secs},
               {"workers", ro.workers},
               {"max_abs_error", worst},
               {"neighbor_index_mismatches", index_mismatch}};
  return r;
}

CheckResult check_real_embeddings(Context& ctx) {
  CheckResult r;
  r.gating = false;
  const auto& o = ctx.options();
  if (!o.embeddings || !o.vocab) {
    r.status = CheckStatus::skip;
    r.summary = "no embedding matrix and vocabulary supplied (non-gating)";
    return r;
  }
  RunConfig c;
  c.input = *o.embeddings;
  c.vocab = *o.vocab;
  c.cohorts = CohortRule::numeric;
  c.seed = o.seed;
  c.workers = ctx.workers();
  try {
    const AnalysisReport rep = analyze(c);
    json cohorts = json::array();
    for (const auto& co : rep.cohorts) {
      json params = json::object();
      for (const auto& p : co.parameters)
        params[p.parameter] = {p.summary.quartiles.q1, p.summary.quartiles.q2, p.summary.quartiles.q3};
      cohorts.push_back({{"label", co.label}, {"count", co.anchors}, {"quartiles", params}});
    }
    double pval = 1;
    for (const auto& k : rep.ks_tests)
      if (k.parameter == "dimension") pval = k.result.p_value;
    r.status = pval < 1e-3 ? CheckStatus::pass : CheckStatus::fail;
    r.summary = "numeric vs non-numeric dimension KS p = " + fmt(pval) + " (need < 0.001)";
    r.details = {{"p", rep.p}, {"D", rep.dim}, {"cohorts", cohorts}, {"ks_dimension_p", pval}};
  } catch (const std::exception& e) {
    r.status = CheckStatus::fail;
    r.summary = std::string("could not analyze embeddings: ") + e.what();
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_validation(const ValidationOptions& options, const std::vector<std::string>& only) {
  const auto& names = check_names();
  for (const auto& n : only)
    if (std::find(names.begin(), names.end(), n) == names.end())
      throw InvalidArgument("unknown check '" + n + "'");
  using Fn = CheckResult (*)(Context&);
  static const Fn fns[] = {check_manifold_iqr,        check_medians,  check_curvature_sign,
                           check_stratified,    check_disk_boundary, check_oracles,
                           check_performance,   check_real_embeddings};
  Context ctx(options);
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), names[i]) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fns[i](ctx);
    } catch (const std::exception& e) {
      r.status = CheckStatus::fail;
      r.summary = std::string("error: ") + e.what();
    }
    r.criterion = static_cast<int>(i + 1);
    r.name = names[i];
    r.gating = names[i] != "real-embeddings";
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

bool all_gating_passed(const std::vector<CheckResult>& results) {
  return std::none_of(results.begin(), results.end(),
                      [](const CheckResult& r) { return r.gating && r.status == CheckStatus::fail; });
}

json validation_json(const std::vector<CheckResult>& results, const ValidationOptions& options) {
  json checks = json::array();
  for (const auto& r : results)
    checks.push_back({{"criterion", r.criterion},
                      {"name", r.name},
                      {"gating", r.gating},
                      {"status", to_string(r.status)},
                      {"summary", r.summary},
                      {"seconds", r.seconds},
                      {"details", r.details}});
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"seed", options.seed},
          {"passed", all_gating_passed(results)},
          {"checks", checks}};
}

std::string format_result_line(const CheckResult& r) {
  std::string s = "criterion " + std::to_string(r.criterion) + " " + r.name + ": " + to_string(r.status);
  if (!r.gating) s += " (non-gating)";
  return s + " - " + r.summary;
}

}  // namespace strata
