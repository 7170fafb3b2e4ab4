#include "strata/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "strata/error.hpp"

namespace strata {

using std::numbers::pi;

ManifoldKind parse_manifold(const std::string& name) {
  if (name == "circle") return ManifoldKind::circle;
  if (name == "sphere") return ManifoldKind::sphere;
  if (name == "disk") return ManifoldKind::disk;
  if (name == "stratified") return ManifoldKind::stratified;
  throw InvalidArgument("unknown manifold '" + name + "'");
}

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::disk: return "disk";
    case ManifoldKind::stratified: return "stratified";
  }
  return "unknown";
}

void validate(const ManifoldSpec& spec) {
  if (!(spec.radius > 0) || !std::isfinite(spec.radius))
    throw InvalidArgument("manifold radius must be > 0");
  if (spec.sample_count < 10) throw InvalidArgument("sample_count must be >= 10");
  const MetricKind mk = spec.metric.kind;
  switch (spec.kind) {
    case ManifoldKind::circle:
      if (mk == MetricKind::sphere_greatcircle)
        throw InvalidArgument("circle cannot use the great-circle metric");
      break;
    case ManifoldKind::sphere:
      if (mk == MetricKind::circle_arclength)
        throw InvalidArgument("sphere cannot use the circle arclength metric");
      break;
    case ManifoldKind::disk:
    case ManifoldKind::stratified:
      if (mk != MetricKind::euclidean)
        throw InvalidArgument(to_string(spec.kind) + " only supports the euclidean metric");
      if (spec.kind == ManifoldKind::stratified &&
          !(spec.circle_weight > 0 && spec.disk_weight > 0 && spec.ball_weight > 0))
        throw InvalidArgument("stratum weights must be > 0");
      break;
  }
  if (spec.metric.intrinsic() && std::abs(spec.metric.radius - spec.radius) > 1e-12 * spec.radius)
    throw InvalidArgument("metric radius does not match manifold radius");
}

std::vector<double> stratified_joint() { return {1.0, 0.0, 0.0}; }
std::vector<double> stratified_ball_center() { return {-1.0, 0.0, 0.0}; }
std::vector<double> stratified_circle_center() { return {2.0, 0.0, 0.0}; }

PointCloud sample(const ManifoldSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double R = spec.radius;
  const std::size_t n = spec.sample_count;
  std::vector<double> xs;

  auto push_circle = [&](double cx, double cy, double radius, std::size_t dim) {
    const double t = 2.0 * pi * unit(rng);
    xs.push_back(cx + radius * std::cos(t));
    if (dim == 3) {
      // x-z plane, meeting the disk only at the joint
      xs.push_back(cy);
      xs.push_back(radius * std::sin(t));
    } else {
      xs.push_back(cy + radius * std::sin(t));
    }
  };
  auto push_disk = [&](double radius, std::size_t dim) {
    const double rho = radius * std::sqrt(unit(rng));
    const double t = 2.0 * pi * unit(rng);
    xs.push_back(rho * std::cos(t));
    xs.push_back(rho * std::sin(t));
    if (dim == 3) xs.push_back(0.0);
  };
  auto direction = [&](double d[3]) {
    double s = 0;
    do {
      for (int i = 0; i < 3; ++i) d[i] = gauss(rng);
      s = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    } while (s == 0.0);
    for (int i = 0; i < 3; ++i) d[i] /= s;
  };

  switch (spec.kind) {
    case ManifoldKind::circle:
      xs.reserve(2 * n);
      for (std::size_t i = 0; i < n; ++i) push_circle(0.0, 0.0, R, 2);
      return PointCloud(std::move(xs), 2);
    case ManifoldKind::disk:
      xs.reserve(2 * n);
      for (std::size_t i = 0; i < n; ++i) push_disk(R, 2);
      return PointCloud(std::move(xs), 2);
    case ManifoldKind::sphere: {
      xs.reserve(3 * n);
      double d[3];
      for (std::size_t i = 0; i < n; ++i) {
        direction(d);
        for (double v : d) xs.push_back(R * v);
      }
      return PointCloud(std::move(xs), 3);
    }
    case ManifoldKind::stratified: {
      const double w = spec.circle_weight + spec.disk_weight + spec.ball_weight;
      const auto n_circle = static_cast<std::size_t>(
          std::llround(static_cast<double>(n) * spec.circle_weight / w));
      const auto n_disk = static_cast<std::size_t>(
          std::llround(static_cast<double>(n) * spec.disk_weight / w));
      if (n_circle + n_disk >= n) throw InvalidArgument("stratum weights leave no ball samples");
      const std::size_t n_ball = n - n_circle - n_disk;
      std::vector<std::string> labels;
      labels.reserve(n);
      xs.reserve(3 * n);
      const auto cc = stratified_circle_center();
      for (std::size_t i = 0; i < n_circle; ++i) {
        push_circle(cc[0], cc[1], 1.0, 3);
        labels.emplace_back(kCircleStratum);
      }
      for (std::size_t i = 0; i < n_disk; ++i) {
        push_disk(1.0, 3);
        labels.emplace_back(kDiskStratum);
      }
      const auto bc = stratified_ball_center();
      double d[3];
      for (std::size_t i = 0; i < n_ball; ++i) {
        direction(d);
        const double rho = kStratifiedBallRadius * std::cbrt(unit(rng));
        for (int j = 0; j < 3; ++j) xs.push_back(bc[static_cast<std::size_t>(j)] + rho * d[j]);
        labels.emplace_back(kBallStratum);
      }
      return PointCloud(std::move(xs), 3, std::move(labels));
    }
  }
  throw InvalidArgument("unknown manifold kind");
}

double chord_length(double radius, double r_arc) {
  if (!(radius > 0)) throw InvalidArgument("radius must be > 0");
  if (!(r_arc >= 0) || r_arc > pi * radius * (1 + 1e-15))
    throw InvalidArgument("arclength must lie in [0, pi R]");
  // sqrt(2) R sqrt(1 - cos(r/R)), written without the cancellation near 0
  return 2.0 * radius * std::sin(std::min(r_arc / (2.0 * radius), pi / 2));
}

double true_volume(ManifoldKind kind, const Metric& metric, double radius, double r) {
  if (!(radius > 0)) throw InvalidArgument("radius must be > 0");
  if (!(r >= 0)) throw InvalidArgument("ball radius must be >= 0");
  const double R = radius;
  const bool euclid = metric.kind == MetricKind::euclidean;
  auto check_max = [&](double hi) {
    if (r > hi * (1 + 1e-15)) throw InvalidArgument("ball radius out of range");
  };
  switch (kind) {
    case ManifoldKind::circle:
      if (metric.kind == MetricKind::sphere_greatcircle) break;
      if (euclid) {
        check_max(2 * R);
        return 2.0 * R * std::acos(std::max(-1.0, 1.0 - r * r / (2.0 * R * R)));
      }
      check_max(pi * R);
      return 2.0 * r;
    case ManifoldKind::sphere:
      if (metric.kind == MetricKind::circle_arclength) break;
      if (euclid) {
        check_max(2 * R);
        return pi * r * r;
      }
      check_max(pi * R);
      return 2.0 * pi * R * R * (1.0 - std::cos(r / R));
    case ManifoldKind::disk:
      if (!euclid) break;
      check_max(R);
      return pi * r * r;
    case ManifoldKind::stratified:
      break;
  }
  throw InvalidArgument("no closed-form volume for " + to_string(kind) + " with " +
                        metric.name());
}

double total_volume(ManifoldKind kind, double radius) {
  switch (kind) {
    case ManifoldKind::circle: return 2.0 * pi * radius;
    case ManifoldKind::sphere: return 4.0 * pi * radius * radius;
    case ManifoldKind::disk: return pi * radius * radius;
    case ManifoldKind::stratified: break;
  }
  throw InvalidArgument("stratified space has no single total volume");
}

TrueParameters true_parameters(ManifoldKind kind, const Metric& metric, double radius) {
  const double R2 = radius * radius;
  const bool euclid = metric.kind == MetricKind::euclidean;
  switch (kind) {
    case ManifoldKind::circle:
      if (metric.kind == MetricKind::sphere_greatcircle) break;
      // chord metric: v = 2r(1 + r^2/(24R^2)) gives Ric = -18/(24R^2)
      return {1.0, 2.0, euclid ? -0.75 / R2 : 0.0};
    case ManifoldKind::sphere:
      if (metric.kind == MetricKind::circle_arclength) break;
      return {2.0, pi, euclid ? 0.0 : 2.0 / R2};
    case ManifoldKind::disk:
      if (!euclid) break;
      return {2.0, pi, 0.0};
    case ManifoldKind::stratified:
      break;
  }
  throw InvalidArgument("no true parameters for " + to_string(kind) + " with " +
                        metric.name());
}

}  // namespace strata
