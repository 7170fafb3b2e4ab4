#include "strata/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "strata/error.hpp"

namespace strata {

PointCloud::PointCloud(std::vector<double> coords, std::size_t dim,
                       std::optional<std::vector<std::string>> labels)
    : coords_(std::move(coords)), dim_(dim), labels_(std::move(labels)) {
  if (dim_ == 0) throw InvalidArgument("point cloud dimension must be >= 1");
  if (coords_.size() % dim_ != 0)
    throw InvalidArgument("coordinate count is not a multiple of the dimension");
  size_ = coords_.size() / dim_;
  if (size_ < 2) throw InvalidArgument("point cloud needs at least 2 points");
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!std::isfinite(coords_[i]))
      throw DataError("non-finite coordinate in row " + std::to_string(i / dim_));
  }
  if (labels_ && labels_->size() != size_)
    throw InvalidArgument("label count " + std::to_string(labels_->size()) +
                          " does not match point count " + std::to_string(size_));
}

const std::vector<std::string>& PointCloud::labels() const {
  if (!labels_) throw InvalidArgument("point cloud has no labels");
  return *labels_;
}

PointCloud PointCloud::with_labels(std::vector<std::string> labels) const {
  return PointCloud(coords_, dim_, std::move(labels));
}

Metric Metric::circle_arclength(double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InvalidArgument("circle radius must be > 0");
  return {MetricKind::circle_arclength, r};
}

Metric Metric::sphere_greatcircle(double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InvalidArgument("sphere radius must be > 0");
  return {MetricKind::sphere_greatcircle, r};
}

std::string Metric::name() const {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::circle_arclength: return "circle-arclength";
    case MetricKind::sphere_greatcircle: return "sphere-greatcircle";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name, double radius) {
  if (name == "euclidean") return Metric::euclidean();
  if (name == "circle-arclength" || name == "arclength-circle")
    return Metric::circle_arclength(radius);
  if (name == "sphere-greatcircle" || name == "greatcircle")
    return Metric::sphere_greatcircle(radius);
  throw InvalidArgument("unknown metric '" + name + "'");
}

namespace {

void check_on_manifold(const Metric& m, std::span<const double> x) {
  double n2 = 0;
  for (double v : x) n2 += v * v;
  if (std::abs(std::sqrt(n2) - m.radius) > 1e-9 * m.radius)
    throw InvalidArgument("point is not on the " + m.name() + " manifold of radius " +
                          std::to_string(m.radius));
}

}  // namespace

double distance(const Metric& metric, std::span<const double> x,
                std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("dimension mismatch in distance");
  // fused multiply-adds leave ~1e-17 in a self cross product; keep d(x, x) exact
  if (metric.intrinsic() && std::equal(x.begin(), x.end(), y.begin())) {
    check_on_manifold(metric, x);
    return 0.0;
  }
  switch (metric.kind) {
    case MetricKind::euclidean: {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case MetricKind::circle_arclength: {
      if (x.size() != 2) throw InvalidArgument("circle-arclength needs 2-d points");
      check_on_manifold(metric, x);
      check_on_manifold(metric, y);
      const double cross = x[0] * y[1] - x[1] * y[0];
      const double dot = x[0] * y[0] + x[1] * y[1];
      return metric.radius * std::abs(std::atan2(cross, dot));
    }
    case MetricKind::sphere_greatcircle: {
      if (x.size() != 3) throw InvalidArgument("sphere-greatcircle needs 3-d points");
      check_on_manifold(metric, x);
      check_on_manifold(metric, y);
      const double cx = x[1] * y[2] - x[2] * y[1];
      const double cy = x[2] * y[0] - x[0] * y[2];
      const double cz = x[0] * y[1] - x[1] * y[0];
      const double dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
      // atan2 keeps precision near 0 and pi where acos does not
      return metric.radius * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
    }
  }
  throw InvalidArgument("unknown metric kind");
}

double ball_volume_euclidean(int d, double r) {
  if (d < 1) throw InvalidArgument("ball dimension must be >= 1");
  if (!(r >= 0)) throw InvalidArgument("ball radius must be >= 0");
  const double half = 0.5 * d;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0)) *
         std::pow(r, d);
}

}  // namespace strata
