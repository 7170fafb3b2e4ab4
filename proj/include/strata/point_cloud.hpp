#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace strata {

/// p points in a D-dimensional ambient space, stored row-major.
/// Immutable after construction and safe to share between threads.
class PointCloud {
 public:
  PointCloud(std::vector<double> coords, std::size_t dim,
             std::optional<std::vector<std::string>> labels = std::nullopt);

  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const { return coords_; }

  bool has_labels() const { return labels_.has_value(); }
  const std::vector<std::string>& labels() const;

  PointCloud with_labels(std::vector<std::string> labels) const;

 private:
  std::vector<double> coords_;
  std::size_t dim_ = 0;
  std::size_t size_ = 0;
  std::optional<std::vector<std::string>> labels_;
};

enum class MetricKind { euclidean, circle_arclength, sphere_greatcircle };

/// Distance on the ambient coordinates, or the intrinsic distance on a
/// circle (R) in the plane / sphere (R) in 3-space centred at the origin.
struct Metric {
  MetricKind kind = MetricKind::euclidean;
  double radius = 1.0;

  static Metric euclidean() { return {MetricKind::euclidean, 1.0}; }
  static Metric circle_arclength(double r);
  static Metric sphere_greatcircle(double r);

  bool intrinsic() const { return kind != MetricKind::euclidean; }
  std::string name() const;
};

/// Parses "euclidean", "circle-arclength" or "sphere-greatcircle".
Metric parse_metric(const std::string& name, double radius = 1.0);

double distance(const Metric& metric, std::span<const double> x,
                std::span<const double> y);

/// Volume of the Euclidean d-ball of radius r.
double ball_volume_euclidean(int d, double r);

}  // namespace strata
