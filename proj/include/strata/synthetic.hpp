#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strata/point_cloud.hpp"

namespace strata {

enum class ManifoldKind { circle, sphere, disk, stratified };

ManifoldKind parse_manifold(const std::string& name);
std::string to_string(ManifoldKind kind);

/// A ground-truth space to sample from. `radius` is R for circle, sphere
/// and disk; the stratified space has fixed geometry (see sample()).
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::circle;
  Metric metric = Metric::euclidean();
  double radius = 1.0;
  std::size_t sample_count = 2000;
  std::uint64_t seed = 0;
  // stratified only: relative sample counts for circle, disk, ball
  double circle_weight = 1.0;
  double disk_weight = 2.0;
  double ball_weight = 2.0;
};

void validate(const ManifoldSpec& spec);

/// Stratum labels used by the stratified sampler.
inline constexpr const char* kCircleStratum = "circle";
inline constexpr const char* kDiskStratum = "disk";
inline constexpr const char* kBallStratum = "ball";

/// Uniform samples. Circle and disk live in the plane (disk centred at the
/// origin), the sphere in 3-space. The stratified space sits in 3-space:
/// a unit disk in z = 0, a unit circle in the y = 0 plane centred at
/// (2, 0, 0) that meets the disk only at the joint (1, 0, 0), and a ball of
/// radius 1/2 centred on the disk's boundary point (-1, 0, 0).
/// Stratified clouds carry one stratum label per point.
PointCloud sample(const ManifoldSpec& spec);

/// Joint where the stratified space's circle meets its disk.
std::vector<double> stratified_joint();
inline constexpr double kStratifiedBallRadius = 0.5;
std::vector<double> stratified_ball_center();
std::vector<double> stratified_circle_center();

/// Chord subtending arclength r_arc on a circle of radius R.
double chord_length(double radius, double r_arc);

/// Exact volume of the metric ball of radius r about a point of the space
/// (about the centre for the disk). For euclidean metrics on circle/sphere
/// r is the chord length.
double true_volume(ManifoldKind kind, const Metric& metric, double radius, double r);

/// Length / area of the whole space; used as the Monte-Carlo volume scale.
double total_volume(ManifoldKind kind, double radius);

struct TrueParameters {
  double dimension = 0;
  double scaling = 0;
  double ricci = 0;
};

/// Closed-form dimension, scaling coefficient and (pseudo-)Ricci scalar.
TrueParameters true_parameters(ManifoldKind kind, const Metric& metric, double radius = 1.0);

}  // namespace strata
