#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "strata/error.hpp"
#include "strata/synthetic.hpp"

using namespace strata;

namespace {

constexpr double pi = std::numbers::pi;

ManifoldSpec spec_of(ManifoldKind kind, std::size_t n, std::uint64_t seed, double radius = 1.0,
                     Metric metric = Metric::euclidean()) {
  ManifoldSpec s;
  s.kind = kind;
  s.metric = metric;
  s.radius = radius;
  s.sample_count = n;
  s.seed = seed;
  return s;
}

double norm(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dist(std::span<const double> x, const std::vector<double>& c) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("circle samples lie on the circle") {
  const auto c = sample(spec_of(ManifoldKind::circle, 10, 3));
  CHECK(c.size() == 10);
  CHECK(c.dim() == 2);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(norm(c.row(i)) - 1.0) < 1e-12);

  const auto big = sample(spec_of(ManifoldKind::circle, 50, 4, 2.5));
  for (std::size_t i = 0; i < big.size(); ++i) CHECK(std::abs(norm(big.row(i)) - 2.5) < 1e-12);
}

TEST_CASE("sphere samples lie on the sphere and average near the origin") {
  const std::size_t n = 4000;
  const auto c = sample(spec_of(ManifoldKind::sphere, n, 5));
  CHECK(c.dim() == 3);
  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(norm(c.row(i)) - 1.0) < 1e-12);
    for (int j = 0; j < 3; ++j) mean[j] += c.row(i)[j] / n;
  }
  CHECK(norm(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("disk samples are uniform by area") {
  const std::size_t n = 20000;
  const auto c = sample(spec_of(ManifoldKind::disk, n, 6, 0.5));
  std::size_t inner = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = norm(c.row(i));
    CHECK(r <= 0.5);
    if (r < 0.25) ++inner;
  }
  // a quarter of the area; binomial sd ~ 0.003
  CHECK(static_cast<double>(inner) / n == doctest::Approx(0.25).epsilon(0.06));
}

TEST_CASE("stratified samples carry labels and lie on their strata") {
  ManifoldSpec s = spec_of(ManifoldKind::stratified, 3000, 7);
  s.circle_weight = 1;
  s.disk_weight = 2;
  s.ball_weight = 3;
  const auto c = sample(s);
  REQUIRE(c.has_labels());
  const auto ball = stratified_ball_center();
  const auto circ = stratified_circle_center();
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto x = c.row(i);
    const auto& l = c.labels()[i];
    if (l == kCircleStratum) {
      ++counts[0];
      CHECK(std::abs(dist(x, circ) - 1.0) < 1e-12);
      CHECK(std::abs(x[1]) < 1e-12);
    } else if (l == kDiskStratum) {
      ++counts[1];
      CHECK(x[2] == 0.0);
      CHECK(std::hypot(x[0], x[1]) <= 1.0);
    } else {
      REQUIRE(l == kBallStratum);
      ++counts[2];
      CHECK(dist(x, ball) <= kStratifiedBallRadius);
    }
  }
  CHECK(counts[0] == doctest::Approx(500).epsilon(0.02));
  CHECK(counts[1] == doctest::Approx(1000).epsilon(0.02));
  CHECK(counts[2] == doctest::Approx(1500).epsilon(0.02));
  // the circle meets the disk only at the joint
  CHECK(dist(std::span<const double>(stratified_joint()), circ) == doctest::Approx(1.0));
  CHECK(std::hypot(stratified_joint()[0], stratified_joint()[1]) == doctest::Approx(1.0));
}

TEST_CASE("sampling is deterministic per seed") {
  const auto a = sample(spec_of(ManifoldKind::sphere, 100, 11));
  const auto b = sample(spec_of(ManifoldKind::sphere, 100, 11));
  const auto c = sample(spec_of(ManifoldKind::sphere, 100, 12));
  CHECK(std::equal(a.coords().begin(), a.coords().end(), b.coords().begin()));
  CHECK_FALSE(std::equal(a.coords().begin(), a.coords().end(), c.coords().begin()));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(validate(spec_of(ManifoldKind::circle, 9, 1)), InvalidArgument);
  CHECK_THROWS_AS(validate(spec_of(ManifoldKind::circle, 100, 1, -1.0)), InvalidArgument);
  CHECK_THROWS_AS(validate(spec_of(ManifoldKind::disk, 100, 1, 1.0, Metric::circle_arclength(1))),
                  InvalidArgument);
  CHECK_THROWS_AS(validate(spec_of(ManifoldKind::circle, 100, 1, 2.0, Metric::circle_arclength(1))),
                  InvalidArgument);
  CHECK(parse_manifold("sphere") == ManifoldKind::sphere);
  CHECK_THROWS_AS(parse_manifold("torus"), InvalidArgument);
}

TEST_CASE("chord length") {
  CHECK(chord_length(1, pi) == doctest::Approx(2.0));
  CHECK(chord_length(1, 0) == 0.0);
  CHECK(chord_length(1, pi / 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(chord_length(3, 3 * pi) == doctest::Approx(6.0));
  CHECK(chord_length(3, pi) == doctest::Approx(3.0));
  CHECK_THROWS_AS(chord_length(1, 4.0), InvalidArgument);
}

TEST_CASE("a chord is never longer than its arc") {
  for (double R : {0.3, 1.0, 7.0})
    for (int i = 0; i <= 100; ++i) {
      const double arc = pi * R * i / 100.0;
      CHECK(chord_length(R, arc) <= arc);
    }
}

TEST_CASE("true volumes") {
  CHECK(true_volume(ManifoldKind::circle, Metric::circle_arclength(1), 1, 0.3) ==
        doctest::Approx(0.6));
  CHECK(true_volume(ManifoldKind::sphere, Metric::sphere_greatcircle(1), 1, pi) ==
        doctest::Approx(4 * pi));
  CHECK(true_volume(ManifoldKind::sphere, Metric::euclidean(), 1, 1) == doctest::Approx(pi));
  CHECK(true_volume(ManifoldKind::disk, Metric::euclidean(), 0.5, 0.5) ==
        doctest::Approx(pi / 4));
  // the whole circle is inside a chord ball of radius 2R
  CHECK(true_volume(ManifoldKind::circle, Metric::euclidean(), 1, 2) == doctest::Approx(2 * pi));
  CHECK(total_volume(ManifoldKind::sphere, 2) == doctest::Approx(16 * pi));
}

TEST_CASE("circle chord-ball series matches the exact form") {
  const double r = 0.01;
  const double exact = true_volume(ManifoldKind::circle, Metric::euclidean(), 1, r);
  const double series = 2 * r * (1 + r * r / 24);
  CHECK(std::abs(series - exact) / exact <= 1e-8);
}

TEST_CASE("true parameters") {
  const auto ce = true_parameters(ManifoldKind::circle, Metric::euclidean());
  CHECK(ce.dimension == 1);
  CHECK(ce.scaling == 2);
  CHECK(ce.ricci == doctest::Approx(-0.75));
  CHECK(true_parameters(ManifoldKind::circle, Metric::circle_arclength(1)).ricci == 0.0);
  const auto sa = true_parameters(ManifoldKind::sphere, Metric::sphere_greatcircle(1));
  CHECK(sa.dimension == 2);
  CHECK(sa.scaling == doctest::Approx(pi));
  CHECK(sa.ricci == doctest::Approx(2.0));
  CHECK(true_parameters(ManifoldKind::sphere, Metric::euclidean()).ricci == 0.0);
  CHECK(true_parameters(ManifoldKind::disk, Metric::euclidean()).scaling == doctest::Approx(pi));
  CHECK_THROWS_AS(true_parameters(ManifoldKind::stratified, Metric::euclidean()), InvalidArgument);
}

TEST_CASE("Monte-Carlo ball volume converges to the true volume") {
  const std::size_t n = 5000;
  const auto c = sample(spec_of(ManifoldKind::circle, n, 13));
  const double total = total_volume(ManifoldKind::circle, 1);
  for (double r : {0.3, 0.6, 1.0}) {
    double frac = 0;
    const std::size_t anchors = 100;
    for (std::size_t a = 0; a < anchors; ++a) {
      std::size_t inside = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = c.row(a)[0] - c.row(j)[0], dy = c.row(a)[1] - c.row(j)[1];
        if (j != a && std::hypot(dx, dy) < r) ++inside;
      }
      frac += static_cast<double>(inside) / static_cast<double>(n - 1);
    }
    frac /= anchors;
    const double truth = true_volume(ManifoldKind::circle, Metric::euclidean(), 1, r);
    CHECK(std::abs(frac * total - truth) / truth < 0.05);
  }
}
