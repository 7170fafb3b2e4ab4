#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "strata/point_cloud.hpp"

namespace strata {

/// Distances from one anchor to its nearest other points, ascending.
/// Rank k (1-based) is radii[k-1]; the anchor itself is never included.
struct NeighborRadii {
  std::size_t anchor = 0;
  std::vector<double> radii;
  std::vector<std::size_t> neighbors;  // point index for each radius

  std::size_t size() const { return radii.size(); }
  /// Number of leading zero radii (points coincident with the anchor).
  std::size_t duplicate_count() const;
};

/// Resolves an optional neighbor cap against a cloud of p points.
/// nullopt means every other point. Throws on 0 or > p-1.
std::size_t resolve_k_max(std::optional<std::size_t> k_max, std::size_t p);

/// Exact k_max smallest distances from `anchor`; ties ordered by point index.
NeighborRadii sorted_radii(const PointCloud& cloud, const Metric& metric,
                           std::size_t anchor,
                           std::optional<std::size_t> k_max = std::nullopt);

struct RadiiOptions {
  std::optional<std::size_t> k_max;
  unsigned workers = 1;
  std::size_t anchor_tile = 128;
  std::size_t column_tile = 1024;
};

/// Calls `sink(slot, radii)` once for every anchors[slot]. The sink may be
/// invoked concurrently from worker threads, but never twice for one slot.
/// Output per anchor is identical to sorted_radii regardless of workers.
void for_each_sorted_radii(
    const PointCloud& cloud, const Metric& metric,
    std::span<const std::size_t> anchors, const RadiiOptions& options,
    const std::function<void(std::size_t, NeighborRadii&&)>& sink);

std::vector<NeighborRadii> all_sorted_radii(const PointCloud& cloud,
                                            const Metric& metric,
                                            const RadiiOptions& options = {});

std::vector<NeighborRadii> sorted_radii_for(const PointCloud& cloud,
                                            const Metric& metric,
                                            std::span<const std::size_t> anchors,
                                            const RadiiOptions& options = {});

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Deterministic as
/// long as fn(i) only writes state owned by index i.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

unsigned default_workers();

}  // namespace strata
