#include "strata/neighbors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "strata/error.hpp"

namespace strata {

namespace {

struct Candidate {
  double key;  // squared distance (Gram estimate while scanning)
  std::size_t index;
};

bool operator<(const Candidate& a, const Candidate& b) {
  return a.key < b.key || (a.key == b.key && a.index < b.index);
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

double exact_sq_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

// Sorts (distance, index) pairs and keeps the first k.
NeighborRadii finish(std::size_t anchor, std::vector<Candidate>& dist, std::size_t k) {
  if (k < dist.size()) {
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    dist.resize(k);
  }
  std::sort(dist.begin(), dist.end());
  NeighborRadii out;
  out.anchor = anchor;
  out.radii.reserve(k);
  out.neighbors.reserve(k);
  for (const auto& c : dist) {
    out.radii.push_back(c.key);
    out.neighbors.push_back(c.index);
  }
  return out;
}

NeighborRadii brute_force(const PointCloud& cloud, const Metric& metric,
                          std::size_t anchor, std::size_t k) {
  const std::size_t p = cloud.size();
  std::vector<Candidate> dist;
  dist.reserve(p - 1);
  const auto x = cloud.row(anchor);
  for (std::size_t j = 0; j < p; ++j) {
    if (j == anchor) continue;
    const double d = metric.kind == MetricKind::euclidean
                         ? std::sqrt(exact_sq_distance(x, cloud.row(j)))
                         : distance(metric, x, cloud.row(j));
    dist.push_back({d, j});
  }
  return finish(anchor, dist, k);
}

// Euclidean kNN over a block of anchors using ||x||^2 + ||y||^2 - 2 x.y on
// tiles. Candidates kept by the Gram estimate are re-measured exactly; an
// anchor whose cutoff is within the Gram error bound falls back to brute force.
class GramScanner {
 public:
  GramScanner(const PointCloud& cloud, std::size_t k, const RadiiOptions& opt)
      : cloud_(cloud), k_(k), opt_(opt) {
    const std::size_t p = cloud.size();
    norms_.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      const auto r = cloud.row(i);
      double s = 0;
      for (double v : r) s += v * v;
      norms_[i] = s;
    }
    max_norm_ = *std::max_element(norms_.begin(), norms_.end());
    keep_ = std::min(p - 1, k + kSlack);
  }

  void scan(std::span<const std::size_t> anchors,
            const std::function<void(std::size_t, NeighborRadii&&)>& emit) const {
    const std::size_t p = cloud_.size();
    const std::size_t dim = cloud_.dim();
    const std::size_t na = anchors.size();
    const ConstRowMap all(cloud_.coords().data(), static_cast<Eigen::Index>(p),
                          static_cast<Eigen::Index>(dim));

    RowMatrix block(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(dim));
    for (std::size_t a = 0; a < na; ++a) block.row(static_cast<Eigen::Index>(a)) =
        all.row(static_cast<Eigen::Index>(anchors[a]));

    std::vector<std::vector<Candidate>> buf(na);
    std::vector<double> cutoff(na, std::numeric_limits<double>::infinity());
    for (auto& b : buf) b.reserve(2 * keep_ + opt_.column_tile);

    RowMatrix gram;
    for (std::size_t c0 = 0; c0 < p; c0 += opt_.column_tile) {
      const std::size_t nc = std::min(opt_.column_tile, p - c0);
      gram.noalias() = block * all.middleRows(static_cast<Eigen::Index>(c0),
                                              static_cast<Eigen::Index>(nc)).transpose();
      for (std::size_t a = 0; a < na; ++a) {
        const std::size_t anchor = anchors[a];
        const double na2 = norms_[anchor];
        auto& b = buf[a];
        const double* g = gram.data() + a * nc;
        for (std::size_t j = 0; j < nc; ++j) {
          const std::size_t idx = c0 + j;
          if (idx == anchor) continue;
          const double d2 = std::max(0.0, na2 + norms_[idx] - 2.0 * g[j]);
          if (d2 <= cutoff[a]) b.push_back({d2, idx});
        }
        if (b.size() >= 2 * keep_) {
          std::nth_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(keep_ - 1), b.end());
          b.resize(keep_);
          cutoff[a] = std::max_element(b.begin(), b.end())->key;
        }
      }
    }

    for (std::size_t a = 0; a < na; ++a) emit(a, refine(anchors[a], buf[a]));
  }

 private:
  static constexpr std::size_t kSlack = 32;

  NeighborRadii refine(std::size_t anchor, std::vector<Candidate>& cand) const {
    const std::size_t p = cloud_.size();
    bool truncated = false;
    double threshold = std::numeric_limits<double>::infinity();
    if (cand.size() > keep_) {
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep_ - 1), cand.end());
      cand.resize(keep_);
    }
    if (keep_ < p - 1) {
      truncated = true;
      threshold = std::max_element(cand.begin(), cand.end())->key;
    }
    const auto x = cloud_.row(anchor);
    for (auto& c : cand) c.key = std::sqrt(exact_sq_distance(x, cloud_.row(c.index)));
    NeighborRadii out = finish(anchor, cand, k_);
    if (truncated) {
      const double bound = 4.0 * static_cast<double>(cloud_.dim() + 8) *
                           std::numeric_limits<double>::epsilon() *
                           (norms_[anchor] + max_norm_);
      const double last = out.radii.back();
      if (!(last * last < threshold - bound)) {
        return brute_force(cloud_, Metric::euclidean(), anchor, k_);
      }
    }
    return out;
  }

  const PointCloud& cloud_;
  std::size_t k_;
  RadiiOptions opt_;
  std::vector<double> norms_;
  double max_norm_ = 0;
  std::size_t keep_ = 0;
};

}  // namespace

std::size_t NeighborRadii::duplicate_count() const {
  std::size_t n = 0;
  while (n < radii.size() && radii[n] == 0.0) ++n;
  return n;
}

std::size_t resolve_k_max(std::optional<std::size_t> k_max, std::size_t p) {
  if (p < 2) throw InvalidArgument("point cloud needs at least 2 points");
  if (!k_max) return p - 1;
  if (*k_max == 0) throw InvalidArgument("k_max must be >= 1");
  if (*k_max > p - 1)
    throw InvalidArgument("k_max " + std::to_string(*k_max) + " exceeds p-1 = " +
                          std::to_string(p - 1));
  return *k_max;
}

NeighborRadii sorted_radii(const PointCloud& cloud, const Metric& metric,
                           std::size_t anchor, std::optional<std::size_t> k_max) {
  const std::size_t k = resolve_k_max(k_max, cloud.size());
  if (anchor >= cloud.size())
    throw InvalidArgument("anchor " + std::to_string(anchor) + " out of range");
  return brute_force(cloud, metric, anchor, k);
}

unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = default_workers();
  const std::size_t threads = std::min<std::size_t>(workers, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

void for_each_sorted_radii(
    const PointCloud& cloud, const Metric& metric,
    std::span<const std::size_t> anchors, const RadiiOptions& options,
    const std::function<void(std::size_t, NeighborRadii&&)>& sink) {
  const std::size_t k = resolve_k_max(options.k_max, cloud.size());
  for (std::size_t a : anchors)
    if (a >= cloud.size())
      throw InvalidArgument("anchor " + std::to_string(a) + " out of range");
  if (options.anchor_tile == 0 || options.column_tile == 0)
    throw InvalidArgument("tile sizes must be >= 1");

  const std::size_t tile = options.anchor_tile;
  const std::size_t blocks = (anchors.size() + tile - 1) / tile;

  // Small clouds and intrinsic metrics use the direct per-anchor path.
  const bool gram = metric.kind == MetricKind::euclidean && cloud.size() > 256;
  if (!gram) {
    parallel_for(blocks, options.workers, [&](std::size_t b) {
      const std::size_t lo = b * tile;
      const std::size_t hi = std::min(anchors.size(), lo + tile);
      for (std::size_t s = lo; s < hi; ++s) sink(s, brute_force(cloud, metric, anchors[s], k));
    });
    return;
  }

  const GramScanner scanner(cloud, k, options);
  parallel_for(blocks, options.workers, [&](std::size_t b) {
    const std::size_t lo = b * tile;
    const std::size_t hi = std::min(anchors.size(), lo + tile);
    scanner.scan(anchors.subspan(lo, hi - lo),
                 [&](std::size_t a, NeighborRadii&& r) { sink(lo + a, std::move(r)); });
  });
}

std::vector<NeighborRadii> sorted_radii_for(const PointCloud& cloud,
                                            const Metric& metric,
                                            std::span<const std::size_t> anchors,
                                            const RadiiOptions& options) {
  std::vector<NeighborRadii> out(anchors.size());
  for_each_sorted_radii(cloud, metric, anchors, options,
                        [&](std::size_t slot, NeighborRadii&& r) { out[slot] = std::move(r); });
  return out;
}

std::vector<NeighborRadii> all_sorted_radii(const PointCloud& cloud,
                                            const Metric& metric,
                                            const RadiiOptions& options) {
  std::vector<std::size_t> anchors(cloud.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = i;
  return sorted_radii_for(cloud, metric, anchors, options);
}

}  // namespace strata
