#include "mtf/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "mtf/parallel.hpp"

namespace mtf {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

DenseMatrix plus_plus_seeding(const DenseMatrix& points, std::size_t c, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  DenseMatrix centroids(c, points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::size_t first = pick(rng);
  std::copy_n(points.row(first).begin(), points.cols(), centroids.row(0).begin());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points.row(i), centroids.row(0));

  for (std::size_t k = 1; k < c; ++k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    std::copy_n(points.row(chosen).begin(), points.cols(), centroids.row(k).begin());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], squared_distance(points.row(i), centroids.row(k)));
  }
  return centroids;
}

KMeansResult single_run(const DenseMatrix& points, std::size_t c, std::mt19937_64& rng,
                        std::size_t max_iters) {
  const std::size_t n = points.rows();
  KMeansResult result;
  result.centroids = plus_plus_seeding(points, c, rng);
  result.labels.assign(n, 0);

  std::vector<double> dist(n, 0.0);
  Labels previous;
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iters, 1); ++it) {
#pragma omp parallel for schedule(static) num_threads(parallel::thread_count())
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < c; ++k) {
        const double d = squared_distance(points.row(i), result.centroids.row(k));
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      result.labels[i] = best_k;
      dist[i] = best;
    }
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    result.inertia = inertia;
    result.inertia_trace.push_back(inertia);
    result.iterations = it + 1;
    if (result.labels == previous) break;
    previous = result.labels;

    // Centroid step.
    DenseMatrix sums(c, points.cols());
    std::vector<std::size_t> members(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sums.row(result.labels[i]);
      const auto src = points.row(i);
      for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
      members[result.labels[i]]++;
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (members[k] == 0) continue;
      auto dst = result.centroids.row(k);
      const auto src = sums.row(k);
      for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = src[d] / static_cast<double>(members[k]);
    }
    // Empty clusters take the point farthest from its centroid. With every
    // point sitting on its centroid there is nothing to gain, so they stay.
    for (std::size_t k = 0; k < c; ++k) {
      if (members[k] != 0) continue;
      const auto far = std::max_element(dist.begin(), dist.end());
      if (*far <= 0.0) break;
      const auto i = static_cast<std::size_t>(far - dist.begin());
      std::copy_n(points.row(i).begin(), points.cols(), result.centroids.row(k).begin());
      *far = 0.0;
    }
  }
  return result;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, std::size_t c, std::uint64_t seed,
                    std::size_t max_iters, std::size_t restarts) {
  require(c >= 1, "kmeans: need at least one cluster");
  require(points.rows() >= c, "kmeans: " + std::to_string(points.rows()) + " points for " +
                                  std::to_string(c) + " clusters");
  std::mt19937_64 rng(seed);
  KMeansResult best = single_run(points, c, rng, max_iters);
  for (std::size_t r = 1; r < restarts; ++r) {
    KMeansResult candidate = single_run(points, c, rng, max_iters);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

DenseMatrix labels_to_indicator(const Labels& labels, std::size_t c) {
  DenseMatrix out(labels.size(), c);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < c, "labels_to_indicator: label " + std::to_string(labels[i]) +
                               " out of range for " + std::to_string(c) + " clusters");
    out(i, labels[i]) = 1.0;
  }
  return out;
}

}  // namespace mtf
