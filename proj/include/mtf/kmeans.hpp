#pragma once

#include <cstdint>

#include "mtf/labels.hpp"
#include "mtf/linalg.hpp"

namespace mtf {

struct KMeansResult {
  Labels labels;
  DenseMatrix centroids;  // c x dim
  double inertia = 0.0;   // sum of squared distances to assigned centroids
  std::size_t iterations = 0;
  std::vector<double> inertia_trace;  // after each Lloyd iteration
};

/// Seeded k-means++ followed by Lloyd iterations on squared Euclidean
/// distance. Stops when no label changes or after `max_iters` iterations.
/// A cluster that empties is re-seeded with the point farthest from its
/// current centroid. With `restarts` > 1 the whole procedure runs that many
/// times from consecutive RNG draws and the lowest-inertia run is kept.
/// Throws ContractViolation when there are fewer points than clusters.
KMeansResult kmeans(const DenseMatrix& points, std::size_t c, std::uint64_t seed,
                    std::size_t max_iters = 100, std::size_t restarts = 10);

/// One-hot n x c indicator.
DenseMatrix labels_to_indicator(const Labels& labels, std::size_t c);

}  // namespace mtf
