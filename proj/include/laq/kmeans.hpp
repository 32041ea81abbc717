#pragma once

#include <cstdint>
#include <vector>

namespace laq {

struct KMeansOptions {
  int max_iters = 300;
  int restarts = 1;  // best inertia wins; restart r uses a seed derived from (seed, r)
};

struct KMeansResult {
  std::vector<int> assignments;
  std::vector<double> centroids;  // k * dim, row-major
  double inertia = 0.0;
  int iterations = 0;
  int reseeds = 0;
};

/// Lloyd's algorithm from k-means++ seeding. `points` is n * dim row-major;
/// optional `weights` (one per point) act as multiplicities. Ties in the
/// assignment step go to the lowest centroid index; a cluster that becomes
/// empty is moved onto the point farthest from its current centroid.
KMeansResult kmeans(const std::vector<double>& points, int dim, int k, std::uint64_t seed,
                    const KMeansOptions& opts = {}, const std::vector<double>* weights = nullptr);

}  // namespace laq
