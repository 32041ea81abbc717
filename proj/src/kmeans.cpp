#include "laq/kmeans.hpp"

#include <limits>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

// Index drawn with probability proportional to `mass`; -1 if all mass is 0.
int draw(Rng& rng, const std::vector<double>& mass) {
  double total = 0.0;
  for (double m : mass) total += m;
  if (total <= 0.0) return -1;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    acc += mass[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

KMeansResult run_once(const std::vector<double>& points, int dim, int k, std::uint64_t seed,
                      int max_iters, const std::vector<double>& w) {
  const auto n = w.size();
  const auto d = static_cast<std::size_t>(dim);
  auto point = [&](std::size_t i) { return points.data() + i * d; };

  KMeansResult res;
  res.centroids.assign(static_cast<std::size_t>(k) * d, 0.0);
  auto centroid = [&](int c) { return res.centroids.data() + static_cast<std::size_t>(c) * d; };
  auto set_centroid = [&](int c, const double* p) {
    for (std::size_t j = 0; j < d; ++j) centroid(c)[j] = p[j];
  };

  Rng rng(seed);
  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  int first = draw(rng, w);
  if (first < 0) first = 0;
  set_centroid(0, point(static_cast<std::size_t>(first)));
  for (int c = 1; c < k; ++c) {
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i) {
      best_d2[i] = std::min(best_d2[i], sq_dist(point(i), centroid(c - 1), dim));
      mass[i] = w[i] * best_d2[i];
    }
    int pick = draw(rng, mass);
    if (pick < 0) pick = static_cast<int>(uniform01(rng) * static_cast<double>(n));
    set_centroid(c, point(static_cast<std::size_t>(pick)));
  }

  res.assignments.assign(n, -1);
  std::vector<double> dist(n, 0.0);
  for (int iter = 1; iter <= max_iters; ++iter) {
    res.iterations = iter;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_v = sq_dist(point(i), centroid(0), dim);
      for (int c = 1; c < k; ++c) {
        const double v = sq_dist(point(i), centroid(c), dim);
        if (v < best_v) {
          best = c;
          best_v = v;
        }
      }
      dist[i] = best_v;
      if (res.assignments[i] != best) {
        res.assignments[i] = best;
        changed = true;
      }
    }

    std::vector<double> sums(static_cast<std::size_t>(k) * d, 0.0);
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignments[i]);
      mass[c] += w[i];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += w[i] * point(i)[j];
    }
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      if (mass[cc] > 0.0) {
        for (std::size_t j = 0; j < d; ++j) centroid(c)[j] = sums[cc * d + j] / mass[cc];
        continue;
      }
      // Empty cluster: take over the worst-fit point.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      if (dist[far] <= 0.0) continue;
      set_centroid(c, point(far));
      dist[far] = 0.0;
      res.assignments[far] = c;
      ++res.reseeds;
      changed = true;
    }
    if (!changed) break;
  }

  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.inertia += w[i] * sq_dist(point(i), centroid(res.assignments[i]), dim);
  }
  return res;
}

}  // namespace

KMeansResult kmeans(const std::vector<double>& points, int dim, int k, std::uint64_t seed,
                    const KMeansOptions& opts, const std::vector<double>* weights) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (dim < 1 || points.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("points do not form rows of the given dimension");
  }
  const std::size_t n = points.size() / static_cast<std::size_t>(dim);
  if (n == 0) throw std::invalid_argument("kmeans needs at least one point");
  std::vector<double> w = weights ? *weights : std::vector<double>(n, 1.0);
  if (w.size() != n) throw std::invalid_argument("weights do not match the number of points");

  KMeansResult best;
  bool have = false;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    const std::uint64_t s = r == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(r));
    KMeansResult res = run_once(points, dim, k, s, opts.max_iters, w);
    if (!have || res.inertia < best.inertia) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

}  // namespace laq
