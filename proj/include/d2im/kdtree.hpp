#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace d2im {

/// Exact nearest-neighbor queries over a static point set. Ties in distance
/// are broken by the lower point index, so results match a brute-force scan.
template <int D>
class KdTree {
 public:
  using Point = Eigen::Matrix<double, D, 1>;
  struct Neighbor {
    double distance_squared;
    std::size_t index;
    bool operator<(const Neighbor& o) const {
      return distance_squared < o.distance_squared ||
             (distance_squared == o.distance_squared && index < o.index);
    }
  };

  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }

  Neighbor nearest(const Point& q) const {
    Neighbor best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    if (!points_.empty()) {
      nearest_rec(0, points_.size(), q, best);
    }
    return best;
  }

  /// k nearest points sorted by (distance, index); `exclude` is skipped.
  std::vector<Neighbor> knn(const Point& q, std::size_t k,
                            std::size_t exclude = std::numeric_limits<std::size_t>::max()) const {
    std::vector<Neighbor> heap; // max-heap on operator<
    heap.reserve(k + 1);
    if (k > 0 && !points_.empty()) {
      knn_rec(0, points_.size(), q, k, exclude, heap);
    }
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  struct Split {
    int axis;
    double value;
  };

  // Implicit tree: range [lo, hi) splits at mid = (lo + hi) / 2 on splits_[mid].
  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeaf) {
      return;
    }
    Point mn = points_[order_[lo]];
    Point mx = mn;
    for (std::size_t i = lo; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis] ||
                              (points_[a][axis] == points_[b][axis] && a < b);
                     });
    if (splits_.size() < points_.size()) {
      splits_.resize(points_.size());
    }
    splits_[mid] = {axis, points_[order_[mid]][axis]};
    build(lo, mid);
    build(mid, hi);
  }

  void nearest_rec(std::size_t lo, std::size_t hi, const Point& q, Neighbor& best) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        const Neighbor cand{(points_[order_[i]] - q).squaredNorm(), order_[i]};
        if (cand < best) {
          best = cand;
        }
      }
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    const Split s = splits_[mid];
    const double diff = q[s.axis] - s.value;
    if (diff < 0.0) {
      nearest_rec(lo, mid, q, best);
      if (diff * diff <= best.distance_squared) nearest_rec(mid, hi, q, best);
    } else {
      nearest_rec(mid, hi, q, best);
      if (diff * diff <= best.distance_squared) nearest_rec(lo, mid, q, best);
    }
  }

  void knn_rec(std::size_t lo, std::size_t hi, const Point& q, std::size_t k, std::size_t exclude,
               std::vector<Neighbor>& heap) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        if (order_[i] == exclude) {
          continue;
        }
        const Neighbor cand{(points_[order_[i]] - q).squaredNorm(), order_[i]};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    const Split s = splits_[mid];
    const double diff = q[s.axis] - s.value;
    auto bound = [&] {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.front().distance_squared;
    };
    if (diff < 0.0) {
      knn_rec(lo, mid, q, k, exclude, heap);
      if (diff * diff <= bound()) knn_rec(mid, hi, q, k, exclude, heap);
    } else {
      knn_rec(mid, hi, q, k, exclude, heap);
      if (diff * diff <= bound()) knn_rec(lo, mid, q, k, exclude, heap);
    }
  }

  std::vector<Point> points_;
  std::vector<std::size_t> order_;
  std::vector<Split> splits_;
};

} // namespace d2im
