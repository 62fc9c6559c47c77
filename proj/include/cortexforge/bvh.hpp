#pragma once

#include <cortexforge/common.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace cortexforge {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  /// Closed-box overlap (touching boxes overlap).
  bool overlaps(const Aabb& b) const {
    return lo.x() <= b.hi.x() && b.lo.x() <= hi.x() && lo.y() <= b.hi.y() && b.lo.y() <= hi.y() &&
           lo.z() <= b.hi.z() && b.lo.z() <= hi.z();
  }
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
  Vec3 centre() const { return 0.5 * (lo + hi); }
};

/// Bounding-volume hierarchy over a fixed set of boxes (median split along
/// the widest centroid axis). Queries report the caller's box indices.
class Bvh {
 public:
  static constexpr int kLeafSize = 4;

  Bvh() = default;
  explicit Bvh(std::vector<Aabb> boxes) : boxes_(std::move(boxes)) {
    order_.resize(boxes_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!boxes_.empty()) {
      nodes_.reserve(2 * boxes_.size() / kLeafSize + 2);
      build(0, static_cast<int>(boxes_.size()));
    }
  }

  bool empty() const { return boxes_.empty(); }
  const Aabb& box(int i) const { return boxes_[i]; }

  /// Calls visit(i, j) with i < j for every pair of overlapping boxes.
  template <typename Visit>
  void overlapping_pairs(Visit&& visit) const {
    if (nodes_.empty()) return;
    self_pairs(0, visit);
  }

  /// Index minimizing leaf_distance(i) (a squared distance), pruned by box
  /// distance; ties go to the smaller index. Returns {-1, inf} when empty.
  template <typename LeafDistance>
  std::pair<int, double> nearest(const Vec3& p, LeafDistance&& leaf_distance,
                                 double max_squared = std::numeric_limits<double>::infinity()) const {
    std::pair<int, double> best{-1, max_squared};
    if (nodes_.empty()) return best;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (n.box.squared_distance(p) > best.second) continue;
      if (n.count > 0) {
        for (int k = n.begin; k < n.begin + n.count; ++k) {
          const int i = order_[k];
          const double d = leaf_distance(i);
          if (d < best.second || (d == best.second && (best.first < 0 || i < best.first))) {
            best = {i, d};
          }
        }
        continue;
      }
      const double dl = nodes_[n.left].box.squared_distance(p);
      const double dr = nodes_[n.right].box.squared_distance(p);
      // Visit the nearer child first (pushed last).
      if (dl <= dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return best;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;
    int begin = 0, count = 0;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb box, centres;
    for (int k = begin; k < end; ++k) {
      box.expand(boxes_[order_[k]]);
      centres.expand(boxes_[order_[k]].centre());
    }
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].count = end - begin;
      return id;
    }
    int axis = 0;
    const Vec3 extent = centres.hi - centres.lo;
    if (extent.y() > extent[axis]) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
      const double ca = boxes_[a].centre()[axis], cb = boxes_[b].centre()[axis];
      return ca < cb || (ca == cb && a < b);
    });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  template <typename Visit>
  void leaf_pairs(const Node& a, const Node& b, Visit& visit) const {
    for (int x = a.begin; x < a.begin + a.count; ++x) {
      for (int y = b.begin; y < b.begin + b.count; ++y) {
        const int i = order_[x], j = order_[y];
        if (boxes_[i].overlaps(boxes_[j])) visit(std::min(i, j), std::max(i, j));
      }
    }
  }

  template <typename Visit>
  void self_pairs(int id, Visit& visit) const {
    const Node& n = nodes_[id];
    if (n.count > 0) {
      for (int x = n.begin; x < n.begin + n.count; ++x) {
        for (int y = x + 1; y < n.begin + n.count; ++y) {
          const int i = order_[x], j = order_[y];
          if (boxes_[i].overlaps(boxes_[j])) visit(std::min(i, j), std::max(i, j));
        }
      }
      return;
    }
    self_pairs(n.left, visit);
    self_pairs(n.right, visit);
    cross_pairs(n.left, n.right, visit);
  }

  template <typename Visit>
  void cross_pairs(int a, int b, Visit& visit) const {
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    if (!na.box.overlaps(nb.box)) return;
    if (na.count > 0 && nb.count > 0) {
      leaf_pairs(na, nb, visit);
    } else if (na.count > 0) {
      cross_pairs(a, nb.left, visit);
      cross_pairs(a, nb.right, visit);
    } else {
      cross_pairs(na.left, b, visit);
      cross_pairs(na.right, b, visit);
    }
  }

  std::vector<Aabb> boxes_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace cortexforge
