#include "flowsplat/knn.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "flowsplat/error.hpp"

namespace flowsplat {

namespace {

// Static kd-tree over an index permutation; leaves hold up to kLeafSize points.
class KdTree {
 public:
  explicit KdTree(std::span<const Eigen::Vector3d> points) : points_(points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points.size() / kLeafSize + 2);
    build(0, order_.size());
  }

  // Keeps the k best (distance^2, index) pairs, sorted ascending.
  void query(std::size_t self, std::size_t k,
             std::vector<std::pair<double, std::size_t>>& best) const {
    best.clear();
    search(0, self, k, best);
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static bool better(const std::pair<double, std::size_t>& a,
                     const std::pair<double, std::size_t>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  }

  void offer(std::pair<double, std::size_t> cand, std::size_t k,
             std::vector<std::pair<double, std::size_t>>& best) const {
    if (best.size() == k && !better(cand, best.back())) return;
    auto pos = std::upper_bound(best.begin(), best.end(), cand, better);
    best.insert(pos, cand);
    if (best.size() > k) best.pop_back();
  }

  void search(std::size_t id, std::size_t self, std::size_t k,
              std::vector<std::pair<double, std::size_t>>& best) const {
    const Node& node = nodes_[id];
    const Eigen::Vector3d& q = points_[self];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t j = order_[i];
        if (j == self) continue;
        offer({(points_[j] - q).squaredNorm(), j}, k, best);
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    search(near, self, k, best);
    // Equal distances must still be visited for index tie-breaking.
    if (best.size() < k || diff * diff <= best.back().first) search(far, self, k, best);
  }

  std::span<const Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace

std::vector<Eigen::Vector3d> positions_of(const GaussianCloud& cloud) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(cloud.size());
  for (const auto& g : cloud.gaussians) out.push_back(g.position);
  return out;
}

NeighborLists knn(std::span<const Eigen::Vector3d> points, std::size_t k) {
  if (k == 0) throw ValidationError("knn: K must be positive");
  if (k >= points.size())
    throw ValidationError("knn: K=" + std::to_string(k) + " must be smaller than the cloud size " +
                          std::to_string(points.size()));
  KdTree tree(points);
  NeighborLists lists(points.size());
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    tree.query(i, k, best);
    lists[i].reserve(k);
    for (const auto& [d2, j] : best) lists[i].push_back(j);
  }
  return lists;
}

NeighborLists knn(const GaussianCloud& cloud, std::size_t k) {
  const auto points = positions_of(cloud);
  return knn(points, k);
}

double mean_neighbor_distance(std::span<const Eigen::Vector3d> points, const NeighborLists& lists) {
  if (lists.size() != points.size())
    throw ValidationError("mean_neighbor_distance: neighbor lists do not match the cloud");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (std::size_t j : lists[i]) {
      if (j >= points.size()) throw ValidationError("mean_neighbor_distance: neighbor index out of range");
      sum += (points[i] - points[j]).norm();
      ++count;
    }
  }
  if (count == 0) throw ValidationError("mean_neighbor_distance: empty neighbor lists");
  return sum / static_cast<double>(count);
}

double mean_neighbor_distance(const GaussianCloud& cloud, const NeighborLists& lists) {
  const auto points = positions_of(cloud);
  return mean_neighbor_distance(points, lists);
}

}  // namespace flowsplat
