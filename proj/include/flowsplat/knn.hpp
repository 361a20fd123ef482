#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "flowsplat/scene.hpp"

namespace flowsplat {

using NeighborLists = std::vector<std::vector<std::size_t>>;

// K nearest neighbors of every point by squared Euclidean distance, self
// excluded, ties broken by lower index. Lists are ordered nearest first.
// Throws ValidationError unless 0 < k < points.size().
NeighborLists knn(std::span<const Eigen::Vector3d> points, std::size_t k);
NeighborLists knn(const GaussianCloud& cloud, std::size_t k);

// Mean of |p_i - p_j| over all pairs (i, j in lists[i]).
double mean_neighbor_distance(std::span<const Eigen::Vector3d> points, const NeighborLists& lists);
double mean_neighbor_distance(const GaussianCloud& cloud, const NeighborLists& lists);

std::vector<Eigen::Vector3d> positions_of(const GaussianCloud& cloud);

}  // namespace flowsplat
