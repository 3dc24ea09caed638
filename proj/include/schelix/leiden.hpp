#pragma once

#include <cstdint>
#include <vector>

#include "schelix/types.hpp"

namespace schelix {

// Community detection on an undirected graph by greedy modularity
// optimization with a resolution parameter, Leiden-style: local moving with
// seeded node order, connectivity-guarded communities, then aggregation
// until convergence. Returns contiguous community ids starting at 0.
std::vector<int> leiden_cluster(const std::vector<std::vector<int>>& adj, double resolution,
                                uint64_t seed);

// PCA -> symmetric kNN -> Leiden. Throws if N < n_neighbors + 1.
std::vector<int> pseudo_cluster_embedding(const Mat& x, int n_pcs, int n_neighbors,
                                          double resolution, uint64_t seed);

}  // namespace schelix
