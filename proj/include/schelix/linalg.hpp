#pragma once

#include <vector>

#include "schelix/rng.hpp"
#include "schelix/types.hpp"

namespace schelix {

// PCA projection to n_comps dimensions. Deterministic sign convention: in
// each component the loading with the largest magnitude is made positive.
Mat pca_project(const Mat& x, int n_comps);

// All pairwise squared Euclidean distances (N x N).
Mat pairwise_sq_dists(const Mat& x);

// Row-wise k nearest neighbors by Euclidean distance, self excluded, ties
// broken by index. Returns N x k index matrix.
std::vector<std::vector<int>> knn_indices(const Mat& x, int k);

// Symmetric (union) unweighted kNN adjacency list.
std::vector<std::vector<int>> symmetric_knn_graph(const Mat& x, int k);

// Lloyd k-means with k-means++ seeding; deterministic under seed.
struct KMeansResult {
    Mat centers;                 // k x d
    std::vector<int> assignment; // N
};
KMeansResult kmeans(const Mat& x, int k, uint64_t seed, int max_iters = 100);

// z-score with population std; all-equal input maps to all-zero.
Vec zscore(const Vec& v);

}  // namespace schelix
