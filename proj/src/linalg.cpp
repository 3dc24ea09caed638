#include "schelix/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace schelix {

Mat pca_project(const Mat& x, int n_comps) {
    if (x.rows() < 2) throw std::invalid_argument("PCA needs at least 2 rows");
    n_comps = std::min<int>(n_comps, static_cast<int>(x.cols()));
    Mat centered = x.rowwise() - x.colwise().mean();
    Mat cov = (centered.transpose() * centered) / double(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("PCA eigensolver failed");
    // Eigenvalues ascend; take the trailing n_comps columns in descending order.
    Mat comps(x.cols(), n_comps);
    for (int c = 0; c < n_comps; ++c) {
        Vec v = es.eigenvectors().col(x.cols() - 1 - c);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        comps.col(c) = v;
    }
    return centered * comps;
}

Mat pairwise_sq_dists(const Mat& x) {
    Vec sq = x.rowwise().squaredNorm();
    Mat d = (-2.0 * (x * x.transpose())).colwise() + sq;
    d.rowwise() += sq.transpose();
    return d.cwiseMax(0.0);
}

std::vector<std::vector<int>> knn_indices(const Mat& x, int k) {
    const int n = static_cast<int>(x.rows());
    if (k >= n) throw std::invalid_argument("kNN requires k < N");
    Mat d = pairwise_sq_dists(x);
    std::vector<std::vector<int>> out(n);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
            return a < b;
        });
        out[i].reserve(k);
        for (int j : order) {
            if (j == i) continue;
            out[i].push_back(j);
            if (static_cast<int>(out[i].size()) == k) break;
        }
    }
    return out;
}

std::vector<std::vector<int>> symmetric_knn_graph(const Mat& x, int k) {
    auto nn = knn_indices(x, k);
    const int n = static_cast<int>(nn.size());
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j : nn[i]) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    for (auto& row : adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return adj;
}

KMeansResult kmeans(const Mat& x, int k, uint64_t seed, int max_iters) {
    const int n = static_cast<int>(x.rows());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: k out of range");
    Rng rng(seed);

    // k-means++ seeding
    Mat centers(k, x.cols());
    centers.row(0) = x.row(rng.uniform_int(0, n - 1));
    Vec best_d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = best_d2.sum();
        int pick = 0;
        if (total > 0) {
            double r = rng.uniform() * total, acc = 0;
            for (int i = 0; i < n; ++i) {
                acc += best_d2(i);
                if (acc >= r) { pick = i; break; }
            }
        } else {
            pick = rng.uniform_int(0, n - 1);
        }
        centers.row(c) = x.row(pick);
        best_d2 = best_d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(n, 0);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = (x.row(i) - centers.row(c)).squaredNorm();
                if (d < bd) { bd = d; best = c; }
            }
            if (assign[i] != best) { assign[i] = best; changed = true; }
        }
        Mat sums = Mat::Zero(k, x.cols());
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[i]) += x.row(i);
            counts[assign[i]]++;
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
        if (!changed && it > 0) break;
    }
    return {centers, assign};
}

Vec zscore(const Vec& v) {
    const double mean = v.mean();
    const double var = (v.array() - mean).square().mean();
    if (var <= 0.0) return Vec::Zero(v.size());
    return (v.array() - mean) / std::sqrt(var);
}

}  // namespace schelix
