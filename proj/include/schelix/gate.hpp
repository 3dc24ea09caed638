#pragma once

#include <vector>

#include "schelix/partition.hpp"
#include "schelix/types.hpp"

namespace schelix {

struct GateConfig {
    bool enabled = true;
    double low_res = 0.5;
    double high_res = 2.0;
    double strength = 1.0;  // lambda in [0,1]
    double w_low = 0.5, w_high = 0.5;
    int min_cells = 20;
    double w_mu = 1.0, w_sigma = 0.5, w_v = 0.5;
    double epsilon = 1e-8;
    int n_pcs = 30;
    int n_neighbors = 15;
    uint64_t seed = 0;

    void validate() const;
};

struct GateTensor {
    Mat gamma;  // N x G_var, entries in [0,1]
};

// Composite local domain sensitivity per (cluster, variant gene):
// w_mu * Dmu + w_sigma * Dsigma + w_v * DVar, where Dmu/Dsigma are the mean
// absolute deviations of per-domain means/stds from the cluster statistic
// (normalized by cluster std + eps) and DVar is the per-domain variance
// range over cluster variance + eps. Ineligible clusters (fewer than
// min_cells cells or a single domain) yield all-zero rows.
Mat local_domain_score(const ExpressionDataset& d, const std::vector<int>& clusters,
                       const std::vector<int>& variants, const GateConfig& cfg);

// Two Leiden layers at low_res/high_res, per-cluster rectified+normalized
// scores, clamped mixture per cell. Clustering runs on the anchor genes so
// the clusters reflect cell states rather than the domain split the gate is
// trying to measure; with no anchors it falls back to the full matrix.
GateTensor build_gate(const ExpressionDataset& d, const std::vector<int>& variants,
                      const std::vector<int>& anchors, const GateConfig& cfg);

// x over the reordered selected pool (variants first); anchors pass
// through bit-identical.
Vec apply_gate(const Vec& x, const Vec& gamma_row, Eigen::Index n_variants, double lambda);

}  // namespace schelix
