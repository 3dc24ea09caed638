#pragma once

#include <set>
#include <vector>

#include "schelix/types.hpp"

namespace schelix {

struct SelectorConfig {
    double tau_dom = 0.0;
    double tau_str = 0.0;
    int n_pcs = 30;
    int n_neighbors = 15;
    double leiden_resolution = 1.0;
    double epsilon = 1e-8;
    uint64_t leiden_seed = 0;

    void validate() const;
};

struct GeneScoreTable {
    std::vector<int> genes;  // gene indices the rows refer to
    Vec s_dom, s_str, z_dom, z_str;
    std::vector<int> pseudo_clusters;  // N cluster ids used for s_str
};

// Eq-style per-gene domain sensitivity: mean over domains of
// |mu_b - mu_all| / (sigma_all + eps), population std.
Vec domain_sensitivity(const ExpressionDataset& d, const std::vector<int>& genes, double eps);

// PCA -> symmetric kNN -> Leiden on the selected genes.
std::vector<int> pseudo_cluster(const ExpressionDataset& d, const std::vector<int>& genes,
                                const SelectorConfig& cfg);

// Size-weighted between-cluster variance over size-weighted mean
// within-cluster variance.
Vec structure_separability(const ExpressionDataset& d, const std::vector<int>& clusters,
                           const std::vector<int>& genes, double eps);

GeneScoreTable score_genes(const ExpressionDataset& d, const std::vector<int>& genes,
                           const SelectorConfig& cfg);

// Quadrant rule: anchors = { z_dom <= tau_dom and z_str >= tau_str }.
// The returned partition lists variants first in `selected`.
GenePartition quadrant_split(const GeneScoreTable& scores, const SelectorConfig& cfg);

// Symmetric difference of the anchor set under tau and tau+delta.
std::set<int> boundary_band_flips(const GeneScoreTable& scores, double tau_dom, double tau_str,
                                  double delta_dom, double delta_str);

// Uniformly random anchor set of the given size over the score table's
// genes (ablation S1), reordered variants-first like quadrant_split.
GenePartition random_split(const GeneScoreTable& scores, size_t n_anchors, uint64_t seed);

}  // namespace schelix
