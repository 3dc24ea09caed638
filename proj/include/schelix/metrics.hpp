#pragma once

#include <string>
#include <vector>

#include "schelix/types.hpp"

namespace schelix {

struct EvalConfig {
    int pca_cap = 64;
    int knn_k = 15;
    std::vector<double> leiden_resolutions;  // defaults to 0.1..2.0 step 0.1
    int oc_k = 15;
    double oc_perturb_fraction = 0.3;
    double oc_shift = 2.0;
    uint64_t seed = 0;

    EvalConfig();
    void validate() const;
};

// Project down to `cap` dims when wider; narrower embeddings pass through.
EmbeddingMatrix cap_embedding(const EmbeddingMatrix& e, int cap);

double ari(const std::vector<int>& u, const std::vector<int>& v);
double nmi(const std::vector<int>& u, const std::vector<int>& v);

std::vector<int> labels_to_ints(const std::vector<std::string>& labels);

struct SweepResult {
    double ari_best = 0, nmi_best = 0;
    double best_resolution = 0;  // argmax of ARI
};

// Leiden over the resolution grid on a symmetric kNN graph of the capped
// embedding; ARI and NMI maximized independently.
SweepResult cluster_sweep(const EmbeddingMatrix& e, const std::vector<int>& truth,
                          const EvalConfig& cfg);

double asw_celltype(const EmbeddingMatrix& e, const std::vector<int>& types);
double asw_batch(const EmbeddingMatrix& e, const std::vector<int>& types,
                 const std::vector<int>& domains);
double graph_connectivity(const EmbeddingMatrix& e, const std::vector<int>& types, int k);

// Mean silhouette values, exposed for oracle comparison.
Vec silhouette_values(const Mat& x, const std::vector<int>& labels);

struct MetricParts {
    double ari_best = 0, nmi_best = 0;
    double asw_ct = 0, asw_batch = 0, gc = 0;
    double best_resolution = 0;
};

MetricsReport aggregate(const MetricParts& parts);

// Fraction of each evaluated cell's k nearest neighbors carrying a different
// label, averaged over eval_set.
double oc_score(const EmbeddingMatrix& e, const std::vector<int>& labels,
                const std::vector<int>& eval_set, int k);

double oc_normalized(double method_oc, double raw_oc);

struct PerturbationResult {
    ExpressionDataset perturbed;
    std::vector<int> pseudo_labels;  // 1 on shifted cells
    std::vector<int> focus_cells;    // all cells of the focus type
};

PerturbationResult oc_perturbation_setup(const ExpressionDataset& d,
                                         const std::string& focus_type,
                                         const std::vector<int>& variant_genes,
                                         double fraction, double shift, uint64_t seed);

// Full scoreboard for one embedding against cell-type and domain labels.
MetricsReport evaluate_embedding(const EmbeddingMatrix& e, const std::vector<std::string>& types,
                                 const std::vector<std::string>& domains, const EvalConfig& cfg);

}  // namespace schelix
