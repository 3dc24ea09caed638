#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace schelix {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Layer { raw_counts, lognorm };

// Cells x genes expression matrix with per-cell domain labels and optional
// cell-type labels (evaluation only). Immutable after construction.
struct ExpressionDataset {
    Mat values;                               // N x G, non-negative
    std::vector<std::string> gene_ids;        // G, unique
    std::vector<std::string> cell_ids;        // N, unique
    std::vector<std::string> domains;         // N
    std::vector<std::string> cell_types;      // N or empty
    Layer layer = Layer::raw_counts;

    Eigen::Index n_cells() const { return values.rows(); }
    Eigen::Index n_genes() const { return values.cols(); }
    bool has_cell_types() const { return !cell_types.empty(); }
    int n_domains() const;

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

// Per-gene score quadruple plus the Anchor/Variant split over the selected
// gene pool. Indices refer to columns of the dataset the scores were
// computed on. `selected` is ordered with variants first, then anchors, so
// downstream stream splits are index arithmetic on the reordered matrix.
struct GenePartition {
    std::vector<int> selected;   // ordered: variants first, then anchors
    std::vector<int> anchors;    // subset of selected
    std::vector<int> variants;   // subset of selected
    Vec s_dom, s_str, z_dom, z_str;  // aligned with score-table gene order
    std::vector<int> score_genes;    // gene index per score row
    double tau_dom = 0.0, tau_str = 0.0;

    void validate() const;
};

enum class EmbeddingSource { variant_stream, anchor_stream, refined_anchor, fused, external };

struct EmbeddingMatrix {
    Mat values;  // N x d, all finite
    EmbeddingSource source = EmbeddingSource::external;

    Eigen::Index n_cells() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }
    void validate() const;
};

// scIB-style score set. overall and bio_mean are derived identities.
struct MetricsReport {
    double ari_best = 0, nmi_best = 0;
    double asw_ct = 0, asw_batch = 0, gc = 0;
    double bio_mean = 0, overall = 0;
    double oc_hd_all = 0, oc_hd_focus = 0, oc_norm = 0;
    double leiden_resolution_at_best = 0;

    void recompute_aggregates();
    void validate() const;
};

std::string to_string(EmbeddingSource s);
EmbeddingSource embedding_source_from_string(const std::string& s);

}  // namespace schelix
