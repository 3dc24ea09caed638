#pragma once

#include <string>
#include <utility>
#include <vector>

#include "schelix/types.hpp"

namespace schelix {

struct PreprocessConfig {
    int min_genes_per_cell = 200;
    int min_cells_per_gene = 3;
    double max_mito_pct = 5.0;
    double target_sum = 10000.0;
    int n_hvgs = 2000;
    int mixup_k = 300;
    std::string mito_prefix = "MT-";

    void validate() const;
};

struct SyntheticSpec {
    int n_cells = 600;
    int n_genes = 200;
    int n_types = 3;
    int n_domains = 2;
    int n_variant_genes = 50;
    double batch_shift_scale = 2.0;
    double noise_scale = 0.3;
    uint64_t seed = 0;

    void validate() const;
};

struct SyntheticGroundTruth {
    std::vector<std::string> type_labels;   // N
    std::vector<int> planted_variants;      // gene indices with batch shifts
    Mat type_centers;                       // n_types x n_genes, lognorm space
};

// QC order: cells by detected genes, genes by expressing cells, cells by
// mitochondrial fraction. Mito genes are matched by id prefix; datasets
// without such ids skip that filter.
ExpressionDataset qc_filter(const ExpressionDataset& d, const PreprocessConfig& cfg);

// Rescale each cell to target_sum total counts, then log1p.
ExpressionDataset normalize_log1p(const ExpressionDataset& d, double target_sum);

// Top-n genes by mean within-domain rank of normalized dispersion
// (variance/mean), averaged across domains; ties break toward lower index.
std::vector<int> select_hvgs(const ExpressionDataset& d, int n);

Vec mixup(const Vec& xi, const Vec& xj, double alpha);

std::pair<ExpressionDataset, SyntheticGroundTruth> generate_synthetic(const SyntheticSpec& spec);

}  // namespace schelix
