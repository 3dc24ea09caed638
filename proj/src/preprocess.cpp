#include "schelix/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "schelix/rng.hpp"

namespace schelix {

void PreprocessConfig::validate() const {
    if (min_genes_per_cell <= 0 || min_cells_per_gene <= 0 || max_mito_pct <= 0 ||
        target_sum <= 0 || n_hvgs <= 0 || mixup_k <= 0)
        throw std::invalid_argument("preprocess thresholds must be positive");
}

void SyntheticSpec::validate() const {
    if (n_variant_genes > n_genes)
        throw std::invalid_argument("n_variant_genes exceeds n_genes");
    if (n_types < 2 || n_domains < 2)
        throw std::invalid_argument("synthetic spec needs >= 2 types and >= 2 domains");
    if (n_cells <= 0 || n_genes <= 0) throw std::invalid_argument("empty synthetic spec");
}

namespace {

ExpressionDataset subset(const ExpressionDataset& d, const std::vector<int>& cells,
                         const std::vector<int>& genes) {
    ExpressionDataset out;
    out.layer = d.layer;
    out.values.resize(cells.size(), genes.size());
    for (size_t i = 0; i < cells.size(); ++i)
        for (size_t j = 0; j < genes.size(); ++j) out.values(i, j) = d.values(cells[i], genes[j]);
    for (int c : cells) {
        out.cell_ids.push_back(d.cell_ids[c]);
        out.domains.push_back(d.domains[c]);
        if (d.has_cell_types()) out.cell_types.push_back(d.cell_types[c]);
    }
    for (int g : genes) out.gene_ids.push_back(d.gene_ids[g]);
    return out;
}

}  // namespace

ExpressionDataset qc_filter(const ExpressionDataset& d, const PreprocessConfig& cfg) {
    cfg.validate();
    if (d.layer != Layer::raw_counts)
        throw std::invalid_argument("qc_filter requires raw counts");

    // Cells by detected genes.
    std::vector<int> keep_cells;
    for (Eigen::Index i = 0; i < d.n_cells(); ++i) {
        int detected = static_cast<int>((d.values.row(i).array() > 0).count());
        if (detected >= cfg.min_genes_per_cell) keep_cells.push_back(static_cast<int>(i));
    }

    // Genes by expressing cells (among kept cells).
    std::vector<int> keep_genes;
    for (Eigen::Index j = 0; j < d.n_genes(); ++j) {
        int cells = 0;
        for (int i : keep_cells)
            if (d.values(i, j) > 0) ++cells;
        if (cells >= cfg.min_cells_per_gene) keep_genes.push_back(static_cast<int>(j));
    }

    ExpressionDataset mid = subset(d, keep_cells, keep_genes);

    // Cells by mitochondrial fraction.
    std::vector<int> mito;
    for (size_t j = 0; j < mid.gene_ids.size(); ++j)
        if (mid.gene_ids[j].rfind(cfg.mito_prefix, 0) == 0) mito.push_back(static_cast<int>(j));
    if (mito.empty()) {
        if (mid.n_cells() == 0) throw std::runtime_error("qc_filter removed every cell");
        return mid;
    }
    std::vector<int> keep2;
    for (Eigen::Index i = 0; i < mid.n_cells(); ++i) {
        double total = mid.values.row(i).sum();
        double m = 0;
        for (int j : mito) m += mid.values(i, j);
        double pct = total > 0 ? 100.0 * m / total : 0.0;
        if (pct <= cfg.max_mito_pct) keep2.push_back(static_cast<int>(i));
    }
    std::vector<int> all_genes(mid.n_genes());
    std::iota(all_genes.begin(), all_genes.end(), 0);
    ExpressionDataset out = subset(mid, keep2, all_genes);
    if (out.n_cells() == 0) throw std::runtime_error("qc_filter removed every cell");
    return out;
}

ExpressionDataset normalize_log1p(const ExpressionDataset& d, double target_sum) {
    if (d.layer != Layer::raw_counts)
        throw std::invalid_argument("normalize_log1p requires raw counts");
    ExpressionDataset out = d;
    for (Eigen::Index i = 0; i < d.n_cells(); ++i) {
        double total = d.values.row(i).sum();
        if (total <= 0)
            throw std::runtime_error("cell '" + d.cell_ids[i] + "' has zero total counts");
        out.values.row(i) = (d.values.row(i) * (target_sum / total)).array().log1p();
    }
    out.layer = Layer::lognorm;
    return out;
}

std::vector<int> select_hvgs(const ExpressionDataset& d, int n) {
    if (d.layer != Layer::lognorm)
        throw std::invalid_argument("select_hvgs requires lognorm layer");
    if (d.n_domains() < 2) throw std::invalid_argument("select_hvgs requires >= 2 domains");
    const int g = static_cast<int>(d.n_genes());
    if (n > g) throw std::invalid_argument("select_hvgs: n exceeds gene count");

    std::vector<std::string> dom_names;
    std::vector<std::vector<int>> dom_cells;
    for (Eigen::Index i = 0; i < d.n_cells(); ++i) {
        auto it = std::find(dom_names.begin(), dom_names.end(), d.domains[i]);
        size_t idx = it - dom_names.begin();
        if (it == dom_names.end()) {
            dom_names.push_back(d.domains[i]);
            dom_cells.emplace_back();
        }
        dom_cells[idx].push_back(static_cast<int>(i));
    }

    Vec mean_rank = Vec::Zero(g);
    for (const auto& cells : dom_cells) {
        Vec disp(g);
        for (int j = 0; j < g; ++j) {
            double mu = 0, m2 = 0;
            for (int i : cells) mu += d.values(i, j);
            mu /= cells.size();
            for (int i : cells) m2 += (d.values(i, j) - mu) * (d.values(i, j) - mu);
            double var = m2 / cells.size();
            disp(j) = mu > 0 ? var / mu : 0.0;
        }
        std::vector<int> order(g);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (disp(a) != disp(b)) return disp(a) < disp(b);
            return a > b;  // lower index gets the higher rank on ties
        });
        for (int r = 0; r < g; ++r) mean_rank(order[r]) += double(r);
    }
    mean_rank /= double(dom_cells.size());

    std::vector<int> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (mean_rank(a) != mean_rank(b)) return mean_rank(a) > mean_rank(b);
        return a < b;
    });
    order.resize(n);
    return order;
}

Vec mixup(const Vec& xi, const Vec& xj, double alpha) {
    if (xi.size() != xj.size()) throw std::invalid_argument("mixup: length mismatch");
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("mixup: alpha outside [0,1]");
    return alpha * xi + (1 - alpha) * xj;
}

std::pair<ExpressionDataset, SyntheticGroundTruth> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const int N = spec.n_cells, G = spec.n_genes, T = spec.n_types, B = spec.n_domains;

    // Per-type Gaussian centers in lognorm space.
    Vec baseline(G);
    for (int j = 0; j < G; ++j) baseline(j) = 1.0 + rng.uniform();
    Mat centers(T, G);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < G; ++j) centers(t, j) = baseline(j) + rng.normal();

    // Planted variant genes: seeded random subset.
    std::vector<int> genes(G);
    std::iota(genes.begin(), genes.end(), 0);
    rng.shuffle(genes);
    std::vector<int> planted(genes.begin(), genes.begin() + spec.n_variant_genes);
    std::sort(planted.begin(), planted.end());

    // Balanced-sign additive batch offsets, planted genes only.
    Mat offsets = Mat::Zero(B, G);
    for (int j : planted) {
        std::vector<double> signs(B);
        for (int b = 0; b < B; ++b) signs[b] = (b % 2 == 0) ? 1.0 : -1.0;
        rng.shuffle(signs);
        for (int b = 0; b < B; ++b) offsets(b, j) = spec.batch_shift_scale * signs[b];
    }

    ExpressionDataset d;
    d.layer = Layer::lognorm;
    d.values.resize(N, G);
    SyntheticGroundTruth gt;
    gt.planted_variants = planted;
    gt.type_centers = centers;
    for (int i = 0; i < N; ++i) {
        int t = rng.uniform_int(0, T - 1);
        int b = rng.uniform_int(0, B - 1);
        d.cell_ids.push_back("cell" + std::to_string(i));
        d.domains.push_back("batch" + std::to_string(b));
        std::string type = "type" + std::to_string(t);
        d.cell_types.push_back(type);
        gt.type_labels.push_back(type);
        for (int j = 0; j < G; ++j) {
            double v = centers(t, j) + offsets(b, j) + spec.noise_scale * rng.normal();
            d.values(i, j) = std::max(0.0, v);
        }
    }
    for (int j = 0; j < G; ++j) d.gene_ids.push_back("g" + std::to_string(j));
    d.validate();
    return {std::move(d), std::move(gt)};
}

}  // namespace schelix
