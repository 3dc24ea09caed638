#include "schelix/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "schelix/leiden.hpp"
#include "schelix/linalg.hpp"
#include "schelix/rng.hpp"

namespace schelix {

void SelectorConfig::validate() const {
    if (n_pcs < 1 || n_neighbors < 1)
        throw std::invalid_argument("selector needs n_pcs >= 1 and n_neighbors >= 1");
}

Vec domain_sensitivity(const ExpressionDataset& d, const std::vector<int>& genes, double eps) {
    if (d.layer != Layer::lognorm)
        throw std::invalid_argument("domain_sensitivity requires lognorm layer");
    std::map<std::string, std::vector<int>> doms;
    for (Eigen::Index i = 0; i < d.n_cells(); ++i)
        doms[d.domains[i]].push_back(static_cast<int>(i));
    if (doms.size() < 2) throw std::invalid_argument("domain_sensitivity requires >= 2 domains");
    for (auto& [name, cells] : doms)
        if (cells.empty()) throw std::invalid_argument("empty domain: " + name);

    Vec out(genes.size());
    for (size_t k = 0; k < genes.size(); ++k) {
        const int g = genes[k];
        double mu_all = d.values.col(g).mean();
        double var_all = (d.values.col(g).array() - mu_all).square().mean();
        double sd_all = std::sqrt(var_all);
        double acc = 0;
        for (auto& [name, cells] : doms) {
            double mu_b = 0;
            for (int i : cells) mu_b += d.values(i, g);
            mu_b /= cells.size();
            acc += std::abs(mu_b - mu_all) / (sd_all + eps);
        }
        out(k) = acc / doms.size();
    }
    return out;
}

std::vector<int> pseudo_cluster(const ExpressionDataset& d, const std::vector<int>& genes,
                                const SelectorConfig& cfg) {
    cfg.validate();
    if (d.layer != Layer::lognorm)
        throw std::invalid_argument("pseudo_cluster requires lognorm layer");
    Mat x(d.n_cells(), genes.size());
    for (size_t j = 0; j < genes.size(); ++j) x.col(j) = d.values.col(genes[j]);
    return pseudo_cluster_embedding(x, cfg.n_pcs, cfg.n_neighbors, cfg.leiden_resolution,
                                    cfg.leiden_seed);
}

Vec structure_separability(const ExpressionDataset& d, const std::vector<int>& clusters,
                           const std::vector<int>& genes, double eps) {
    const int n = static_cast<int>(clusters.size());
    if (n != d.n_cells()) throw std::invalid_argument("cluster ids length mismatch");
    int n_clusters = n ? *std::max_element(clusters.begin(), clusters.end()) + 1 : 0;
    if (n_clusters < 2)
        throw std::invalid_argument("structure_separability requires >= 2 clusters");

    std::vector<std::vector<int>> members(n_clusters);
    for (int i = 0; i < n; ++i) members[clusters[i]].push_back(i);

    Vec out(genes.size());
    for (size_t k = 0; k < genes.size(); ++k) {
        const int g = genes[k];
        double mu_all = d.values.col(g).mean();
        double between = 0, within = 0;
        for (const auto& cells : members) {
            double mu_c = 0;
            for (int i : cells) mu_c += d.values(i, g);
            mu_c /= cells.size();
            double var_c = 0;
            for (int i : cells) var_c += (d.values(i, g) - mu_c) * (d.values(i, g) - mu_c);
            var_c /= cells.size();
            double w = static_cast<double>(cells.size()) / n;
            between += w * (mu_c - mu_all) * (mu_c - mu_all);
            within += w * var_c;
        }
        out(k) = between / (within + eps);
    }
    return out;
}

GeneScoreTable score_genes(const ExpressionDataset& d, const std::vector<int>& genes,
                           const SelectorConfig& cfg) {
    GeneScoreTable t;
    t.genes = genes;
    t.s_dom = domain_sensitivity(d, genes, cfg.epsilon);
    t.pseudo_clusters = pseudo_cluster(d, genes, cfg);
    t.s_str = structure_separability(d, t.pseudo_clusters, genes, cfg.epsilon);
    t.z_dom = zscore(t.s_dom);
    t.z_str = zscore((t.s_str.array() + cfg.epsilon).log().matrix());
    return t;
}

namespace {

GenePartition assemble(const GeneScoreTable& scores, const std::vector<char>& is_anchor,
                       double tau_dom, double tau_str) {
    GenePartition p;
    p.score_genes = scores.genes;
    p.s_dom = scores.s_dom;
    p.s_str = scores.s_str;
    p.z_dom = scores.z_dom;
    p.z_str = scores.z_str;
    p.tau_dom = tau_dom;
    p.tau_str = tau_str;
    for (size_t k = 0; k < scores.genes.size(); ++k)
        (is_anchor[k] ? p.anchors : p.variants).push_back(scores.genes[k]);
    p.selected = p.variants;
    p.selected.insert(p.selected.end(), p.anchors.begin(), p.anchors.end());
    p.validate();
    return p;
}

}  // namespace

GenePartition quadrant_split(const GeneScoreTable& scores, const SelectorConfig& cfg) {
    std::vector<char> anchor(scores.genes.size());
    for (size_t k = 0; k < scores.genes.size(); ++k)
        anchor[k] = scores.z_dom(k) <= cfg.tau_dom && scores.z_str(k) >= cfg.tau_str;
    return assemble(scores, anchor, cfg.tau_dom, cfg.tau_str);
}

std::set<int> boundary_band_flips(const GeneScoreTable& scores, double tau_dom, double tau_str,
                                  double delta_dom, double delta_str) {
    std::set<int> flips;
    for (size_t k = 0; k < scores.genes.size(); ++k) {
        bool a = scores.z_dom(k) <= tau_dom && scores.z_str(k) >= tau_str;
        bool b = scores.z_dom(k) <= tau_dom + delta_dom && scores.z_str(k) >= tau_str + delta_str;
        if (a != b) flips.insert(scores.genes[k]);
    }
    return flips;
}

GenePartition random_split(const GeneScoreTable& scores, size_t n_anchors, uint64_t seed) {
    if (n_anchors > scores.genes.size())
        throw std::invalid_argument("random_split: anchor count exceeds pool");
    std::vector<size_t> order(scores.genes.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<char> anchor(scores.genes.size(), 0);
    for (size_t k = 0; k < n_anchors; ++k) anchor[order[k]] = 1;
    return assemble(scores, anchor, 0.0, 0.0);
}

}  // namespace schelix
