#include "schelix/gate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "schelix/leiden.hpp"

namespace schelix {

void GateConfig::validate() const {
    if (strength < 0 || strength > 1)
        throw std::invalid_argument("gate strength must lie in [0,1]");
    if (w_low < 0 || w_high < 0) throw std::invalid_argument("gate layer weights must be >= 0");
    if (enabled && w_low + w_high <= 0)
        throw std::invalid_argument("enabled gate needs w_low + w_high > 0");
}

Mat local_domain_score(const ExpressionDataset& d, const std::vector<int>& clusters,
                       const std::vector<int>& variants, const GateConfig& cfg) {
    if (d.layer != Layer::lognorm)
        throw std::invalid_argument("local_domain_score requires lognorm layer");
    const int n_clusters =
        clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
    Mat out = Mat::Zero(n_clusters, variants.size());
    const double eps = cfg.epsilon;

    std::vector<std::vector<int>> members(n_clusters);
    for (size_t i = 0; i < clusters.size(); ++i) members[clusters[i]].push_back(static_cast<int>(i));

    for (int c = 0; c < n_clusters; ++c) {
        const auto& cells = members[c];
        if (static_cast<int>(cells.size()) < cfg.min_cells) continue;
        std::map<std::string, std::vector<int>> doms;
        for (int i : cells) doms[d.domains[i]].push_back(i);
        if (doms.size() < 2) continue;

        for (size_t k = 0; k < variants.size(); ++k) {
            const int g = variants[k];
            double mu_c = 0;
            for (int i : cells) mu_c += d.values(i, g);
            mu_c /= cells.size();
            double var_c = 0;
            for (int i : cells) var_c += (d.values(i, g) - mu_c) * (d.values(i, g) - mu_c);
            var_c /= cells.size();
            double sd_c = std::sqrt(var_c);

            double d_mu = 0, d_sd = 0;
            double var_min = 0, var_max = 0;
            bool first = true;
            for (auto& [name, dc] : doms) {
                double mu_b = 0;
                for (int i : dc) mu_b += d.values(i, g);
                mu_b /= dc.size();
                double var_b = 0;
                for (int i : dc) var_b += (d.values(i, g) - mu_b) * (d.values(i, g) - mu_b);
                var_b /= dc.size();
                double sd_b = std::sqrt(var_b);
                d_mu += std::abs(mu_b - mu_c);
                d_sd += std::abs(sd_b - sd_c);
                if (first) { var_min = var_max = var_b; first = false; }
                var_min = std::min(var_min, var_b);
                var_max = std::max(var_max, var_b);
            }
            d_mu /= doms.size() * (sd_c + eps);
            d_sd /= doms.size() * (sd_c + eps);
            double d_var = (var_max - var_min) / (var_c + eps);
            out(c, k) = cfg.w_mu * d_mu + cfg.w_sigma * d_sd + cfg.w_v * d_var;
        }
    }
    return out;
}

namespace {

// Rectify and normalize per cluster by the max over variant genes.
Mat normalized_gamma(const Mat& scores, double eps) {
    Mat g = scores.cwiseMax(0.0);
    for (Eigen::Index c = 0; c < g.rows(); ++c) {
        double m = g.row(c).maxCoeff();
        g.row(c) /= (m + eps);
    }
    return g;
}

}  // namespace

GateTensor build_gate(const ExpressionDataset& d, const std::vector<int>& variants,
                      const std::vector<int>& anchors, const GateConfig& cfg) {
    cfg.validate();
    if (!cfg.enabled) throw std::invalid_argument("build_gate called with gate disabled");

    Mat x;
    if (anchors.empty()) {
        x = d.values;
    } else {
        x.resize(d.n_cells(), anchors.size());
        for (size_t j = 0; j < anchors.size(); ++j) x.col(j) = d.values.col(anchors[j]);
    }

    auto low = pseudo_cluster_embedding(x, cfg.n_pcs, cfg.n_neighbors, cfg.low_res, cfg.seed);
    auto high = pseudo_cluster_embedding(x, cfg.n_pcs, cfg.n_neighbors, cfg.high_res, cfg.seed);

    Mat gl = normalized_gamma(local_domain_score(d, low, variants, cfg), cfg.epsilon);
    Mat gh = normalized_gamma(local_domain_score(d, high, variants, cfg), cfg.epsilon);

    GateTensor t;
    t.gamma.resize(d.n_cells(), variants.size());
    for (Eigen::Index i = 0; i < d.n_cells(); ++i)
        t.gamma.row(i) = (cfg.w_low * gl.row(low[i]) + cfg.w_high * gh.row(high[i]))
                             .cwiseMin(1.0)
                             .cwiseMax(0.0);
    return t;
}

Vec apply_gate(const Vec& x, const Vec& gamma_row, Eigen::Index n_variants, double lambda) {
    if (lambda < 0 || lambda > 1) throw std::invalid_argument("apply_gate: lambda outside [0,1]");
    if (gamma_row.size() != n_variants)
        throw std::invalid_argument("apply_gate: gate row does not cover the variant genes");
    Vec out = x;
    out.head(n_variants).array() *= (1.0 - lambda * gamma_row.array());
    return out;
}

}  // namespace schelix
