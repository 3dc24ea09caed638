#include "schelix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include "schelix/leiden.hpp"
#include "schelix/linalg.hpp"
#include "schelix/rng.hpp"

namespace schelix {

EvalConfig::EvalConfig() {
    for (int i = 1; i <= 20; ++i) leiden_resolutions.push_back(i / 10.0);
}

void EvalConfig::validate() const {
    if (pca_cap < 2) throw std::invalid_argument("pca_cap must be >= 2");
    if (leiden_resolutions.empty())
        throw std::invalid_argument("resolution grid must be non-empty");
    if (knn_k < 1 || oc_k < 1) throw std::invalid_argument("k must be >= 1");
}

EmbeddingMatrix cap_embedding(const EmbeddingMatrix& e, int cap) {
    if (e.dim() <= cap) return e;
    if (e.n_cells() < 2)
        throw std::invalid_argument("cap_embedding: need >= 2 cells to project");
    EmbeddingMatrix out;
    out.values = pca_project(e.values, cap);
    out.source = e.source;
    return out;
}

namespace {

double comb2(double n) { return n * (n - 1.0) / 2.0; }

std::map<std::pair<int, int>, long> contingency(const std::vector<int>& u,
                                                const std::vector<int>& v) {
    std::map<std::pair<int, int>, long> c;
    for (size_t i = 0; i < u.size(); ++i) ++c[{u[i], v[i]}];
    return c;
}

std::map<int, long> tally(const std::vector<int>& u) {
    std::map<int, long> c;
    for (int x : u) ++c[x];
    return c;
}

}  // namespace

double ari(const std::vector<int>& u, const std::vector<int>& v) {
    if (u.size() != v.size() || u.empty())
        throw std::invalid_argument("ari: label vectors must match and be non-empty");
    double sum_ij = 0;
    for (auto& [key, n] : contingency(u, v)) sum_ij += comb2(static_cast<double>(n));
    double sum_a = 0, sum_b = 0;
    for (auto& [k, n] : tally(u)) sum_a += comb2(static_cast<double>(n));
    for (auto& [k, n] : tally(v)) sum_b += comb2(static_cast<double>(n));
    double total = comb2(static_cast<double>(u.size()));
    double expected = total > 0 ? sum_a * sum_b / total : 0.0;
    double max_index = 0.5 * (sum_a + sum_b);
    double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (sum_ij - expected) / denom;
}

double nmi(const std::vector<int>& u, const std::vector<int>& v) {
    if (u.size() != v.size() || u.empty())
        throw std::invalid_argument("nmi: label vectors must match and be non-empty");
    const double n = static_cast<double>(u.size());
    auto cu = tally(u);
    auto cv = tally(v);
    double hu = 0, hv = 0;
    for (auto& [k, c] : cu) hu -= c / n * std::log(c / n);
    for (auto& [k, c] : cv) hv -= c / n * std::log(c / n);
    if (hu + hv == 0.0) return 1.0;
    double mi = 0;
    for (auto& [key, c] : contingency(u, v)) {
        double pij = c / n;
        double pi = cu[key.first] / n, pj = cv[key.second] / n;
        mi += pij * std::log(pij / (pi * pj));
    }
    // mi can land an epsilon outside [0, H] numerically; keep the declared range
    return std::clamp(2.0 * mi / (hu + hv), 0.0, 1.0);
}

std::vector<int> labels_to_ints(const std::vector<std::string>& labels) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, fresh] = ids.try_emplace(l, static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

SweepResult cluster_sweep(const EmbeddingMatrix& e, const std::vector<int>& truth,
                          const EvalConfig& cfg) {
    cfg.validate();
    if (static_cast<size_t>(e.n_cells()) != truth.size())
        throw std::invalid_argument("cluster_sweep: label length mismatch");
    if (e.n_cells() <= cfg.knn_k)
        throw std::invalid_argument("cluster_sweep: need more cells than knn_k");
    EmbeddingMatrix capped = cap_embedding(e, cfg.pca_cap);
    auto adj = symmetric_knn_graph(capped.values, cfg.knn_k);
    SweepResult r;
    for (double res : cfg.leiden_resolutions) {
        auto labels = leiden_cluster(adj, res, cfg.seed);
        double a = ari(labels, truth);
        double m = nmi(labels, truth);
        if (a > r.ari_best) {
            r.ari_best = a;
            r.best_resolution = res;
        }
        r.nmi_best = std::max(r.nmi_best, m);
    }
    return r;
}

Vec silhouette_values(const Mat& x, const std::vector<int>& labels) {
    const Eigen::Index n = x.rows();
    Mat d2 = pairwise_sq_dists(x);
    Mat d = d2.cwiseMax(0.0).cwiseSqrt();
    int n_labels = 1 + *std::max_element(labels.begin(), labels.end());
    std::vector<long> sizes(n_labels, 0);
    for (int l : labels) ++sizes[l];

    Vec s = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[labels[i]] <= 1) continue;  // singleton convention: 0
        Vec sums = Vec::Zero(n_labels);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sums(labels[j]) += d(i, j);
        double a = sums(labels[i]) / (sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int l = 0; l < n_labels; ++l)
            if (l != labels[i] && sizes[l] > 0) b = std::min(b, sums(l) / sizes[l]);
        if (!std::isfinite(b)) continue;
        double m = std::max(a, b);
        s(i) = m > 0 ? (b - a) / m : 0.0;
    }
    return s;
}

double asw_celltype(const EmbeddingMatrix& e, const std::vector<int>& types) {
    if (e.n_cells() < 3) throw std::invalid_argument("asw_celltype: need >= 3 cells");
    auto t = tally(types);
    if (t.size() < 2) throw std::invalid_argument("asw_celltype: need >= 2 cell types");
    double mean_s = silhouette_values(e.values, types).mean();
    return (mean_s + 1.0) / 2.0;
}

double asw_batch(const EmbeddingMatrix& e, const std::vector<int>& types,
                 const std::vector<int>& domains) {
    if (static_cast<size_t>(e.n_cells()) != types.size() || types.size() != domains.size())
        throw std::invalid_argument("asw_batch: label length mismatch");
    auto by_type = tally(types);
    double acc = 0;
    for (auto& [t, cnt] : by_type) {
        std::vector<Eigen::Index> cells;
        for (size_t i = 0; i < types.size(); ++i)
            if (types[i] == t) cells.push_back(static_cast<Eigen::Index>(i));
        std::map<int, int> doms;
        std::vector<int> local_dom;
        for (auto i : cells) {
            auto [it, fresh] = doms.try_emplace(domains[i], static_cast<int>(doms.size()));
            local_dom.push_back(it->second);
        }
        if (doms.size() < 2) {
            acc += 1.0;  // nothing to mix
            continue;
        }
        Mat sub(cells.size(), e.dim());
        for (size_t r = 0; r < cells.size(); ++r) sub.row(r) = e.values.row(cells[r]);
        Vec s = silhouette_values(sub, local_dom);
        acc += (1.0 - s.array().abs()).mean();
    }
    return acc / by_type.size();
}

double graph_connectivity(const EmbeddingMatrix& e, const std::vector<int>& types, int k) {
    auto by_type = tally(types);
    double acc = 0;
    for (auto& [t, cnt] : by_type) {
        std::vector<Eigen::Index> cells;
        for (size_t i = 0; i < types.size(); ++i)
            if (types[i] == t) cells.push_back(static_cast<Eigen::Index>(i));
        if (cells.size() == 1) {
            acc += 1.0;
            continue;
        }
        Mat sub(cells.size(), e.dim());
        for (size_t r = 0; r < cells.size(); ++r) sub.row(r) = e.values.row(cells[r]);
        int kk = std::min<int>(k, static_cast<int>(cells.size()) - 1);
        auto adj = symmetric_knn_graph(sub, kk);
        // largest component by BFS
        std::vector<char> seen(cells.size(), 0);
        size_t best = 0;
        for (size_t s0 = 0; s0 < cells.size(); ++s0) {
            if (seen[s0]) continue;
            size_t size = 0;
            std::queue<size_t> q;
            q.push(s0);
            seen[s0] = 1;
            while (!q.empty()) {
                size_t u = q.front();
                q.pop();
                ++size;
                for (int v : adj[u])
                    if (!seen[v]) {
                        seen[v] = 1;
                        q.push(static_cast<size_t>(v));
                    }
            }
            best = std::max(best, size);
        }
        acc += static_cast<double>(best) / cells.size();
    }
    return acc / by_type.size();
}

MetricsReport aggregate(const MetricParts& p) {
    for (double v : {p.ari_best, p.nmi_best, p.asw_ct, p.asw_batch, p.gc})
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("aggregate: metric part outside [0,1]");
    MetricsReport r;
    r.ari_best = p.ari_best;
    r.nmi_best = p.nmi_best;
    r.asw_ct = p.asw_ct;
    r.asw_batch = p.asw_batch;
    r.gc = p.gc;
    r.leiden_resolution_at_best = p.best_resolution;
    r.recompute_aggregates();
    return r;
}

double oc_score(const EmbeddingMatrix& e, const std::vector<int>& labels,
                const std::vector<int>& eval_set, int k) {
    if (k >= e.n_cells()) throw std::invalid_argument("oc_score: k must be < N");
    if (eval_set.empty()) throw std::invalid_argument("oc_score: empty eval set");
    auto nn = knn_indices(e.values, k);
    double acc = 0;
    for (int i : eval_set) {
        int diff = 0;
        for (int j : nn[i])
            if (labels[j] != labels[i]) ++diff;
        acc += static_cast<double>(diff) / k;
    }
    return acc / eval_set.size();
}

double oc_normalized(double method_oc, double raw_oc) { return method_oc - raw_oc; }

PerturbationResult oc_perturbation_setup(const ExpressionDataset& d,
                                         const std::string& focus_type,
                                         const std::vector<int>& variant_genes,
                                         double fraction, double shift, uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw std::invalid_argument("perturbation fraction must lie in (0,1)");
    if (!d.has_cell_types())
        throw std::invalid_argument("perturbation setup needs cell types");
    PerturbationResult r;
    r.perturbed = d;
    for (Eigen::Index i = 0; i < d.n_cells(); ++i)
        if (d.cell_types[i] == focus_type) r.focus_cells.push_back(static_cast<int>(i));
    if (r.focus_cells.empty())
        throw std::invalid_argument("focus type not present: " + focus_type);

    std::vector<int> order = r.focus_cells;
    Rng rng(seed);
    rng.shuffle(order);
    size_t n_pert = static_cast<size_t>(std::llround(fraction * r.focus_cells.size()));
    r.pseudo_labels.assign(d.n_cells(), 0);
    for (size_t k = 0; k < n_pert; ++k) {
        int i = order[k];
        r.pseudo_labels[i] = 1;
        for (int g : variant_genes) r.perturbed.values(i, g) += shift;
    }
    return r;
}

MetricsReport evaluate_embedding(const EmbeddingMatrix& e, const std::vector<std::string>& types,
                                 const std::vector<std::string>& domains,
                                 const EvalConfig& cfg) {
    cfg.validate();
    if (types.empty()) throw std::invalid_argument("evaluate_embedding: cell types required");
    EmbeddingMatrix capped = cap_embedding(e, cfg.pca_cap);
    std::vector<int> t = labels_to_ints(types);
    std::vector<int> b = labels_to_ints(domains);
    SweepResult sweep = cluster_sweep(capped, t, cfg);
    MetricParts parts;
    parts.ari_best = std::max(0.0, sweep.ari_best);
    parts.nmi_best = std::max(0.0, sweep.nmi_best);
    parts.best_resolution = sweep.best_resolution;
    parts.asw_ct = asw_celltype(capped, t);
    parts.asw_batch = asw_batch(capped, t, b);
    parts.gc = graph_connectivity(capped, t, cfg.knn_k);
    return aggregate(parts);
}

}  // namespace schelix
