#include "schelix/graph_encoder.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace schelix {

using namespace ad;

namespace {

Mat glorot(Eigen::Index r, Eigen::Index c, Rng& rng) {
    return rng.normal_matrix(r, c) * std::sqrt(2.0 / static_cast<double>(r + c));
}

}  // namespace

GraphLearnerParams::GraphLearnerParams(const std::string& prefix, Eigen::Index n_genes,
                                       Eigen::Index dim_a, Rng& rng)
    : d_a(dim_a) {
    q = Parameter(prefix + ".q", glorot(n_genes, d_a, rng));
    k = Parameter(prefix + ".k", glorot(n_genes, d_a, rng));
}

std::vector<Parameter*> GraphLearnerParams::parameters() { return {&q, &k}; }

StreamEncoder::StreamEncoder(const std::string& prefix, Eigen::Index n_genes, EncoderConfig c,
                             Rng& rng)
    : cfg(std::move(c)) {
    const Eigen::Index d = cfg.d_out;
    if (cfg.linear) {
        w1 = Parameter(prefix + ".w1", glorot(n_genes, d, rng));
        b1 = Parameter(prefix + ".b1", Mat::Zero(1, d));
        v1 = Parameter(prefix + ".v1", glorot(d, n_genes, rng));
        c1 = Parameter(prefix + ".c1", Mat::Zero(1, n_genes));
        return;
    }
    const Eigen::Index in =
        2 * static_cast<Eigen::Index>(cfg.scales.size()) * n_genes;
    theta = Parameter(prefix + ".theta",
                      Mat::Zero(1, static_cast<Eigen::Index>(cfg.scales.size())));
    w1 = Parameter(prefix + ".w1", glorot(in, cfg.hidden, rng));
    b1 = Parameter(prefix + ".b1", Mat::Zero(1, cfg.hidden));
    w2 = Parameter(prefix + ".w2", glorot(cfg.hidden, d, rng));
    b2 = Parameter(prefix + ".b2", Mat::Zero(1, d));
    v1 = Parameter(prefix + ".v1", glorot(d, cfg.hidden, rng));
    c1 = Parameter(prefix + ".c1", Mat::Zero(1, cfg.hidden));
    v2 = Parameter(prefix + ".v2", glorot(cfg.hidden, n_genes, rng));
    c2 = Parameter(prefix + ".c2", Mat::Zero(1, n_genes));
}

std::vector<Parameter*> StreamEncoder::parameters() {
    if (cfg.linear) return {&w1, &b1, &v1, &c1};
    return {&theta, &w1, &b1, &w2, &b2, &v1, &c1, &v2, &c2};
}

FeatureGraph build_graph(GraphLearnerParams& params, const EncoderConfig& enc,
                         int rebuild_period) {
    const Eigen::Index g = params.q.value.rows();
    if (params.k_top >= g)
        throw std::invalid_argument("build_graph: k_top must be < number of genes");

    NodePtr qn = var(params.q);
    NodePtr kn = var(params.k);
    NodePtr s = set_diag(relu(scale(matmul(qn, transpose(kn)), 1.0 / params.tau)), 0.0);

    // top-k support per row, held fixed as a constant mask
    Mat mask = Mat::Zero(g, g);
    for (Eigen::Index i = 0; i < g; ++i) {
        std::vector<Eigen::Index> idx(g);
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + params.k_top, idx.end(),
                          [&](Eigen::Index a, Eigen::Index b) {
                              double va = s->value(i, a), vb = s->value(i, b);
                              return va != vb ? va > vb : a < b;
                          });
        for (int j = 0; j < params.k_top; ++j) mask(i, idx[j]) = 1.0;
    }
    NodePtr a = cmul(s, constant(mask));
    a = set_diag(cmax(a, transpose(a)), 1.0);

    NodePtr deg = row_sum(a);
    NodePtr inv_sqrt = pow_elem(deg, -0.5);
    NodePtr p = colwise_cmul(rowwise_cmul(a, inv_sqrt), transpose(inv_sqrt));

    FeatureGraph fg;
    fg.p1 = p;
    fg.rebuild_period = rebuild_period;
    fg.steps_since_rebuild = 0;
    fg.differentiable_flag = true;
    fg.built = true;
    fg.cached_powers[1] = p->value;
    std::vector<int> scales = enc.scales;
    scales.push_back(enc.m);
    int max_s = *std::max_element(scales.begin(), scales.end());
    Mat acc = p->value;
    for (int k = 2; k <= max_s; ++k) {
        acc = acc * p->value;
        if (std::find(scales.begin(), scales.end(), k) != scales.end())
            fg.cached_powers[k] = acc;
    }
    return fg;
}

void maybe_rebuild(FeatureGraph& g, GraphLearnerParams& params, const EncoderConfig& enc,
                   int step) {
    if (!g.built || step % g.rebuild_period == 0) {
        g = build_graph(params, enc, g.rebuild_period);
        return;
    }
    g.p1 = constant(g.cached_powers.at(1));
    g.differentiable_flag = false;
    ++g.steps_since_rebuild;
}

std::pair<NodePtr, NodePtr> diffuse(const NodePtr& x, const FeatureGraph& g,
                                    const EncoderConfig& enc, int scale) {
    if (!g.built) throw std::invalid_argument("diffuse: graph not built");
    NodePtr z_low;
    if (scale == 1) {
        z_low = matmul(x, g.p1);
    } else {
        auto it = g.cached_powers.find(scale);
        if (it == g.cached_powers.end())
            throw std::invalid_argument("diffuse: missing cached power for scale " +
                                        std::to_string(scale));
        z_low = matmul(x, constant(it->second));
    }
    auto itm = g.cached_powers.find(enc.m);
    if (itm == g.cached_powers.end())
        throw std::invalid_argument("diffuse: missing cached power for m");
    NodePtr high_ref = sub(x, matmul(x, constant(itm->second)));
    NodePtr z_high = add(ad::scale(sub(x, z_low), enc.xi1), ad::scale(high_ref, enc.xi2));
    return {z_low, z_high};
}

std::pair<NodePtr, NodePtr> encode_stream(const NodePtr& x, const FeatureGraph& g,
                                          StreamEncoder& enc) {
    if (enc.cfg.linear) {
        NodePtr h = add_rowvec(matmul(x, var(enc.w1)), var(enc.b1));
        NodePtr xhat = add_rowvec(matmul(h, var(enc.v1)), var(enc.c1));
        return {h, xhat};
    }
    NodePtr omega = row_softmax(var(enc.theta));
    NodePtr z;
    for (size_t i = 0; i < enc.cfg.scales.size(); ++i) {
        auto [zl, zh] = diffuse(x, g, enc.cfg, enc.cfg.scales[i]);
        NodePtr feat = concat_cols(zl, zh);
        NodePtr wk = matmul(slice_cols(omega, static_cast<Eigen::Index>(i), 1),
                            constant(Mat::Ones(1, feat->cols())));
        feat = colwise_cmul(feat, wk);
        z = z ? concat_cols(z, feat) : feat;
    }
    NodePtr h = add_rowvec(
        matmul(silu(add_rowvec(matmul(z, var(enc.w1)), var(enc.b1))), var(enc.w2)),
        var(enc.b2));
    NodePtr xhat = add_rowvec(
        matmul(silu(add_rowvec(matmul(h, var(enc.v1)), var(enc.c1))), var(enc.v2)),
        var(enc.c2));
    return {h, xhat};
}

void save_adjacency(const FeatureGraph& g, const std::string& path) {
    if (!g.built) throw std::invalid_argument("save_adjacency: graph not built");
    const Mat& p = g.cached_powers.at(1);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    Eigen::Index nnz = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (p(i, j) != 0.0) ++nnz;
    out << p.rows() << ' ' << p.cols() << ' ' << nnz << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (p(i, j) != 0.0) out << i << ' ' << j << ' ' << p(i, j) << '\n';
}

}  // namespace schelix
