#include "schelix/interaction.hpp"

#include <cmath>
#include <stdexcept>

namespace schelix {

using namespace ad;

namespace {

Mat glorot(Eigen::Index r, Eigen::Index c, Rng& rng) {
    return rng.normal_matrix(r, c) * std::sqrt(2.0 / static_cast<double>(r + c));
}

NodePtr mlp2(const NodePtr& x, Parameter& w1, Parameter& b1, Parameter& w2, Parameter& b2) {
    return add_rowvec(matmul(silu(add_rowvec(matmul(x, var(w1)), var(b1))), var(w2)), var(b2));
}

Mat mlp2_plain(const Mat& x, const Parameter& w1, const Parameter& b1, const Parameter& w2,
               const Parameter& b2) {
    Mat h = (x * w1.value).rowwise() + b1.value.row(0);
    Eigen::ArrayXXd s = 1.0 / (1.0 + (-h.array()).exp());
    h = (h.array() * s).matrix();
    return ((h * w2.value).rowwise() + b2.value.row(0));
}

}  // namespace

AlignHead::AlignHead(const std::string& prefix, Eigen::Index d, Eigen::Index dp, Rng& rng)
    : d_p(dp) {
    const Eigen::Index h = 2 * dp;
    sp1 = Parameter(prefix + ".sp1", glorot(d, h, rng));
    sb1 = Parameter(prefix + ".sb1", Mat::Zero(1, h));
    sp2 = Parameter(prefix + ".sp2", glorot(h, dp, rng));
    sb2 = Parameter(prefix + ".sb2", Mat::Zero(1, dp));
    pr1 = Parameter(prefix + ".pr1", glorot(dp, h, rng));
    pb1 = Parameter(prefix + ".pb1", Mat::Zero(1, h));
    pr2 = Parameter(prefix + ".pr2", glorot(h, dp, rng));
    pb2 = Parameter(prefix + ".pb2", Mat::Zero(1, dp));
    tp1 = Parameter(prefix + ".tp1", glorot(d, h, rng));
    tb1 = Parameter(prefix + ".tb1", Mat::Zero(1, h));
    tp2 = Parameter(prefix + ".tp2", glorot(h, dp, rng));
    tb2 = Parameter(prefix + ".tb2", Mat::Zero(1, dp));
}

std::vector<Parameter*> AlignHead::parameters() {
    return {&sp1, &sb1, &sp2, &sb2, &pr1, &pb1, &pr2, &pb2, &tp1, &tb1, &tp2, &tb2};
}

std::vector<Parameter*> AlignHead::teacher_parameters() { return {&tp1, &tb1, &tp2, &tb2}; }

NodePtr align_loss(const NodePtr& h_var, const NodePtr& h_inv, AlignHead& head) {
    if (h_var->rows() == 0) throw std::invalid_argument("align_loss: empty batch");
    if (h_var->rows() != h_inv->rows() || h_var->cols() != h_inv->cols())
        throw std::invalid_argument("align_loss: shape mismatch");

    // teacher branch entirely off-tape
    Mat zt = mlp2_plain(h_inv->value, head.tp1, head.tb1, head.tp2, head.tb2);
    for (Eigen::Index i = 0; i < zt.rows(); ++i) zt.row(i) /= (zt.row(i).norm() + 1e-8);

    NodePtr proj = mlp2(h_var, head.sp1, head.sb1, head.sp2, head.sb2);
    NodePtr ps = row_l2_normalize(mlp2(proj, head.pr1, head.pb1, head.pr2, head.pb2));
    return affine(mean_all(dot_rows(ps, constant(zt))), -2.0, 2.0);
}

Refiner::Refiner(const std::string& prefix, Eigen::Index dim, Rng& rng, double temp,
                 double a_init, double a_max)
    : d(dim), temperature(temp), alpha_init(a_init), alpha_max(a_max) {
    if (d % tokens != 0) throw std::invalid_argument("refiner: d must be divisible by tokens");
    if (alpha_max < 0) throw std::invalid_argument("refiner: alpha_max must be >= 0");
    const Eigen::Index dt = d / tokens;
    wq = Parameter(prefix + ".wq", glorot(d, dt, rng));
    wk = Parameter(prefix + ".wk", glorot(dt, dt, rng));
    wv = Parameter(prefix + ".wv", glorot(dt, d, rng));
    wg = Parameter(prefix + ".wg", glorot(2 * d, d, rng));
    double b = 0.0;
    if (alpha_max > 0) {
        double p = alpha_init / alpha_max;
        b = std::log(p / (1.0 - p));
    }
    bg = Parameter(prefix + ".bg", Mat::Constant(1, d, b));
    ln_gain = Parameter(prefix + ".ln_gain", Mat::Ones(1, d));
    ln_bias = Parameter(prefix + ".ln_bias", Mat::Zero(1, d));
}

std::vector<Parameter*> Refiner::parameters() {
    return {&wq, &wk, &wv, &wg, &bg, &ln_gain, &ln_bias};
}

double Refiner::c_ln() const {
    return std::sqrt(static_cast<double>(d)) * ln_gain.value.cwiseAbs().maxCoeff() +
           ln_bias.value.norm();
}

NodePtr refine(const NodePtr& h_inv, const NodePtr& h_var, Refiner& r) {
    if (h_inv->rows() != h_var->rows() || h_inv->cols() != h_var->cols())
        throw std::invalid_argument("refine: shape mismatch");
    if (h_inv->cols() != r.d) throw std::invalid_argument("refine: embedding dim mismatch");
    const Eigen::Index n = h_inv->rows();
    const Eigen::Index t = r.tokens;
    const Eigen::Index dt = r.d / t;

    NodePtr tok = reshape(h_var, n * t, dt);
    NodePtr q = matmul(h_inv, var(r.wq));
    NodePtr k = matmul(tok, var(r.wk));
    NodePtr v = matmul(tok, var(r.wv));
    NodePtr attn = row_softmax(scale(tok_scores(q, k, t), 1.0 / r.temperature));
    NodePtr delta = layer_norm(tok_mix(attn, v, t), var(r.ln_gain), var(r.ln_bias));

    NodePtr gate_in = concat_cols(h_inv, h_var);
    NodePtr alpha = scale(sigmoid(add_rowvec(matmul(gate_in, var(r.wg)), var(r.bg))),
                          r.alpha_max);
    return add(h_inv, cmul(alpha, delta));
}

double lipschitz_probe(Refiner& r, const Mat& base, const Mat& x, const Mat& y) {
    double dist = (x - y).norm();
    if (dist == 0.0) throw std::invalid_argument("lipschitz_probe: identical probe inputs");
    NodePtr b = constant(base);
    Mat fx = refine(b, constant(x), r)->value;
    Mat fy = refine(b, constant(y), r)->value;
    return (fx - fy).norm() / dist;
}

HyperFuser::HyperFuser(const std::string& prefix, Eigen::Index dim, Eigen::Index rk, Rng& rng)
    : d(dim), rank(rk) {
    hw1 = Parameter(prefix + ".hw1", glorot(d, hidden, rng));
    hb1 = Parameter(prefix + ".hb1", Mat::Zero(1, hidden));
    hw2 = Parameter(prefix + ".hw2", glorot(hidden, bundle_width(), rng) * 0.1);
    hb2 = Parameter(prefix + ".hb2", Mat::Zero(1, bundle_width()));
    ln_gain = Parameter(prefix + ".ln_gain", Mat::Ones(1, d));
    ln_bias = Parameter(prefix + ".ln_bias", Mat::Zero(1, d));
}

std::vector<Parameter*> HyperFuser::parameters() {
    return {&hw1, &hb1, &hw2, &hb2, &ln_gain, &ln_bias};
}

NodePtr hyperfuse(const NodePtr& h_tilde, const NodePtr& h_var, HyperFuser& f) {
    if (h_tilde->rows() != h_var->rows() || h_tilde->cols() != h_var->cols())
        throw std::invalid_argument("hyperfuse: shape mismatch");
    const Eigen::Index d = f.d, r = f.rank;
    NodePtr theta = mlp2(h_tilde, f.hw1, f.hb1, f.hw2, f.hb2);

    // bundle layout: A1 | B1 | b1 | A2 | B2 | b2 | gate logits
    Eigen::Index off = 0;
    NodePtr a1 = slice_cols(theta, off, d * r); off += d * r;
    NodePtr b1 = slice_cols(theta, off, r * d); off += r * d;
    NodePtr bias1 = slice_cols(theta, off, d); off += d;
    NodePtr a2 = slice_cols(theta, off, d * r); off += d * r;
    NodePtr b2 = slice_cols(theta, off, r * d); off += r * d;
    NodePtr bias2 = slice_cols(theta, off, d); off += d;
    NodePtr gate = sigmoid(slice_cols(theta, off, d));

    NodePtr u = batched_vecmat(batched_vecmat(h_var, a1, d, r), b1, r, d);
    u = silu(add(u, bias1));
    NodePtr res = add(batched_vecmat(batched_vecmat(u, a2, d, r), b2, r, d), bias2);

    NodePtr inj = cmul(gate, scale(res, f.lambda_delta));
    return layer_norm(add(h_tilde, inj), var(f.ln_gain), var(f.ln_bias));
}

NodePtr simple_fuse(const NodePtr& h_tilde, const NodePtr& h_var, HyperFuser& f) {
    return layer_norm(add(h_tilde, h_var), var(f.ln_gain), var(f.ln_bias));
}

}  // namespace schelix
