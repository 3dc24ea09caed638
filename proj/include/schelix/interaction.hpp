#pragma once

#include <string>
#include <vector>

#include "schelix/autodiff.hpp"
#include "schelix/rng.hpp"
#include "schelix/types.hpp"

namespace schelix {

// Asymmetric alignment head. The Student (variant) side carries projector and
// predictor; the Teacher (anchor) side has its own projector and is evaluated
// off-tape, so its gradients are exactly zero.
struct AlignHead {
    Eigen::Index d_p = 64;
    ad::Parameter sp1, sb1, sp2, sb2;  // student projector
    ad::Parameter pr1, pb1, pr2, pb2;  // student predictor
    ad::Parameter tp1, tb1, tp2, tb2;  // teacher projector

    AlignHead() = default;
    AlignHead(const std::string& prefix, Eigen::Index d, Eigen::Index d_p, Rng& rng);
    std::vector<ad::Parameter*> parameters();
    std::vector<ad::Parameter*> teacher_parameters();
};

// 2 - 2 * mean_i <p_S(i), z_T(i)>, teacher branch stop-gradient.
ad::NodePtr align_loss(const ad::NodePtr& h_var, const ad::NodePtr& h_inv, AlignHead& head);

// Bounded residual cross-attention refiner. Variant rows are split into
// `tokens` chunks that act as keys/values for a single attention head.
struct Refiner {
    Eigen::Index d = 64;
    Eigen::Index tokens = 4;
    double temperature = 0.3;
    double alpha_init = 0.3;
    double alpha_max = 1.5;
    ad::Parameter wq, wk, wv;       // d x d/t, d/t x d/t, d/t x d
    ad::Parameter wg, bg;           // gate: 2d x d, 1 x d
    ad::Parameter ln_gain, ln_bias;

    Refiner() = default;
    Refiner(const std::string& prefix, Eigen::Index d, Rng& rng, double temperature = 0.3,
            double alpha_init = 0.3, double alpha_max = 1.5);
    std::vector<ad::Parameter*> parameters();
    // sqrt(d) * max|gain| + ||bias||_2, from the live normalization parameters
    double c_ln() const;
};

ad::NodePtr refine(const ad::NodePtr& h_inv, const ad::NodePtr& h_var, Refiner& r);

// ||refine(base, x) - refine(base, y)|| / ||x - y|| over single-row probes.
double lipschitz_probe(Refiner& r, const Mat& base, const Mat& x, const Mat& y);

// Hypernetwork fusion: theta_i generated from the refined anchor embedding,
// a rank-r two-layer MLP applied to the variant embedding, gated residual.
struct HyperFuser {
    Eigen::Index d = 64;
    Eigen::Index rank = 8;
    Eigen::Index hidden = 128;
    double lambda_delta = 0.6;
    ad::Parameter hw1, hb1, hw2, hb2;  // hypernet
    ad::Parameter ln_gain, ln_bias;

    HyperFuser() = default;
    HyperFuser(const std::string& prefix, Eigen::Index d, Eigen::Index rank, Rng& rng);
    std::vector<ad::Parameter*> parameters();
    Eigen::Index bundle_width() const { return 4 * d * rank + 3 * d; }
};

ad::NodePtr hyperfuse(const ad::NodePtr& h_tilde, const ad::NodePtr& h_var, HyperFuser& f);

// Ablation variant: LN(h_tilde + h_var) using the fuser's normalization.
ad::NodePtr simple_fuse(const ad::NodePtr& h_tilde, const ad::NodePtr& h_var, HyperFuser& f);

}  // namespace schelix
