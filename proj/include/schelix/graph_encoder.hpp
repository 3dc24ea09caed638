#pragma once

#include <map>
#include <string>
#include <vector>

#include "schelix/autodiff.hpp"
#include "schelix/rng.hpp"
#include "schelix/types.hpp"

namespace schelix {

struct GraphLearnerParams {
    ad::Parameter q, k;  // G* x d_a
    double tau = 0.1;
    int k_top = 22;
    Eigen::Index d_a = 32;

    GraphLearnerParams() = default;
    GraphLearnerParams(const std::string& prefix, Eigen::Index n_genes, Eigen::Index d_a,
                       Rng& rng);
    std::vector<ad::Parameter*> parameters();
};

// Gene-gene diffusion operator with piecewise-constant topology. The 1-hop
// operator lives on the current tape only on rebuild steps; multi-hop powers
// are always detached.
struct FeatureGraph {
    ad::NodePtr p1;
    std::map<int, Mat> cached_powers;  // s -> P^s, s >= 1, detached
    int rebuild_period = 25;
    int steps_since_rebuild = 0;
    bool differentiable_flag = false;
    bool built = false;
};

struct EncoderConfig {
    std::vector<int> scales = {1, 2, 3, 4, 5};
    double xi1 = 0.8, xi2 = 0.2;
    int m = 5;  // high-pass reference scale
    Eigen::Index d_out = 64;
    Eigen::Index hidden = 256;
    bool linear = false;  // bypass diffusion, single linear map each way
};

struct StreamEncoder {
    EncoderConfig cfg;
    ad::Parameter theta;  // 1 x |scales|
    ad::Parameter w1, b1, w2, b2;  // head
    ad::Parameter v1, c1, v2, c2;  // decoder

    StreamEncoder() = default;
    StreamEncoder(const std::string& prefix, Eigen::Index n_genes, EncoderConfig cfg, Rng& rng);
    std::vector<ad::Parameter*> parameters();
};

// relu(Q K^T / tau), zero diagonal, top-k per row, max-symmetrize, self-loops,
// symmetric normalization. Caches detached powers for the scale set and m.
FeatureGraph build_graph(GraphLearnerParams& params, const EncoderConfig& enc,
                         int rebuild_period);

// Rebuild iff no graph yet or step % rebuild_period == 0; otherwise reuse the
// cached operator off-tape.
void maybe_rebuild(FeatureGraph& g, GraphLearnerParams& params, const EncoderConfig& enc,
                   int step);

// Z_low = X P^k (detached for k > 1), Z_high = xi1 (X - Z_low) + xi2 X (I - P^m).
std::pair<ad::NodePtr, ad::NodePtr> diffuse(const ad::NodePtr& x, const FeatureGraph& g,
                                            const EncoderConfig& enc, int scale);

// Multi-scale features weighted by softmax(theta), head to H, decoder to X_hat.
std::pair<ad::NodePtr, ad::NodePtr> encode_stream(const ad::NodePtr& x, const FeatureGraph& g,
                                                  StreamEncoder& enc);

void save_adjacency(const FeatureGraph& g, const std::string& path);

}  // namespace schelix
