#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "schelix/types.hpp"

namespace schelix::ad {

using schelix::Mat;

// Trainable tensor. Gradients accumulate across backward() calls until
// zero_grad().
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;

    Parameter() = default;
    Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat::Zero(value.rows(), value.cols());
    }
    void zero_grad() { grad.setZero(); }
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Reverse-mode tape node. The graph is held together by shared_ptr inputs;
// backward() topologically sorts from the root.
struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Parameter* param = nullptr;  // set on leaves bound to a Parameter
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backward_fn;

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
};

NodePtr constant(Mat v);
NodePtr var(Parameter& p);

// Runs reverse-mode accumulation from a 1x1 root and flushes leaf
// gradients into their Parameters.
void backward(const NodePtr& root);

// ---- elementwise / arithmetic ----
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr cmul(NodePtr a, NodePtr b);
NodePtr affine(NodePtr a, double k, double c);  // k*a + c
inline NodePtr scale(NodePtr a, double k) { return affine(std::move(a), k, 0.0); }
NodePtr relu(NodePtr a);
NodePtr silu(NodePtr a);
NodePtr sigmoid(NodePtr a);
NodePtr pow_elem(NodePtr a, double p);  // requires positive values
NodePtr cmax(NodePtr a, NodePtr b);
NodePtr stopgrad(const NodePtr& a);

// ---- linear algebra / shape ----
NodePtr matmul(NodePtr a, NodePtr b);
NodePtr transpose(NodePtr a);
NodePtr concat_cols(NodePtr a, NodePtr b);
NodePtr slice_cols(NodePtr a, Eigen::Index start, Eigen::Index len);
NodePtr reshape(NodePtr a, Eigen::Index r, Eigen::Index c);  // row-major order
NodePtr set_diag(NodePtr a, double v);

// ---- broadcasts / reductions ----
NodePtr add_rowvec(NodePtr a, NodePtr b);      // b: 1 x C
NodePtr rowwise_cmul(NodePtr a, NodePtr v);    // v: N x 1
NodePtr colwise_cmul(NodePtr a, NodePtr v);    // v: 1 x C
NodePtr row_sum(NodePtr a);                    // -> N x 1
NodePtr dot_rows(NodePtr a, NodePtr b);        // -> N x 1
NodePtr sum_all(NodePtr a);                    // -> 1 x 1
NodePtr mean_all(NodePtr a);                   // -> 1 x 1

// ---- normalizations ----
NodePtr row_softmax(NodePtr a);
NodePtr log_row_softmax(NodePtr a);
NodePtr layer_norm(NodePtr x, NodePtr gain, NodePtr bias, double eps = 1e-5);
NodePtr row_l2_normalize(NodePtr x, double eps = 1e-8);

// ---- batched per-row ops ----
// y.row(i) = x.row(i) * reshape(w.row(i), p x q), row-major.
NodePtr batched_vecmat(NodePtr x, NodePtr w, Eigen::Index p, Eigen::Index q);
// scores(i,j) = q.row(i) . k.row(i*t + j)
NodePtr tok_scores(NodePtr q, NodePtr k, Eigen::Index t);
// y.row(i) = sum_j a(i,j) * v.row(i*t + j)
NodePtr tok_mix(NodePtr a, NodePtr v, Eigen::Index t);

// AdamW with decoupled weight decay and global-norm gradient clipping.
struct AdamW {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    double clip_norm = 5.0;

    void step(const std::vector<Parameter*>& params);

private:
    std::map<std::string, std::pair<Mat, Mat>> state_;  // name -> (m, v)
    long t_ = 0;
};

}  // namespace schelix::ad
