#include "schelix/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace schelix::ad {

namespace {

NodePtr make(Mat v, std::vector<NodePtr> inputs, std::function<void(Node&)> bwd) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backward_fn = std::move(bwd);
    return n;
}

void accum(Node& n, const Mat& g) {
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.rows(), n.cols());
    n.grad += g;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

NodePtr constant(Mat v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

NodePtr var(Parameter& p) {
    auto n = std::make_shared<Node>();
    n->value = p.value;
    n->requires_grad = true;
    n->param = &p;
    return n;
}

void backward(const NodePtr& root) {
    if (root->rows() != 1 || root->cols() != 1)
        throw std::invalid_argument("backward requires a scalar root");
    if (!root->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->inputs.size()) {
            Node* in = n->inputs[i++].get();
            if (in->requires_grad && seen.insert(in).second) stack.push_back({in, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    // order is children-before-parents; walk it backwards
    root->grad = Mat::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->grad.size() == 0) continue;  // unreached branch
        if (n->backward_fn) n->backward_fn(*n);
        if (n->param) n->param->grad += n->grad;
    }
}

NodePtr add(NodePtr a, NodePtr b) {
    check_same_shape(a, b, "add");
    Mat v = a->value + b->value;
    return make(std::move(v), {a, b}, [](Node& n) {
        accum(*n.inputs[0], n.grad);
        accum(*n.inputs[1], n.grad);
    });
}

NodePtr sub(NodePtr a, NodePtr b) {
    check_same_shape(a, b, "sub");
    Mat v = a->value - b->value;
    return make(std::move(v), {a, b}, [](Node& n) {
        accum(*n.inputs[0], n.grad);
        accum(*n.inputs[1], -n.grad);
    });
}

NodePtr cmul(NodePtr a, NodePtr b) {
    check_same_shape(a, b, "cmul");
    Mat v = a->value.cwiseProduct(b->value);
    return make(std::move(v), {a, b}, [](Node& n) {
        accum(*n.inputs[0], n.grad.cwiseProduct(n.inputs[1]->value));
        accum(*n.inputs[1], n.grad.cwiseProduct(n.inputs[0]->value));
    });
}

NodePtr affine(NodePtr a, double k, double c) {
    Mat v = (k * a->value.array() + c).matrix();
    return make(std::move(v), {a}, [k](Node& n) { accum(*n.inputs[0], k * n.grad); });
}

NodePtr relu(NodePtr a) {
    Mat v = a->value.cwiseMax(0.0);
    return make(std::move(v), {a}, [](Node& n) {
        Mat g = (n.inputs[0]->value.array() > 0.0).cast<double>() * n.grad.array();
        accum(*n.inputs[0], g);
    });
}

NodePtr silu(NodePtr a) {
    Eigen::ArrayXXd s = 1.0 / (1.0 + (-a->value.array()).exp());
    Mat v = (a->value.array() * s).matrix();
    return make(std::move(v), {a}, [](Node& n) {
        Eigen::ArrayXXd x = n.inputs[0]->value.array();
        Eigen::ArrayXXd s = 1.0 / (1.0 + (-x).exp());
        Mat g = (n.grad.array() * s * (1.0 + x * (1.0 - s))).matrix();
        accum(*n.inputs[0], g);
    });
}

NodePtr sigmoid(NodePtr a) {
    Mat v = (1.0 / (1.0 + (-a->value.array()).exp())).matrix();
    return make(std::move(v), {a}, [](Node& n) {
        Eigen::ArrayXXd s = n.value.array();
        accum(*n.inputs[0], (n.grad.array() * s * (1.0 - s)).matrix());
    });
}

NodePtr pow_elem(NodePtr a, double p) {
    if ((a->value.array() <= 0.0).any())
        throw std::invalid_argument("pow_elem requires strictly positive entries");
    Mat v = a->value.array().pow(p).matrix();
    return make(std::move(v), {a}, [p](Node& n) {
        Mat g = (n.grad.array() * p * n.inputs[0]->value.array().pow(p - 1.0)).matrix();
        accum(*n.inputs[0], g);
    });
}

NodePtr cmax(NodePtr a, NodePtr b) {
    check_same_shape(a, b, "cmax");
    Mat v = a->value.cwiseMax(b->value);
    return make(std::move(v), {a, b}, [](Node& n) {
        // ties route to the first argument
        Eigen::ArrayXXd ge =
            (n.inputs[0]->value.array() >= n.inputs[1]->value.array()).cast<double>();
        accum(*n.inputs[0], (n.grad.array() * ge).matrix());
        accum(*n.inputs[1], (n.grad.array() * (1.0 - ge)).matrix());
    });
}

NodePtr stopgrad(const NodePtr& a) { return constant(a->value); }

NodePtr matmul(NodePtr a, NodePtr b) {
    if (a->cols() != b->rows()) throw std::invalid_argument("matmul: inner dim mismatch");
    Mat v = a->value * b->value;
    return make(std::move(v), {a, b}, [](Node& n) {
        accum(*n.inputs[0], n.grad * n.inputs[1]->value.transpose());
        accum(*n.inputs[1], n.inputs[0]->value.transpose() * n.grad);
    });
}

NodePtr transpose(NodePtr a) {
    Mat v = a->value.transpose();
    return make(std::move(v), {a}, [](Node& n) { accum(*n.inputs[0], n.grad.transpose()); });
}

NodePtr concat_cols(NodePtr a, NodePtr b) {
    if (a->rows() != b->rows()) throw std::invalid_argument("concat_cols: row mismatch");
    Mat v(a->rows(), a->cols() + b->cols());
    v << a->value, b->value;
    return make(std::move(v), {a, b}, [](Node& n) {
        Eigen::Index ca = n.inputs[0]->cols();
        accum(*n.inputs[0], n.grad.leftCols(ca));
        accum(*n.inputs[1], n.grad.rightCols(n.inputs[1]->cols()));
    });
}

NodePtr slice_cols(NodePtr a, Eigen::Index start, Eigen::Index len) {
    if (start < 0 || len < 0 || start + len > a->cols())
        throw std::invalid_argument("slice_cols: range out of bounds");
    Mat v = a->value.middleCols(start, len);
    return make(std::move(v), {a}, [start, len](Node& n) {
        Mat g = Mat::Zero(n.inputs[0]->rows(), n.inputs[0]->cols());
        g.middleCols(start, len) = n.grad;
        accum(*n.inputs[0], g);
    });
}

NodePtr reshape(NodePtr a, Eigen::Index r, Eigen::Index c) {
    if (r * c != a->rows() * a->cols()) throw std::invalid_argument("reshape: size mismatch");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat tmp = a->value;
    Mat v = Eigen::Map<RowMat>(tmp.data(), r, c);
    return make(std::move(v), {a}, [](Node& n) {
        RowMat tmp = n.grad;
        Mat g = Eigen::Map<RowMat>(tmp.data(), n.inputs[0]->rows(), n.inputs[0]->cols());
        accum(*n.inputs[0], g);
    });
}

NodePtr set_diag(NodePtr a, double d) {
    if (a->rows() != a->cols()) throw std::invalid_argument("set_diag: square matrix required");
    Mat v = a->value;
    v.diagonal().setConstant(d);
    return make(std::move(v), {a}, [](Node& n) {
        Mat g = n.grad;
        g.diagonal().setZero();
        accum(*n.inputs[0], g);
    });
}

NodePtr add_rowvec(NodePtr a, NodePtr b) {
    if (b->rows() != 1 || b->cols() != a->cols())
        throw std::invalid_argument("add_rowvec: need 1 x cols(a)");
    Mat v = a->value.rowwise() + b->value.row(0);
    return make(std::move(v), {a, b}, [](Node& n) {
        accum(*n.inputs[0], n.grad);
        accum(*n.inputs[1], n.grad.colwise().sum());
    });
}

NodePtr rowwise_cmul(NodePtr a, NodePtr v) {
    if (v->cols() != 1 || v->rows() != a->rows())
        throw std::invalid_argument("rowwise_cmul: need rows(a) x 1");
    Mat out = a->value.array().colwise() * v->value.col(0).array();
    return make(std::move(out), {a, v}, [](Node& n) {
        accum(*n.inputs[0],
              (n.grad.array().colwise() * n.inputs[1]->value.col(0).array()).matrix());
        accum(*n.inputs[1], n.grad.cwiseProduct(n.inputs[0]->value).rowwise().sum());
    });
}

NodePtr colwise_cmul(NodePtr a, NodePtr v) {
    if (v->rows() != 1 || v->cols() != a->cols())
        throw std::invalid_argument("colwise_cmul: need 1 x cols(a)");
    Mat out = a->value.array().rowwise() * v->value.row(0).array();
    return make(std::move(out), {a, v}, [](Node& n) {
        accum(*n.inputs[0],
              (n.grad.array().rowwise() * n.inputs[1]->value.row(0).array()).matrix());
        accum(*n.inputs[1], n.grad.cwiseProduct(n.inputs[0]->value).colwise().sum());
    });
}

NodePtr row_sum(NodePtr a) {
    Mat v = a->value.rowwise().sum();
    return make(std::move(v), {a}, [](Node& n) {
        accum(*n.inputs[0], n.grad.col(0).replicate(1, n.inputs[0]->cols()));
    });
}

NodePtr dot_rows(NodePtr a, NodePtr b) {
    check_same_shape(a, b, "dot_rows");
    Mat v = a->value.cwiseProduct(b->value).rowwise().sum();
    return make(std::move(v), {a, b}, [](Node& n) {
        Mat g = n.grad.col(0).replicate(1, n.inputs[0]->cols());
        accum(*n.inputs[0], g.cwiseProduct(n.inputs[1]->value));
        accum(*n.inputs[1], g.cwiseProduct(n.inputs[0]->value));
    });
}

NodePtr sum_all(NodePtr a) {
    Mat v(1, 1);
    v(0, 0) = a->value.sum();
    return make(std::move(v), {a}, [](Node& n) {
        accum(*n.inputs[0],
              Mat::Constant(n.inputs[0]->rows(), n.inputs[0]->cols(), n.grad(0, 0)));
    });
}

NodePtr mean_all(NodePtr a) {
    double inv = 1.0 / static_cast<double>(a->value.size());
    Mat v(1, 1);
    v(0, 0) = a->value.sum() * inv;
    return make(std::move(v), {a}, [inv](Node& n) {
        accum(*n.inputs[0],
              Mat::Constant(n.inputs[0]->rows(), n.inputs[0]->cols(), n.grad(0, 0) * inv));
    });
}

NodePtr row_softmax(NodePtr a) {
    Mat v(a->rows(), a->cols());
    for (Eigen::Index i = 0; i < a->rows(); ++i) {
        Eigen::ArrayXd e = (a->value.row(i).array() - a->value.row(i).maxCoeff()).exp();
        v.row(i) = (e / e.sum()).matrix();
    }
    return make(std::move(v), {a}, [](Node& n) {
        Mat g(n.rows(), n.cols());
        for (Eigen::Index i = 0; i < n.rows(); ++i) {
            double dot = n.grad.row(i).dot(n.value.row(i));
            g.row(i) = n.value.row(i).cwiseProduct(
                (n.grad.row(i).array() - dot).matrix());
        }
        accum(*n.inputs[0], g);
    });
}

NodePtr log_row_softmax(NodePtr a) {
    Mat v(a->rows(), a->cols());
    for (Eigen::Index i = 0; i < a->rows(); ++i) {
        double m = a->value.row(i).maxCoeff();
        double lse = std::log((a->value.row(i).array() - m).exp().sum()) + m;
        v.row(i) = (a->value.row(i).array() - lse).matrix();
    }
    return make(std::move(v), {a}, [](Node& n) {
        Mat g(n.rows(), n.cols());
        for (Eigen::Index i = 0; i < n.rows(); ++i) {
            double gsum = n.grad.row(i).sum();
            g.row(i) = n.grad.row(i) - gsum * n.value.row(i).array().exp().matrix();
        }
        accum(*n.inputs[0], g);
    });
}

NodePtr layer_norm(NodePtr x, NodePtr gain, NodePtr bias, double eps) {
    const Eigen::Index d = x->cols();
    if (gain->rows() != 1 || gain->cols() != d || bias->rows() != 1 || bias->cols() != d)
        throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols(x)");
    Mat v(x->rows(), d);
    for (Eigen::Index i = 0; i < x->rows(); ++i) {
        double mu = x->value.row(i).mean();
        double var = (x->value.row(i).array() - mu).square().mean();
        Eigen::ArrayXd xhat = (x->value.row(i).array() - mu) / std::sqrt(var + eps);
        v.row(i) = (xhat * gain->value.row(0).array().transpose() +
                    bias->value.row(0).array().transpose())
                       .transpose()
                       .matrix();
    }
    return make(std::move(v), {x, gain, bias}, [eps](Node& n) {
        Node& x = *n.inputs[0];
        Node& gain = *n.inputs[1];
        Node& bias = *n.inputs[2];
        const Eigen::Index d = x.cols();
        Mat gx = Mat::Zero(x.rows(), d);
        Mat ggain = Mat::Zero(1, d);
        Mat gbias = Mat::Zero(1, d);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double mu = x.value.row(i).mean();
            double var = (x.value.row(i).array() - mu).square().mean();
            double inv_sd = 1.0 / std::sqrt(var + eps);
            Eigen::ArrayXd xc = x.value.row(i).array().transpose() - mu;
            Eigen::ArrayXd xhat = xc * inv_sd;
            Eigen::ArrayXd go = n.grad.row(i).array().transpose();
            ggain.row(0).array() += (go * xhat).transpose();
            gbias.row(0).array() += go.transpose();
            Eigen::ArrayXd dxhat = go * gain.value.row(0).array().transpose();
            double m1 = dxhat.mean();
            double m2 = (dxhat * xhat).mean();
            gx.row(i) = (inv_sd * (dxhat - m1 - xhat * m2)).transpose().matrix();
        }
        accum(x, gx);
        accum(gain, ggain);
        accum(bias, gbias);
    });
}

NodePtr row_l2_normalize(NodePtr x, double eps) {
    Mat v(x->rows(), x->cols());
    for (Eigen::Index i = 0; i < x->rows(); ++i)
        v.row(i) = x->value.row(i) / (x->value.row(i).norm() + eps);
    return make(std::move(v), {x}, [eps](Node& n) {
        Node& x = *n.inputs[0];
        Mat g(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double nm = x.value.row(i).norm();
            double den = nm + eps;
            g.row(i) = n.grad.row(i) / den;
            if (nm > 0.0) {
                double coef = n.grad.row(i).dot(x.value.row(i)) / (nm * den * den);
                g.row(i) -= coef * x.value.row(i);
            }
        }
        accum(x, g);
    });
}

NodePtr batched_vecmat(NodePtr x, NodePtr w, Eigen::Index p, Eigen::Index q) {
    if (x->cols() != p || w->cols() != p * q || w->rows() != x->rows())
        throw std::invalid_argument("batched_vecmat: shape mismatch");
    Mat v = Mat::Zero(x->rows(), q);
    for (Eigen::Index i = 0; i < x->rows(); ++i)
        for (Eigen::Index k = 0; k < p; ++k)
            for (Eigen::Index j = 0; j < q; ++j)
                v(i, j) += x->value(i, k) * w->value(i, k * q + j);
    return make(std::move(v), {x, w}, [p, q](Node& n) {
        Node& x = *n.inputs[0];
        Node& w = *n.inputs[1];
        Mat gx = Mat::Zero(x.rows(), p);
        Mat gw = Mat::Zero(w.rows(), p * q);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index k = 0; k < p; ++k)
                for (Eigen::Index j = 0; j < q; ++j) {
                    gx(i, k) += n.grad(i, j) * w.value(i, k * q + j);
                    gw(i, k * q + j) += x.value(i, k) * n.grad(i, j);
                }
        accum(x, gx);
        accum(w, gw);
    });
}

NodePtr tok_scores(NodePtr q, NodePtr k, Eigen::Index t) {
    if (k->rows() != q->rows() * t || k->cols() != q->cols())
        throw std::invalid_argument("tok_scores: shape mismatch");
    Mat v(q->rows(), t);
    for (Eigen::Index i = 0; i < q->rows(); ++i)
        for (Eigen::Index j = 0; j < t; ++j)
            v(i, j) = q->value.row(i).dot(k->value.row(i * t + j));
    return make(std::move(v), {q, k}, [t](Node& n) {
        Node& q = *n.inputs[0];
        Node& k = *n.inputs[1];
        Mat gq = Mat::Zero(q.rows(), q.cols());
        Mat gk = Mat::Zero(k.rows(), k.cols());
        for (Eigen::Index i = 0; i < q.rows(); ++i)
            for (Eigen::Index j = 0; j < t; ++j) {
                gq.row(i) += n.grad(i, j) * k.value.row(i * t + j);
                gk.row(i * t + j) += n.grad(i, j) * q.value.row(i);
            }
        accum(q, gq);
        accum(k, gk);
    });
}

NodePtr tok_mix(NodePtr a, NodePtr v, Eigen::Index t) {
    if (a->cols() != t || v->rows() != a->rows() * t)
        throw std::invalid_argument("tok_mix: shape mismatch");
    Mat out = Mat::Zero(a->rows(), v->cols());
    for (Eigen::Index i = 0; i < a->rows(); ++i)
        for (Eigen::Index j = 0; j < t; ++j)
            out.row(i) += a->value(i, j) * v->value.row(i * t + j);
    return make(std::move(out), {a, v}, [t](Node& n) {
        Node& a = *n.inputs[0];
        Node& v = *n.inputs[1];
        Mat ga = Mat::Zero(a.rows(), t);
        Mat gv = Mat::Zero(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < t; ++j) {
                ga(i, j) = n.grad.row(i).dot(v.value.row(i * t + j));
                gv.row(i * t + j) += a.value(i, j) * n.grad.row(i);
            }
        accum(a, ga);
        accum(v, gv);
    });
}

void AdamW::step(const std::vector<Parameter*>& params) {
    ++t_;
    double sq = 0;
    for (auto* p : params) sq += p->grad.squaredNorm();
    double gscale = 1.0;
    double gnorm = std::sqrt(sq);
    if (clip_norm > 0 && gnorm > clip_norm) gscale = clip_norm / gnorm;

    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (auto* p : params) {
        auto& [m, v] = state_[p->name];
        if (m.size() == 0) {
            m = Mat::Zero(p->value.rows(), p->value.cols());
            v = Mat::Zero(p->value.rows(), p->value.cols());
        }
        Mat g = gscale * p->grad;
        m = beta1 * m + (1.0 - beta1) * g;
        v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
        Mat mhat = m / bc1;
        Mat vhat = v / bc2;
        p->value.array() -=
            lr * (mhat.array() / (vhat.array().sqrt() + eps) + weight_decay * p->value.array());
    }
}

}  // namespace schelix::ad
