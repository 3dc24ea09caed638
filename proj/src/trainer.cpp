#include "schelix/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "schelix/linalg.hpp"

namespace schelix {

using namespace ad;

void TrainConfig::validate() const {
    if (align_only_steps > t_warm || t_warm > total_steps)
        throw std::invalid_argument("need align_only_steps <= t_warm <= total_steps");
    for (double l : {lambda_rec_var, lambda_rec_inv, lambda_rec_fused, lambda_align,
                     lambda_conn_var, lambda_conn_inv, lambda_conn_fused, lambda_kd})
        if (l < 0) throw std::invalid_argument("loss weights must be >= 0");
    if (k_proto < 1) throw std::invalid_argument("k_proto must be >= 1");
    if (ema_momentum < 0 || ema_momentum > 1)
        throw std::invalid_argument("ema_momentum must lie in [0,1]");
}

void PrototypeBank::init(const Mat& h_teacher, int k, uint64_t seed) {
    auto km = kmeans(h_teacher, k, seed);
    protos = km.centers;
    initialized = true;
}

namespace {

// softmax over -||h_i - c_k||^2 / temp; the per-row ||h_i||^2 term cancels
Mat assign_logits(const Mat& h, const Mat& protos, double temp) {
    Vec cn = protos.rowwise().squaredNorm();
    Mat logits = 2.0 * h * protos.transpose();
    logits.rowwise() -= cn.transpose();
    return logits / temp;
}

Mat softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::ArrayXd e = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

NodePtr assign_log_softmax(const NodePtr& h, const PrototypeBank& bank) {
    Mat ct = 2.0 * bank.protos.transpose();
    Vec cn = bank.protos.rowwise().squaredNorm();
    NodePtr logits = add_rowvec(matmul(h, constant(ct)), constant((-cn.transpose()).eval()));
    return log_row_softmax(scale(logits, 1.0 / bank.temp));
}

}  // namespace

TeacherAssign teacher_assign(const PrototypeBank& bank, const Mat& h_teacher) {
    if (!bank.initialized) throw std::invalid_argument("prototype bank not initialized");
    TeacherAssign ta;
    ta.q = softmax_rows(assign_logits(h_teacher, bank.protos, bank.temp));
    ta.labels.resize(h_teacher.rows());
    ta.confidence.resize(h_teacher.rows());
    for (Eigen::Index i = 0; i < h_teacher.rows(); ++i) {
        Eigen::Index k;
        ta.confidence(i) = ta.q.row(i).maxCoeff(&k);
        ta.labels[i] = static_cast<int>(k);
    }
    return ta;
}

NodePtr conn_loss(const NodePtr& h, const PrototypeBank& bank, const TeacherAssign& ta,
                  double threshold) {
    if (!bank.initialized) throw std::invalid_argument("prototype bank not initialized");
    const Eigen::Index n = h->rows();
    Mat pick = Mat::Zero(n, bank.protos.rows());
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (ta.confidence(i) >= threshold) {
            pick(i, ta.labels[i]) = 1.0;
            ++count;
        }
    if (count == 0) return constant(Mat::Zero(1, 1));
    NodePtr logp = assign_log_softmax(h, bank);
    return scale(sum_all(cmul(logp, constant(pick))), -1.0 / count);
}

NodePtr kd_loss(const NodePtr& h_fused, const PrototypeBank& bank, const TeacherAssign& ta,
                double conf_threshold, double conf_pow) {
    if (!bank.initialized) throw std::invalid_argument("prototype bank not initialized");
    const Eigen::Index n = h_fused->rows();
    Mat wq = Mat::Zero(n, bank.protos.rows());
    double wsum = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ta.confidence(i) < conf_threshold) continue;
        double w = std::pow(ta.confidence(i), conf_pow);
        wq.row(i) = w * ta.q.row(i);
        wsum += w;
    }
    if (wsum == 0) return constant(Mat::Zero(1, 1));
    NodePtr logp = assign_log_softmax(h_fused, bank);
    return scale(sum_all(cmul(logp, constant(wq))), -1.0 / wsum);
}

void update_prototypes(PrototypeBank& bank, const Mat& h_teacher) {
    if (!bank.initialized) throw std::invalid_argument("prototype bank not initialized");
    const Eigen::Index k = bank.protos.rows();
    Mat sums = Mat::Zero(k, bank.protos.cols());
    std::vector<int> counts(k, 0);
    Mat d2 = -assign_logits(h_teacher, bank.protos, 1.0);  // monotone in distance
    for (Eigen::Index i = 0; i < h_teacher.rows(); ++i) {
        Eigen::Index a;
        d2.row(i).minCoeff(&a);
        sums.row(a) += h_teacher.row(i);
        ++counts[a];
    }
    for (Eigen::Index j = 0; j < k; ++j)
        if (counts[j] > 0)
            bank.protos.row(j) = bank.momentum * bank.protos.row(j) +
                                 (1.0 - bank.momentum) * sums.row(j) / counts[j];
}

ModelState init_state(const Mat& x_var, const Mat& x_inv, const EncoderConfig& enc_cfg,
                      const GraphLearnerParams& graph_proto, const TrainConfig& cfg) {
    cfg.validate();
    ModelState s;
    s.cfg = cfg;
    s.enc_cfg = enc_cfg;
    s.x_var = x_var;
    s.x_inv = x_inv;
    s.rng = Rng(cfg.seed);

    auto clamp_top = [&](Eigen::Index g) {
        return std::min<int>(graph_proto.k_top, static_cast<int>(g) - 1);
    };
    s.gl_var = GraphLearnerParams("gvar", x_var.cols(), graph_proto.d_a, s.rng);
    s.gl_var.tau = graph_proto.tau;
    s.gl_var.k_top = clamp_top(x_var.cols());
    s.gl_inv = GraphLearnerParams("ginv", x_inv.cols(), graph_proto.d_a, s.rng);
    s.gl_inv.tau = graph_proto.tau;
    s.gl_inv.k_top = clamp_top(x_inv.cols());

    s.enc_var = StreamEncoder("evar", x_var.cols(), enc_cfg, s.rng);
    s.enc_inv = StreamEncoder("einv", x_inv.cols(), enc_cfg, s.rng);
    s.align = AlignHead("align", enc_cfg.d_out, 64, s.rng);
    s.refiner = Refiner("refine", enc_cfg.d_out, s.rng, cfg.refine_temperature,
                        cfg.alpha_init, cfg.alpha_max);
    if (cfg.no_refine) s.refiner.alpha_max = 0.0;
    s.fuser = HyperFuser("fuse", enc_cfg.d_out, cfg.fuser_rank, s.rng);
    s.fuser.lambda_delta = cfg.lambda_delta;
    s.graph_var.rebuild_period = cfg.graph_rebuild_every;
    s.graph_inv.rebuild_period = cfg.graph_rebuild_every;

    const Eigen::Index g_all = x_var.cols() + x_inv.cols();
    const Eigen::Index hid = enc_cfg.hidden;
    auto gl = [&](Eigen::Index r, Eigen::Index c) -> Mat {
        return s.rng.normal_matrix(r, c) * std::sqrt(2.0 / static_cast<double>(r + c));
    };
    s.fd1 = Parameter("fdec.w1", gl(enc_cfg.d_out, hid));
    s.fc1 = Parameter("fdec.b1", Mat::Zero(1, hid));
    s.fd2 = Parameter("fdec.w2", gl(hid, g_all));
    s.fc2 = Parameter("fdec.b2", Mat::Zero(1, g_all));

    s.bank.momentum = cfg.ema_momentum;
    s.bank.temp = cfg.assign_temp;

    s.opt.lr = cfg.lr;
    s.opt.clip_norm = cfg.clip_norm;
    s.opt.weight_decay = cfg.weight_decay;

    return s;
}

std::vector<Parameter*> ModelState::parameters() {
    std::vector<Parameter*> out;
    for (auto* p : gl_var.parameters()) out.push_back(p);
    for (auto* p : gl_inv.parameters()) out.push_back(p);
    for (auto* p : enc_var.parameters()) out.push_back(p);
    for (auto* p : enc_inv.parameters()) out.push_back(p);
    for (auto* p : align.parameters()) out.push_back(p);
    for (auto* p : refiner.parameters()) out.push_back(p);
    for (auto* p : fuser.parameters()) out.push_back(p);
    for (auto* p : {&fd1, &fc1, &fd2, &fc2}) out.push_back(p);
    return out;
}

namespace {

NodePtr sq_frob_mean(const NodePtr& a, const NodePtr& b) {
    NodePtr d = sub(a, b);
    return mean_all(cmul(d, d));
}

double term(const NodePtr& n, const char* name) {
    double v = n->value(0, 0);
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite loss term: ") + name);
    return v;
}

}  // namespace

LossBreakdown train_step(ModelState& s, int step) {
    const TrainConfig& c = s.cfg;
    LossBreakdown out;
    out.step = step;
    out.i_fuse = step >= c.t_warm ? 1 : 0;
    const bool refine_active = step >= c.align_only_steps;

    Mat xv_m = s.x_var, xi_m = s.x_inv;
    if (c.batch_size > 0 && c.batch_size < s.x_var.rows()) {
        std::vector<Eigen::Index> idx(s.x_var.rows());
        std::iota(idx.begin(), idx.end(), 0);
        s.rng.shuffle(idx);
        xv_m.resize(c.batch_size, s.x_var.cols());
        xi_m.resize(c.batch_size, s.x_inv.cols());
        for (int i = 0; i < c.batch_size; ++i) {
            xv_m.row(i) = s.x_var.row(idx[i]);
            xi_m.row(i) = s.x_inv.row(idx[i]);
        }
    }

    maybe_rebuild(s.graph_var, s.gl_var, s.enc_cfg, step);
    maybe_rebuild(s.graph_inv, s.gl_inv, s.enc_cfg, step);

    NodePtr xv = constant(xv_m);
    NodePtr xi = constant(xi_m);
    auto [h_var, xhat_var] = encode_stream(xv, s.graph_var, s.enc_var);
    auto [h_inv, xhat_inv] = encode_stream(xi, s.graph_inv, s.enc_inv);

    NodePtr total = scale(sq_frob_mean(xhat_var, xv), c.lambda_rec_var);
    out.rec_var = term(total, "rec_var");
    NodePtr rec_inv = scale(sq_frob_mean(xhat_inv, xi), c.lambda_rec_inv);
    out.rec_inv = term(rec_inv, "rec_inv");
    total = add(total, rec_inv);

    if (!c.no_align && c.lambda_align > 0) {
        NodePtr la = scale(align_loss(h_var, h_inv, s.align), c.lambda_align);
        out.align = term(la, "align");
        total = add(total, la);
    }

    NodePtr ht = h_inv;
    if (refine_active) {
        ht = refine(h_inv, h_var, s.refiner);
        if (!s.bank.initialized) s.bank.init(ht->value, c.k_proto, c.seed);
        TeacherAssign ta = teacher_assign(s.bank, ht->value);

        if (!c.no_conn) {
            if (c.lambda_conn_var > 0) {
                NodePtr l = scale(conn_loss(h_var, s.bank, ta, c.conf_threshold),
                                  c.lambda_conn_var);
                out.conn_var = term(l, "conn_var");
                total = add(total, l);
            }
            if (c.lambda_conn_inv > 0) {
                NodePtr l = scale(conn_loss(ht, s.bank, ta, c.conf_threshold),
                                  c.lambda_conn_inv);
                out.conn_inv = term(l, "conn_inv");
                total = add(total, l);
            }
        }

        if (out.i_fuse) {
            NodePtr fused = c.simple_fusion ? simple_fuse(ht, h_var, s.fuser)
                                            : hyperfuse(ht, h_var, s.fuser);
            NodePtr x_all = constant((Mat(xv_m.rows(), xv_m.cols() + xi_m.cols())
                                          << xv_m, xi_m).finished());
            NodePtr xhat_f = add_rowvec(
                matmul(silu(add_rowvec(matmul(fused, var(s.fd1)), var(s.fc1))), var(s.fd2)),
                var(s.fc2));
            NodePtr rec_f = scale(sq_frob_mean(xhat_f, x_all), c.lambda_rec_fused);
            out.rec_fused = term(rec_f, "rec_fused");
            total = add(total, rec_f);

            if (!c.no_kd && c.lambda_kd > 0) {
                NodePtr l = scale(kd_loss(fused, s.bank, ta, c.conf_threshold, c.conf_pow),
                                  c.lambda_kd);
                out.kd = term(l, "kd");
                total = add(total, l);
            }
            if (!c.no_conn && c.lambda_conn_fused > 0) {
                NodePtr l = scale(conn_loss(fused, s.bank, ta, c.conf_threshold),
                                  c.lambda_conn_fused);
                out.conn_fused = term(l, "conn_fused");
                total = add(total, l);
            }
        }
    }

    out.total = term(total, "total");
    auto params = s.parameters();
    for (auto* p : params) p->zero_grad();
    backward(total);
    s.opt.step(params);

    if (s.bank.initialized) update_prototypes(s.bank, ht->value);
    return out;
}

FitResult fit(const ExpressionDataset& d, const GenePartition& p, const GateConfig& gate_cfg,
              const EncoderConfig& enc_cfg, const GraphLearnerParams& graph_proto,
              const TrainConfig& cfg) {
    if (d.layer != Layer::lognorm) throw std::invalid_argument("fit requires lognorm layer");
    const Eigen::Index n = d.n_cells();
    const Eigen::Index n_var = static_cast<Eigen::Index>(p.variants.size());
    const Eigen::Index n_inv = static_cast<Eigen::Index>(p.anchors.size());

    Mat x_var(n, n_var), x_inv(n, n_inv);
    for (Eigen::Index j = 0; j < n_var; ++j) x_var.col(j) = d.values.col(p.variants[j]);
    for (Eigen::Index j = 0; j < n_inv; ++j) x_inv.col(j) = d.values.col(p.anchors[j]);

    if (gate_cfg.enabled && n_var > 0) {
        GateTensor gt = build_gate(d, p.variants, p.anchors, gate_cfg);
        x_var.array() *= (1.0 - gate_cfg.strength * gt.gamma.array());
    }

    ModelState s = init_state(x_var, x_inv, enc_cfg, graph_proto, cfg);
    FitResult r;
    r.log.reserve(cfg.total_steps);
    for (int step = 0; step < cfg.total_steps; ++step) r.log.push_back(train_step(s, step));

    // final forward pass, off-tape
    maybe_rebuild(s.graph_var, s.gl_var, s.enc_cfg, 0);
    maybe_rebuild(s.graph_inv, s.gl_inv, s.enc_cfg, 0);
    NodePtr xv = constant(x_var), xi = constant(x_inv);
    NodePtr h_var = encode_stream(xv, s.graph_var, s.enc_var).first;
    NodePtr h_inv = encode_stream(xi, s.graph_inv, s.enc_inv).first;
    NodePtr ht = refine(h_inv, h_var, s.refiner);
    NodePtr fused = cfg.simple_fusion ? simple_fuse(ht, h_var, s.fuser)
                                      : hyperfuse(ht, h_var, s.fuser);
    r.h_var = h_var->value;
    r.h_inv = h_inv->value;
    r.h_refined = ht->value;
    r.h_fused = fused->value;
    r.p_var = s.graph_var.cached_powers.at(1);
    r.p_inv = s.graph_inv.cached_powers.at(1);
    return r;
}

void save_training_log(const std::vector<LossBreakdown>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "step\ti_fuse\trec_var\trec_inv\talign\tconn_var\tconn_inv\trec_fused\tkd\t"
           "conn_fused\ttotal\n";
    out.precision(10);
    for (const auto& l : log)
        out << l.step << '\t' << l.i_fuse << '\t' << l.rec_var << '\t' << l.rec_inv << '\t'
            << l.align << '\t' << l.conn_var << '\t' << l.conn_inv << '\t' << l.rec_fused
            << '\t' << l.kd << '\t' << l.conn_fused << '\t' << l.total << '\n';
}

}  // namespace schelix
