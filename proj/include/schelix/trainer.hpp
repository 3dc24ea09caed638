#pragma once

#include <string>
#include <vector>

#include "schelix/autodiff.hpp"
#include "schelix/gate.hpp"
#include "schelix/graph_encoder.hpp"
#include "schelix/interaction.hpp"
#include "schelix/partition.hpp"
#include "schelix/types.hpp"

namespace schelix {

struct TrainConfig {
    int total_steps = 2000;
    int t_warm = 1000;
    int align_only_steps = 500;
    double lambda_rec_var = 1.0, lambda_rec_inv = 1.0, lambda_rec_fused = 1.0;
    double lambda_align = 1.0;
    double lambda_conn_var = 0.08;   // noisy (variant) stream
    double lambda_conn_inv = 0.2;    // anchor stream
    double lambda_conn_fused = 0.2;
    double lambda_kd = 0.5;
    int k_proto = 24;
    double conf_threshold = 0.75;
    double conf_pow = 1.0;
    double ema_momentum = 0.99;
    double assign_temp = 0.1;
    double lr = 1e-3;
    double clip_norm = 5.0;
    double weight_decay = 1e-4;
    int batch_size = 0;  // 0 = full batch
    uint64_t seed = 0;
    double refine_temperature = 0.3;
    double alpha_init = 0.3;
    double alpha_max = 1.5;
    int fuser_rank = 8;
    double lambda_delta = 0.6;
    int graph_rebuild_every = 25;

    bool no_align = false;
    bool no_refine = false;
    bool simple_fusion = false;
    bool no_kd = false;
    bool no_conn = false;

    void validate() const;
};

struct PrototypeBank {
    Mat protos;  // K x d
    double momentum = 0.99;
    double temp = 0.1;
    bool initialized = false;

    void init(const Mat& h_teacher, int k, uint64_t seed);
};

struct TeacherAssign {
    std::vector<int> labels;  // argmax assignment per cell
    Vec confidence;           // max_k q_ik
    Mat q;                    // N x K soft assignments
};

TeacherAssign teacher_assign(const PrototypeBank& bank, const Mat& h_teacher);

// Cross-entropy of soft assignments against teacher hard labels, averaged
// over cells whose teacher confidence clears the threshold (0 if none do).
ad::NodePtr conn_loss(const ad::NodePtr& h, const PrototypeBank& bank, const TeacherAssign& ta,
                      double threshold);

// Confidence-weighted distillation of teacher soft assignments into the
// fused embedding's assignments.
ad::NodePtr kd_loss(const ad::NodePtr& h_fused, const PrototypeBank& bank,
                    const TeacherAssign& ta, double conf_threshold, double conf_pow);

// EMA toward hard-assignment means; empty clusters keep their prototype.
void update_prototypes(PrototypeBank& bank, const Mat& h_teacher);

struct LossBreakdown {
    int step = 0;
    int i_fuse = 0;
    double rec_var = 0, rec_inv = 0, align = 0;
    double conn_var = 0, conn_inv = 0;
    double rec_fused = 0, kd = 0, conn_fused = 0;
    double total = 0;
};

struct ModelState {
    Mat x_var, x_inv;  // gated variant block, anchor block
    GraphLearnerParams gl_var, gl_inv;
    FeatureGraph graph_var, graph_inv;
    StreamEncoder enc_var, enc_inv;
    AlignHead align;
    Refiner refiner;
    HyperFuser fuser;
    ad::Parameter fd1, fc1, fd2, fc2;  // fused decoder d -> G*
    PrototypeBank bank;
    ad::AdamW opt;
    TrainConfig cfg;
    EncoderConfig enc_cfg;
    Rng rng;

    // collected on demand so the state stays safely movable
    std::vector<ad::Parameter*> parameters();
};

ModelState init_state(const Mat& x_var, const Mat& x_inv, const EncoderConfig& enc_cfg,
                      const GraphLearnerParams& graph_proto, const TrainConfig& cfg);

LossBreakdown train_step(ModelState& s, int step);

struct FitResult {
    Mat h_var, h_inv, h_refined, h_fused;
    Mat p_var, p_inv;  // final 1-hop diffusion operators
    std::vector<LossBreakdown> log;
};

FitResult fit(const ExpressionDataset& d, const GenePartition& p, const GateConfig& gate_cfg,
              const EncoderConfig& enc_cfg, const GraphLearnerParams& graph_proto,
              const TrainConfig& cfg);

void save_training_log(const std::vector<LossBreakdown>& log, const std::string& path);

}  // namespace schelix
