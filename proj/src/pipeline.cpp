#include "schelix/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "schelix/io.hpp"
#include "schelix/metrics.hpp"

namespace schelix {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

struct PreparedData {
    ExpressionDataset pool;          // lognorm, HVG-restricted
    std::vector<int> pool_to_full;   // pool column -> original gene index
    std::vector<int> planted;        // planted variants in ORIGINAL indices, or empty
};

PreparedData prepare(const RunConfig& cfg) {
    PreparedData out;
    ExpressionDataset d;
    if (cfg.matrix_path.empty()) {
        auto [synth, truth] = generate_synthetic(cfg.synth);
        d = synth;
        out.planted = truth.planted_variants;
    } else {
        Layer layer = cfg.input_layer == "raw" ? Layer::raw_counts : Layer::lognorm;
        d = load_dataset(cfg.matrix_path, cfg.labels_path, layer);
    }
    if (d.layer == Layer::raw_counts) {
        d = qc_filter(d, cfg.pre);
        d = normalize_log1p(d, cfg.pre.target_sum);
    }
    out.pool_to_full =
        select_hvgs(d, std::min(cfg.pre.n_hvgs, static_cast<int>(d.n_genes())));

    ExpressionDataset pool;
    pool.layer = Layer::lognorm;
    pool.cell_ids = d.cell_ids;
    pool.domains = d.domains;
    pool.cell_types = d.cell_types;
    pool.values.resize(d.n_cells(), out.pool_to_full.size());
    for (size_t j = 0; j < out.pool_to_full.size(); ++j) {
        pool.values.col(j) = d.values.col(out.pool_to_full[j]);
        pool.gene_ids.push_back(d.gene_ids[out.pool_to_full[j]]);
    }
    out.pool = std::move(pool);
    return out;
}

std::vector<int> iota_vec(Eigen::Index n) {
    std::vector<int> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<int>(i);
    return v;
}

void save_metric_bars(const MetricsReport& fused, const MetricsReport& raw,
                      const fs::path& path) {
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot open " + path.string());
    o << "metric\tfused\traw\n";
    o.precision(10);
    o << "ari_best\t" << fused.ari_best << '\t' << raw.ari_best << '\n';
    o << "nmi_best\t" << fused.nmi_best << '\t' << raw.nmi_best << '\n';
    o << "asw_ct\t" << fused.asw_ct << '\t' << raw.asw_ct << '\n';
    o << "asw_batch\t" << fused.asw_batch << '\t' << raw.asw_batch << '\n';
    o << "gc\t" << fused.gc << '\t' << raw.gc << '\n';
    o << "bio_mean\t" << fused.bio_mean << '\t' << raw.bio_mean << '\n';
    o << "overall\t" << fused.overall << '\t' << raw.overall << '\n';
}

}  // namespace

void cmd_simulate(const RunConfig& cfg) {
    ensure_dir(cfg.out_dir);
    auto [d, truth] = generate_synthetic(cfg.synth);
    fs::path dir(cfg.out_dir);
    save_matrix_triplets(d.values, dir / "matrix.txt");
    save_labels(d, dir / "labels.tsv");
    std::ofstream gt(dir / "planted_variants.txt");
    for (int g : truth.planted_variants) gt << d.gene_ids[g] << '\n';
}

void cmd_preprocess(const RunConfig& cfg) {
    if (cfg.matrix_path.empty()) throw std::invalid_argument("preprocess needs paths.matrix");
    ensure_dir(cfg.out_dir);
    PreparedData prep = prepare(cfg);
    fs::path dir(cfg.out_dir);
    save_matrix_triplets(prep.pool.values, dir / "processed_matrix.txt");
    save_labels(prep.pool, dir / "processed_labels.tsv");
    std::ofstream hv(dir / "hvgs.txt");
    for (const auto& g : prep.pool.gene_ids) hv << g << '\n';
}

namespace {

GenePartition make_partition(const PreparedData& prep, const RunConfig& cfg) {
    GeneScoreTable scores =
        score_genes(prep.pool, iota_vec(prep.pool.n_genes()), cfg.selector);
    GenePartition p = quadrant_split(scores, cfg.selector);
    if (cfg.random_split)
        p = random_split(scores, p.anchors.size(), cfg.selector.leiden_seed);
    return p;
}

}  // namespace

void cmd_partition(const RunConfig& cfg) {
    ensure_dir(cfg.out_dir);
    PreparedData prep = prepare(cfg);
    GenePartition p = make_partition(prep, cfg);
    save_partition(p, prep.pool.gene_ids, fs::path(cfg.out_dir) / "partition.tsv");
}

RunOutputs cmd_run(RunConfig cfg, bool dump_gate_stats, bool dump_adjacency) {
    ensure_dir(cfg.out_dir);
    fs::path dir(cfg.out_dir);
    PreparedData prep = prepare(cfg);
    GenePartition p = make_partition(prep, cfg);
    save_partition(p, prep.pool.gene_ids, dir / "partition.tsv");

    if (dump_gate_stats && cfg.gate.enabled && !p.variants.empty()) {
        GateTensor gt = build_gate(prep.pool, p.variants, p.anchors, cfg.gate);
        std::ofstream o(dir / "gate_stats.tsv");
        o << "gene_id\tmean_gamma\tmax_gamma\n";
        o.precision(10);
        for (size_t j = 0; j < p.variants.size(); ++j)
            o << prep.pool.gene_ids[p.variants[j]] << '\t' << gt.gamma.col(j).mean() << '\t'
              << gt.gamma.col(j).maxCoeff() << '\n';
    }

    GraphLearnerParams graph_proto;
    graph_proto.tau = cfg.graph_tau;
    graph_proto.k_top = cfg.graph_k_top;
    graph_proto.d_a = cfg.graph_d_a;

    FitResult fr = fit(prep.pool, p, cfg.gate, cfg.encoder, graph_proto, cfg.train);
    save_training_log(fr.log, (dir / "training_log.tsv").string());

    auto dump = [&](const Mat& m, EmbeddingSource src, const char* name) {
        EmbeddingMatrix e;
        e.values = m;
        e.source = src;
        save_embedding(e, dir / name);
        return e;
    };
    dump(fr.h_var, EmbeddingSource::variant_stream, "embedding_variant.txt");
    dump(fr.h_inv, EmbeddingSource::anchor_stream, "embedding_anchor.txt");
    dump(fr.h_refined, EmbeddingSource::refined_anchor, "embedding_refined.txt");
    EmbeddingMatrix fused = dump(fr.h_fused, EmbeddingSource::fused, "embedding_fused.txt");

    if (dump_adjacency) {
        save_matrix_triplets(fr.p_var, dir / "adjacency_variant.txt");
        save_matrix_triplets(fr.p_inv, dir / "adjacency_anchor.txt");
    }

    RunOutputs out;
    if (prep.pool.has_cell_types()) {
        out.fused_report =
            evaluate_embedding(fused, prep.pool.cell_types, prep.pool.domains, cfg.eval);
        EmbeddingMatrix raw;
        raw.values = prep.pool.values;
        raw.source = EmbeddingSource::external;
        out.raw_report =
            evaluate_embedding(raw, prep.pool.cell_types, prep.pool.domains, cfg.eval);
        save_report(out.fused_report, dir / "report.txt");
        save_report(out.raw_report, dir / "raw_report.txt");
        save_metric_bars(out.fused_report, out.raw_report, dir / "metric_bars.tsv");
    }

    if (!prep.planted.empty()) {
        std::set<int> planted(prep.planted.begin(), prep.planted.end());
        int hits = 0;
        for (int j : p.variants)
            if (planted.count(prep.pool_to_full[j])) ++hits;
        out.planted_recall = static_cast<double>(hits) / planted.size();
        std::ofstream o(dir / "summary.txt");
        o << "planted_variant_recall=" << out.planted_recall << '\n';
    }
    return out;
}

MetricsReport cmd_evaluate(const fs::path& embedding_path, const fs::path& labels_path,
                           const EvalConfig& cfg, const fs::path& report_path,
                           const std::vector<fs::path>& external_2d) {
    EmbeddingMatrix e = load_embedding(embedding_path);
    LabelTable labels = load_labels(labels_path);
    if (labels.cell_types.empty())
        throw std::invalid_argument("evaluate requires a cell_type column in the labels file");
    if (static_cast<Eigen::Index>(labels.cell_ids.size()) != e.n_cells())
        throw std::invalid_argument("evaluate: embedding and labels disagree on cell count");

    MetricsReport r = evaluate_embedding(e, labels.cell_types, labels.domains, cfg);

    if (!external_2d.empty()) {
        std::vector<int> t = labels_to_ints(labels.cell_types);
        std::vector<int> all;
        for (size_t i = 0; i < t.size(); ++i) all.push_back(static_cast<int>(i));
        double sum = 0, sq = 0;
        for (const auto& path : external_2d) {
            EmbeddingMatrix e2 = load_embedding(path);
            if (e2.dim() != 2)
                throw std::invalid_argument("external embedding must be 2-D: " + path.string());
            double oc = oc_score(e2, t, all, cfg.oc_k);
            sum += oc;
            sq += oc * oc;
        }
        double n = static_cast<double>(external_2d.size());
        double mean = sum / n;
        double var = sq / n - mean * mean;
        r.oc_hd_all = mean;
        std::cout << "external_2d_oc_mean=" << mean << " external_2d_oc_std="
                  << std::sqrt(std::max(0.0, var)) << '\n';
    }
    save_report(r, report_path);
    return r;
}

}  // namespace schelix
