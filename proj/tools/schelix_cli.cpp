#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schelix/pipeline.hpp"

namespace {

schelix::RunConfig load_config(const std::string& config_path, const std::string& out_dir,
                               int64_t seed_flag) {
    schelix::ConfigFile file;
    if (!config_path.empty()) file = schelix::ConfigFile::parse_file(config_path);
    schelix::RunConfig cfg = schelix::parse_run_config(file);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (const char* env = std::getenv("SCHELIX_SEED"))
        schelix::apply_seed(cfg, std::stoull(env));
    if (seed_flag >= 0) schelix::apply_seed(cfg, static_cast<uint64_t>(seed_flag));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schelix: anchor/variant disentangled single-cell integration"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int64_t seed = -1;
    app.add_option("--config", config_path, "config file (sectioned key=value)");
    app.add_option("--out-dir", out_dir, "output directory override");
    app.add_option("--seed", seed, "seed override (also SCHELIX_SEED env var)");

    auto* sim = app.add_subcommand("simulate", "write a synthetic dataset with ground truth");
    auto* pre = app.add_subcommand("preprocess", "QC, normalize, select HVGs");
    auto* part = app.add_subcommand("partition", "score genes and emit the anchor/variant split");

    auto* run = app.add_subcommand("run", "full pipeline: train, embed, evaluate");
    bool random_split = false, no_gate = false, no_align = false, no_refine = false;
    bool simple_fusion = false, no_kd = false, no_conn = false, linear_encoder = false;
    bool gate_stats = false, dump_adjacency = false;
    run->add_flag("--random-split", random_split, "random size-matched anchor split");
    run->add_flag("--no-gate", no_gate, "disable the variant gate");
    run->add_flag("--no-align", no_align, "drop the alignment loss");
    run->add_flag("--no-refine", no_refine, "clamp the refinement gate to zero");
    run->add_flag("--simple-fusion", simple_fusion, "additive fusion instead of hypernetwork");
    run->add_flag("--no-kd", no_kd, "drop the distillation loss");
    run->add_flag("--no-conn", no_conn, "drop the connectivity losses");
    run->add_flag("--linear-encoder", linear_encoder, "linear map instead of graph diffusion");
    run->add_flag("--gate-stats", gate_stats, "dump per-gene gate statistics");
    run->add_flag("--dump-adjacency", dump_adjacency, "dump learned diffusion operators");

    auto* eval = app.add_subcommand("evaluate", "score an embedding file");
    std::string emb_path, labels_path, report_path = "report.txt";
    std::vector<std::string> external_2d;
    eval->add_option("--embedding", emb_path, "embedding file")->required();
    eval->add_option("--labels", labels_path, "labels TSV with cell types")->required();
    eval->add_option("--report", report_path, "output report path");
    eval->add_option("--external-2d", external_2d,
                     "externally computed 2-D embeddings for neighborhood OC");

    for (auto* sc : app.get_subcommands({})) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        schelix::RunConfig cfg = load_config(config_path, out_dir, seed);
        if (sim->parsed()) {
            schelix::cmd_simulate(cfg);
        } else if (pre->parsed()) {
            schelix::cmd_preprocess(cfg);
        } else if (part->parsed()) {
            schelix::cmd_partition(cfg);
        } else if (run->parsed()) {
            cfg.random_split |= random_split;
            if (no_gate) cfg.gate.enabled = false;
            cfg.train.no_align |= no_align;
            cfg.train.no_refine |= no_refine;
            cfg.train.simple_fusion |= simple_fusion;
            cfg.train.no_kd |= no_kd;
            cfg.train.no_conn |= no_conn;
            if (linear_encoder) {
                cfg.linear_encoder = true;
                cfg.encoder.linear = true;
            }
            auto out = schelix::cmd_run(cfg, gate_stats, dump_adjacency);
            if (out.planted_recall >= 0)
                std::cout << "planted_variant_recall=" << out.planted_recall << '\n';
            std::cout << "overall=" << out.fused_report.overall << '\n';
        } else if (eval->parsed()) {
            std::vector<std::filesystem::path> ext(external_2d.begin(), external_2d.end());
            auto r = schelix::cmd_evaluate(emb_path, labels_path, cfg.eval, report_path, ext);
            std::cout << "overall=" << r.overall << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
