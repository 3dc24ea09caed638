#pragma once

#include <filesystem>
#include <vector>

#include "schelix/config.hpp"
#include "schelix/types.hpp"

namespace schelix {

void cmd_simulate(const RunConfig& cfg);
void cmd_preprocess(const RunConfig& cfg);
void cmd_partition(const RunConfig& cfg);

struct RunOutputs {
    MetricsReport fused_report;
    MetricsReport raw_report;
    double planted_recall = -1;  // -1 when no ground truth is available
};

// Full pipeline: data (loaded or simulated), preprocessing, partition, gate,
// training, embeddings, evaluation, tabular plots.
RunOutputs cmd_run(RunConfig cfg, bool dump_gate_stats = false,
                   bool dump_adjacency = false);

MetricsReport cmd_evaluate(const std::filesystem::path& embedding_path,
                           const std::filesystem::path& labels_path, const EvalConfig& cfg,
                           const std::filesystem::path& report_path,
                           const std::vector<std::filesystem::path>& external_2d = {});

}  // namespace schelix
